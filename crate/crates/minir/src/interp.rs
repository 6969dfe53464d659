//! Tree-walking evaluator.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use crate::builtins;
use crate::format::num_to_string;
use crate::parser::{deparse, parse, Arg, BinOp, Expr, UnOp};
use crate::value::{na_real, Attrs, Closure, Env, EnvRef, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct RError {
    pub call: Option<String>,
    pub msg: String,
}

impl RError {
    pub fn render(&self) -> String {
        match &self.call {
            Some(c) => {
                let sep = if c.len() + self.msg.len() > 58 { " : \n  " } else { " : " };
                format!("Error in {c}{sep}{}", self.msg)
            }
            None => format!("Error: {}", self.msg),
        }
    }
}

pub enum Flow {
    Error(RError),
    Warning(RError),
    Break,
    Next,
    Return(Value),
    Quit(i32),
}

impl From<RError> for Flow {
    fn from(e: RError) -> Self {
        Flow::Error(e)
    }
}

pub type EResult<T> = Result<T, Flow>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarnMode {
    Suppress,
    Catch,
}

/// Packages that ship with a plain R installation.
pub const INSTALLED_PACKAGES: &[&str] = &[
    "base",
    "stats",
    "utils",
    "methods",
    "graphics",
    "grDevices",
    "datasets",
    "tools",
    "parallel",
    "splines",
    "compiler",
    "grid",
    "stats4",
    "tcltk",
];

/// Packages attached when `Rscript` starts.
pub const DEFAULT_ATTACHED: &[&str] = &["base", "stats", "utils", "methods", "graphics", "grDevices", "datasets"];

pub struct Interp {
    pub global: EnvRef,
    pub attached: BTreeSet<String>,
    pub out: Box<dyn Write>,
    pub err: Box<dyn Write>,
    pub visible: bool,
    pub frames: Vec<String>,
    pub wd: PathBuf,
    pub warning_modes: Vec<WarnMode>,
    pub pending_warnings: Vec<RError>,
    pub suppress_messages: usize,
    depth: usize,
}

const MAX_DEPTH: usize = 2000;

/// Frame-local record of formals that were not supplied by the caller.
pub const MISSING_VAR: &str = ".__missing__";

impl Interp {
    pub fn new(wd: PathBuf, out: Box<dyn Write>, err: Box<dyn Write>) -> Interp {
        Interp {
            global: Rc::new(std::cell::RefCell::new(Env::default())),
            attached: DEFAULT_ATTACHED.iter().map(|s| s.to_string()).collect(),
            out,
            err,
            visible: true,
            frames: Vec::new(),
            wd,
            warning_modes: Vec::new(),
            pending_warnings: Vec::new(),
            suppress_messages: 0,
            depth: 0,
        }
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.wd.join(path)
        }
    }

    pub fn current_call(&self) -> Option<String> {
        self.frames.last().cloned()
    }

    pub fn error_in(&self, call: Option<String>, msg: impl Into<String>) -> Flow {
        Flow::Error(RError { call, msg: msg.into() })
    }

    /// Raises a warning: caught by an enclosing `tryCatch(warning = )`,
    /// dropped under `suppressWarnings`, otherwise deferred until the
    /// current top-level statement finishes.
    pub fn warn(&mut self, call: Option<String>, msg: &str) -> EResult<()> {
        let w = RError { call, msg: msg.to_string() };
        match self.warning_modes.last() {
            Some(WarnMode::Suppress) => Ok(()),
            Some(WarnMode::Catch) => Err(Flow::Warning(w)),
            None => {
                self.pending_warnings.push(w);
                Ok(())
            }
        }
    }

    /// Renders and clears deferred warnings.
    pub fn take_warnings(&mut self) -> String {
        let ws = std::mem::take(&mut self.pending_warnings);
        let one = |w: &RError| match &w.call {
            Some(c) if c.len() + w.msg.len() > 70 => format!("In {c} :\n  {}", w.msg),
            Some(c) => format!("In {c} : {}", w.msg),
            None => w.msg.clone(),
        };
        match ws.len() {
            0 => String::new(),
            1 => format!("Warning message:\n{}\n", one(&ws[0])),
            _ => {
                let mut out = String::from("Warning messages:\n");
                for (i, w) in ws.iter().take(50).enumerate() {
                    out.push_str(&format!("{}: {}\n", i + 1, one(w)));
                }
                out
            }
        }
    }

    pub fn message(&mut self, msg: &str) {
        if self.suppress_messages > 0 {
            return;
        }
        let _ = self.err.write_all(msg.as_bytes());
    }

    pub fn builtin_available(&self, name: &str) -> bool {
        match builtins::package_of(name) {
            Some(pkg) => self.attached.contains(pkg),
            None => false,
        }
    }

    pub fn lookup_var(&self, name: &str, env: &EnvRef) -> EResult<Value> {
        if let Some((pkg, member)) = name.split_once("::") {
            let member = member.trim_start_matches(':');
            if !INSTALLED_PACKAGES.contains(&pkg) && !builtins::extra_package(pkg) {
                return Err(self.error_in(
                    Some("loadNamespace(x)".to_string()),
                    format!("there is no package called \u{2018}{pkg}\u{2019}"),
                ));
            }
            if builtins::package_of(member) == Some(pkg) {
                return Ok(Value::Builtin(builtins::intern(member)));
            }
            return Err(self.error_in(None, format!("'{member}' is not an exported object from 'namespace:{pkg}'")));
        }
        if let Some(v) = Env::lookup(env, name) {
            return Ok(v);
        }
        if self.builtin_available(name) {
            return Ok(Value::Builtin(builtins::intern(name)));
        }
        if let Some(v) = builtins::constant(name) {
            return Ok(v);
        }
        Err(self.error_in(self.current_call(), format!("object '{name}' not found")))
    }

    /// Evaluates a file's statements in the global environment.
    pub fn source_file(&mut self, file: &str, call: &str) -> EResult<()> {
        let path = self.resolve_path(file);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => {
                self.warn(
                    Some("file(filename, \"r\", encoding = encoding)".into()),
                    &format!("cannot open file '{file}': No such file or directory"),
                )?;
                return Err(self.error_in(
                    Some("file(filename, \"r\", encoding = encoding)".into()),
                    "cannot open the connection",
                ));
            }
        };
        let stmts = parse(&text).map_err(|e| {
            self.error_in(
                Some(call.to_string()),
                format!("{}:{}:{}: {}", path.file_name().unwrap_or_default().to_string_lossy(), e.line, 1, e),
            )
        })?;
        let global = self.global.clone();
        for s in &stmts {
            self.eval(&s.expr, &global)?;
        }
        self.visible = false;
        Ok(())
    }

    pub fn eval(&mut self, e: &Expr, env: &EnvRef) -> EResult<Value> {
        self.visible = true;
        match e {
            Expr::Num(v) => Ok(Value::num(*v)),
            Expr::Str(s) => Ok(Value::str(s.clone())),
            Expr::Bool(b) => Ok(Value::lgl(*b)),
            Expr::Null => Ok(Value::Null),
            Expr::Na => Ok(Value::Lgl(vec![None], Attrs::default())),
            Expr::Ident(name) => self.lookup_var(name, env),
            Expr::Paren(inner) => {
                let v = self.eval(inner, env)?;
                self.visible = true;
                Ok(v)
            }
            Expr::Block(stmts) => {
                let mut last = Value::Null;
                for s in stmts {
                    last = self.eval(s, env)?;
                }
                Ok(last)
            }
            Expr::Function { params, body } => {
                Ok(Value::Closure(Rc::new(Closure { params: params.clone(), body: body.clone(), env: env.clone() })))
            }
            Expr::Assign { target, value, global } => {
                let v = self.eval(value, env)?;
                self.assign(target, v.clone(), env, *global)?;
                self.visible = false;
                Ok(v)
            }
            Expr::If { cond, then, otherwise } => {
                let c = self.eval(cond, env)?;
                if self.condition(&c, "if")? {
                    self.eval(then, env)
                } else if let Some(o) = otherwise {
                    self.eval(o, env)
                } else {
                    self.visible = false;
                    Ok(Value::Null)
                }
            }
            Expr::For { var, seq, body } => {
                let s = self.eval(seq, env)?;
                let n = s.len();
                for i in 0..n {
                    let item = match &s {
                        Value::List(items, _) => items[i].clone(),
                        other => other.element(i),
                    };
                    env.borrow_mut().vars.insert(var.clone(), item);
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                self.visible = false;
                Ok(Value::Null)
            }
            Expr::While { cond, body } => {
                loop {
                    let c = self.eval(cond, env)?;
                    if !self.condition(&c, "while")? {
                        break;
                    }
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                self.visible = false;
                Ok(Value::Null)
            }
            Expr::Repeat(body) => {
                loop {
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                self.visible = false;
                Ok(Value::Null)
            }
            Expr::Break => Err(Flow::Break),
            Expr::Next => Err(Flow::Next),
            Expr::Formula(..) => Err(self.error_in(self.current_call(), "formula objects are not supported")),
            Expr::Unary { op, expr } => {
                let v = self.eval(expr, env)?;
                self.visible = true;
                self.unary(*op, v, e)
            }
            Expr::Binary { op, lhs, rhs } => self.binary(op, lhs, rhs, env, e),
            Expr::Dollar { obj, name } => {
                let o = self.eval(obj, env)?;
                self.visible = true;
                self.dollar(&o, name, e)
            }
            Expr::Index { obj, args, double } => {
                let o = self.eval(obj, env)?;
                let idx = self.eval_index_args(args, env)?;
                self.visible = true;
                if *double {
                    self.index2(&o, &idx, e)
                } else {
                    self.index1(&o, &idx, e)
                }
            }
            Expr::Call { func, args } => self.eval_call(func, args, env, e),
        }
    }

    pub fn condition(&mut self, v: &Value, what: &str) -> EResult<bool> {
        if v.is_empty() {
            return Err(self.error_in(Some(format!("{what} (...)")), "argument is of length zero"));
        }
        if v.len() > 1 {
            return Err(self.error_in(Some(format!("{what} (...)")), "the condition has length > 1"));
        }
        let b = match v {
            Value::Lgl(x, _) => x[0],
            Value::Num(x, _) => {
                if x[0].is_nan() {
                    None
                } else {
                    Some(x[0] != 0.0)
                }
            }
            Value::Str(x, _) => match x[0].as_deref() {
                Some("TRUE") | Some("true") | Some("T") => Some(true),
                Some("FALSE") | Some("false") | Some("F") => Some(false),
                Some(_) => {
                    return Err(self.error_in(Some(format!("{what} (...)")), "argument is not interpretable as logical"))
                }
                None => None,
            },
            _ => return Err(self.error_in(Some(format!("{what} (...)")), "argument is not interpretable as logical")),
        };
        b.ok_or_else(|| self.error_in(Some(format!("{what} (...)")), "missing value where TRUE/FALSE needed"))
    }

    fn eval_index_args(&mut self, args: &[Arg], env: &EnvRef) -> EResult<Vec<Option<Value>>> {
        let mut out = Vec::new();
        for a in args {
            if a.name.is_some() {
                // drop = , exact = ; ignored
                continue;
            }
            match &a.value {
                Some(v) => out.push(Some(self.eval(v, env)?)),
                None => out.push(None),
            }
        }
        Ok(out)
    }

    fn eval_call(&mut self, func: &Expr, args: &[Arg], env: &EnvRef, call: &Expr) -> EResult<Value> {
        let call_text = deparse(call);
        let f = match func {
            Expr::Ident(name) | Expr::Str(name) => {
                if let Some(v) = builtins::special_form(self, name, args, env, call)? {
                    return Ok(v);
                }
                match Env::lookup_function(env, name) {
                    Some(f) => f,
                    None if name.contains("::") => self.lookup_var(name, env)?,
                    None if self.builtin_available(name) => Value::Builtin(builtins::intern(name)),
                    None => return Err(self.error_in(Some(call_text), format!("could not find function \"{name}\""))),
                }
            }
            other => {
                let f = self.eval(other, env)?;
                if !f.is_function() {
                    return Err(self.error_in(Some(call_text), "attempt to apply non-function"));
                }
                f
            }
        };
        let mut evaluated = Vec::with_capacity(args.len());
        for a in args {
            match &a.value {
                Some(Expr::Ident(d)) if d == "..." => {
                    if let Some(Value::List(items, attrs)) = Env::lookup(env, "...") {
                        let names = attrs.names.unwrap_or_default();
                        for (i, item) in items.into_iter().enumerate() {
                            let n = names.get(i).filter(|n| !n.is_empty()).cloned();
                            evaluated.push((n, item));
                        }
                    }
                }
                Some(v) => {
                    let val = self.eval(v, env)?;
                    evaluated.push((a.name.clone(), val));
                }
                None => {}
            }
        }
        self.apply(&f, evaluated, &call_text)
    }

    pub fn apply(&mut self, f: &Value, args: Vec<(Option<String>, Value)>, call_text: &str) -> EResult<Value> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            self.depth -= 1;
            return Err(
                self.error_in(None, "evaluation nested too deeply: infinite recursion / options(expressions=)?")
            );
        }
        self.visible = true;
        let r = match f {
            Value::Builtin(name) => builtins::call(self, name, args, call_text),
            Value::Closure(c) => self.call_closure(c, args, call_text),
            _ => Err(self.error_in(Some(call_text.to_string()), "attempt to apply non-function")),
        };
        self.depth -= 1;
        r
    }

    fn call_closure(&mut self, c: &Closure, args: Vec<(Option<String>, Value)>, call_text: &str) -> EResult<Value> {
        let fenv = Env::new_child(&c.env);
        let params = &c.params;
        let mut bound: Vec<Option<Value>> = vec![None; params.len()];
        let has_dots = params.iter().any(|p| p.name == "...");
        let mut rest: Vec<(Option<String>, Value)> = Vec::new();
        let mut positional: Vec<Value> = Vec::new();
        // exact name matching
        let mut pending: Vec<(Option<String>, Value)> = Vec::new();
        for (name, v) in args {
            match name {
                Some(n) => match params.iter().position(|p| p.name == n && p.name != "...") {
                    Some(i) if bound[i].is_none() => bound[i] = Some(v),
                    Some(_) => {
                        return Err(self.error_in(
                            Some(call_text.to_string()),
                            format!("formal argument \"{n}\" matched by multiple actual arguments"),
                        ))
                    }
                    None => pending.push((Some(n), v)),
                },
                None => pending.push((None, v)),
            }
        }
        // partial matching of remaining named args (only params before `...`)
        for (name, v) in pending {
            match name {
                Some(n) => {
                    let dots_pos = params.iter().position(|p| p.name == "...").unwrap_or(params.len());
                    let cands: Vec<usize> =
                        (0..dots_pos).filter(|&i| bound[i].is_none() && params[i].name.starts_with(&n)).collect();
                    if cands.len() == 1 {
                        bound[cands[0]] = Some(v);
                    } else if has_dots {
                        rest.push((Some(n), v));
                    } else {
                        let shown = match &v {
                            Value::Num(x, _) if x.len() == 1 => num_to_string(x[0], 15),
                            _ => "...".into(),
                        };
                        return Err(
                            self.error_in(Some(call_text.to_string()), format!("unused argument ({n} = {shown})"))
                        );
                    }
                }
                None => positional.push(v),
            }
        }
        let mut pos_iter = positional.into_iter();
        for (i, p) in params.iter().enumerate() {
            if p.name == "..." {
                for v in pos_iter.by_ref() {
                    rest.push((None, v));
                }
                break;
            }
            if bound[i].is_none() {
                if let Some(v) = pos_iter.next() {
                    bound[i] = Some(v);
                }
            }
        }
        let leftover: Vec<Value> = pos_iter.collect();
        if !leftover.is_empty() {
            return Err(self.error_in(Some(call_text.to_string()), "unused argument"));
        }
        for (i, p) in params.iter().enumerate() {
            if p.name == "..." {
                let names: Vec<String> = rest.iter().map(|(n, _)| n.clone().unwrap_or_default()).collect();
                let vals: Vec<Value> = rest.iter().map(|(_, v)| v.clone()).collect();
                let attrs = Attrs { names: Some(names), class: None };
                fenv.borrow_mut().vars.insert("...".into(), Value::List(vals, attrs));
                continue;
            }
            if let Some(v) = bound[i].take() {
                fenv.borrow_mut().vars.insert(p.name.clone(), v);
            }
        }
        let missing: Vec<String> = params
            .iter()
            .filter(|p| p.name != "..." && !fenv.borrow().vars.contains_key(&p.name))
            .map(|p| p.name.clone())
            .collect();
        if !missing.is_empty() {
            fenv.borrow_mut().vars.insert(MISSING_VAR.into(), Value::strs(missing));
        }
        self.frames.push(call_text.to_string());
        // defaults are evaluated in the function frame after supplied args are bound
        for p in params.iter() {
            if p.name == "..." || fenv.borrow().vars.contains_key(&p.name) {
                continue;
            }
            if let Some(d) = &p.default {
                match self.eval(d, &fenv) {
                    Ok(v) => {
                        fenv.borrow_mut().vars.insert(p.name.clone(), v);
                    }
                    Err(e) => {
                        self.frames.pop();
                        return Err(e);
                    }
                }
            }
        }
        let r = self.eval(&c.body, &fenv);
        self.frames.pop();
        match r {
            Ok(v) => Ok(v),
            Err(Flow::Return(v)) => Ok(v),
            Err(Flow::Break) | Err(Flow::Next) => {
                Err(self.error_in(None, "no loop for break/next, jumping to top level"))
            }
            Err(e) => Err(e),
        }
    }

    // ── assignment ──────────────────────────────────────────────────────────

    fn set_var(&mut self, name: &str, v: Value, env: &EnvRef, global: bool) {
        if global {
            Env::assign_super(env, name, v);
        } else {
            env.borrow_mut().vars.insert(name.to_string(), v);
        }
    }

    pub fn assign(&mut self, target: &Expr, value: Value, env: &EnvRef, global: bool) -> EResult<()> {
        match target {
            Expr::Ident(n) | Expr::Str(n) => {
                self.set_var(n, value, env, global);
                Ok(())
            }
            Expr::Paren(inner) => self.assign(inner, value, env, global),
            Expr::Dollar { obj, name } => {
                let cur = self.current_for_assign(obj, env)?;
                let new = self.set_dollar(cur, name, value)?;
                self.assign(obj, new, env, global)
            }
            Expr::Index { obj, args, double } => {
                let cur = self.current_for_assign(obj, env)?;
                let idx = self.eval_index_args(args, env)?;
                let new = if *double {
                    self.set_index2(cur, &idx, value, target)?
                } else {
                    self.set_index1(cur, &idx, value, target)?
                };
                self.assign(obj, new, env, global)
            }
            Expr::Call { func, args } => {
                let fname = match func.as_ref() {
                    Expr::Ident(n) | Expr::Str(n) => n.clone(),
                    _ => return Err(self.error_in(None, "invalid function in complex assignment")),
                };
                let first = args
                    .first()
                    .and_then(|a| a.value.as_ref())
                    .ok_or_else(|| self.error_in(None, "invalid assignment target"))?;
                let cur = self.current_for_assign(first, env)?;
                let new = builtins::replacement(self, &fname, cur, value, &deparse(target))?;
                self.assign(first, new, env, global)
            }
            _ => Err(self.error_in(None, "invalid (do_set) left-hand side to assignment")),
        }
    }

    fn current_for_assign(&mut self, obj: &Expr, env: &EnvRef) -> EResult<Value> {
        match obj {
            Expr::Ident(n) => self.lookup_var(n, env),
            other => self.eval(other, env),
        }
    }

    fn set_dollar(&mut self, cur: Value, name: &str, value: Value) -> EResult<Value> {
        match cur {
            Value::Null => {
                if matches!(value, Value::Null) {
                    return Ok(Value::Null);
                }
                Ok(Value::List(vec![value], Attrs { names: Some(vec![name.to_string()]), class: None }))
            }
            Value::List(mut items, mut attrs) => {
                let is_df = attrs.class.as_ref().is_some_and(|c| c.iter().any(|x| x == "data.frame"));
                let value = if is_df && !matches!(value, Value::Null) {
                    let n = items.first().map(|c| c.len()).unwrap_or(value.len());
                    if !items.is_empty() && value.len() != n {
                        if value.is_empty() || n % value.len() != 0 {
                            return Err(self.error_in(
                                Some("`$<-.data.frame`(`*tmp*`, ...)".into()),
                                format!("replacement has {} rows, data has {}", value.len(), n),
                            ));
                        }
                        builtins::recycle(&value, n)
                    } else {
                        value
                    }
                } else {
                    value
                };
                let names = attrs.names.get_or_insert_with(|| vec![String::new(); items.len()]);
                match names.iter().position(|n| n == name) {
                    Some(i) => {
                        if matches!(value, Value::Null) {
                            items.remove(i);
                            names.remove(i);
                        } else {
                            items[i] = value;
                        }
                    }
                    None => {
                        if !matches!(value, Value::Null) {
                            items.push(value);
                            names.push(name.to_string());
                        }
                    }
                }
                Ok(Value::List(items, attrs))
            }
            _ => Err(self.error_in(None, "$ operator is invalid for atomic vectors")),
        }
    }

    // ── indexing ────────────────────────────────────────────────────────────

    pub fn dollar(&mut self, o: &Value, name: &str, _e: &Expr) -> EResult<Value> {
        match o {
            Value::List(items, attrs) => {
                let names = attrs.names.clone().unwrap_or_default();
                if let Some(i) = names.iter().position(|n| n == name) {
                    return Ok(items[i].clone());
                }
                let partial: Vec<usize> =
                    names.iter().enumerate().filter(|(_, n)| n.starts_with(name)).map(|(i, _)| i).collect();
                if partial.len() == 1 && !o.is_data_frame() {
                    return Ok(items[partial[0]].clone());
                }
                Ok(Value::Null)
            }
            Value::Null => Ok(Value::Null),
            _ => Err(self.error_in(None, "$ operator is invalid for atomic vectors")),
        }
    }

    pub fn index1(&mut self, o: &Value, idx: &[Option<Value>], e: &Expr) -> EResult<Value> {
        if o.is_data_frame() {
            return self.index_df(o, idx, e);
        }
        match idx {
            [] => Ok(o.clone()),
            [None] => Ok(o.clone()),
            [Some(i)] => {
                let positions = self.resolve_index(o, i, e)?;
                Ok(crate::ops::select(o, &positions))
            }
            _ => Err(self.error_in(Some(deparse(e)), "incorrect number of dimensions")),
        }
    }

    fn index_df(&mut self, df: &Value, idx: &[Option<Value>], e: &Expr) -> EResult<Value> {
        let (cols, attrs) = match df {
            Value::List(c, a) => (c, a),
            _ => unreachable!(),
        };
        let names = attrs.names.clone().unwrap_or_default();
        let nrow = df.nrow();
        let (row_sel, col_sel, drop) = match idx {
            [None] | [] => return Ok(df.clone()),
            [Some(j)] => (None, Some(j), false),
            [r, c] => (r.as_ref(), c.as_ref(), true),
            _ => return Err(self.error_in(Some(deparse(e)), "incorrect number of dimensions")),
        };
        let col_positions: Vec<Option<usize>> = match col_sel {
            None => (0..cols.len()).map(Some).collect(),
            Some(j) => {
                let names_val = Value::List(cols.clone(), Attrs { names: Some(names.clone()), class: None });
                self.resolve_index(&names_val, j, e)?
            }
        };
        if col_positions.iter().any(|p| p.is_none()) {
            return Err(self.error_in(Some(deparse(e)), "undefined columns selected"));
        }
        let row_positions: Option<Vec<Option<usize>>> = match row_sel {
            None => None,
            Some(r) => {
                let proxy = Value::Num((0..nrow).map(|i| i as f64).collect(), Attrs::default());
                Some(self.resolve_index(&proxy, r, e)?)
            }
        };
        let mut out_cols = Vec::new();
        let mut out_names = Vec::new();
        for p in col_positions.into_iter().flatten() {
            let col = &cols[p];
            let c = match &row_positions {
                None => col.clone(),
                Some(rows) => crate::ops::select(col, rows),
            };
            out_cols.push(c.with_names(None));
            out_names.push(names[p].clone());
        }
        if drop && out_cols.len() == 1 {
            return Ok(out_cols.pop().unwrap());
        }
        Ok(crate::value::data_frame(out_names, out_cols))
    }

    /// Converts an index value into 0-based positions (None = out of range / NA).
    pub fn resolve_index(&mut self, o: &Value, i: &Value, e: &Expr) -> EResult<Vec<Option<usize>>> {
        let n = o.len();
        match i {
            Value::Num(v, _) => {
                let any_neg = v.iter().any(|x| *x < 0.0);
                let any_pos = v.iter().any(|x| *x > 0.0);
                if any_neg && any_pos {
                    return Err(self.error_in(Some(deparse(e)), "can't mix positive and negative subscripts"));
                }
                if any_neg {
                    let excl: BTreeSet<usize> = v.iter().map(|x| (-x) as usize).collect();
                    return Ok((0..n).filter(|k| !excl.contains(&(k + 1))).map(Some).collect());
                }
                Ok(v.iter()
                    .filter(|x| x.is_nan() || x.trunc() != 0.0)
                    .map(|x| {
                        if x.is_nan() {
                            None
                        } else {
                            let k = x.trunc() as usize - 1;
                            (k < n).then_some(k)
                        }
                    })
                    .collect())
            }
            Value::Lgl(v, _) => {
                if v.is_empty() {
                    return Ok(Vec::new());
                }
                let m = n.max(v.len());
                Ok((0..m)
                    .filter_map(|k| match v[k % v.len()] {
                        Some(true) => Some(if k < n { Some(k) } else { None }),
                        Some(false) => None,
                        None => Some(None),
                    })
                    .collect())
            }
            Value::Str(v, _) => {
                let names = o.names().cloned().unwrap_or_default();
                Ok(v.iter().map(|s| s.as_ref().and_then(|s| names.iter().position(|n| n == s))).collect())
            }
            Value::Null => Ok(Vec::new()),
            _ => Err(self.error_in(Some(deparse(e)), format!("invalid subscript type '{}'", i.type_name()))),
        }
    }

    pub fn index2(&mut self, o: &Value, idx: &[Option<Value>], e: &Expr) -> EResult<Value> {
        let i = match idx {
            [Some(i)] => i,
            _ => return Err(self.error_in(Some(deparse(e)), "invalid subscript")),
        };
        if i.len() != 1 {
            return Err(self.error_in(Some(deparse(e)), "subscript out of bounds"));
        }
        let pos = self.resolve_index(o, i, e)?;
        match pos.first().copied().flatten() {
            Some(p) if p < o.len() => Ok(o.element(p).with_names(None)),
            _ => Err(self.error_in(Some(deparse(e)), "subscript out of bounds")),
        }
    }

    fn set_index1(&mut self, cur: Value, idx: &[Option<Value>], value: Value, e: &Expr) -> EResult<Value> {
        if cur.is_data_frame() {
            return Err(self.error_in(Some(deparse(e)), "data frame element assignment is not supported"));
        }
        let positions: Vec<usize> = match idx {
            [None] | [] => (0..cur.len()).collect(),
            [Some(i)] => {
                if let Value::Str(names, _) = i {
                    // assignment by name may append new elements
                    let mut out = Vec::new();
                    let mut cur_names = cur.names().cloned().unwrap_or_else(|| vec![String::new(); cur.len()]);
                    let mut extended = cur.len();
                    for n in names.iter().flatten() {
                        match cur_names.iter().position(|x| x == n) {
                            Some(p) => out.push(p),
                            None => {
                                cur_names.push(n.clone());
                                out.push(extended);
                                extended += 1;
                            }
                        }
                    }
                    let grown = builtins::assign_positions(&cur, &out, &value)
                        .map_err(|m| self.error_in(Some(deparse(e)), m))?;
                    return Ok(grown.with_names(Some(cur_names)));
                }

                self.resolve_index_for_assign(&cur, i, e)?
            }
            _ => return Err(self.error_in(Some(deparse(e)), "incorrect number of subscripts")),
        };
        builtins::assign_positions(&cur, &positions, &value).map_err(|m| self.error_in(Some(deparse(e)), m))
    }

    fn resolve_index_for_assign(&mut self, cur: &Value, i: &Value, e: &Expr) -> EResult<Vec<usize>> {
        match i {
            Value::Num(v, _) if v.iter().all(|x| *x >= 1.0) => Ok(v.iter().map(|x| x.trunc() as usize - 1).collect()),
            _ => {
                let pos = self.resolve_index(cur, i, e)?;
                Ok(pos.into_iter().flatten().collect())
            }
        }
    }

    fn set_index2(&mut self, cur: Value, idx: &[Option<Value>], value: Value, e: &Expr) -> EResult<Value> {
        let i = match idx {
            [Some(i)] => i.clone(),
            _ => return Err(self.error_in(Some(deparse(e)), "invalid subscript")),
        };
        if let Value::Str(n, _) = &i {
            let name = n.first().cloned().flatten().unwrap_or_default();
            let base = match cur {
                Value::Null => Value::List(vec![], Attrs::default()),
                other => other,
            };
            if matches!(base, Value::List(..)) {
                return self.set_dollar(base, &name, value);
            }
            return self.set_index1(base, &[Some(i.clone())], value, e);
        }
        match cur {
            Value::List(mut items, attrs) => {
                let p = match &i {
                    Value::Num(v, _) if !v.is_empty() && v[0] >= 1.0 => v[0] as usize - 1,
                    _ => return Err(self.error_in(Some(deparse(e)), "invalid subscript")),
                };
                while items.len() <= p {
                    items.push(Value::Null);
                }
                items[p] = value;
                Ok(Value::List(items, attrs))
            }
            other => self.set_index1(other, &[Some(i)], value, e),
        }
    }

    // ── operators ───────────────────────────────────────────────────────────

    fn unary(&mut self, op: UnOp, v: Value, e: &Expr) -> EResult<Value> {
        match op {
            UnOp::Not => match v {
                Value::Lgl(x, a) => Ok(Value::Lgl(x.into_iter().map(|b| b.map(|b| !b)).collect(), a)),
                Value::Num(x, a) => {
                    Ok(Value::Lgl(x.into_iter().map(|n| if n.is_nan() { None } else { Some(n == 0.0) }).collect(), a))
                }
                _ => Err(self.error_in(Some(deparse(e)), "invalid argument type")),
            },
            UnOp::Neg | UnOp::Plus => {
                let sign = if op == UnOp::Neg { -1.0 } else { 1.0 };
                match v {
                    Value::Num(x, a) => Ok(Value::Num(x.into_iter().map(|n| sign * n).collect(), a)),
                    Value::Lgl(x, a) => Ok(Value::Num(
                        x.into_iter().map(|b| b.map(|b| sign * (b as u8 as f64)).unwrap_or_else(na_real)).collect(),
                        a,
                    )),
                    _ => Err(self.error_in(Some(deparse(e)), "invalid argument to unary operator")),
                }
            }
        }
    }

    fn binary(&mut self, op: &BinOp, lhs: &Expr, rhs: &Expr, env: &EnvRef, e: &Expr) -> EResult<Value> {
        match op {
            BinOp::AndAnd | BinOp::OrOr => {
                let l = self.eval(lhs, env)?;
                let lb = self.scalar_logical(&l, op, e)?;
                match (op, lb) {
                    (BinOp::AndAnd, Some(false)) => return Ok(Value::lgl(false)),
                    (BinOp::OrOr, Some(true)) => return Ok(Value::lgl(true)),
                    _ => {}
                }
                let r = self.eval(rhs, env)?;
                let rb = self.scalar_logical(&r, op, e)?;
                self.visible = true;
                let out = match op {
                    BinOp::AndAnd => match (lb, rb) {
                        (_, Some(false)) => Some(false),
                        (Some(true), Some(true)) => Some(true),
                        _ => None,
                    },
                    _ => match (lb, rb) {
                        (_, Some(true)) => Some(true),
                        (Some(false), Some(false)) => Some(false),
                        _ => None,
                    },
                };
                Ok(Value::Lgl(vec![out], Attrs::default()))
            }
            _ => {
                let l = self.eval(lhs, env)?;
                let r = self.eval(rhs, env)?;
                self.visible = true;
                builtins::binary_op(self, op, &l, &r, &deparse(e))
            }
        }
    }

    fn scalar_logical(&mut self, v: &Value, op: &BinOp, e: &Expr) -> EResult<Option<bool>> {
        let name = if *op == BinOp::AndAnd { "&&" } else { "||" };
        if v.len() != 1 {
            return Err(self.error_in(Some(deparse(e)), format!("invalid 'x' type in 'x {name} y'")));
        }
        Ok(match v {
            Value::Lgl(x, _) => x[0],
            Value::Num(x, _) => {
                if x[0].is_nan() {
                    None
                } else {
                    Some(x[0] != 0.0)
                }
            }
            _ => return Err(self.error_in(Some(deparse(e)), format!("invalid 'x' type in 'x {name} y'"))),
        })
    }
}
