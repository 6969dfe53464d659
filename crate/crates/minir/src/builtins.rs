//! Built-in functions and special forms.

use std::collections::HashMap;
use std::io::Write;
use std::sync::OnceLock;

use crate::interp::{EResult, Flow, Interp, RError, WarnMode, INSTALLED_PACKAGES, MISSING_VAR};
use crate::ops::{as_lgls, as_nums, as_strs, collate, combine, identical, rank, select};
use crate::parser::{deparse, Arg, Expr};
use crate::print::print_value;
use crate::value::{data_frame, is_na_real, na_real, Attrs, Env, EnvRef, Value};
use crate::{rio, stats, strings};

pub use crate::ops::{assign_positions, binary_op, recycle};

type Args = Vec<(Option<String>, Value)>;

const TABLE: &[(&str, &str)] = &[
    ("abs", "base"),
    ("all", "base"),
    ("any", "base"),
    ("append", "base"),
    ("as.character", "base"),
    ("as.double", "base"),
    ("as.integer", "base"),
    ("as.logical", "base"),
    ("as.numeric", "base"),
    ("basename", "base"),
    ("c", "base"),
    ("cat", "base"),
    ("ceiling", "base"),
    ("character", "base"),
    ("class", "base"),
    ("colnames", "base"),
    ("conditionMessage", "base"),
    ("cos", "base"),
    ("cumprod", "base"),
    ("cumsum", "base"),
    ("diff", "base"),
    ("dim", "base"),
    ("dir.create", "base"),
    ("dir.exists", "base"),
    ("dirname", "base"),
    ("do.call", "base"),
    ("double", "base"),
    ("duplicated", "base"),
    ("endsWith", "base"),
    ("exp", "base"),
    ("file.exists", "base"),
    ("file.path", "base"),
    ("Filter", "base"),
    ("floor", "base"),
    ("format", "base"),
    ("formatC", "base"),
    ("getwd", "base"),
    ("grepl", "base"),
    ("grep", "base"),
    ("gsub", "base"),
    ("identical", "base"),
    ("identity", "base"),
    ("ifelse", "base"),
    ("inherits", "base"),
    ("integer", "base"),
    ("intersect", "base"),
    ("invisible", "base"),
    ("is.character", "base"),
    ("is.data.frame", "base"),
    ("is.finite", "base"),
    ("is.function", "base"),
    ("is.infinite", "base"),
    ("is.list", "base"),
    ("is.logical", "base"),
    ("is.na", "base"),
    ("is.nan", "base"),
    ("is.null", "base"),
    ("is.numeric", "base"),
    ("is.vector", "base"),
    ("isFALSE", "base"),
    ("isTRUE", "base"),
    ("lapply", "base"),
    ("length", "base"),
    ("list", "base"),
    ("list.files", "base"),
    ("log", "base"),
    ("log10", "base"),
    ("log1p", "base"),
    ("log2", "base"),
    ("logical", "base"),
    ("Map", "base"),
    ("mapply", "base"),
    ("match", "base"),
    ("max", "base"),
    ("mean", "base"),
    ("message", "base"),
    ("min", "base"),
    ("names", "base"),
    ("nchar", "base"),
    ("ncol", "base"),
    ("nrow", "base"),
    ("numeric", "base"),
    ("order", "base"),
    ("paste", "base"),
    ("paste0", "base"),
    ("pmax", "base"),
    ("pmin", "base"),
    ("prettyNum", "base"),
    ("print", "base"),
    ("prod", "base"),
    ("q", "base"),
    ("quit", "base"),
    ("range", "base"),
    ("rbind", "base"),
    ("readLines", "base"),
    ("readRDS", "base"),
    ("Reduce", "base"),
    ("rep", "base"),
    ("rev", "base"),
    ("round", "base"),
    ("rownames", "base"),
    ("sapply", "base"),
    ("seq", "base"),
    ("seq_along", "base"),
    ("seq_len", "base"),
    ("setdiff", "base"),
    ("signif", "base"),
    ("simpleError", "base"),
    ("sin", "base"),
    ("sort", "base"),
    ("source", "base"),
    ("split", "base"),
    ("sprintf", "base"),
    ("sqrt", "base"),
    ("startsWith", "base"),
    ("stdout", "base"),
    ("stderr", "base"),
    ("stop", "base"),
    ("strsplit", "base"),
    ("sub", "base"),
    ("substr", "base"),
    ("substring", "base"),
    ("sum", "base"),
    ("Sys.getenv", "base"),
    ("table", "base"),
    ("tan", "base"),
    ("tapply", "base"),
    ("tolower", "base"),
    ("toupper", "base"),
    ("trimws", "base"),
    ("trunc", "base"),
    ("union", "base"),
    ("unique", "base"),
    ("unlist", "base"),
    ("unname", "base"),
    ("vapply", "base"),
    ("vector", "base"),
    ("warning", "base"),
    ("which", "base"),
    ("which.max", "base"),
    ("which.min", "base"),
    ("writeLines", "base"),
    ("xor", "base"),
    ("nlevels", "base"),
    ("cor", "stats"),
    ("cov", "stats"),
    ("median", "stats"),
    ("quantile", "stats"),
    ("sd", "stats"),
    ("setNames", "stats"),
    ("var", "stats"),
    ("weighted.mean", "stats"),
    ("head", "utils"),
    ("read.csv", "utils"),
    ("tail", "utils"),
    ("write.csv", "utils"),
    ("toTitleCase", "tools"),
    ("file_ext", "tools"),
];

fn table() -> &'static HashMap<&'static str, &'static str> {
    static T: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    T.get_or_init(|| TABLE.iter().copied().collect())
}

pub fn package_of(name: &str) -> Option<&'static str> {
    table().get(name).copied()
}

pub fn intern(name: &str) -> &'static str {
    table().get_key_value(name).map(|(k, _)| *k).unwrap_or("identity")
}

/// Packages named in `MINIR_LIBS` load successfully but export nothing.
pub fn extra_package(pkg: &str) -> bool {
    std::env::var("MINIR_LIBS").map(|v| v.split([',', ':']).any(|p| p.trim() == pkg)).unwrap_or(false)
}

pub fn constant(name: &str) -> Option<Value> {
    Some(match name {
        "pi" => Value::num(std::f64::consts::PI),
        "T" => Value::lgl(true),
        "F" => Value::lgl(false),
        "LETTERS" => Value::strs((b'A'..=b'Z').map(|c| (c as char).to_string()).collect()),
        "letters" => Value::strs((b'a'..=b'z').map(|c| (c as char).to_string()).collect()),
        "NA_real_" | "NA_integer_" => Value::num(na_real()),
        "NA_character_" => Value::Str(vec![None], Attrs::default()),
        _ => return None,
    })
}

fn fail(call: &str, msg: impl Into<String>) -> Flow {
    Flow::Error(RError { call: Some(call.to_string()), msg: msg.into() })
}

struct Matched {
    v: Vec<Option<Value>>,
    dots: Args,
}

impl Matched {
    fn get(&self, i: usize) -> Option<&Value> {
        self.v[i].as_ref()
    }

    fn req(&self, i: usize, formal: &str, call: &str) -> EResult<&Value> {
        self.get(i).ok_or_else(|| fail(call, format!("argument \"{formal}\" is missing, with no default")))
    }

    fn num(&self, i: usize, default: f64) -> f64 {
        self.get(i).and_then(|v| as_nums(v).0.first().copied()).unwrap_or(default)
    }

    fn flag(&self, i: usize, default: bool) -> bool {
        self.get(i).and_then(|v| as_lgls(v).first().copied().flatten()).unwrap_or(default)
    }

    fn string(&self, i: usize) -> Option<String> {
        self.get(i).and_then(|v| as_strs(v).into_iter().next().flatten())
    }
}

fn match_args(args: Args, formals: &[&str], call: &str) -> EResult<Matched> {
    let mut v: Vec<Option<Value>> = vec![None; formals.len()];
    let dots_at = formals.iter().position(|f| *f == "...");
    let mut dots = Vec::new();
    let mut positional = Vec::new();
    for (name, val) in args {
        match name {
            Some(n) => {
                if let Some(i) = formals.iter().position(|f| *f == n && *f != "...") {
                    v[i] = Some(val);
                    continue;
                }
                let limit = dots_at.unwrap_or(formals.len());
                let cands: Vec<usize> =
                    (0..limit).filter(|&i| v[i].is_none() && formals[i].starts_with(n.as_str())).collect();
                if cands.len() == 1 {
                    v[cands[0]] = Some(val);
                } else if dots_at.is_some() {
                    dots.push((Some(n), val));
                } else {
                    return Err(fail(call, format!("unused argument ({n} = {})", crate::ops::deparse_value(&val))));
                }
            }
            None => positional.push(val),
        }
    }
    let mut it = positional.into_iter();
    for (i, f) in formals.iter().enumerate() {
        if *f == "..." {
            dots.extend(it.by_ref().map(|x| (None, x)));
            break;
        }
        if v[i].is_none() {
            match it.next() {
                Some(x) => v[i] = Some(x),
                None => break,
            }
        }
    }
    if let Some(extra) = it.next() {
        return Err(fail(call, format!("unused argument ({})", crate::ops::deparse_value(&extra))));
    }
    Ok(Matched { v, dots })
}

fn math_arg(v: &Value, call: &str) -> EResult<Vec<f64>> {
    match v {
        Value::Num(..) | Value::Lgl(..) | Value::Null => Ok(as_nums(v).0),
        _ => Err(fail(call, "non-numeric argument to mathematical function")),
    }
}

fn map_num(v: &Value, call: &str, f: impl Fn(f64) -> f64) -> EResult<Value> {
    let x = math_arg(v, call)?;
    let names = v.names().cloned();
    Ok(Value::Num(x.into_iter().map(|a| if is_na_real(a) { a } else { f(a) }).collect(), Attrs { names, class: None }))
}

fn summary_values(items: &Args, na_rm: bool, call: &str) -> EResult<Vec<f64>> {
    let mut out = Vec::new();
    for (_, v) in items {
        match v {
            Value::Num(..) | Value::Lgl(..) | Value::Null => out.extend(as_nums(v).0),
            Value::List(cols, _) if v.is_data_frame() => {
                for c in cols {
                    out.extend(math_arg(c, call)?);
                }
            }
            _ => return Err(fail(call, format!("invalid 'type' ({}) of argument", v.type_name()))),
        }
    }
    if na_rm {
        out.retain(|x| !x.is_nan());
    }
    Ok(out)
}

fn names_of(v: &Value) -> Value {
    match v.names() {
        Some(n) => Value::strs(n.clone()),
        None => Value::Null,
    }
}

fn unique_positions(v: &Value) -> Vec<usize> {
    let keys = as_strs(v);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if seen.insert(k.clone()) {
            out.push(i);
        }
    }
    out
}

fn cmp_elems(v: &Value, a: usize, b: usize) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match v {
        Value::Str(x, _) => match (&x[a], &x[b]) {
            (Some(p), Some(q)) => collate(p, q),
            (None, None) => Ordering::Equal,
            (None, _) => Ordering::Greater,
            (_, None) => Ordering::Less,
        },
        _ => {
            let x = as_nums(v).0;
            match (x[a].is_nan(), x[b].is_nan()) {
                (false, false) => x[a].partial_cmp(&x[b]).unwrap(),
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
            }
        }
    }
}

fn is_na_at(v: &Value, i: usize) -> bool {
    match v {
        Value::Num(x, _) => x[i].is_nan(),
        Value::Lgl(x, _) => x[i].is_none(),
        Value::Str(x, _) => x[i].is_none(),
        _ => false,
    }
}

/// Sorted group keys and membership, as `factor()` levels would order them.
fn groups(f: &Value) -> (Vec<String>, Vec<Option<usize>>) {
    let first = unique_positions(f);
    let mut order: Vec<usize> = first.into_iter().filter(|&i| !is_na_at(f, i)).collect();
    order.sort_by(|&a, &b| cmp_elems(f, a, b));
    let keys_all = as_strs(f);
    let levels: Vec<String> = order.iter().map(|&i| keys_all[i].clone().unwrap_or_default()).collect();
    let member = keys_all.iter().map(|k| k.as_ref().and_then(|k| levels.iter().position(|l| l == k))).collect();
    (levels, member)
}

fn df_rows(df: &Value, rows: &[Option<usize>]) -> Value {
    match df {
        Value::List(cols, a) => data_frame(
            a.names.clone().unwrap_or_default(),
            cols.iter().map(|c| select(c, rows).with_names(None)).collect(),
        ),
        _ => df.clone(),
    }
}

fn simplify(results: Vec<Value>, names: Option<Vec<String>>) -> Value {
    if !results.is_empty() && results.iter().all(|r| r.len() == 1 && rank(r) <= 3 && rank(r) > 0) {
        let items = results.into_iter().map(|r| (None, r.with_names(None))).collect();
        return combine(items).with_names(names);
    }
    Value::List(results, Attrs { names, class: None })
}

fn elements(v: &Value) -> Vec<Value> {
    match v {
        Value::List(items, _) => items.clone(),
        other => (0..other.len()).map(|i| other.element(i)).collect(),
    }
}

fn sapply_names(x: &Value) -> Option<Vec<String>> {
    match (x.names(), x) {
        (Some(n), _) => Some(n.clone()),
        (None, Value::Str(s, _)) => Some(s.iter().map(|v| v.clone().unwrap_or_else(|| "NA".into())).collect()),
        _ => None,
    }
}

fn write_out(it: &mut Interp, con: Option<&Value>, text: &str, append: bool, call: &str) -> EResult<()> {
    let target = con.and_then(|c| as_strs(c).into_iter().next().flatten()).unwrap_or_default();
    match target.as_str() {
        "" | "<stdout>" => {
            let _ = it.out.write_all(text.as_bytes());
        }
        "<stderr>" => {
            let _ = it.err.write_all(text.as_bytes());
        }
        path => {
            let p = it.resolve_path(path);
            let res = if append {
                std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&p)
                    .and_then(|mut f| f.write_all(text.as_bytes()))
            } else {
                std::fs::write(&p, text)
            };
            if res.is_err() {
                it.warn(
                    Some("file(con, \"w\")".into()),
                    &format!("cannot open file '{path}': No such file or directory"),
                )?;
                return Err(fail(call, "cannot open the connection"));
            }
        }
    }
    Ok(())
}

fn read_text(it: &mut Interp, path: &str, conn_call: &str) -> EResult<String> {
    match std::fs::read(it.resolve_path(path)) {
        Ok(b) => Ok(String::from_utf8_lossy(&b).into_owned()),
        Err(_) => {
            it.warn(Some(conn_call.into()), &format!("cannot open file '{path}': No such file or directory"))?;
            Err(fail(conn_call, "cannot open the connection"))
        }
    }
}

fn condition(msg: &str, call: Option<&str>, classes: &[&str]) -> Value {
    Value::List(
        vec![Value::str(msg), call.map(Value::str).unwrap_or(Value::Null)],
        Attrs {
            names: Some(vec!["message".into(), "call".into()]),
            class: Some(classes.iter().map(|s| s.to_string()).collect()),
        },
    )
}

fn message_text(items: &Args) -> String {
    items
        .iter()
        .flat_map(|(_, v)| if v.inherits("condition") { as_strs(&v.element(0)) } else { as_strs(v) })
        .map(|s| s.unwrap_or_else(|| "NA".into()))
        .collect()
}

fn sort_positions(keys: &[Value], decreasing: bool) -> Vec<usize> {
    let n = keys.first().map(|k| k.len()).unwrap_or(0);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        for k in keys {
            let na_a = is_na_at(k, a);
            let na_b = is_na_at(k, b);
            let o = match (na_a, na_b) {
                (true, true) => std::cmp::Ordering::Equal,
                (true, false) => std::cmp::Ordering::Greater,
                (false, true) => std::cmp::Ordering::Less,
                _ => {
                    let o = cmp_elems(k, a, b);
                    if decreasing {
                        o.reverse()
                    } else {
                        o
                    }
                }
            };
            if o != std::cmp::Ordering::Equal {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    });
    idx
}

fn seq_values(m: &Matched, call: &str) -> EResult<Vec<f64>> {
    let from = m.get(0);
    let to = m.get(1);
    let by = m.get(2);
    let len = m.get(3).map(|v| as_nums(v).0[0]);
    if let (Some(f), None, None, None) = (from, to, by, len) {
        let n = if f.len() == 1 { as_nums(f).0[0] } else { f.len() as f64 };
        if f.len() == 1 {
            return Ok((1..=(n as i64).max(0) as usize)
                .map(|i| i as f64)
                .collect::<Vec<_>>()
                .into_iter()
                .chain(if n < 1.0 { (n as i64..=1).rev().map(|i| i as f64).collect::<Vec<_>>() } else { vec![] })
                .collect());
        }
        return Ok((1..=f.len()).map(|i| i as f64).collect());
    }
    let from = from.map(|v| as_nums(v).0[0]).unwrap_or(1.0);
    match (to.map(|v| as_nums(v).0[0]), by.map(|v| as_nums(v).0[0]), len) {
        (Some(t), Some(b), _) => {
            if b == 0.0 || (t - from) * b < 0.0 {
                if t == from {
                    return Ok(vec![from]);
                }
                return Err(fail(call, "wrong sign in 'by' argument"));
            }
            let n = ((t - from) / b + 1e-10).floor() as usize + 1;
            Ok((0..n).map(|i| from + i as f64 * b).collect())
        }
        (Some(t), None, Some(l)) => {
            let l = l as usize;
            if l == 1 {
                return Ok(vec![from]);
            }
            Ok((0..l).map(|i| from + (t - from) * i as f64 / (l as f64 - 1.0)).collect())
        }
        (None, Some(b), Some(l)) => Ok((0..l as usize).map(|i| from + i as f64 * b).collect()),
        (Some(t), None, None) => {
            let n = ((t - from).abs() + 1e-10).floor() as usize + 1;
            let s = if t >= from { 1.0 } else { -1.0 };
            Ok((0..n).map(|i| from + s * i as f64).collect())
        }
        (None, None, Some(l)) => Ok((0..l as usize).map(|i| from + i as f64).collect()),
        _ => Ok(vec![from]),
    }
}

/// Dispatches a call to a built-in function.
pub fn call(it: &mut Interp, name: &str, args: Args, call: &str) -> EResult<Value> {
    macro_rules! m {
        ($($f:expr),*) => { match_args(args, &[$($f),*], call)? };
    }
    let v = match name {
        "c" => combine(args),
        "list" => {
            let any = args.iter().any(|(n, _)| n.is_some());
            let names = args.iter().map(|(n, _)| n.clone().unwrap_or_default()).collect();
            Value::List(args.into_iter().map(|(_, v)| v).collect(), Attrs { names: any.then_some(names), class: None })
        }
        "invisible" => {
            let m = m!("x");
            let v = m.get(0).cloned().unwrap_or(Value::Null);
            it.visible = false;
            return Ok(v);
        }
        "identity" => m!("x").req(0, "x", call)?.clone(),
        "print" => {
            let m = m!("x", "...");
            let x = m.req(0, "x", call)?.clone();
            let digits = m.dots.iter().find(|(n, _)| n.as_deref() == Some("digits"));
            let text = match (digits, &x) {
                (Some((_, d)), Value::Num(v, a)) => {
                    let d = as_nums(d).0[0] as usize;
                    let strs = crate::format::format_num_vec(v, d);
                    print_value(&Value::Str(strs.into_iter().map(Some).collect(), a.clone())).replace('"', "")
                }
                _ => print_value(&x),
            };
            let _ = it.out.write_all(text.as_bytes());
            it.visible = false;
            return Ok(x);
        }
        "cat" => {
            let m = m!("...", "file", "sep", "fill", "labels", "append");
            let sep = m.string(2).unwrap_or_else(|| " ".into());
            let mut parts = Vec::new();
            for (_, v) in &m.dots {
                match v {
                    Value::Num(x, _) => parts.extend(x.iter().map(|x| crate::format::num_to_string(*x, 7))),
                    Value::List(..) | Value::Closure(_) | Value::Builtin(_) => {
                        return Err(fail(call, "argument 1 (type 'list') cannot be handled by 'cat'"))
                    }
                    other => parts.extend(as_strs(other).into_iter().map(|s| s.unwrap_or_else(|| "NA".into()))),
                }
            }
            let mut text = String::new();
            for (i, p) in parts.iter().enumerate() {
                text.push_str(p);
                if i + 1 < parts.len() {
                    if p.ends_with('\n') && sep == " " {
                        continue;
                    }
                    text.push_str(&sep);
                }
            }
            let append = m.flag(5, false);
            write_out(it, m.get(1), &text, append, call)?;
            it.visible = false;
            Value::Null
        }
        "message" => {
            let m = m!("...", "domain", "appendLF");
            let mut text = message_text(&m.dots);
            if m.flag(2, true) {
                text.push('\n');
            }
            it.message(&text);
            it.visible = false;
            Value::Null
        }
        "stop" => {
            let m = m!("...", "call.", "domain");
            let msg = message_text(&m.dots);
            let c = if m.flag(1, true) { it.current_call() } else { None };
            return Err(Flow::Error(RError { call: c, msg }));
        }
        "warning" => {
            let m = m!("...", "call.", "immediate.", "domain");
            let msg = message_text(&m.dots);
            let c = if m.flag(1, true) { it.current_call() } else { None };
            it.warn(c, &msg)?;
            it.visible = false;
            Value::str(msg)
        }
        "simpleError" => {
            let m = m!("message", "call");
            condition(&m.string(0).unwrap_or_default(), None, &["simpleError", "error", "condition"])
        }
        "conditionMessage" => {
            let m = m!("c");
            let c = m.req(0, "c", call)?.clone();
            it.dollar(&c, "message", &Expr::Null)?
        }
        "quit" | "q" => {
            let m = m!("save", "status", "runLast");
            return Err(Flow::Quit(m.num(1, 0.0) as i32));
        }
        "stdout" => Value::str("<stdout>"),
        "stderr" => Value::str("<stderr>"),

        // ── type predicates and coercion ─────────────────────────────────────
        "is.null" => Value::lgl(matches!(m!("x").req(0, "x", call)?, Value::Null)),
        "is.numeric" => Value::lgl(matches!(m!("x").req(0, "x", call)?, Value::Num(..))),
        "is.character" => Value::lgl(matches!(m!("x").req(0, "x", call)?, Value::Str(..))),
        "is.logical" => Value::lgl(matches!(m!("x").req(0, "x", call)?, Value::Lgl(..))),
        "is.function" => Value::lgl(m!("x").req(0, "x", call)?.is_function()),
        "is.list" => Value::lgl(matches!(m!("x").req(0, "x", call)?, Value::List(..))),
        "is.data.frame" => Value::lgl(m!("x").req(0, "x", call)?.is_data_frame()),
        "is.vector" => {
            let m = m!("x", "mode");
            let x = m.req(0, "x", call)?;
            Value::lgl(
                matches!(x, Value::Lgl(..) | Value::Num(..) | Value::Str(..) | Value::List(..)) && !x.is_data_frame(),
            )
        }
        "is.na" => {
            let m = m!("x");
            let x = m.req(0, "x", call)?;
            let out = match x {
                Value::List(items, _) => items.iter().map(|i| Some(i.len() == 1 && is_na_at(i, 0))).collect(),
                other => (0..other.len()).map(|i| Some(is_na_at(other, i))).collect(),
            };
            Value::Lgl(out, Attrs { names: x.names().cloned(), class: None })
        }
        "is.nan" => Value::Lgl(
            as_nums(m!("x").req(0, "x", call)?).0.iter().map(|v| Some(v.is_nan() && !is_na_real(*v))).collect(),
            Attrs::default(),
        ),
        "is.finite" => {
            let x = m!("x").req(0, "x", call)?.clone();
            let vals = if matches!(x, Value::Str(..)) { vec![na_real(); x.len()] } else { as_nums(&x).0 };
            Value::Lgl(vals.iter().map(|v| Some(v.is_finite())).collect(), Attrs::default())
        }
        "is.infinite" => Value::Lgl(
            as_nums(m!("x").req(0, "x", call)?).0.iter().map(|v| Some(v.is_infinite())).collect(),
            Attrs::default(),
        ),
        "as.numeric" | "as.double" | "as.integer" => {
            let m = m!("x", "...");
            let x = m.get(0).cloned().unwrap_or(Value::Null);
            if matches!(x, Value::List(..)) && x.is_data_frame() {
                return Err(fail(call, "'list' object cannot be coerced to type 'double'"));
            }
            let (mut v, warned) = as_nums(&x);
            if warned {
                it.warn(None, "NAs introduced by coercion")?;
            }
            if name == "as.integer" {
                v = v.into_iter().map(|x| if x.is_nan() { x } else { x.trunc() }).collect();
            }
            Value::nums(v)
        }
        "as.character" => Value::Str(as_strs(&m!("x", "...").get(0).cloned().unwrap_or(Value::Null)), Attrs::default()),
        "as.logical" => Value::Lgl(as_lgls(&m!("x", "...").get(0).cloned().unwrap_or(Value::Null)), Attrs::default()),
        "numeric" | "double" | "integer" => Value::nums(vec![0.0; m!("length").num(0, 0.0) as usize]),
        "character" => Value::strs(vec![String::new(); m!("length").num(0, 0.0) as usize]),
        "logical" => Value::Lgl(vec![Some(false); m!("length").num(0, 0.0) as usize], Attrs::default()),
        "vector" => {
            let m = m!("mode", "length");
            let n = m.num(1, 0.0) as usize;
            match m.string(0).as_deref().unwrap_or("logical") {
                "list" => Value::List(vec![Value::Null; n], Attrs::default()),
                "character" => Value::strs(vec![String::new(); n]),
                "numeric" | "double" | "integer" => Value::nums(vec![0.0; n]),
                _ => Value::Lgl(vec![Some(false); n], Attrs::default()),
            }
        }
        "class" => {
            let x = m!("x").req(0, "x", call)?.clone();
            match x.attrs().and_then(|a| a.class.clone()) {
                Some(c) => Value::strs(c),
                None => Value::str(match x {
                    Value::Null => "NULL",
                    Value::Lgl(..) => "logical",
                    Value::Num(..) => "numeric",
                    Value::Str(..) => "character",
                    Value::List(..) => "list",
                    _ => "function",
                }),
            }
        }
        "inherits" => {
            let m = m!("x", "what", "which");
            let x = m.req(0, "x", call)?;
            let what = as_strs(m.req(1, "what", call)?);
            Value::lgl(what.iter().flatten().any(|w| x.inherits(w)))
        }
        "identical" => {
            let m = m!("x", "y", "...");
            Value::lgl(identical(m.req(0, "x", call)?, m.req(1, "y", call)?))
        }
        "isTRUE" => {
            let x = m!("x").get(0).cloned().unwrap_or(Value::Null);
            Value::lgl(matches!(&x, Value::Lgl(v, _) if v.len() == 1 && v[0] == Some(true)))
        }
        "isFALSE" => {
            let x = m!("x").get(0).cloned().unwrap_or(Value::Null);
            Value::lgl(matches!(&x, Value::Lgl(v, _) if v.len() == 1 && v[0] == Some(false)))
        }
        "xor" => {
            let m = m!("x", "y");
            let a = as_lgls(m.req(0, "x", call)?);
            let b = as_lgls(m.req(1, "y", call)?);
            let n = a.len().max(b.len());
            Value::Lgl(
                (0..n)
                    .map(|i| match (a[i % a.len()], b[i % b.len()]) {
                        (Some(p), Some(q)) => Some(p != q),
                        _ => None,
                    })
                    .collect(),
                Attrs::default(),
            )
        }

        // ── structure ────────────────────────────────────────────────────────
        "length" => Value::num(m!("x").req(0, "x", call)?.len() as f64),
        "names" => names_of(m!("x").req(0, "x", call)?),
        "colnames" => names_of(m!("x", "do.NULL", "prefix").req(0, "x", call)?),
        "rownames" => {
            let x = m!("x", "do.NULL", "prefix").req(0, "x", call)?.clone();
            if x.is_data_frame() {
                Value::strs((1..=x.nrow()).map(|i| i.to_string()).collect())
            } else {
                Value::Null
            }
        }
        "setNames" => {
            let m = m!("object", "nm");
            let x = m.get(0).cloned().unwrap_or(Value::Null);
            let nm = m.get(1).map(|n| as_strs(n).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect());
            x.with_names(nm)
        }
        "unname" => m!("obj", "force").req(0, "obj", call)?.clone().with_names(None),
        "nrow" => {
            let x = m!("x").req(0, "x", call)?.clone();
            if x.is_data_frame() {
                Value::num(x.nrow() as f64)
            } else {
                Value::Null
            }
        }
        "ncol" => {
            let x = m!("x").req(0, "x", call)?.clone();
            if x.is_data_frame() {
                Value::num(x.len() as f64)
            } else {
                Value::Null
            }
        }
        "dim" => {
            let x = m!("x").req(0, "x", call)?.clone();
            if x.is_data_frame() {
                Value::nums(vec![x.nrow() as f64, x.len() as f64])
            } else {
                Value::Null
            }
        }
        "nlevels" => Value::num(0.0),
        "unlist" => {
            let m = m!("x", "recursive", "use.names");
            let x = m.get(0).cloned().unwrap_or(Value::Null);
            let use_names = m.flag(2, true);
            match x {
                Value::List(items, attrs) => {
                    let names = attrs.names.clone();
                    let parts: Args = items
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let v = if matches!(v, Value::List(..)) { call_unlist(v) } else { v };
                            (names.as_ref().map(|n| n[i].clone()).filter(|n| !n.is_empty()), v)
                        })
                        .collect();
                    let out = combine(parts);
                    if use_names {
                        out
                    } else {
                        out.with_names(None)
                    }
                }
                other => other,
            }
        }
        "append" => {
            let m = m!("x", "values", "after");
            combine(vec![
                (None, m.get(0).cloned().unwrap_or(Value::Null)),
                (None, m.get(1).cloned().unwrap_or(Value::Null)),
            ])
        }
        "rev" => {
            let x = m!("x").req(0, "x", call)?.clone();
            let idx: Vec<Option<usize>> = (0..x.len()).rev().map(Some).collect();
            select(&x, &idx)
        }
        "head" | "tail" => {
            let m = m!("x", "n", "...");
            let x = m.req(0, "x", call)?.clone();
            let len = if x.is_data_frame() { x.nrow() } else { x.len() };
            let n = m.num(1, 6.0) as i64;
            let k = if n >= 0 { (n as usize).min(len) } else { len.saturating_sub((-n) as usize) };
            let idx: Vec<Option<usize>> =
                if name == "head" { (0..k).map(Some).collect() } else { (len - k..len).map(Some).collect() };
            if x.is_data_frame() {
                df_rows(&x, &idx)
            } else {
                select(&x, &idx)
            }
        }
        "rbind" => {
            let m = m!("...", "stringsAsFactors", "deparse.level");
            let dfs: Vec<Value> = m.dots.into_iter().map(|(_, v)| v).filter(|v| !matches!(v, Value::Null)).collect();
            if dfs.is_empty() {
                return Ok(Value::Null);
            }
            if !dfs.iter().all(|d| d.is_data_frame() || matches!(d, Value::List(..))) {
                return Err(fail(call, "only data frames can be combined"));
            }
            let names = dfs[0].names().cloned().unwrap_or_default();
            let mut cols = Vec::new();
            for n in &names {
                let mut parts = Vec::new();
                for d in &dfs {
                    let dn = d.names().cloned().unwrap_or_default();
                    let p = dn
                        .iter()
                        .position(|x| x == n)
                        .ok_or_else(|| fail(call, "names do not match previous names"))?;
                    parts.push((None, d.element(p).with_names(None)));
                }
                cols.push(combine(parts));
            }
            data_frame(names, cols)
        }

        // ── sequences ────────────────────────────────────────────────────────
        "seq" => {
            let m = m!("from", "to", "by", "length.out", "along.with");
            if let Some(a) = m.get(4) {
                Value::nums((1..=a.len()).map(|i| i as f64).collect())
            } else {
                Value::nums(seq_values(&m, call)?)
            }
        }
        "seq_len" => {
            let n = m!("length.out").num(0, 0.0);
            if n < 0.0 || n.is_nan() {
                return Err(fail(call, "argument of length 0"));
            }
            Value::nums((1..=n as usize).map(|i| i as f64).collect())
        }
        "seq_along" => {
            Value::nums((1..=m!("along.with").req(0, "along.with", call)?.len()).map(|i| i as f64).collect())
        }
        "rep" => {
            let m = m!("x", "times", "each", "length.out");
            let x = m.req(0, "x", call)?.clone();
            let each = m.num(2, 1.0) as usize;
            let mut idx: Vec<Option<usize>> = (0..x.len()).flat_map(|i| std::iter::repeat_n(Some(i), each)).collect();
            if let Some(t) = m.get(1) {
                let t = as_nums(t).0;
                if t.len() == idx.len() && t.len() > 1 {
                    idx = idx.iter().zip(&t).flat_map(|(i, k)| std::iter::repeat_n(*i, *k as usize)).collect();
                } else {
                    let k = t.first().copied().unwrap_or(1.0) as usize;
                    idx = (0..k).flat_map(|_| idx.clone()).collect();
                }
            }
            if let Some(l) = m.get(3) {
                let l = as_nums(l).0[0] as usize;
                if !idx.is_empty() {
                    idx = (0..l).map(|i| idx[i % idx.len()]).collect();
                }
            }
            select(&x, &idx).with_names(None)
        }

        // ── math ─────────────────────────────────────────────────────────────
        "abs" => map_num(m!("x").req(0, "x", call)?, call, f64::abs)?,
        "sqrt" => {
            let x = m!("x").req(0, "x", call)?.clone();
            let v = map_num(&x, call, f64::sqrt)?;
            if as_nums(&x).0.iter().any(|a| *a < 0.0) {
                it.warn(Some(call.to_string()), "NaNs produced")?;
            }
            v
        }
        "exp" => map_num(m!("x").req(0, "x", call)?, call, f64::exp)?,
        "log" => {
            let m = m!("x", "base");
            let x = m.req(0, "x", call)?.clone();
            let base = m.get(1).map(|b| as_nums(b).0[0]);
            if as_nums(&x).0.iter().any(|a| *a < 0.0) {
                it.warn(Some(call.to_string()), "NaNs produced")?;
            }
            map_num(&x, call, |a| match base {
                Some(b) => a.ln() / b.ln(),
                None => a.ln(),
            })?
        }
        "log10" => map_num(m!("x").req(0, "x", call)?, call, f64::log10)?,
        "log2" => map_num(m!("x").req(0, "x", call)?, call, f64::log2)?,
        "log1p" => map_num(m!("x").req(0, "x", call)?, call, f64::ln_1p)?,
        "floor" => map_num(m!("x").req(0, "x", call)?, call, f64::floor)?,
        "ceiling" => map_num(m!("x").req(0, "x", call)?, call, f64::ceil)?,
        "trunc" => map_num(m!("x", "...").req(0, "x", call)?, call, f64::trunc)?,
        "sin" => map_num(m!("x").req(0, "x", call)?, call, f64::sin)?,
        "cos" => map_num(m!("x").req(0, "x", call)?, call, f64::cos)?,
        "tan" => map_num(m!("x").req(0, "x", call)?, call, f64::tan)?,
        "round" => {
            let m = m!("x", "digits");
            let d = m.num(1, 0.0) as i32;
            map_num(m.req(0, "x", call)?, call, |a| stats::round(a, d))?
        }
        "signif" => {
            let m = m!("x", "digits");
            let d = m.num(1, 6.0) as i32;
            map_num(m.req(0, "x", call)?, call, |a| stats::signif(a, d))?
        }
        "sum" | "prod" | "max" | "min" | "range" => {
            let na_rm =
                args.iter().any(|(n, v)| n.as_deref() == Some("na.rm") && as_lgls(v).first() == Some(&Some(true)));
            let items: Args = args.into_iter().filter(|(n, _)| n.as_deref() != Some("na.rm")).collect();
            if matches!(name, "max" | "min") && items.iter().any(|(_, v)| matches!(v, Value::Str(..))) {
                let mut all: Vec<String> = items.iter().flat_map(|(_, v)| as_strs(v)).flatten().collect();
                all.sort_by(|a, b| collate(a, b));
                let pick = if name == "max" { all.pop() } else { all.into_iter().next() };
                return Ok(pick.map(Value::str).unwrap_or(Value::Str(vec![None], Attrs::default())));
            }
            let x = summary_values(&items, na_rm, call)?;
            match name {
                "sum" => Value::num(stats::sum(&x)),
                "prod" => Value::num(x.iter().product()),
                _ => {
                    if x.is_empty() {
                        let inf = if name == "min" { f64::INFINITY } else { f64::NEG_INFINITY };
                        it.warn(
                            Some(call.to_string()),
                            &format!(
                                "no non-missing arguments to {}; returning {}",
                                if name == "range" { "min" } else { name },
                                if inf > 0.0 { "Inf" } else { "-Inf" }
                            ),
                        )?;
                        if name == "range" {
                            Value::nums(vec![f64::INFINITY, f64::NEG_INFINITY])
                        } else {
                            Value::num(inf)
                        }
                    } else if let Some(na) = x.iter().find(|v| v.is_nan()) {
                        if name == "range" {
                            Value::nums(vec![*na, *na])
                        } else {
                            Value::num(*na)
                        }
                    } else {
                        let mx = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let mn = x.iter().cloned().fold(f64::INFINITY, f64::min);
                        match name {
                            "max" => Value::num(mx),
                            "min" => Value::num(mn),
                            _ => Value::nums(vec![mn, mx]),
                        }
                    }
                }
            }
        }
        "pmin" | "pmax" => {
            let m = m!("...", "na.rm");
            let vecs: Vec<Vec<f64>> = m.dots.iter().map(|(_, v)| as_nums(v).0).collect();
            let n = vecs.iter().map(|v| v.len()).max().unwrap_or(0);
            Value::nums(
                (0..n)
                    .map(|i| {
                        let it = vecs.iter().map(|v| v[i % v.len()]);
                        if name == "pmin" {
                            it.fold(f64::INFINITY, f64::min)
                        } else {
                            it.fold(f64::NEG_INFINITY, f64::max)
                        }
                    })
                    .collect(),
            )
        }
        "mean" => {
            let m = m!("x", "trim", "na.rm", "...");
            let x = m.req(0, "x", call)?.clone();
            if !matches!(x, Value::Num(..) | Value::Lgl(..)) {
                it.warn(Some(call.to_string()), "argument is not numeric or logical: returning NA")?;
                return Ok(Value::num(na_real()));
            }
            let mut v = as_nums(&x).0;
            if m.flag(2, false) {
                v.retain(|a| !a.is_nan());
            } else if let Some(na) = v.iter().find(|a| a.is_nan()) {
                return Ok(Value::num(*na));
            }
            Value::num(stats::mean(&v))
        }
        "weighted.mean" => {
            let m = m!("x", "w", "...", "na.rm");
            let x = as_nums(m.req(0, "x", call)?).0;
            let w = m.get(1).map(|w| as_nums(w).0).unwrap_or_else(|| vec![1.0; x.len()]);
            let num: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
            Value::num(stats::sum(&num) / stats::sum(&w))
        }
        "median" | "var" | "sd" => {
            let m = m!("x", "na.rm", "...");
            let x = m.req(0, "x", call)?.clone();
            if matches!(x, Value::Str(..)) {
                return Err(fail(call, "need numeric data"));
            }
            let mut v = as_nums(&x).0;
            if m.flag(1, false) {
                v.retain(|a| !a.is_nan());
            } else if v.iter().any(|a| a.is_nan()) {
                return Ok(Value::num(na_real()));
            }
            Value::num(match name {
                "median" => stats::median(&v),
                "var" => stats::var(&v),
                _ => stats::var(&v).sqrt(),
            })
        }
        "cor" | "cov" => {
            let m = m!("x", "y", "use", "method");
            let x = as_nums(m.req(0, "x", call)?).0;
            let y = as_nums(m.req(1, "y", call)?).0;
            if x.len() != y.len() {
                return Err(fail(call, "incompatible dimensions"));
            }
            Value::num(if name == "cor" { stats::cor(&x, &y) } else { stats::cov(&x, &y) })
        }
        "quantile" => {
            let m = m!("x", "probs", "na.rm", "names", "type", "...");
            let mut x = as_nums(m.req(0, "x", call)?).0;
            if m.flag(2, false) {
                x.retain(|a| !a.is_nan());
            } else if x.iter().any(|a| a.is_nan()) {
                return Err(fail(call, "missing values and NaN's not allowed if 'na.rm' is FALSE"));
            }
            let probs = m.get(1).map(|p| as_nums(p).0).unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
            let vals: Vec<f64> = probs.iter().map(|p| stats::quantile(&x, *p)).collect();
            let names = m
                .flag(3, true)
                .then(|| probs.iter().map(|p| format!("{}%", crate::format::num_to_string(100.0 * p, 7))).collect());
            Value::Num(vals, Attrs { names, class: None })
        }
        "cumsum" | "cumprod" => {
            let x = math_arg(m!("x").req(0, "x", call)?, call)?;
            let mut acc = if name == "cumsum" { 0.0 } else { 1.0 };
            Value::nums(
                x.into_iter()
                    .map(|v| {
                        acc = if name == "cumsum" { acc + v } else { acc * v };
                        acc
                    })
                    .collect(),
            )
        }
        "diff" => {
            let m = m!("x", "lag", "...");
            let x = as_nums(m.req(0, "x", call)?).0;
            let lag = m.num(1, 1.0) as usize;
            Value::nums((lag..x.len()).map(|i| x[i] - x[i - lag]).collect())
        }

        // ── sets, search, sorting ────────────────────────────────────────────
        "which" => {
            let x = m!("x", "arr.ind", "useNames").req(0, "x", call)?.clone();
            if !matches!(x, Value::Lgl(..)) {
                return Err(fail(call, "argument to 'which' is not logical"));
            }
            let l = as_lgls(&x);
            let idx: Vec<usize> = (0..l.len()).filter(|&i| l[i] == Some(true)).collect();
            let names = x.names().map(|n| idx.iter().map(|&i| n[i].clone()).collect());
            Value::Num(idx.iter().map(|&i| (i + 1) as f64).collect(), Attrs { names, class: None })
        }
        "which.max" | "which.min" => {
            let x = m!("x").req(0, "x", call)?.clone();
            let v = as_nums(&x).0;
            let mut best: Option<usize> = None;
            for (i, a) in v.iter().enumerate() {
                if a.is_nan() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        if name == "which.max" {
                            *a > v[b]
                        } else {
                            *a < v[b]
                        }
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            match best {
                Some(b) => Value::Num(
                    vec![(b + 1) as f64],
                    Attrs { names: x.names().map(|n| vec![n[b].clone()]), class: None },
                ),
                None => Value::nums(vec![]),
            }
        }
        "any" | "all" => {
            let na_rm =
                args.iter().any(|(n, v)| n.as_deref() == Some("na.rm") && as_lgls(v).first() == Some(&Some(true)));
            let mut vals: Vec<Option<bool>> = Vec::new();
            for (n, v) in &args {
                if n.as_deref() == Some("na.rm") {
                    continue;
                }
                if matches!(v, Value::Str(..)) {
                    return Err(fail(call, "invalid 'type' (character) of argument".to_string()));
                }
                vals.extend(as_lgls(v));
            }
            if na_rm {
                vals.retain(|v| v.is_some());
            }
            let out = if name == "any" {
                if vals.contains(&Some(true)) {
                    Some(true)
                } else if vals.contains(&None) {
                    None
                } else {
                    Some(false)
                }
            } else if vals.contains(&Some(false)) {
                Some(false)
            } else if vals.contains(&None) {
                None
            } else {
                Some(true)
            };
            Value::Lgl(vec![out], Attrs::default())
        }
        "ifelse" => {
            let m = m!("test", "yes", "no");
            let test = m.req(0, "test", call)?.clone();
            let t = as_lgls(&test);
            let yes = m.req(1, "yes", call)?.clone();
            let no = m.req(2, "no", call)?.clone();
            let r = if t.contains(&Some(true)) { rank(&yes) } else { 1 }.max(if t.contains(&Some(false)) {
                rank(&no)
            } else {
                1
            });
            let yes = crate::ops::coerce_to_rank(&yes, r);
            let no = crate::ops::coerce_to_rank(&no, r);
            let picks: Vec<Value> = t
                .iter()
                .enumerate()
                .map(|(i, b)| match b {
                    Some(true) => yes.element(i % yes.len().max(1)),
                    Some(false) => no.element(i % no.len().max(1)),
                    None => Value::Lgl(vec![None], Attrs::default()),
                })
                .collect();
            let out = combine(picks.into_iter().map(|p| (None, p)).collect());
            let out = if t.is_empty() { Value::Lgl(vec![], Attrs::default()) } else { out };
            out.with_names(test.names().cloned())
        }
        "match" => {
            let m = m!("x", "table", "nomatch", "incomparables");
            let x = as_strs(m.req(0, "x", call)?);
            let table = as_strs(m.req(1, "table", call)?);
            let nomatch = m.num(2, na_real());
            Value::nums(
                x.iter()
                    .map(|v| table.iter().position(|t| t == v).map(|p| (p + 1) as f64).unwrap_or(nomatch))
                    .collect(),
            )
        }
        "unique" => {
            let x = m!("x", "...").req(0, "x", call)?.clone();
            let idx: Vec<Option<usize>> = unique_positions(&x).into_iter().map(Some).collect();
            select(&x, &idx).with_names(None)
        }
        "duplicated" => {
            let x = m!("x", "...").req(0, "x", call)?.clone();
            let first: std::collections::HashSet<usize> = unique_positions(&x).into_iter().collect();
            Value::Lgl((0..x.len()).map(|i| Some(!first.contains(&i))).collect(), Attrs::default())
        }
        "union" | "intersect" | "setdiff" => {
            let m = m!("x", "y");
            let x = m.req(0, "x", call)?.clone();
            let y = m.req(1, "y", call)?.clone();
            let ys = as_strs(&y);
            let xs = as_strs(&x);
            let out = match name {
                "union" => combine(vec![(None, x.with_names(None)), (None, y.with_names(None))]),
                "intersect" => {
                    let idx: Vec<Option<usize>> = (0..xs.len()).filter(|&i| ys.contains(&xs[i])).map(Some).collect();
                    select(&x, &idx)
                }
                _ => {
                    let idx: Vec<Option<usize>> = (0..xs.len()).filter(|&i| !ys.contains(&xs[i])).map(Some).collect();
                    select(&x, &idx)
                }
            };
            let idx: Vec<Option<usize>> = unique_positions(&out).into_iter().map(Some).collect();
            select(&out, &idx).with_names(None)
        }
        "sort" => {
            let m = m!("x", "decreasing", "...");
            let x = m.req(0, "x", call)?.clone();
            let keep: Vec<Option<usize>> = (0..x.len()).filter(|&i| !is_na_at(&x, i)).map(Some).collect();
            let x = select(&x, &keep);
            let idx: Vec<Option<usize>> =
                sort_positions(std::slice::from_ref(&x), m.flag(1, false)).into_iter().map(Some).collect();
            select(&x, &idx)
        }
        "order" => {
            let m = m!("...", "na.last", "decreasing", "method");
            let decreasing = m.flag(2, false);
            let keys: Vec<Value> = m.dots.into_iter().map(|(_, v)| v).collect();
            if keys.iter().any(|k| k.len() != keys[0].len()) {
                return Err(fail(call, "argument lengths differ"));
            }
            Value::nums(sort_positions(&keys, decreasing).into_iter().map(|i| (i + 1) as f64).collect())
        }
        "table" => {
            let m = m!("...", "useNA", "dnn");
            let x = m.dots.first().map(|(_, v)| v.clone()).unwrap_or(Value::Null);
            let (levels, member) = groups(&x);
            let mut counts = vec![0.0; levels.len()];
            for g in member.into_iter().flatten() {
                counts[g] += 1.0;
            }
            Value::Num(counts, Attrs { names: Some(levels), class: Some(vec!["table".into()]) })
        }

        // ── strings ──────────────────────────────────────────────────────────
        "paste" | "paste0" => {
            let m = if name == "paste" { m!("...", "sep", "collapse") } else { m!("...", "collapse", "recycle0") };
            let (sep, collapse) = if name == "paste" {
                (m.string(1).unwrap_or_else(|| " ".into()), m.string(2))
            } else {
                (String::new(), m.string(1))
            };
            let vals: Vec<Value> = m.dots.into_iter().map(|(_, v)| v).collect();
            strings::paste(&vals, &sep, collapse.as_deref())
        }
        "sprintf" => {
            let m = m!("fmt", "...");
            let fmt = as_strs(m.req(0, "fmt", call)?);
            let vals: Vec<Value> = m.dots.into_iter().map(|(_, v)| v).collect();
            strings::sprintf(&fmt, &vals).map_err(|e| fail(call, e))?
        }
        "format" => {
            let m =
                m!("x", "trim", "digits", "nsmall", "justify", "width", "na.encode", "scientific", "big.mark", "...");
            let x = m.req(0, "x", call)?.clone();
            let opts = strings::FormatOpts {
                nsmall: m.num(3, 0.0) as usize,
                digits: m.num(2, 7.0) as usize,
                width: m.num(5, 0.0) as usize,
                big_mark: m.string(8).unwrap_or_default(),
                trim: m.flag(1, false),
            };
            Value::Str(
                strings::format_vec(&x, &opts).into_iter().map(Some).collect(),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "formatC" => {
            let m = m!("x", "width", "digits", "format", "flag", "mode", "big.mark");
            let x = as_nums(m.req(0, "x", call)?).0;
            let fmt = m.string(3).unwrap_or_else(|| "g".into());
            let digits = m.get(2).map(|d| as_nums(d).0[0] as usize);
            Value::strs(strings::format_c(
                &x,
                m.num(1, 0.0) as usize,
                digits,
                &fmt,
                &m.string(4).unwrap_or_default(),
                &m.string(6).unwrap_or_default(),
            ))
        }
        "prettyNum" => {
            let m = m!("x", "big.mark", "...");
            let x = m.req(0, "x", call)?.clone();
            let opts = strings::FormatOpts {
                nsmall: 0,
                digits: 7,
                width: 0,
                big_mark: m.string(1).unwrap_or_default(),
                trim: true,
            };
            Value::strs(strings::format_vec(&x, &opts))
        }
        "nchar" => {
            let m = m!("x", "type", "allowNA", "keepNA");
            let x = m.req(0, "x", call)?.clone();
            Value::Num(
                as_strs(&x).iter().map(|s| s.as_ref().map(|s| s.chars().count() as f64).unwrap_or(2.0)).collect(),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "toupper" | "tolower" => {
            let x = m!("x").req(0, "x", call)?.clone();
            Value::Str(
                as_strs(&x)
                    .into_iter()
                    .map(|s| s.map(|s| if name == "toupper" { s.to_uppercase() } else { s.to_lowercase() }))
                    .collect(),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "toTitleCase" => {
            let x = m!("text").req(0, "text", call)?.clone();
            if !matches!(x, Value::Str(..)) {
                return Err(fail(call, "'text' must be a character vector"));
            }
            Value::Str(as_strs(&x).into_iter().map(|s| s.map(|s| strings::title_case(&s))).collect(), Attrs::default())
        }
        "file_ext" => {
            let x = as_strs(m!("x").req(0, "x", call)?);
            Value::strs(
                x.into_iter()
                    .map(|s| {
                        let s = s.unwrap_or_default();
                        match s.rfind('.') {
                            Some(p) if s[p + 1..].chars().all(|c| c.is_ascii_alphanumeric()) && p + 1 < s.len() => {
                                s[p + 1..].to_string()
                            }
                            _ => String::new(),
                        }
                    })
                    .collect(),
            )
        }
        "substr" | "substring" => {
            let m = if name == "substr" { m!("x", "start", "stop") } else { m!("text", "first", "last") };
            let x = as_strs(m.req(0, "x", call)?);
            let st = as_nums(m.req(1, "start", call)?).0;
            let en = m.get(2).map(|v| as_nums(v).0).unwrap_or_else(|| vec![1_000_000.0]);
            let n = if name == "substr" { x.len() } else { x.len().max(st.len()).max(en.len()) };
            Value::Str(
                (0..n)
                    .map(|i| {
                        x[i % x.len()].as_ref().map(|s| {
                            let a = (st[i % st.len()].max(1.0) as usize) - 1;
                            let b = en[i % en.len()].max(0.0) as usize;
                            s.chars().skip(a).take(b.saturating_sub(a)).collect()
                        })
                    })
                    .collect(),
                Attrs::default(),
            )
        }
        "strsplit" => {
            let m = m!("x", "split", "fixed", "perl", "useBytes");
            let x = m.req(0, "x", call)?.clone();
            if !matches!(x, Value::Str(..)) {
                return Err(fail(call, "non-character argument"));
            }
            let pat = m.string(1).unwrap_or_default();
            let p = if pat.is_empty() {
                None
            } else {
                Some(strings::compile(&pat, m.flag(2, false), false).map_err(|e| fail(call, e))?)
            };
            Value::List(
                as_strs(&x)
                    .into_iter()
                    .map(|s| match s {
                        Some(s) => Value::strs(strings::split(p.as_ref(), &s)),
                        None => Value::Str(vec![None], Attrs::default()),
                    })
                    .collect(),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "gsub" | "sub" => {
            let m = m!("pattern", "replacement", "x", "ignore.case", "perl", "fixed", "useBytes");
            let pat = m.string(0).unwrap_or_default();
            let rep = m.string(1).unwrap_or_default();
            let x = m.req(2, "x", call)?.clone();
            let p = strings::compile(&pat, m.flag(5, false), m.flag(3, false)).map_err(|e| fail(call, e))?;
            Value::Str(
                strings::substitute(&p, &rep, &as_strs(&x), name == "gsub"),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "grepl" | "grep" => {
            let m = m!("pattern", "x", "ignore.case", "perl", "value", "fixed", "useBytes", "invert");
            let pat = m.string(0).unwrap_or_default();
            let x = as_strs(m.req(1, "x", call)?);
            let p = strings::compile(&pat, m.flag(5, false), m.flag(2, false)).map_err(|e| fail(call, e))?;
            let hits: Vec<bool> = x.iter().map(|s| s.as_ref().is_some_and(|s| p.re.is_match(s))).collect();
            if name == "grepl" {
                Value::Lgl(hits.into_iter().map(Some).collect(), Attrs::default())
            } else if m.flag(4, false) {
                Value::Str(x.into_iter().zip(hits).filter(|(_, h)| *h).map(|(s, _)| s).collect(), Attrs::default())
            } else {
                Value::nums(hits.iter().enumerate().filter(|(_, h)| **h).map(|(i, _)| (i + 1) as f64).collect())
            }
        }
        "trimws" => {
            let m = m!("x", "which", "whitespace");
            let which = m.string(1).unwrap_or_else(|| "both".into());
            let x = m.req(0, "x", call)?.clone();
            Value::Str(
                as_strs(&x).into_iter().map(|s| s.map(|s| strings::trim(&s, &which))).collect(),
                Attrs { names: x.names().cloned(), class: None },
            )
        }
        "startsWith" | "endsWith" => {
            let m = m!("x", "prefix");
            let x = as_strs(m.req(0, "x", call)?);
            let p = m.string(1).unwrap_or_default();
            Value::Lgl(
                x.into_iter()
                    .map(|s| s.map(|s| if name == "startsWith" { s.starts_with(&p) } else { s.ends_with(&p) }))
                    .collect(),
                Attrs::default(),
            )
        }

        // ── functional ───────────────────────────────────────────────────────
        "lapply" | "sapply" | "vapply" => {
            let m = if name == "vapply" {
                m!("X", "FUN", "FUN.VALUE", "...", "USE.NAMES")
            } else {
                m!("X", "FUN", "...", "simplify", "USE.NAMES")
            };
            let x = m.req(0, "X", call)?.clone();
            let f = resolve_fun(it, m.req(1, "FUN", call)?, call)?;
            let mut results = Vec::new();
            for el in elements(&x) {
                let mut a: Args = vec![(None, el)];
                a.extend(m.dots.iter().cloned());
                results.push(it.apply(&f, a, "FUN(X[[i]], ...)")?);
            }
            it.visible = true;
            if name == "lapply" {
                Value::List(results, Attrs { names: x.names().cloned(), class: None })
            } else {
                simplify(results, sapply_names(&x))
            }
        }
        "Map" | "mapply" => {
            let m = if name == "Map" { m!("f", "...") } else { m!("FUN", "...", "MoreArgs", "SIMPLIFY", "USE.NAMES") };
            let f = resolve_fun(it, m.req(0, "f", call)?, call)?;
            let lists: Vec<(Option<String>, Vec<Value>)> =
                m.dots.iter().map(|(n, v)| (n.clone(), elements(v))).collect();
            let n = lists.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
            let mut results = Vec::new();
            for i in 0..n {
                let a: Args = lists.iter().map(|(nm, l)| (nm.clone(), l[i % l.len()].clone())).collect();
                results.push(it.apply(&f, a, "(function(...) ...)(dots[[1L]][[1L]])")?);
            }
            it.visible = true;
            let names = m.dots.first().and_then(|(_, v)| sapply_names(v));
            if name == "Map" {
                Value::List(results, Attrs { names, class: None })
            } else {
                simplify(results, names)
            }
        }
        "do.call" => {
            let m = m!("what", "args", "quote", "envir");
            let f = resolve_fun(it, m.req(0, "what", call)?, call)?;
            let a = m.get(1).cloned().unwrap_or(Value::Null);
            let names = a.names().cloned();
            let items: Args = elements(&a)
                .into_iter()
                .enumerate()
                .map(|(i, v)| (names.as_ref().map(|n| n[i].clone()).filter(|n| !n.is_empty()), v))
                .collect();
            let fname = match &f {
                Value::Builtin(b) => b.to_string(),
                _ => "(function (...) ...)".into(),
            };
            return it.apply(&f, items, &format!("{fname}(...)"));
        }
        "Reduce" => {
            let m = m!("f", "x", "init", "right", "accumulate", "simplify");
            let f = resolve_fun(it, m.req(0, "f", call)?, call)?;
            let mut items = elements(m.req(1, "x", call)?);
            let mut acc = match m.get(2) {
                Some(v) => v.clone(),
                None if items.is_empty() => return Ok(Value::Null),
                None => items.remove(0),
            };
            for el in items {
                acc = it.apply(&f, vec![(None, acc), (None, el)], "f(init, x[[i]])")?;
            }
            acc
        }
        "Filter" => {
            let m = m!("f", "x");
            let f = resolve_fun(it, m.req(0, "f", call)?, call)?;
            let x = m.req(1, "x", call)?.clone();
            let mut keep = Vec::new();
            for (i, el) in elements(&x).into_iter().enumerate() {
                let r = it.apply(&f, vec![(None, el)], "FUN(X[[i]], ...)")?;
                if as_lgls(&r).first() == Some(&Some(true)) {
                    keep.push(Some(i));
                }
            }
            select(&x, &keep)
        }
        "tapply" => {
            let m = m!("X", "INDEX", "FUN", "...", "default", "simplify");
            let x = m.req(0, "X", call)?.clone();
            let index = m.req(1, "INDEX", call)?.clone();
            if index.len() != x.len() {
                return Err(fail(call, "arguments must have same length"));
            }
            let f = resolve_fun(it, m.req(2, "FUN", call)?, call)?;
            let (levels, member) = groups(&index);
            let mut results = Vec::new();
            for g in 0..levels.len() {
                let idx: Vec<Option<usize>> = (0..x.len()).filter(|&i| member[i] == Some(g)).map(Some).collect();
                let mut a: Args = vec![(None, select(&x, &idx).with_names(None))];
                a.extend(m.dots.iter().cloned());
                results.push(it.apply(&f, a, "FUN(X[[i]], ...)")?);
            }
            it.visible = true;
            simplify(results, Some(levels))
        }
        "split" => {
            let m = m!("x", "f", "drop", "...");
            let x = m.req(0, "x", call)?.clone();
            let f = m.req(1, "f", call)?.clone();
            let (levels, member) = groups(&f);
            let n = if x.is_data_frame() { x.nrow() } else { x.len() };
            let parts = (0..levels.len())
                .map(|g| {
                    let idx: Vec<Option<usize>> =
                        (0..n).filter(|&i| member[i % member.len()] == Some(g)).map(Some).collect();
                    if x.is_data_frame() {
                        df_rows(&x, &idx)
                    } else {
                        select(&x, &idx)
                    }
                })
                .collect();
            Value::List(parts, Attrs { names: Some(levels), class: None })
        }

        // ── files ────────────────────────────────────────────────────────────
        "file.path" => {
            let m = m!("...", "fsep");
            let vals: Vec<Value> = m.dots.into_iter().map(|(_, v)| v).collect();
            strings::paste(&vals, "/", None)
        }
        "basename" | "dirname" => {
            let x = as_strs(m!("path").req(0, "path", call)?);
            Value::strs(
                x.into_iter()
                    .map(|s| {
                        let s = s.unwrap_or_default();
                        let t = s.trim_end_matches('/');
                        match (name, t.rfind('/')) {
                            ("basename", Some(p)) => t[p + 1..].to_string(),
                            ("basename", None) => t.to_string(),
                            (_, Some(0)) => "/".into(),
                            (_, Some(p)) => t[..p].to_string(),
                            (_, None) => ".".into(),
                        }
                    })
                    .collect(),
            )
        }
        "file.exists" | "dir.exists" => {
            let m = m!("...");
            let paths: Vec<String> = m.dots.iter().flat_map(|(_, v)| as_strs(v)).flatten().collect();
            Value::Lgl(
                paths
                    .iter()
                    .map(|p| {
                        let p = it.resolve_path(p);
                        Some(if name == "dir.exists" { p.is_dir() } else { p.exists() })
                    })
                    .collect(),
                Attrs::default(),
            )
        }
        "dir.create" => {
            let m = m!("path", "showWarnings", "recursive", "mode");
            let p = m.string(0).unwrap_or_default();
            let full = it.resolve_path(&p);
            let ok = if full.exists() {
                if m.flag(1, true) {
                    it.warn(Some(call.to_string()), &format!("'{p}' already exists"))?;
                }
                false
            } else if m.flag(2, false) {
                std::fs::create_dir_all(&full).is_ok()
            } else {
                std::fs::create_dir(&full).is_ok()
            };
            it.visible = false;
            return Ok(Value::lgl(ok));
        }
        "list.files" => {
            let m = m!("path", "pattern", "all.files", "full.names", "recursive");
            let dir = m.string(0).unwrap_or_else(|| ".".into());
            let pat = match m.string(1) {
                Some(p) => Some(strings::compile(&p, false, false).map_err(|e| fail(call, e))?),
                None => None,
            };
            let mut names: Vec<String> = std::fs::read_dir(it.resolve_path(&dir))
                .map(|rd| rd.flatten().map(|e| e.file_name().to_string_lossy().into_owned()).collect())
                .unwrap_or_default();
            names.retain(|n| pat.as_ref().map(|p| p.re.is_match(n)).unwrap_or(true));
            names.sort_by(|a, b| collate(a, b));
            if m.flag(3, false) {
                names = names.into_iter().map(|n| format!("{dir}/{n}")).collect();
            }
            Value::strs(names)
        }
        "getwd" => Value::str(it.wd.to_string_lossy().into_owned()),
        "Sys.getenv" => {
            let m = m!("x", "unset", "names");
            let unset = m.string(1).unwrap_or_default();
            match m.string(0) {
                Some(k) => Value::str(std::env::var(k).unwrap_or(unset)),
                None => Value::Str(vec![], Attrs::default()),
            }
        }
        "source" => {
            let m = m!("file", "local", "echo", "...");
            let f = m.string(0).unwrap_or_default();
            it.source_file(&f, call)?;
            it.visible = false;
            Value::Null
        }
        "readLines" => {
            let m = m!("con", "n", "ok", "warn", "encoding", "skipNul");
            let p = m.string(0).unwrap_or_default();
            let text = read_text(it, &p, "file(con, \"r\")")?;
            let mut lines: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
            let n = m.num(1, -1.0);
            if n >= 0.0 {
                lines.truncate(n as usize);
            }
            Value::strs(lines)
        }
        "writeLines" => {
            let m = m!("text", "con", "sep", "useBytes");
            let text = m.get(0).cloned().unwrap_or(Value::Null);
            if !matches!(text, Value::Str(..)) {
                return Err(fail(call, "can only write character objects"));
            }
            let sep = m.string(2).unwrap_or_else(|| "\n".into());
            let body: String = as_strs(&text).into_iter().map(|s| s.unwrap_or_else(|| "NA".into()) + &sep).collect();
            write_out(it, m.get(1), &body, false, call)?;
            it.visible = false;
            Value::Null
        }
        "read.csv" => {
            let m = m!("file", "header", "sep", "quote", "dec", "fill", "comment.char", "...");
            let p = m.string(0).unwrap_or_default();
            let text = read_text(it, &p, "file(file, \"rt\")")?;
            let sep = m.string(2).and_then(|s| s.chars().next()).unwrap_or(',');
            rio::read_table(&text, sep, m.flag(1, true))
                .map_err(|e| fail("read.table(file = file, header = header, sep = sep, quote = quote, ", e))?
        }
        "write.csv" => {
            let m = m!("x", "file", "row.names", "na", "...");
            let x = m.req(0, "x", call)?.clone();
            let text = rio::write_csv(&x, m.flag(2, true), &m.string(3).unwrap_or_else(|| "NA".into()));
            write_out(it, m.get(1), &text, false, call)?;
            it.visible = false;
            Value::Null
        }
        "readRDS" => {
            let m = m!("file", "refhook");
            let p = m.string(0).unwrap_or_default();
            let full = it.resolve_path(&p);
            if !full.exists() {
                it.warn(
                    Some("gzfile(file, \"rb\")".into()),
                    &format!("cannot open compressed file '{p}', probable reason 'No such file or directory'"),
                )?;
                return Err(fail("gzfile(file, \"rb\")", "cannot open the connection"));
            }
            return Err(fail(call, "unknown input format"));
        }
        other => return Err(fail(call, format!("could not find function \"{other}\""))),
    };
    Ok(v)
}

fn call_unlist(v: Value) -> Value {
    match v {
        Value::List(items, attrs) => {
            let names = attrs.names;
            combine(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (names.as_ref().map(|n| n[i].clone()).filter(|n| !n.is_empty()), call_unlist(v)))
                    .collect(),
            )
        }
        other => other,
    }
}

fn resolve_fun(it: &mut Interp, f: &Value, call: &str) -> EResult<Value> {
    match f {
        Value::Closure(_) | Value::Builtin(_) => Ok(f.clone()),
        Value::Str(s, _) => {
            let name = s.first().cloned().flatten().unwrap_or_default();
            let global = it.global.clone();
            match Env::lookup_function(&global, &name) {
                Some(v) => Ok(v),
                None if it.builtin_available(&name) => Ok(Value::Builtin(intern(&name))),
                None => Err(fail(call, format!("object '{name}' of mode 'function' was not found"))),
            }
        }
        _ => Err(fail(call, format!("'{}' is not a function, character or symbol", crate::ops::deparse_value(f)))),
    }
}

/// Replacement functions such as `names<-`.
pub fn replacement(it: &mut Interp, fname: &str, cur: Value, value: Value, target: &str) -> EResult<Value> {
    let _ = it;
    match fname {
        "names" | "colnames" => {
            let n = match value {
                Value::Null => None,
                v => Some(as_strs(&v).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect::<Vec<_>>()),
            };
            if let Some(nn) = &n {
                if nn.len() > cur.len() {
                    return Err(fail(
                        target,
                        format!(
                            "'names' attribute [{}] must be the same length as the vector [{}]",
                            nn.len(),
                            cur.len()
                        ),
                    ));
                }
            }
            let n = n.map(|mut v| {
                v.resize(cur.len(), String::new());
                v
            });
            Ok(cur.with_names(n))
        }
        "class" => {
            let mut cur = cur;
            let c = match value {
                Value::Null => None,
                v => Some(as_strs(&v).into_iter().flatten().collect()),
            };
            if let Some(a) = cur.attrs_mut() {
                a.class = c;
            }
            Ok(cur)
        }
        "rownames" | "row.names" => Ok(cur),
        other => Err(fail(target, format!("could not find function \"{other}<-\""))),
    }
}

/// Forms that need their arguments unevaluated or the caller's environment.
pub fn special_form(it: &mut Interp, name: &str, args: &[Arg], env: &EnvRef, call: &Expr) -> EResult<Option<Value>> {
    const SPECIALS: &[&str] = &[
        "library",
        "require",
        "requireNamespace",
        "suppressWarnings",
        "suppressMessages",
        "suppressPackageStartupMessages",
        "tryCatch",
        "try",
        "stopifnot",
        "switch",
        "on.exit",
        "return",
        "missing",
        "exists",
        "get",
        "data.frame",
        "local",
        "quote",
    ];
    if !SPECIALS.contains(&name) || Env::lookup_function(env, name).is_some() {
        return Ok(None);
    }
    let call_text = deparse(call);
    let arg = |i: usize| args.get(i).and_then(|a| a.value.as_ref());
    let named = |n: &str| args.iter().find(|a| a.name.as_deref() == Some(n)).and_then(|a| a.value.as_ref());
    let positional: Vec<&Expr> = args.iter().filter(|a| a.name.is_none()).filter_map(|a| a.value.as_ref()).collect();
    let v = match name {
        "return" => {
            let v = match arg(0) {
                Some(e) => it.eval(e, env)?,
                None => Value::Null,
            };
            return Err(Flow::Return(v));
        }
        "quote" => return Err(fail(&call_text, "language objects are not supported")),
        "on.exit" => {
            it.visible = false;
            Value::Null
        }
        "library" | "require" | "requireNamespace" => {
            let target = named("package").or_else(|| positional.first().copied());
            let char_only = named("character.only")
                .map(|e| it.eval(e, env))
                .transpose()?
                .map(|v| as_lgls(&v).first() == Some(&Some(true)))
                .unwrap_or(false);
            let pkg = match target {
                Some(Expr::Ident(n)) if !char_only && name != "requireNamespace" => n.clone(),
                Some(e) => as_strs(&it.eval(e, env)?).into_iter().next().flatten().unwrap_or_default(),
                None => {
                    it.visible = false;
                    return Ok(Some(Value::Null));
                }
            };
            let installed = INSTALLED_PACKAGES.contains(&pkg.as_str()) || extra_package(&pkg);
            match name {
                "library" => {
                    if !installed {
                        return Err(fail(&call_text, format!("there is no package called \u{2018}{pkg}\u{2019}")));
                    }
                    it.attached.insert(pkg);
                    it.visible = false;
                    Value::Null
                }
                "require" => {
                    it.message(&format!("Loading required package: {pkg}\n"));
                    if installed {
                        it.attached.insert(pkg);
                    } else {
                        it.warn(
                            Some(
                                "library(package, lib.loc = lib.loc, character.only = TRUE, logical.return = TRUE, "
                                    .to_string(),
                            ),
                            &format!("there is no package called \u{2018}{pkg}\u{2019}"),
                        )?;
                    }
                    it.visible = false;
                    Value::lgl(installed)
                }
                _ => Value::lgl(installed),
            }
        }
        "suppressWarnings" | "suppressMessages" | "suppressPackageStartupMessages" => {
            let e = arg(0).ok_or_else(|| fail(&call_text, "argument \"expr\" is missing"))?;
            let r = if name == "suppressWarnings" {
                it.warning_modes.push(WarnMode::Suppress);
                let r = it.eval(e, env);
                it.warning_modes.pop();
                r
            } else {
                it.suppress_messages += 1;
                let r = it.eval(e, env);
                it.suppress_messages -= 1;
                r
            };
            r?
        }
        "tryCatch" => {
            let expr = positional.first().copied();
            let mut handlers: Vec<(String, Value)> = Vec::new();
            for a in args {
                if let (Some(n), Some(v)) = (&a.name, &a.value) {
                    if n != "finally" && n != "expr" {
                        handlers.push((n.clone(), it.eval(v, env)?));
                    }
                }
            }
            let expr = named("expr").or(expr);
            let catches_warning = handlers.iter().any(|(n, _)| n == "warning" || n == "condition");
            if catches_warning {
                it.warning_modes.push(WarnMode::Catch);
            }
            let frames = it.frames.len();
            let r = match expr {
                Some(e) => it.eval(e, env),
                None => Ok(Value::Null),
            };
            if catches_warning {
                it.warning_modes.pop();
            }
            let r = match r {
                Err(Flow::Error(err)) => {
                    it.frames.truncate(frames);
                    match handlers.iter().find(|(n, _)| n == "error" || n == "condition") {
                        Some((_, h)) => {
                            let c = condition(&err.msg, err.call.as_deref(), &["simpleError", "error", "condition"]);
                            let h = h.clone();
                            it.apply(&h, vec![(None, c)], "value[[3L]](cond)")
                        }
                        None => Err(Flow::Error(err)),
                    }
                }
                Err(Flow::Warning(w)) => {
                    it.frames.truncate(frames);
                    let (_, h) = handlers.iter().find(|(n, _)| n == "warning" || n == "condition").cloned().unwrap();
                    let c = condition(&w.msg, w.call.as_deref(), &["simpleWarning", "warning", "condition"]);
                    it.apply(&h, vec![(None, c)], "value[[3L]](cond)")
                }
                other => other,
            };
            if let Some(f) = named("finally") {
                it.eval(f, env)?;
            }
            r?
        }
        "try" => {
            let e = positional.first().copied().or(named("expr"));
            let silent = match named("silent").or(positional.get(1).copied()) {
                Some(s) => as_lgls(&it.eval(s, env)?).first() == Some(&Some(true)),
                None => false,
            };
            let frames = it.frames.len();
            match e.map(|e| it.eval(e, env)).unwrap_or(Ok(Value::Null)) {
                Err(Flow::Error(err)) => {
                    it.frames.truncate(frames);
                    let text = format!("{}\n", err.render());
                    if !silent {
                        let _ = it.err.write_all(text.as_bytes());
                    }
                    it.visible = false;
                    Value::Str(vec![Some(text)], Attrs { names: None, class: Some(vec!["try-error".into()]) })
                }
                other => other?,
            }
        }
        "stopifnot" => {
            for a in args {
                let Some(e) = &a.value else { continue };
                let v = it.eval(e, env)?;
                let l = as_lgls(&v);
                if !(matches!(v, Value::Lgl(..)) && l.iter().all(|b| *b == Some(true))) {
                    let msg = match &a.name {
                        Some(n) => n.clone(),
                        None if l.len() > 1 => format!("{} are not all TRUE", deparse(e)),
                        None => format!("{} is not TRUE", deparse(e)),
                    };
                    return Err(Flow::Error(RError { call: it.current_call(), msg }));
                }
            }
            it.visible = false;
            Value::Null
        }
        "switch" => {
            let sel = arg(0).ok_or_else(|| fail(&call_text, "'EXPR' is missing"))?;
            let s = it.eval(sel, env)?;
            let rest = &args[1..];
            match &s {
                Value::Str(x, _) => {
                    let key = x.first().cloned().flatten().unwrap_or_default();
                    let mut found = rest.iter().position(|a| a.name.as_deref() == Some(key.as_str()));
                    if found.is_none() {
                        found = rest.iter().position(|a| a.name.is_none());
                    }
                    match found {
                        Some(mut i) => {
                            while rest[i].value.is_none() && i + 1 < rest.len() {
                                i += 1;
                            }
                            match &rest[i].value {
                                Some(e) => it.eval(e, env)?,
                                None => Value::Null,
                            }
                        }
                        None => {
                            it.visible = false;
                            Value::Null
                        }
                    }
                }
                _ => {
                    let k = as_nums(&s).0.first().copied().unwrap_or(0.0) as usize;
                    match rest.get(k.wrapping_sub(1)).and_then(|a| a.value.as_ref()) {
                        Some(e) => it.eval(e, env)?,
                        None => {
                            it.visible = false;
                            Value::Null
                        }
                    }
                }
            }
        }
        "missing" => {
            let n = match arg(0) {
                Some(Expr::Ident(n)) => n.clone(),
                _ => return Err(fail(&call_text, "invalid use of 'missing'")),
            };
            let miss =
                env.borrow().vars.get(MISSING_VAR).map(|v| as_strs(v).contains(&Some(n.clone()))).unwrap_or(false);
            Value::lgl(miss)
        }
        "exists" | "get" => {
            let e = arg(0).ok_or_else(|| fail(&call_text, "argument \"x\" is missing, with no default"))?;
            let n = as_strs(&it.eval(e, env)?).into_iter().next().flatten().unwrap_or_default();
            let found = Env::lookup(env, &n).or_else(|| it.builtin_available(&n).then(|| Value::Builtin(intern(&n))));
            if name == "exists" {
                Value::lgl(found.is_some())
            } else {
                found.ok_or_else(|| fail(&call_text, format!("object '{n}' not found")))?
            }
        }
        "local" => {
            let e = arg(0).ok_or_else(|| fail(&call_text, "argument \"expr\" is missing"))?;
            let child = Env::new_child(env);
            it.eval(e, &child)?
        }
        "data.frame" => {
            let mut names = Vec::new();
            let mut cols: Vec<Value> = Vec::new();
            for a in args {
                let Some(e) = &a.value else { continue };
                if matches!(a.name.as_deref(), Some("stringsAsFactors") | Some("check.names")) {
                    continue;
                }
                let v = it.eval(e, env)?;
                if v.is_data_frame() && a.name.is_none() {
                    if let Value::List(c, at) = v {
                        names.extend(at.names.unwrap_or_default());
                        cols.extend(c);
                    }
                    continue;
                }
                if matches!(v, Value::List(..)) {
                    return Err(fail(&call_text, "list arguments are not supported"));
                }
                names.push(a.name.clone().unwrap_or_else(|| rio::make_name(&deparse(e))));
                cols.push(v.with_names(None));
            }
            let n = cols.iter().map(|c| c.len()).max().unwrap_or(0);
            for c in &cols {
                if c.is_empty() && n > 0 || (!c.is_empty() && n % c.len() != 0) {
                    let lens: Vec<String> = cols.iter().map(|c| c.len().to_string()).collect();
                    return Err(fail(
                        "data.frame(...)",
                        format!("arguments imply differing number of rows: {}", lens.join(", ")),
                    ));
                }
            }
            let cols = cols.into_iter().map(|c| recycle(&c, n)).collect();
            data_frame(names, cols)
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}
