//! Runtime values: atomic vectors, lists (including data frames) and functions.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::parser::{Expr, Param};

/// R's `NA_real_`: a NaN with a distinguished payload.
pub const NA_REAL_BITS: u64 = 0x7FF0_0000_0000_07A2;

pub fn na_real() -> f64 {
    f64::from_bits(NA_REAL_BITS)
}

pub fn is_na_real(v: f64) -> bool {
    v.to_bits() == NA_REAL_BITS
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Attrs {
    pub names: Option<Vec<String>>,
    pub class: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Lgl(Vec<Option<bool>>, Attrs),
    Num(Vec<f64>, Attrs),
    Str(Vec<Option<String>>, Attrs),
    List(Vec<Value>, Attrs),
    Closure(Rc<Closure>),
    Builtin(&'static str),
}

pub struct Closure {
    pub params: Rc<Vec<Param>>,
    pub body: Rc<Expr>,
    pub env: EnvRef,
}

impl std::fmt::Debug for Closure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Closure").field("params", &self.params).finish()
    }
}

pub type EnvRef = Rc<RefCell<Env>>;

#[derive(Default)]
pub struct Env {
    pub vars: HashMap<String, Value>,
    pub parent: Option<EnvRef>,
}

impl Env {
    pub fn new_child(parent: &EnvRef) -> EnvRef {
        Rc::new(RefCell::new(Env { vars: HashMap::new(), parent: Some(parent.clone()) }))
    }

    pub fn lookup(env: &EnvRef, name: &str) -> Option<Value> {
        let mut cur = Some(env.clone());
        while let Some(e) = cur {
            if let Some(v) = e.borrow().vars.get(name) {
                return Some(v.clone());
            }
            cur = e.borrow().parent.clone();
        }
        None
    }

    pub fn lookup_function(env: &EnvRef, name: &str) -> Option<Value> {
        let mut cur = Some(env.clone());
        while let Some(e) = cur {
            if let Some(v) = e.borrow().vars.get(name) {
                if v.is_function() {
                    return Some(v.clone());
                }
            }
            cur = e.borrow().parent.clone();
        }
        None
    }

    /// `<<-`: assign in the nearest enclosing frame that defines `name`,
    /// falling back to the outermost frame.
    pub fn assign_super(env: &EnvRef, name: &str, value: Value) {
        let mut cur = env.borrow().parent.clone();
        let mut last = env.clone();
        while let Some(e) = cur {
            if e.borrow().vars.contains_key(name) {
                e.borrow_mut().vars.insert(name.to_string(), value);
                return;
            }
            last = e.clone();
            cur = e.borrow().parent.clone();
        }
        last.borrow_mut().vars.insert(name.to_string(), value);
    }
}

impl Value {
    pub fn num(v: f64) -> Value {
        Value::Num(vec![v], Attrs::default())
    }

    pub fn nums(v: Vec<f64>) -> Value {
        Value::Num(v, Attrs::default())
    }

    pub fn lgl(b: bool) -> Value {
        Value::Lgl(vec![Some(b)], Attrs::default())
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(vec![Some(s.into())], Attrs::default())
    }

    pub fn strs(v: Vec<String>) -> Value {
        Value::Str(v.into_iter().map(Some).collect(), Attrs::default())
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Value::Closure(_) | Value::Builtin(_))
    }

    pub fn len(&self) -> usize {
        match self {
            Value::Null => 0,
            Value::Lgl(v, _) => v.len(),
            Value::Num(v, _) => v.len(),
            Value::Str(v, _) => v.len(),
            Value::List(v, _) => v.len(),
            Value::Closure(_) | Value::Builtin(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn attrs(&self) -> Option<&Attrs> {
        match self {
            Value::Lgl(_, a) | Value::Num(_, a) | Value::Str(_, a) | Value::List(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn attrs_mut(&mut self) -> Option<&mut Attrs> {
        match self {
            Value::Lgl(_, a) | Value::Num(_, a) | Value::Str(_, a) | Value::List(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn names(&self) -> Option<&Vec<String>> {
        self.attrs().and_then(|a| a.names.as_ref())
    }

    pub fn with_names(mut self, names: Option<Vec<String>>) -> Value {
        if let Some(a) = self.attrs_mut() {
            a.names = names;
        }
        self
    }

    pub fn inherits(&self, class: &str) -> bool {
        self.attrs().and_then(|a| a.class.as_ref()).is_some_and(|c| c.iter().any(|x| x == class))
    }

    pub fn is_data_frame(&self) -> bool {
        matches!(self, Value::List(..)) && self.inherits("data.frame")
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "NULL",
            Value::Lgl(..) => "logical",
            Value::Num(..) => "double",
            Value::Str(..) => "character",
            Value::List(..) => "list",
            Value::Closure(_) => "closure",
            Value::Builtin(_) => "builtin",
        }
    }

    /// Number of rows of a data frame.
    pub fn nrow(&self) -> usize {
        match self {
            Value::List(cols, _) => cols.first().map(|c| c.len()).unwrap_or(0),
            _ => 0,
        }
    }

    /// Element `i` as a length-one vector of the same type (no names).
    pub fn element(&self, i: usize) -> Value {
        match self {
            Value::Lgl(v, _) => Value::Lgl(vec![v[i]], Attrs::default()),
            Value::Num(v, _) => Value::Num(vec![v[i]], Attrs::default()),
            Value::Str(v, _) => Value::Str(vec![v[i].clone()], Attrs::default()),
            Value::List(v, _) => v[i].clone(),
            other => other.clone(),
        }
    }
}

pub fn data_frame(names: Vec<String>, cols: Vec<Value>) -> Value {
    Value::List(cols, Attrs { names: Some(names), class: Some(vec!["data.frame".into()]) })
}
