//! Coercion, recycling, subsetting and vectorised operators.

use std::cmp::Ordering;

use crate::format::num_to_string;
use crate::interp::{EResult, Interp};
use crate::parser::BinOp;
use crate::value::{is_na_real, na_real, Attrs, Value};

pub fn is_na_num(x: f64) -> bool {
    x.is_nan()
}

pub fn lgl_to_num(b: Option<bool>) -> f64 {
    match b {
        Some(true) => 1.0,
        Some(false) => 0.0,
        None => na_real(),
    }
}

pub fn num_to_lgl(x: f64) -> Option<bool> {
    if x.is_nan() {
        None
    } else {
        Some(x != 0.0)
    }
}

/// Parses a string the way `as.numeric` does; `None` means NA.
pub fn parse_num(s: &str) -> Option<f64> {
    let t = s.trim();
    match t {
        "NA" | "" => return None,
        "Inf" | "inf" => return Some(f64::INFINITY),
        "-Inf" | "-inf" => return Some(f64::NEG_INFINITY),
        "NaN" => return Some(f64::NAN),
        "TRUE" | "FALSE" | "T" | "F" => return None,
        _ => {}
    }
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return i64::from_str_radix(h, 16).ok().map(|v| v as f64);
    }
    if t.chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) {
        t.parse::<f64>().ok()
    } else {
        None
    }
}

/// Numeric view of an atomic value. Strings that do not parse become NA and
/// set the returned flag.
pub fn as_nums(v: &Value) -> (Vec<f64>, bool) {
    match v {
        Value::Null => (Vec::new(), false),
        Value::Num(x, _) => (x.clone(), false),
        Value::Lgl(x, _) => (x.iter().map(|b| lgl_to_num(*b)).collect(), false),
        Value::Str(x, _) => {
            let mut warned = false;
            let out = x
                .iter()
                .map(|s| match s {
                    None => na_real(),
                    Some(s) => match parse_num(s) {
                        Some(v) => v,
                        None => {
                            if s.trim() != "NA" {
                                warned = true;
                            }
                            na_real()
                        }
                    },
                })
                .collect();
            (out, warned)
        }
        Value::List(items, _) => {
            let mut out = Vec::new();
            for i in items {
                out.extend(as_nums(i).0.first().copied().or(Some(na_real())));
            }
            (out, false)
        }
        _ => (Vec::new(), false),
    }
}

pub fn num_str(x: f64) -> Option<String> {
    if is_na_real(x) {
        None
    } else {
        Some(num_to_string(x, 15))
    }
}

pub fn as_strs(v: &Value) -> Vec<Option<String>> {
    match v {
        Value::Null => Vec::new(),
        Value::Str(x, _) => x.clone(),
        Value::Num(x, _) => x.iter().map(|v| num_str(*v)).collect(),
        Value::Lgl(x, _) => x.iter().map(|b| b.map(|b| if b { "TRUE" } else { "FALSE" }.to_string())).collect(),
        Value::List(items, _) => items
            .iter()
            .map(|i| if i.len() == 1 { as_strs(i).pop().flatten() } else { Some(deparse_value(i)) })
            .collect(),
        Value::Closure(_) | Value::Builtin(_) => vec![Some("function".into())],
    }
}

pub fn as_lgls(v: &Value) -> Vec<Option<bool>> {
    match v {
        Value::Null => Vec::new(),
        Value::Lgl(x, _) => x.clone(),
        Value::Num(x, _) => x.iter().map(|v| num_to_lgl(*v)).collect(),
        Value::Str(x, _) => x
            .iter()
            .map(|s| match s.as_deref() {
                Some("TRUE") | Some("true") | Some("T") | Some("True") => Some(true),
                Some("FALSE") | Some("false") | Some("F") | Some("False") => Some(false),
                _ => None,
            })
            .collect(),
        Value::List(items, _) => items.iter().map(|i| as_lgls(i).first().copied().flatten()).collect(),
        _ => Vec::new(),
    }
}

/// `deparse`-like rendering used when a value has to become one string.
pub fn deparse_value(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Str(x, _) => {
            let parts: Vec<String> =
                x.iter().map(|s| s.as_ref().map(|s| format!("{s:?}")).unwrap_or_else(|| "NA".into())).collect();
            wrap_c(parts)
        }
        Value::Num(x, _) => wrap_c(x.iter().map(|v| num_to_string(*v, 15)).collect()),
        Value::Lgl(..) => wrap_c(as_strs(v).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect()),
        Value::List(items, _) => format!("list({})", items.iter().map(deparse_value).collect::<Vec<_>>().join(", ")),
        _ => "function".into(),
    }
}

fn wrap_c(parts: Vec<String>) -> String {
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        format!("c({})", parts.join(", "))
    }
}

/// Type rank used when combining values: NULL < logical < double < character < list.
pub fn rank(v: &Value) -> u8 {
    match v {
        Value::Null => 0,
        Value::Lgl(..) => 1,
        Value::Num(..) => 2,
        Value::Str(..) => 3,
        _ => 4,
    }
}

pub fn empty_of_rank(r: u8) -> Value {
    match r {
        0 => Value::Null,
        1 => Value::Lgl(Vec::new(), Attrs::default()),
        2 => Value::Num(Vec::new(), Attrs::default()),
        3 => Value::Str(Vec::new(), Attrs::default()),
        _ => Value::List(Vec::new(), Attrs::default()),
    }
}

pub fn coerce_to_rank(v: &Value, r: u8) -> Value {
    let names = v.names().cloned();
    let out = match r {
        0 => return Value::Null,
        1 => Value::Lgl(as_lgls(v), Attrs::default()),
        2 => Value::Num(as_nums(v).0, Attrs::default()),
        3 => Value::Str(as_strs(v), Attrs::default()),
        _ => match v {
            Value::List(..) => return v.clone(),
            Value::Null => Value::List(Vec::new(), Attrs::default()),
            other => Value::List((0..other.len()).map(|i| other.element(i)).collect(), Attrs::default()),
        },
    };
    out.with_names(names)
}

/// `c(...)`.
pub fn combine(items: Vec<(Option<String>, Value)>) -> Value {
    let r =
        items.iter().map(|(_, v)| if v.is_data_frame() || v.is_function() { 4 } else { rank(v) }).max().unwrap_or(0);
    if r == 0 {
        return Value::Null;
    }
    let any_names = items.iter().any(|(n, v)| n.is_some() || v.names().is_some());
    let mut names = Vec::new();
    let mut lgl = Vec::new();
    let mut num = Vec::new();
    let mut strs = Vec::new();
    let mut list = Vec::new();
    for (n, v) in &items {
        let len = v.len();
        let inner = v.names();
        for i in 0..len {
            let nm = match (n, inner) {
                (Some(n), Some(inn)) if !inn[i].is_empty() => format!("{n}.{}", inn[i]),
                (Some(n), _) if len == 1 => n.clone(),
                (Some(n), _) => format!("{n}{}", i + 1),
                (None, Some(inn)) => inn[i].clone(),
                (None, None) => String::new(),
            };
            names.push(nm);
        }
        match r {
            1 => lgl.extend(as_lgls(v)),
            2 => num.extend(as_nums(v).0),
            3 => strs.extend(as_strs(v)),
            _ => match v {
                Value::List(x, _) => list.extend(x.iter().cloned()),
                Value::Null => {}
                f @ (Value::Closure(_) | Value::Builtin(_)) => list.push(f.clone()),
                other => list.extend((0..other.len()).map(|i| other.element(i))),
            },
        }
    }
    let attrs = Attrs { names: if any_names { Some(names) } else { None }, class: None };
    match r {
        1 => Value::Lgl(lgl, attrs),
        2 => Value::Num(num, attrs),
        3 => Value::Str(strs, attrs),
        _ => Value::List(list, attrs),
    }
}

pub fn recycle(v: &Value, n: usize) -> Value {
    if v.len() == n || v.is_empty() {
        return v.clone();
    }
    let idx: Vec<Option<usize>> = (0..n).map(|i| Some(i % v.len())).collect();
    select(v, &idx).with_names(None)
}

/// Picks elements by 0-based position; `None` yields NA (or NULL in lists).
pub fn select(v: &Value, positions: &[Option<usize>]) -> Value {
    let names = v.names().map(|n| {
        positions.iter().map(|p| p.and_then(|p| n.get(p).cloned()).unwrap_or_else(|| "<NA>".into())).collect::<Vec<_>>()
    });
    let class = v.attrs().and_then(|a| a.class.clone()).filter(|c| !c.iter().any(|x| x == "data.frame"));
    let attrs = Attrs { names, class };
    match v {
        Value::Null => Value::Null,
        Value::Lgl(x, _) => {
            Value::Lgl(positions.iter().map(|p| p.and_then(|p| x.get(p).copied().flatten())).collect(), attrs)
        }
        Value::Num(x, _) => Value::Num(
            positions.iter().map(|p| p.and_then(|p| x.get(p).copied()).unwrap_or_else(na_real)).collect(),
            attrs,
        ),
        Value::Str(x, _) => {
            Value::Str(positions.iter().map(|p| p.and_then(|p| x.get(p).cloned().flatten())).collect(), attrs)
        }
        Value::List(x, _) => Value::List(
            positions.iter().map(|p| p.and_then(|p| x.get(p).cloned()).unwrap_or(Value::Null)).collect(),
            attrs,
        ),
        other => other.clone(),
    }
}

/// `x[positions] <- value` with growth and type promotion.
pub fn assign_positions(cur: &Value, positions: &[usize], value: &Value) -> Result<Value, String> {
    if positions.is_empty() {
        return Ok(cur.clone());
    }
    if value.is_empty() {
        return Err("replacement has length zero".into());
    }
    let r = rank(cur).max(rank(value)).max(1);
    let target_len = cur.len().max(positions.iter().max().map(|m| m + 1).unwrap_or(0));
    let base = coerce_to_rank(cur, r);
    let val = coerce_to_rank(value, r);
    let mut names = cur.names().cloned();
    if let Some(n) = names.as_mut() {
        n.resize(target_len, String::new());
    }
    let out = match (base, val) {
        (Value::Lgl(mut x, _), Value::Lgl(v, _)) => {
            x.resize(target_len, None);
            for (k, p) in positions.iter().enumerate() {
                x[*p] = v[k % v.len()];
            }
            Value::Lgl(x, Attrs::default())
        }
        (Value::Num(mut x, _), Value::Num(v, _)) => {
            x.resize(target_len, na_real());
            for (k, p) in positions.iter().enumerate() {
                x[*p] = v[k % v.len()];
            }
            Value::Num(x, Attrs::default())
        }
        (Value::Str(mut x, _), Value::Str(v, _)) => {
            x.resize(target_len, None);
            for (k, p) in positions.iter().enumerate() {
                x[*p] = v[k % v.len()].clone();
            }
            Value::Str(x, Attrs::default())
        }
        (Value::List(mut x, _), Value::List(v, _)) => {
            x.resize(target_len, Value::Null);
            for (k, p) in positions.iter().enumerate() {
                x[*p] = v[k % v.len()].clone();
            }
            Value::List(x, Attrs::default())
        }
        _ => return Err("incompatible types in subassignment".into()),
    };
    let class = cur.attrs().and_then(|a| a.class.clone());
    let mut out = out.with_names(names);
    if let Some(a) = out.attrs_mut() {
        a.class = class;
    }
    Ok(out)
}

/// Locale-style string ordering: case-insensitive first, lower case before upper on ties.
pub fn collate(a: &str, b: &str) -> Ordering {
    let la: Vec<char> = a.chars().filter(|c| c.is_alphanumeric()).flat_map(|c| c.to_lowercase()).collect();
    let lb: Vec<char> = b.chars().filter(|c| c.is_alphanumeric()).flat_map(|c| c.to_lowercase()).collect();
    la.cmp(&lb)
        .then_with(|| {
            let fa: Vec<char> = a.chars().flat_map(|c| c.to_lowercase()).collect();
            let fb: Vec<char> = b.chars().flat_map(|c| c.to_lowercase()).collect();
            fa.cmp(&fb)
        })
        .then_with(|| b.cmp(a))
}

fn result_names(l: &Value, r: &Value, n: usize) -> Option<Vec<String>> {
    match (l.names(), r.names()) {
        (Some(ln), _) if ln.len() == n => Some(ln.clone()),
        (_, Some(rn)) if rn.len() == n => Some(rn.clone()),
        _ => None,
    }
}

fn check_operand(it: &mut Interp, v: &Value, call: &str, arith: bool) -> EResult<()> {
    let ok = match v {
        Value::Null | Value::Lgl(..) | Value::Num(..) => true,
        Value::Str(..) => !arith,
        _ => false,
    };
    if ok {
        Ok(())
    } else if arith {
        Err(it.error_in(Some(call.to_string()), "non-numeric argument to binary operator"))
    } else {
        Err(it.error_in(Some(call.to_string()), "comparison of these types is not implemented"))
    }
}

pub fn binary_op(it: &mut Interp, op: &BinOp, l: &Value, r: &Value, call: &str) -> EResult<Value> {
    match op {
        BinOp::Range => return range_op(it, l, r, call),
        BinOp::Special(s) if s == "%in%" => {
            let table = as_strs(r);
            let x = as_strs(l);
            return Ok(Value::Lgl(x.iter().map(|v| Some(table.contains(v))).collect(), Attrs::default()));
        }
        BinOp::Special(s) if s != "%%" && s != "%/%" => {
            return Err(it.error_in(Some(call.to_string()), format!("could not find function \"{s}\"")));
        }
        _ => {}
    }
    let is_arith = matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Pow | BinOp::Special(_));
    let is_logic = matches!(op, BinOp::And | BinOp::Or);
    check_operand(it, l, call, is_arith || is_logic)?;
    check_operand(it, r, call, is_arith || is_logic)?;
    if l.is_empty() || r.is_empty() {
        return Ok(if is_arith { Value::nums(vec![]) } else { Value::Lgl(vec![], Attrs::default()) });
    }
    let n = l.len().max(r.len());
    if !n.is_multiple_of(l.len()) || !n.is_multiple_of(r.len()) {
        it.warn(Some(call.to_string()), "longer object length is not a multiple of shorter object length")?;
    }
    let names = result_names(l, r, n);
    let attrs = Attrs { names, class: None };
    if is_arith {
        let a = as_nums(l).0;
        let b = as_nums(r).0;
        let f = |x: f64, y: f64| -> f64 {
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Pow => {
                    if x == 1.0 || y == 0.0 {
                        1.0
                    } else {
                        x.powf(y)
                    }
                }
                BinOp::Special(s) if s == "%%" => {
                    if y == 0.0 {
                        f64::NAN
                    } else {
                        let m = x - (x / y).floor() * y;
                        if (m - y).abs() < f64::EPSILON * y.abs() {
                            0.0
                        } else {
                            m
                        }
                    }
                }
                _ => (x / y).floor(),
            }
        };
        let out = (0..n)
            .map(|i| {
                let (x, y) = (a[i % a.len()], b[i % b.len()]);
                if is_na_real(x) || is_na_real(y) {
                    na_real()
                } else {
                    f(x, y)
                }
            })
            .collect();
        return Ok(Value::Num(out, attrs));
    }
    if is_logic {
        let a = as_lgls(l);
        let b = as_lgls(r);
        let out = (0..n)
            .map(|i| {
                let (x, y) = (a[i % a.len()], b[i % b.len()]);
                match op {
                    BinOp::And => match (x, y) {
                        (Some(false), _) | (_, Some(false)) => Some(false),
                        (Some(true), Some(true)) => Some(true),
                        _ => None,
                    },
                    _ => match (x, y) {
                        (Some(true), _) | (_, Some(true)) => Some(true),
                        (Some(false), Some(false)) => Some(false),
                        _ => None,
                    },
                }
            })
            .collect();
        return Ok(Value::Lgl(out, attrs));
    }
    let cmp_res = |o: Option<Ordering>| -> Option<bool> {
        o.map(|o| match op {
            BinOp::Eq => o == Ordering::Equal,
            BinOp::Ne => o != Ordering::Equal,
            BinOp::Lt => o == Ordering::Less,
            BinOp::Gt => o == Ordering::Greater,
            BinOp::Le => o != Ordering::Greater,
            _ => o != Ordering::Less,
        })
    };
    let out: Vec<Option<bool>> = if matches!(l, Value::Str(..)) || matches!(r, Value::Str(..)) {
        let a = as_strs(l);
        let b = as_strs(r);
        (0..n)
            .map(|i| match (&a[i % a.len()], &b[i % b.len()]) {
                (Some(x), Some(y)) => {
                    cmp_res(Some(if matches!(op, BinOp::Eq | BinOp::Ne) { x.cmp(y) } else { collate(x, y) }))
                }
                _ => None,
            })
            .collect()
    } else {
        let a = as_nums(l).0;
        let b = as_nums(r).0;
        (0..n).map(|i| cmp_res(a[i % a.len()].partial_cmp(&b[i % b.len()]))).collect()
    };
    Ok(Value::Lgl(out, attrs))
}

fn range_op(it: &mut Interp, l: &Value, r: &Value, call: &str) -> EResult<Value> {
    let a = as_nums(l).0;
    let b = as_nums(r).0;
    if a.is_empty() || b.is_empty() {
        return Err(it.error_in(Some(call.to_string()), "argument of length 0"));
    }
    let (from, to) = (a[0], b[0]);
    if from.is_nan() || to.is_nan() {
        return Err(it.error_in(Some(call.to_string()), "NA/NaN argument"));
    }
    let n = ((to - from).abs() + 1e-10).floor() as usize + 1;
    let step = if to >= from { 1.0 } else { -1.0 };
    Ok(Value::nums((0..n).map(|i| from + step * i as f64).collect()))
}

/// Structural equality for `identical`.
pub fn identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Lgl(x, ax), Value::Lgl(y, ay)) => x == y && ax == ay,
        (Value::Num(x, ax), Value::Num(y, ay)) => {
            ax == ay && x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p == q || (p.is_nan() && q.is_nan()))
        }
        (Value::Str(x, ax), Value::Str(y, ay)) => x == y && ax == ay,
        (Value::List(x, ax), Value::List(y, ay)) => {
            ax == ay && x.len() == y.len() && x.iter().zip(y).all(|(p, q)| identical(p, q))
        }
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        (Value::Closure(x), Value::Closure(y)) => std::rc::Rc::ptr_eq(x, y),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_promotes_and_names() {
        let v = combine(vec![(Some("a".into()), Value::num(1.0)), (None, Value::str("x"))]);
        assert_eq!(as_strs(&v), vec![Some("1".into()), Some("x".into())]);
        assert_eq!(v.names().unwrap(), &vec!["a".to_string(), String::new()]);
    }

    #[test]
    fn assignment_grows_with_na() {
        let v = assign_positions(&Value::nums(vec![1.0]), &[2], &Value::num(5.0)).unwrap();
        let (x, _) = as_nums(&v);
        assert_eq!(x[0], 1.0);
        assert!(is_na_real(x[1]));
        assert_eq!(x[2], 5.0);
    }

    #[test]
    fn collation_ignores_case_first() {
        assert_eq!(collate("apple", "Banana"), Ordering::Less);
        assert_eq!(collate("a", "A"), Ordering::Less);
    }

    #[test]
    fn numeric_parsing() {
        assert_eq!(parse_num(" 2.5 "), Some(2.5));
        assert_eq!(parse_num("abc"), None);
        assert_eq!(parse_num("1e3"), Some(1000.0));
    }
}
