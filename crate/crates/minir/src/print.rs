//! `print` output for vectors, lists and data frames.

use crate::format::format_num_vec;
use crate::ops::{as_strs, deparse_value};
use crate::value::Value;

const WIDTH: usize = 80;

fn escape(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Element strings for an atomic vector and whether they are left-aligned.
pub fn format_elements(v: &Value, quote: bool) -> (Vec<String>, bool) {
    match v {
        Value::Num(x, _) => (format_num_vec(x, 7), false),
        Value::Str(x, _) => (
            x.iter()
                .map(|s| match s {
                    Some(s) if quote => escape(s),
                    Some(s) => s.clone(),
                    None if quote => "NA".into(),
                    None => "<NA>".into(),
                })
                .collect(),
            quote,
        ),
        other => (as_strs(other).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect(), false),
    }
}

fn align(s: &str, w: usize, left: bool) -> String {
    let n = s.chars().count();
    if n >= w {
        return s.to_string();
    }
    if left {
        format!("{s}{}", " ".repeat(w - n))
    } else {
        format!("{}{s}", " ".repeat(w - n))
    }
}

fn print_atomic(v: &Value) -> String {
    let (elems, left) = format_elements(v, true);
    if elems.is_empty() {
        return match v {
            Value::Num(..) => "numeric(0)\n".into(),
            Value::Str(..) => "character(0)\n".into(),
            _ => "logical(0)\n".into(),
        };
    }
    if let Some(names) = v.names() {
        let w = elems.iter().chain(names.iter()).map(|s| s.chars().count()).max().unwrap_or(1);
        let per_line = (WIDTH / (w + 1)).max(1);
        let mut out = String::new();
        for chunk in (0..elems.len()).collect::<Vec<_>>().chunks(per_line) {
            for &i in chunk {
                out.push_str(&align(&names[i], w, false));
                out.push(' ');
            }
            out.push('\n');
            for &i in chunk {
                out.push_str(&align(&elems[i], w, false));
                out.push(' ');
            }
            out.push('\n');
        }
        return out;
    }
    let w = elems.iter().map(|s| s.chars().count()).max().unwrap_or(1);
    let label_w = format!("[{}]", elems.len()).len();
    let per_line = ((WIDTH - label_w) / (w + 1)).max(1);
    let mut out = String::new();
    for (k, chunk) in elems.chunks(per_line).enumerate() {
        out.push_str(&align(&format!("[{}]", k * per_line + 1), label_w, false));
        for e in chunk {
            out.push(' ');
            out.push_str(&align(e, w, left));
        }
        out.push('\n');
    }
    out
}

fn print_df(v: &Value) -> String {
    let (cols, names) = match v {
        Value::List(c, a) => (c, a.names.clone().unwrap_or_default()),
        _ => unreachable!(),
    };
    let n = v.nrow();
    if cols.is_empty() {
        return "data frame with 0 columns and 0 rows\n".into();
    }
    if n == 0 {
        return format!("[1] {}\n<0 rows> (or 0-length row.names)\n", names.join(" "));
    }
    let rn: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let rw = rn.iter().map(|s| s.len()).max().unwrap_or(1);
    let mut columns: Vec<Vec<String>> = Vec::new();
    for (c, name) in cols.iter().zip(&names) {
        let (mut e, _) = format_elements(c, false);
        let w = e.iter().chain(std::iter::once(name)).map(|s| s.chars().count()).max().unwrap_or(1);
        e.insert(0, name.clone());
        columns.push(e.into_iter().map(|s| align(&s, w, false)).collect());
    }
    let mut out = String::new();
    for row in 0..=n {
        let label = if row == 0 { String::new() } else { rn[row - 1].clone() };
        out.push_str(&align(&label, rw, true));
        for c in &columns {
            out.push(' ');
            out.push_str(&c[row]);
        }
        out.push('\n');
    }
    out
}

fn print_list(v: &Value, prefix: &str) -> String {
    let (items, names) = match v {
        Value::List(i, a) => (i, a.names.clone()),
        _ => unreachable!(),
    };
    if items.is_empty() {
        return if names.is_some() { "named list()\n".into() } else { "list()\n".into() };
    }
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        let tag = match names.as_ref().map(|n| n[i].as_str()) {
            Some(n) if !n.is_empty() => format!("{prefix}${n}"),
            _ => format!("{prefix}[[{}]]", i + 1),
        };
        out.push_str(&tag);
        out.push('\n');
        if matches!(item, Value::List(..)) && !item.is_data_frame() {
            out.push_str(&print_list(item, &tag));
        } else {
            out.push_str(&print_value(item));
            out.push('\n');
        }
    }
    out
}

pub fn print_value(v: &Value) -> String {
    match v {
        Value::Null => "NULL\n".into(),
        Value::List(..) if v.is_data_frame() => print_df(v),
        Value::List(..) => print_list(v, ""),
        Value::Closure(c) => {
            let ps: Vec<String> = c.params.iter().map(|p| p.name.clone()).collect();
            format!("function({})\n", ps.join(", "))
        }
        Value::Builtin(n) => format!("function (...) .Primitive(\"{n}\")\n"),
        _ if v.inherits("table") => format!("\n{}", print_atomic(v)),
        _ if v.inherits("try-error") => format!("[1] {}\n", deparse_value(v)),
        _ => print_atomic(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::data_frame;

    #[test]
    fn numeric_vector_layout() {
        assert_eq!(print_value(&Value::nums(vec![1.0, 2.5, 10.0])), "[1]  1.0  2.5 10.0\n");
    }

    #[test]
    fn strings_are_quoted() {
        assert_eq!(print_value(&Value::strs(vec!["a".into(), "bbb".into()])), "[1] \"a\"   \"bbb\"\n");
    }

    #[test]
    fn named_vector_layout() {
        let v = Value::nums(vec![1.0, 2.0]).with_names(Some(vec!["a".into(), "b".into()]));
        assert_eq!(print_value(&v), "a b \n1 2 \n");
    }

    #[test]
    fn data_frame_layout() {
        let df = data_frame(
            vec!["x".into(), "name".into()],
            vec![Value::nums(vec![1.0, 2.0]), Value::strs(vec!["a".into(), "b".into()])],
        );
        assert_eq!(print_value(&df), "  x name\n1 1    a\n2 2    b\n");
    }
}
