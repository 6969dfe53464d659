//! Delimited-text input and output.

use crate::ops::{num_str, parse_num};
use crate::value::{data_frame, na_real, Attrs, Value};

fn parse_records(text: &str, sep: char) -> Vec<Vec<(String, bool)>> {
    let mut rows = Vec::new();
    let mut row = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut any = false;
    while let Some(c) = chars.next() {
        any = true;
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    field.push('"');
                    chars.next();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push(c);
            }
            continue;
        }
        match c {
            '"' => {
                in_quotes = true;
                quoted = true;
            }
            '\r' => {}
            '\n' => {
                row.push((std::mem::take(&mut field), quoted));
                quoted = false;
                if !(row.len() == 1 && row[0].0.is_empty() && !row[0].1) {
                    rows.push(std::mem::take(&mut row));
                } else {
                    row.clear();
                }
                any = false;
            }
            c if c == sep => {
                row.push((std::mem::take(&mut field), quoted));
                quoted = false;
            }
            c => field.push(c),
        }
    }
    if any {
        row.push((field, quoted));
        if !(row.len() == 1 && row[0].0.is_empty() && !row[0].1) {
            rows.push(row);
        }
    }
    rows
}

/// `make.names`.
pub fn make_name(s: &str) -> String {
    let mut out: String =
        s.chars().map(|c| if c.is_alphanumeric() || c == '.' || c == '_' { c } else { '.' }).collect();
    let starts_ok = out.chars().next().is_some_and(|c| c.is_alphabetic())
        || (out.starts_with('.') && !out.chars().nth(1).is_some_and(|c| c.is_ascii_digit()));
    if !starts_ok {
        out.insert(0, 'X');
    }
    out
}

fn column(cells: Vec<(String, bool)>) -> Value {
    let is_na = |s: &str, q: bool| !q && (s == "NA" || s.is_empty());
    let lgl = cells.iter().all(|(s, q)| is_na(s, *q) || matches!(s.as_str(), "TRUE" | "FALSE" | "T" | "F"));
    let any_nonmissing = cells.iter().any(|(s, q)| !is_na(s, *q));
    if lgl && any_nonmissing {
        return Value::Lgl(
            cells.iter().map(|(s, q)| if is_na(s, *q) { None } else { Some(s == "TRUE" || s == "T") }).collect(),
            Attrs::default(),
        );
    }
    let nums: Option<Vec<f64>> =
        cells.iter().map(|(s, q)| if is_na(s.trim(), *q) { Some(na_real()) } else { parse_num(s) }).collect();
    if let Some(n) = nums {
        return Value::Num(n, Attrs::default());
    }
    if !any_nonmissing {
        return Value::Lgl(vec![None; cells.len()], Attrs::default());
    }
    Value::Str(cells.into_iter().map(|(s, q)| if !q && s == "NA" { None } else { Some(s) }).collect(), Attrs::default())
}

/// Reads a delimited file into a data frame, with `read.csv` type guessing.
pub fn read_table(text: &str, sep: char, header: bool) -> Result<Value, String> {
    let mut rows = parse_records(text, sep);
    if rows.is_empty() {
        return Err("no lines available in input".into());
    }
    let names: Vec<String> = if header {
        rows.remove(0).into_iter().map(|(s, _)| make_name(&s)).collect()
    } else {
        (1..=rows[0].len()).map(|i| format!("V{i}")).collect()
    };
    let ncol = names.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() > ncol {
            return Err("more columns than column names".into());
        }
        if r.len() < ncol {
            return Err(format!("line {} did not have {} elements", i + 1 + header as usize, ncol));
        }
    }
    let mut cols: Vec<Vec<(String, bool)>> = vec![Vec::new(); ncol];
    for r in rows {
        for (j, cell) in r.into_iter().enumerate() {
            cols[j].push(cell);
        }
    }
    let mut seen = std::collections::HashMap::new();
    let names = names
        .into_iter()
        .map(|n| {
            let k = seen.entry(n.clone()).or_insert(0);
            let out = if *k == 0 { n.clone() } else { format!("{n}.{k}") };
            *k += 1;
            out
        })
        .collect();
    Ok(data_frame(names, cols.into_iter().map(column).collect()))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn cell(v: &Value, i: usize, na: &str) -> String {
    match v {
        Value::Num(x, _) => num_str(x[i]).unwrap_or_else(|| na.to_string()),
        Value::Lgl(x, _) => match x[i] {
            Some(true) => "TRUE".into(),
            Some(false) => "FALSE".into(),
            None => na.to_string(),
        },
        Value::Str(x, _) => x[i].as_deref().map(quote).unwrap_or_else(|| na.to_string()),
        _ => na.to_string(),
    }
}

/// `write.csv` output text.
pub fn write_csv(df: &Value, row_names: bool, na: &str) -> String {
    let (cols, names) = match df {
        Value::List(c, a) => (c.clone(), a.names.clone().unwrap_or_default()),
        other => (vec![other.clone()], vec!["x".into()]),
    };
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    let mut out = String::new();
    let mut header: Vec<String> = names.iter().map(|n| quote(n)).collect();
    if row_names {
        header.insert(0, "\"\"".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..n {
        let mut fields: Vec<String> = cols.iter().map(|c| cell(c, i, na)).collect();
        if row_names {
            fields.insert(0, quote(&(i + 1).to_string()));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::as_strs;

    #[test]
    fn guesses_column_types() {
        let df = read_table("a,b,c\n1,x,TRUE\n2,\"y, z\",FALSE\n", ',', true).unwrap();
        let Value::List(cols, _) = &df else { panic!() };
        assert!(matches!(cols[0], Value::Num(..)));
        assert_eq!(as_strs(&cols[1])[1].as_deref(), Some("y, z"));
        assert!(matches!(cols[2], Value::Lgl(..)));
    }

    #[test]
    fn header_names_are_sanitised() {
        let df = read_table("my col,2x\n1,2\n", ',', true).unwrap();
        assert_eq!(df.names().unwrap(), &vec!["my.col".to_string(), "X2x".to_string()]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(read_table("a,b\n1\n", ',', true).is_err());
    }

    #[test]
    fn round_trip_write() {
        let df = read_table("a,b\n1.5,x\n", ',', true).unwrap();
        assert_eq!(write_csv(&df, false, "NA"), "\"a\",\"b\"\n1.5,\"x\"\n");
        assert_eq!(write_csv(&df, true, "NA"), "\"\",\"a\",\"b\"\n\"1\",1.5,\"x\"\n");
    }
}
