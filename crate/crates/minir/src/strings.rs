//! String builtins: regular expressions, `sprintf`, `format` and friends.

use regex::{Regex, RegexBuilder};

use crate::format::{format_num_vec, format_number, num_to_string, pad, parse_format, Spec};
use crate::ops::{as_nums, as_strs};
use crate::value::{is_na_real, Value};

pub struct Pattern {
    pub re: Regex,
    pub fixed: bool,
}

/// Compiles an R pattern. POSIX classes map directly onto the regex crate's
/// bracket syntax; `fixed = TRUE` patterns are escaped.
pub fn compile(pattern: &str, fixed: bool, ignore_case: bool) -> Result<Pattern, String> {
    let src = if fixed { regex::escape(pattern) } else { pattern.to_string() };
    let re = RegexBuilder::new(&src)
        .case_insensitive(ignore_case)
        .build()
        .map_err(|e| format!("invalid regular expression '{pattern}', reason '{}'", first_line(&e.to_string())))?;
    Ok(Pattern { re, fixed })
}

fn first_line(s: &str) -> String {
    s.lines().last().unwrap_or("").trim().to_string()
}

/// Translates an R replacement string (`\\1` back-references) to regex syntax.
pub fn translate_replacement(rep: &str, fixed: bool) -> String {
    if fixed {
        return rep.replace('$', "$$");
    }
    let mut out = String::new();
    let mut chars = rep.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '$' => out.push_str("$$"),
            '\\' => match chars.peek() {
                Some(d) if d.is_ascii_digit() => {
                    out.push_str(&format!("${{{d}}}"));
                    chars.next();
                }
                Some(_) => out.push(chars.next().unwrap()),
                None => {}
            },
            c => out.push(c),
        }
    }
    out
}

pub fn substitute(p: &Pattern, rep: &str, x: &[Option<String>], global: bool) -> Vec<Option<String>> {
    let r = translate_replacement(rep, p.fixed);
    x.iter()
        .map(|s| {
            s.as_ref().map(|s| {
                if global {
                    p.re.replace_all(s, r.as_str()).into_owned()
                } else {
                    p.re.replace(s, r.as_str()).into_owned()
                }
            })
        })
        .collect()
}

pub fn split(p: Option<&Pattern>, s: &str) -> Vec<String> {
    match p {
        None => s.chars().map(|c| c.to_string()).collect(),
        Some(p) => {
            let mut parts: Vec<String> = p.re.split(s).map(|t| t.to_string()).collect();
            // R drops a trailing empty field
            if parts.last().is_some_and(|l| l.is_empty()) {
                parts.pop();
            }
            parts
        }
    }
}

/// Elementwise `paste`.
pub fn paste(args: &[Value], sep: &str, collapse: Option<&str>) -> Value {
    let vecs: Vec<Vec<String>> = args
        .iter()
        .filter(|a| !a.is_empty())
        .map(|a| as_strs(a).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect())
        .collect();
    let n = vecs.iter().map(|v| v.len()).max().unwrap_or(0);
    let rows: Vec<String> =
        (0..n).map(|i| vecs.iter().map(|v| v[i % v.len()].as_str()).collect::<Vec<_>>().join(sep)).collect();
    match collapse {
        Some(c) => Value::str(rows.join(c)),
        None => Value::strs(rows),
    }
}

/// Vectorised `sprintf`.
pub fn sprintf(fmt: &[Option<String>], args: &[Value]) -> Result<Value, String> {
    if fmt.is_empty() || args.iter().any(|a| a.is_empty()) {
        return Ok(Value::Str(Vec::new(), Default::default()));
    }
    let n = args.iter().map(|a| a.len()).chain(std::iter::once(fmt.len())).max().unwrap_or(1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let Some(f) = &fmt[i % fmt.len()] else {
            out.push(None);
            continue;
        };
        let specs = parse_format(f)?;
        let mut s = String::new();
        let mut argi = 0;
        for spec in specs {
            match spec {
                Spec::Lit(l) => s.push_str(&l),
                Spec::Conv { flags, width, prec, conv } => {
                    let a = args.get(argi).ok_or_else(|| "too few arguments".to_string())?;
                    argi += 1;
                    let el = a.element(i % a.len());
                    s.push_str(&convert(&el, &flags, width, prec, conv, f)?);
                }
            }
        }
        out.push(Some(s));
    }
    Ok(Value::Str(out, Default::default()))
}

fn convert(
    el: &Value,
    flags: &str,
    width: Option<usize>,
    prec: Option<usize>,
    conv: char,
    f: &str,
) -> Result<String, String> {
    let spec_text = || {
        let mut t = format!("%{flags}");
        if let Some(w) = width {
            t.push_str(&w.to_string());
        }
        if let Some(p) = prec {
            t.push_str(&format!(".{p}"));
        }
        t.push(conv);
        t
    };
    let _ = f;
    match el {
        Value::Str(x, _) => {
            if conv != 's' {
                return Err(format!("invalid format '{}'; use format %s for character objects", spec_text()));
            }
            let mut v = x[0].clone().unwrap_or_else(|| "NA".into());
            if let Some(p) = prec {
                v = v.chars().take(p).collect();
            }
            Ok(pad(v, flags, width))
        }
        Value::Num(..) | Value::Lgl(..) => {
            let x = as_nums(el).0[0];
            if conv == 's' {
                let v = if let Value::Lgl(b, _) = el {
                    match b[0] {
                        Some(true) => "TRUE".into(),
                        Some(false) => "FALSE".into(),
                        None => "NA".into(),
                    }
                } else {
                    num_to_string(x, 15)
                };
                return Ok(pad(v, flags, width));
            }
            if x.is_nan() && is_na_real(x) || matches!(el, Value::Lgl(b, _) if b[0].is_none()) {
                return Ok(pad("NA".into(), &flags.replace('0', ""), width));
            }
            if matches!(conv, 'd' | 'i' | 'x' | 'X') && x.is_finite() && x.fract() != 0.0 {
                return Err(format!(
                    "invalid format '{}'; use format %f, %e, %g or %a for numeric objects",
                    spec_text()
                ));
            }
            Ok(pad(format_number(x, flags, prec, conv), flags, width))
        }
        _ => Err("unsupported type".into()),
    }
}

fn insert_big_mark(s: &str, mark: &str) -> String {
    if mark.is_empty() {
        return s.to_string();
    }
    let (sign, rest) = if let Some(r) = s.strip_prefix('-') { ("-", r) } else { ("", s) };
    let (int, frac) = match rest.find('.') {
        Some(p) => rest.split_at(p),
        None => (rest, ""),
    };
    if !int.chars().all(|c| c.is_ascii_digit()) {
        return s.to_string();
    }
    let mut out = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push_str(mark);
        }
        out.push(c);
    }
    format!("{sign}{out}{frac}")
}

pub struct FormatOpts {
    pub nsmall: usize,
    pub digits: usize,
    pub width: usize,
    pub big_mark: String,
    pub trim: bool,
}

/// `format()` for atomic vectors.
pub fn format_vec(v: &Value, o: &FormatOpts) -> Vec<String> {
    let mut elems: Vec<String> = match v {
        Value::Num(x, _) => {
            let mut e = format_num_vec(x, o.digits);
            let decimals = e
                .iter()
                .filter(|s| !s.contains('e'))
                .map(|s| s.find('.').map(|p| s.len() - p - 1).unwrap_or(0))
                .max()
                .unwrap_or(0);
            if decimals < o.nsmall && !e.iter().any(|s| s.contains('e')) {
                e = x
                    .iter()
                    .map(|v| {
                        if v.is_nan() || v.is_infinite() {
                            num_to_string(*v, 7)
                        } else {
                            format!("{:.*}", o.nsmall, v)
                        }
                    })
                    .collect();
            }
            e.into_iter().map(|s| insert_big_mark(&s, &o.big_mark)).collect()
        }
        Value::Str(x, _) => x.iter().map(|s| s.clone().unwrap_or_else(|| "NA".into())).collect(),
        other => as_strs(other).into_iter().map(|s| s.unwrap_or_else(|| "NA".into())).collect(),
    };
    let left = matches!(v, Value::Str(..));
    if !o.trim || left {
        let w = elems.iter().map(|s| s.chars().count()).max().unwrap_or(0).max(o.width);
        elems = elems.into_iter().map(|s| pad(s, if left { "-" } else { "" }, Some(w))).collect();
    }
    elems
}

/// `formatC()`.
pub fn format_c(x: &[f64], width: usize, digits: Option<usize>, fmt: &str, flag: &str, big_mark: &str) -> Vec<String> {
    x.iter()
        .map(|v| {
            let conv = fmt.chars().next().unwrap_or('g');
            let s = if fmt == "d" { format!("{}", v.round() as i64) } else { format_number(*v, flag, digits, conv) };
            pad(insert_big_mark(&s, big_mark), flag, Some(width))
        })
        .collect()
}

const SMALL_WORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "en", "for", "if", "in", "is", "nor", "not", "of", "on",
    "or", "per", "so", "the", "to", "v", "v.", "via", "vs", "vs.", "from", "into", "than", "that", "with",
];

/// Title case with the usual small-word exceptions.
pub fn title_case(s: &str) -> String {
    let mut out = String::new();
    let mut first = true;
    for (i, word) in s.split(' ').enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if word.is_empty() {
            continue;
        }
        let keep = !first && SMALL_WORDS.contains(&word);
        let has_upper = word.chars().skip(1).any(|c| c.is_uppercase());
        if keep || has_upper {
            out.push_str(word);
        } else {
            let mut cs = word.chars();
            let c = cs.next().unwrap();
            out.extend(c.to_uppercase());
            out.push_str(cs.as_str());
        }
        first = false;
    }
    out
}

pub fn trim(s: &str, which: &str) -> String {
    match which {
        "left" => s.trim_start().to_string(),
        "right" => s.trim_end().to_string(),
        _ => s.trim().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backrefs_translate() {
        let p = compile("(a)(b)", false, false).unwrap();
        let r = substitute(&p, "\\2\\1", &[Some("xaby".into())], true);
        assert_eq!(r[0].as_deref(), Some("xbay"));
    }

    #[test]
    fn sprintf_vectorises() {
        let v =
            sprintf(&[Some("%s=%.2f".into())], &[Value::strs(vec!["a".into(), "b".into()]), Value::num(1.5)]).unwrap();
        assert_eq!(as_strs(&v), vec![Some("a=1.50".into()), Some("b=1.50".into())]);
    }

    #[test]
    fn sprintf_rejects_fractional_integer_format() {
        assert!(sprintf(&[Some("%d".into())], &[Value::num(1.5)]).is_err());
        assert!(sprintf(&[Some("%d".into())], &[Value::num(2.0)]).is_ok());
    }

    #[test]
    fn title_case_keeps_small_words() {
        assert_eq!(title_case("trust in the government"), "Trust in the Government");
    }

    #[test]
    fn big_mark() {
        assert_eq!(insert_big_mark("1234567.5", ","), "1,234,567.5");
    }

    #[test]
    fn split_drops_trailing_empty() {
        let p = compile(",", true, false).unwrap();
        assert_eq!(split(Some(&p), "a,b,"), vec!["a", "b"]);
    }
}
