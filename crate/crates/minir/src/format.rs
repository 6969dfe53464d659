//! Number formatting with R's conventions (`as.character`, `print`, `sprintf`).

use crate::value::is_na_real;

struct Decomposed {
    neg: bool,
    /// significant digits, no trailing zeros
    digits: String,
    exp: i32,
}

fn decompose(x: f64, max_sig: usize) -> Decomposed {
    let s = format!("{:.*e}", max_sig.saturating_sub(1), x.abs());
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    let mut digits: String = mant.chars().filter(|c| *c != '.').collect();
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }
    Decomposed { neg: x < 0.0, digits, exp }
}

fn special(x: f64) -> Option<String> {
    if is_na_real(x) {
        Some("NA".into())
    } else if x.is_nan() {
        Some("NaN".into())
    } else if x.is_infinite() {
        Some(if x > 0.0 { "Inf".into() } else { "-Inf".into() })
    } else {
        None
    }
}

fn fixed_decimals(d: &Decomposed) -> usize {
    let nsig = d.digits.len() as i32;
    (nsig - 1 - d.exp).max(0) as usize
}

fn fixed_width(d: &Decomposed) -> usize {
    let dec = fixed_decimals(d);
    let int_digits = if d.exp >= 0 { d.exp as usize + 1 } else { 1 };
    d.neg as usize + int_digits + if dec > 0 { dec + 1 } else { 0 }
}

fn sci_width(d: &Decomposed) -> usize {
    let nsig = d.digits.len();
    let exp_digits = if d.exp.abs() >= 100 { 3 } else { 2 };
    d.neg as usize + 1 + if nsig > 1 { nsig } else { 0 } + 2 + exp_digits
}

fn sci_string(x: f64, mant_decimals: usize) -> String {
    c_exp(x, mant_decimals, false)
}

/// Formats one number with at most `digits` significant digits, choosing
/// fixed or scientific notation the way R does with `scipen = 0`.
pub fn num_to_string(x: f64, digits: usize) -> String {
    if let Some(s) = special(x) {
        return s;
    }
    if x == 0.0 {
        return "0".into();
    }
    let d = decompose(x, digits);
    if fixed_width(&d) <= sci_width(&d) {
        format!("{:.*}", fixed_decimals(&d), x)
    } else {
        sci_string(x, d.digits.len() - 1)
    }
}

/// Formats a numeric vector with a common number of decimals, as `print` does.
pub fn format_num_vec(xs: &[f64], digits: usize) -> Vec<String> {
    let finite: Vec<Decomposed> =
        xs.iter().filter(|x| special(**x).is_none() && **x != 0.0).map(|x| decompose(*x, digits)).collect();
    if finite.is_empty() {
        return xs.iter().map(|x| special(*x).unwrap_or_else(|| "0".into())).collect();
    }
    let decimals = finite.iter().map(fixed_decimals).max().unwrap_or(0).min(15);
    let fw = finite
        .iter()
        .map(|d| {
            let int_digits = if d.exp >= 0 { d.exp as usize + 1 } else { 1 };
            d.neg as usize + int_digits + if decimals > 0 { decimals + 1 } else { 0 }
        })
        .max()
        .unwrap_or(0);
    let max_sig = finite.iter().map(|d| d.digits.len()).max().unwrap_or(1);
    let sw =
        finite.iter().map(sci_width).max().unwrap_or(0).max(
            finite.iter().map(|d| d.neg as usize).max().unwrap_or(0) + 1 + if max_sig > 1 { max_sig } else { 0 } + 4,
        );
    xs.iter()
        .map(|x| {
            if let Some(s) = special(*x) {
                s
            } else if fw <= sw {
                format!("{:.*}", decimals, x)
            } else {
                sci_string(*x, max_sig - 1)
            }
        })
        .collect()
}

/// C `%e` formatting: `d.dddddde+XX`.
pub fn c_exp(x: f64, prec: usize, upper: bool) -> String {
    let s = format!("{:.*e}", prec, x);
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    let e = if upper { 'E' } else { 'e' };
    format!("{mant}{e}{sign}{:02}", exp.abs())
}

/// C `%g` formatting.
pub fn c_general(x: f64, prec: usize, upper: bool, alt: bool) -> String {
    let p = if prec == 0 { 1 } else { prec };
    if x == 0.0 {
        return if alt { format!("{:.*}", p - 1, 0.0) } else { "0".into() };
    }
    let es = format!("{:.*e}", p - 1, x);
    let exp: i32 = es.split_once('e').expect("exponent").1.parse().expect("exponent");
    let mut out = if exp < -4 || exp >= p as i32 {
        c_exp(x, p - 1, upper)
    } else {
        format!("{:.*}", (p as i32 - 1 - exp).max(0) as usize, x)
    };
    if !alt {
        if let Some(epos) = out.find(['e', 'E']) {
            let (m, e) = out.split_at(epos);
            let m = strip_fraction_zeros(m);
            out = format!("{m}{e}");
        } else {
            out = strip_fraction_zeros(&out);
        }
    }
    out
}

fn strip_fraction_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Lit(String),
    Conv { flags: String, width: Option<usize>, prec: Option<usize>, conv: char },
}

pub fn parse_format(fmt: &str) -> Result<Vec<Spec>, String> {
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '%' {
            lit.push(chars[i]);
            i += 1;
            continue;
        }
        if chars.get(i + 1) == Some(&'%') {
            lit.push('%');
            i += 2;
            continue;
        }
        if !lit.is_empty() {
            out.push(Spec::Lit(std::mem::take(&mut lit)));
        }
        i += 1;
        let mut flags = String::new();
        while i < chars.len() && "-+ 0#".contains(chars[i]) {
            flags.push(chars[i]);
            i += 1;
        }
        let mut width = None;
        let ws = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i > ws {
            width = Some(chars[ws..i].iter().collect::<String>().parse().unwrap());
        }
        let mut prec = None;
        if i < chars.len() && chars[i] == '.' {
            i += 1;
            let ps = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            prec = Some(chars[ps..i].iter().collect::<String>().parse().unwrap_or(0));
        }
        let conv = *chars.get(i).ok_or_else(|| format!("unrecognised format specification '{fmt}'"))?;
        if !"dioxXfeEgGs".contains(conv) {
            return Err(format!(
                "unrecognised format specification '{}'",
                chars[ws.saturating_sub(1)..].iter().collect::<String>()
            ));
        }
        i += 1;
        out.push(Spec::Conv { flags, width, prec, conv });
    }
    if !lit.is_empty() {
        out.push(Spec::Lit(lit));
    }
    Ok(out)
}

pub fn pad(s: String, flags: &str, width: Option<usize>) -> String {
    let Some(w) = width else { return s };
    let n = s.chars().count();
    if n >= w {
        return s;
    }
    let fill = w - n;
    if flags.contains('-') {
        format!("{s}{}", " ".repeat(fill))
    } else if flags.contains('0') && s.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+') {
        let (sign, rest) = if s.starts_with('-') || s.starts_with('+') { s.split_at(1) } else { ("", s.as_str()) };
        format!("{sign}{}{rest}", "0".repeat(fill))
    } else {
        format!("{}{s}", " ".repeat(fill))
    }
}

pub fn format_number(x: f64, flags: &str, prec: Option<usize>, conv: char) -> String {
    if let Some(s) = special(x) {
        return s;
    }
    let mut s = match conv {
        'f' => format!("{:.*}", prec.unwrap_or(6), x),
        'e' | 'E' => c_exp(x, prec.unwrap_or(6), conv == 'E'),
        'g' | 'G' => c_general(x, prec.unwrap_or(6), conv == 'G', flags.contains('#')),
        'd' | 'i' => format!("{}", x as i64),
        'x' => format!("{:x}", x as i64),
        'X' => format!("{:X}", x as i64),
        _ => unreachable!(),
    };
    if x >= 0.0 && !s.starts_with('-') {
        if flags.contains('+') {
            s.insert(0, '+');
        } else if flags.contains(' ') {
            s.insert(0, ' ');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn as_character_style() {
        assert_eq!(num_to_string(0.1 + 0.2, 15), "0.3");
        assert_eq!(num_to_string(1e5, 15), "1e+05");
        assert_eq!(num_to_string(123456.0, 15), "123456");
        assert_eq!(num_to_string(0.0001, 15), "1e-04");
        assert_eq!(num_to_string(0.001, 15), "0.001");
        assert_eq!(num_to_string(1.0 / 3.0, 7), "0.3333333");
        assert_eq!(num_to_string(-2.5, 7), "-2.5");
        assert_eq!(num_to_string(3.0, 7), "3");
    }

    #[test]
    fn print_vectors_share_decimals() {
        assert_eq!(format_num_vec(&[1.0, 2.5], 7), vec!["1.0", "2.5"]);
        assert_eq!(format_num_vec(&[10.0, 200.0], 7), vec!["10", "200"]);
    }

    #[test]
    fn c_style_conversions() {
        assert_eq!(c_exp(150.0, 6, false), "1.500000e+02");
        assert_eq!(c_general(0.0001234, 6, false, false), "0.0001234");
        assert_eq!(c_general(1234567.0, 6, false, false), "1.23457e+06");
        assert_eq!(c_general(100.0, 6, false, false), "100");
        assert_eq!(pad("3.1".into(), "", Some(6)), "   3.1");
        assert_eq!(pad("-3".into(), "0", Some(4)), "-003");
        assert_eq!(pad("ab".into(), "-", Some(4)), "ab  ");
    }

    #[test]
    fn format_parser() {
        let specs = parse_format("%s: %5.2f%%").unwrap();
        assert_eq!(specs.len(), 4);
        assert!(parse_format("%q").is_err());
    }
}
