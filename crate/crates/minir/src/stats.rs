//! Numeric summaries.

use crate::value::na_real;

/// Compensated summation; closer to R's extended-precision accumulator than a naive loop.
pub fn sum(x: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &v in x {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let m = sum(x) / n;
    if !m.is_finite() {
        return m;
    }
    let resid: Vec<f64> = x.iter().map(|v| v - m).collect();
    m + sum(&resid) / n
}

pub fn var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return na_real();
    }
    let m = mean(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    sum(&sq) / (x.len() as f64 - 1.0)
}

pub fn cov(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return na_real();
    }
    let (mx, my) = (mean(x), mean(y));
    let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    sum(&p) / (x.len() as f64 - 1.0)
}

pub fn cor(x: &[f64], y: &[f64]) -> f64 {
    let r = cov(x, y) / (var(x).sqrt() * var(y).sqrt());
    r.clamp(-1.0, 1.0)
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return na_real();
    }
    let s = sorted(x);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        mean(&[s[n / 2 - 1], s[n / 2]])
    }
}

/// Type-7 sample quantile.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let s = sorted(x);
    let n = s.len();
    if n == 0 {
        return na_real();
    }
    let h = (n as f64 - 1.0) * p;
    let fuzz = 4.0 * f64::EPSILON;
    let lo = (h + fuzz).floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac.abs() < fuzz {
        s[lo]
    } else {
        s[lo] + frac * (s[hi] - s[lo])
    }
}

/// `round(x, digits)`: pick the nearer of the two decimal candidates, ties to even.
pub fn round(x: f64, digits: i32) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if digits > 15 {
        return x;
    }
    let p = 10f64.powi(digits.abs());
    let y = if digits >= 0 { x * p } else { x / p };
    let (lo, hi) = (y.floor(), y.ceil());
    let back = |v: f64| if digits >= 0 { v / p } else { v * p };
    if lo == hi {
        return back(lo);
    }
    let (xl, xh) = (back(lo), back(hi));
    let dl = (x - xl).abs();
    let dh = (xh - x).abs();
    if dl < dh {
        xl
    } else if dh < dl {
        xh
    } else if lo % 2.0 == 0.0 {
        xl
    } else {
        xh
    }
}

pub fn signif(x: f64, digits: i32) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let d = digits.max(1) as usize;
    format!("{:.*e}", d - 1, x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_matches_decimal_representation() {
        assert_eq!(round(0.15, 1), 0.1);
        assert_eq!(round(2.5, 0), 2.0);
        assert_eq!(round(3.5, 0), 4.0);
        assert_eq!(round(1.005, 2), 1.0);
        assert_eq!(round(1234.0, -2), 1200.0);
    }

    #[test]
    fn quantile_type_seven() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.25), 1.75);
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(quantile(&x, 1.0), 4.0);
    }

    #[test]
    fn spread() {
        let x = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&x), 5.0);
        assert!((var(&x) - 32.0 / 7.0).abs() < 1e-12);
        assert!((cor(&x, &x) - 1.0).abs() < 1e-12);
    }
}
