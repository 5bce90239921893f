//! Number formatting for emitted files.
//!
//! Result files carry 10 significant digits. Data files (panels, edges)
//! use the shortest representation that parses back to the same `f64`.

/// `v` rounded to 10 significant digits.
pub fn round10(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.9e}").parse().unwrap_or(v)
}

/// Text of `v` at 10 significant digits; scientific notation outside
/// `[1e-6, 1e15)` in magnitude.
pub fn sig10(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-6..1e15).contains(&a) {
        let s = format!("{v:.9e}");
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exponent}");
    }
    format!("{}", round10(v))
}

/// Shortest round-trip text of `v`.
pub fn exact(v: f64) -> String {
    format!("{v}")
}
