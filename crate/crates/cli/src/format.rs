//! Table and summary formatting.

use std::fmt::Write;

use toric_extremal::diagnostics::DiagnosticsRow;

pub const TABLE_HEADER: &str = "Deg,L2-error,Max,Min,beta,grad_s_norm,grad_sinv_norm";

/// `%.9g`: nine significant digits, trailing zeros dropped.
pub fn sig9(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    // rounding can bump the exponent (9.9999999996 -> 10)
    let sci = format!("{v:.8e}");
    let (mant, e) = sci.split_once('e').expect("exponent present");
    let e: i32 = e.parse().expect("integer exponent");
    let exp = exp.max(e);
    if !(-4..9).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn table_line(degree: u32, row: Option<&DiagnosticsRow>) -> String {
    let cells = match row {
        Some(r) => [r.l2_error, r.max_dev, r.min_dev, r.beta, r.grad_s_norm, r.grad_sinv_norm],
        None => [f64::NAN; 6],
    };
    let mut line = degree.to_string();
    for c in cells {
        let _ = write!(line, ",{}", sig9(c));
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.583421245355), "0.583421245");
        assert_eq!(sig9(60.345668664), "60.3456687");
        assert_eq!(sig9(-0.0445613), "-0.0445613");
        assert_eq!(sig9(2.5e-5), "2.5e-05");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(9.9999999996), "10");
        assert_eq!(sig9(1234567891234.0), "1.23456789e+12");
        assert_eq!(sig9(f64::NAN), "NaN");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn failed_rows_are_nan() {
        assert_eq!(table_line(3, None), "3,NaN,NaN,NaN,NaN,NaN,NaN");
    }
}
