//! Float text shared by the line-oriented formats.

/// Shortest text that parses back to the same bits: whichever of the plain
/// and exponent renderings is shorter. Rust prints both with the minimal
/// number of significant digits.
pub fn fmt_f64(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

/// Parses a finite float; `inf` and `nan` spellings are rejected.
pub fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}
