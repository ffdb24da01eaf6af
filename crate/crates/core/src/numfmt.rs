//! Fixed-precision float formatting shared by every text export.

/// Formats `x` in positional notation with 17 significant digits, enough to
/// recover the exact `f64` on parse.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0000000000000000".to_string()
        } else {
            "0.0000000000000000".to_string()
        };
    }
    // The exponent from `{:e}` is exact, unlike floor(log10(|x|)).
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}
