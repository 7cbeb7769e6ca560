/// Renders `x` as a plain decimal with 10 significant digits.
///
/// Used for every CSV artifact so reruns are byte-identical.
pub fn fmt_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0.000000000".to_string()
        } else {
            format!("{x}")
        };
    }
    let mut exp = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade (9.9999999999 -> 10.00000000)
    let scaled = x.abs() / 10f64.powi(exp);
    if (scaled * 1e9).round() >= 1e10 {
        exp += 1;
    }
    let decimals = (9 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
