//! Elementary inequalities behind the discrete energy laws, as checkable
//! `(lhs, rhs)` pairs. Each holds when `lhs <= rhs`.

/// `(log x - log y)² <= (x - y)² / (x y)` for `x, y > 0`.
pub fn log_sq(x: f64, y: f64) -> (f64, f64) {
    // log(x/y) through log1p keeps nearby arguments from cancelling
    let l = ((x - y) / y).ln_1p();
    (l * l, (x - y) * (x - y) / (x * y))
}

/// `|y/(1+y) - x/(1+x)| <= |log(1+x) - log(1+y)|` for `x, y > 0`.
pub fn log_bridge(x: f64, y: f64) -> (f64, f64) {
    let lhs = ((y - x) / ((1.0 + x) * (1.0 + y))).abs();
    (lhs, ((x - y) / (1.0 + y)).ln_1p().abs())
}

/// `|Σa/Σ|a| - Σb/Σ|b|| <= 2 Σ|a - b| / Σ|a|` for sequences of equal length
/// with `Σ|a|, Σ|b| > 0`.
pub fn normalized_sum(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let sa: f64 = a.iter().sum();
    let na: f64 = a.iter().map(|x| x.abs()).sum();
    let sb: f64 = b.iter().sum();
    let nb: f64 = b.iter().map(|x| x.abs()).sum();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    ((sa / na - sb / nb).abs(), 2.0 * diff / na)
}

/// Upper bound `√((1+u_i)(1+u_j))` on the edge value `τ_ji`.
pub fn tau_upper_bound(u_i: f64, u_j: f64) -> f64 {
    ((1.0 + u_i) * (1.0 + u_j)).sqrt()
}
