//! Edge-based nonlinear operators of the stabilized scheme and the right-hand
//! sides of the nodal ODE system
//!
//! ```text
//! m_i u_i' = -Σ_j k_ij (u_j - u_i) + χ Σ_j τ_ji (log v_j - log v_i) k_ij + Σ_j β_ji (u_j - u_i)
//! m_i v_i' = -Σ_j k_ij (v_j - v_i) - m_i u_i v_i
//! ```
//!
//! where the sums run over the neighbours of node `i`.

use crate::error::{Bound, SchemeError};
use crate::fem::{assemble_lumped_mass, assemble_stiffness, LumpedMass, StiffnessMatrix};
use crate::mesh::{compute_symmetric_stencils, Mesh, SymmetricStencil};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Chemotactic sensitivity.
    pub chi: f64,
    /// Exponent of the shock detector.
    pub q_detector: f64,
    /// Relative band inside which `u_i` and `u_j` count as equal.
    pub eps_equal: f64,
    /// Tolerance of the weak-acuteness check.
    pub tol_acute: f64,
    /// Relative `|u_j - u_i| / (1 + u_i)` below which `τ` and the flux bracket
    /// are evaluated by their Taylor expansions.
    pub series_switch: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { chi: 1.0, q_detector: 2.0, eps_equal: 1e-12, tol_acute: 1e-12, series_switch: 1e-6 }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |msg: String| Err(SchemeError::InvalidParams(msg));
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return bad(format!("chi must be a finite non-negative number, got {}", self.chi));
        }
        if !(self.q_detector > 0.0 && self.q_detector.is_finite()) {
            return bad(format!("q_detector must be positive, got {}", self.q_detector));
        }
        for (name, v) in [
            ("eps_equal", self.eps_equal),
            ("tol_acute", self.tol_acute),
            ("series_switch", self.series_switch),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        Ok(())
    }
}

/// Nodal values of cell density `u` and attractant `v` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(u.len(), v.len(), "u and v must have the same length");
        Self { u, v, t: 0.0 }
    }

    /// Checks `u >= 0` and `0 < v <= v_max`, returning the first offending node.
    pub fn check_bounds(&self, v_max: f64) -> Result<(), (usize, Bound)> {
        if let Some(i) = self.u.iter().position(|&u| !(u >= 0.0)) {
            return Err((i, Bound::UNonNegative));
        }
        if let Some(i) = self.v.iter().position(|&v| !(v > 0.0)) {
            return Err((i, Bound::VPositive));
        }
        if let Some(i) = self.v.iter().position(|&v| v > v_max) {
            return Err((i, Bound::VMax));
        }
        Ok(())
    }
}

/// Everything the right-hand sides need besides the state.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub stiffness: StiffnessMatrix,
    pub mass: LumpedMass,
    pub stencil: SymmetricStencil,
    pub params: SchemeParams,
}

impl Discretization {
    pub fn new(mesh: Mesh, params: SchemeParams) -> Result<Self, SchemeError> {
        params.validate()?;
        let stiffness = assemble_stiffness(&mesh).expect("validated mesh has no degenerate triangles");
        let mass = assemble_lumped_mass(&mesh);
        let stencil = compute_symmetric_stencils(&mesh);
        Ok(Self { mesh, stiffness, mass, stencil, params })
    }

    pub fn rhs_u(&self, state: &State) -> Result<Vec<f64>, SchemeError> {
        rhs_u(state, &self.mesh, &self.stiffness, &self.mass, &self.stencil, &self.params)
    }

    pub fn rhs_v(&self, state: &State) -> Vec<f64> {
        rhs_v(state, &self.stiffness, &self.mass)
    }
}

/// `Λ_ij = ½ (u_i / (1 + u_i) + u_j / (1 + u_j))`.
pub fn lambda_ij(u_i: f64, u_j: f64) -> f64 {
    0.5 * (u_i / (1.0 + u_i) + u_j / (1.0 + u_j))
}

/// Edge value of `u`:
/// `Λ_ij (log(1 + u_j) - log(1 + u_i)) / (1 / (1 + u_i) - 1 / (1 + u_j))`,
/// continuously extended by `u_i` on the diagonal.
pub fn tau_ji(u_i: f64, u_j: f64, p: &SchemeParams) -> f64 {
    // order the arguments so the value is bitwise symmetric
    let (lo, hi) = if u_i <= u_j { (u_i, u_j) } else { (u_j, u_i) };
    let a = 1.0 + lo;
    let b = 1.0 + hi;
    let d = hi - lo;
    // g = a b log(b / a) / (b - a)
    let g = if d <= p.series_switch * a {
        a + 0.5 * d - d * d / (6.0 * a)
    } else {
        a * b * (d / a).ln_1p() / d
    };
    lambda_ij(u_i, u_j) * g
}

/// Flux bracket `(u_i - τ_ji) / (u_j - u_i)`, bounded by one in magnitude.
/// Tends to `-½` as `u_j -> u_i`.
///
/// Outside the series band it is evaluated as
/// `(a - 1)/a · h(e) - ℓ(e) (1 - 1/(2a))` with `a = 1 + u_i`, `e = (u_j - u_i)/a`,
/// `ℓ(e) = log(1+e)/e` and `h(e) = (e - log(1+e))/e²`, which has no
/// subtraction of nearly equal terms.
pub fn flux_bracket(u_i: f64, u_j: f64, p: &SchemeParams) -> f64 {
    let a = 1.0 + u_i;
    let d = u_j - u_i;
    let e = d / a;
    if d.abs() <= p.series_switch * a {
        -0.5 + (2.0 * a + 1.0) / (12.0 * a) * e - (a + 1.0) / (12.0 * a) * e * e
    } else {
        let (ell, h) = log_ratios(e);
        (a - 1.0) / a * h - ell * (1.0 - 0.5 / a)
    }
}

/// `(log(1+e)/e, (e - log(1+e))/e²)` for `e > -1`, `e != 0`.
fn log_ratios(e: f64) -> (f64, f64) {
    if e.abs() < 0.1 {
        // Σ (-e)^k/(k+1) and Σ (-e)^k/(k+2); 30 terms reach 1e-30 at |e| = 0.1
        let (mut ell, mut h, mut pw) = (0.0, 0.0, 1.0);
        for k in 0..30 {
            ell += pw / (k + 1) as f64;
            h += pw / (k + 2) as f64;
            pw *= -e;
        }
        (ell, h)
    } else {
        let l = e.ln_1p();
        (l / e, (e - l) / (e * e))
    }
}

fn equal_band(u_i: f64, u_j: f64, p: &SchemeParams) -> bool {
    (u_j - u_i).abs() <= p.eps_equal * (2.0 + u_i + u_j)
}

fn check_v(v: &[f64], i: usize) -> Result<f64, SchemeError> {
    let value = v[i];
    if value > 0.0 {
        Ok(value)
    } else {
        Err(SchemeError::NonPositiveV { node: i, value })
    }
}

/// Stabilization weight `f_ij = χ (log v_j - log v_i) (u_i - τ_ji) / (u_j - u_i) k_ij`,
/// zero when `u_i` and `u_j` are equal.
pub fn f_ij(u: &[f64], v: &[f64], i: usize, j: usize, k_ij: f64, p: &SchemeParams) -> Result<f64, SchemeError> {
    let (vi, vj) = (check_v(v, i)?, check_v(v, j)?);
    Ok(f_from_logs(u[i], u[j], vi.ln(), vj.ln(), k_ij, p))
}

fn f_from_logs(u_i: f64, u_j: f64, lv_i: f64, lv_j: f64, k_ij: f64, p: &SchemeParams) -> f64 {
    if equal_band(u_i, u_j, p) {
        return 0.0;
    }
    p.chi * (lv_j - lv_i) * flux_bracket(u_i, u_j, p) * k_ij
}

/// Edge coefficient `β_ji = max{α_i f_ij, α_j f_ji, 0}` of the graph-Laplacian stabilizer.
pub fn beta_ji(
    u: &[f64],
    v: &[f64],
    i: usize,
    j: usize,
    k_ij: f64,
    alpha_i: f64,
    alpha_j: f64,
    p: &SchemeParams,
) -> Result<f64, SchemeError> {
    let fij = f_ij(u, v, i, j, k_ij, p)?;
    let fji = f_ij(u, v, j, i, k_ij, p)?;
    Ok(beta_from_f(fij, fji, alpha_i, alpha_j))
}

fn beta_from_f(fij: f64, fji: f64, alpha_i: f64, alpha_j: f64) -> f64 {
    (alpha_i * fij).max(alpha_j * fji).max(0.0)
}

/// Denominators below this count as zero in the shock detector.
const DETECTOR_FLOOR: f64 = 1e-300;

/// Shock detector at node `i`: `([Σ_j jump_ij]_+ / Σ_j (|s_ij| + |s_ij^sym|))^q`,
/// where `jump_ij = s_ij + s_ij^sym` sums the one-sided slopes towards `a_j`
/// and towards the symmetric node. Pairs without a symmetric node contribute
/// only `s_ij`. Equals one at a strict local minimum.
pub fn shock_detector_alpha(mesh: &Mesh, stencil: &SymmetricStencil, x: &[f64], i: usize, q: f64) -> f64 {
    let xi = x[i];
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, r, sym) in stencil.row(mesh, i) {
        let s = (x[j] - xi) / r;
        match sym {
            Some(sym) => {
                let s_sym = (sym.value(x) - xi) / sym.r_sym_len;
                num += s + s_sym;
                den += s.abs() + s_sym.abs();
            }
            None => {
                num += s;
                den += s.abs();
            }
        }
    }
    if den < DETECTOR_FLOOR {
        return 0.0;
    }
    let ratio = (num.max(0.0) / den).min(1.0);
    if ratio == 1.0 {
        1.0
    } else {
        ratio.powf(q)
    }
}

/// Detector values at every node.
pub fn shock_detector_all(mesh: &Mesh, stencil: &SymmetricStencil, x: &[f64], q: f64) -> Vec<f64> {
    (0..mesh.num_nodes()).map(|i| shock_detector_alpha(mesh, stencil, x, i, q)).collect()
}

fn log_v(v: &[f64]) -> Result<Vec<f64>, SchemeError> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| if x > 0.0 { Ok(x.ln()) } else { Err(SchemeError::NonPositiveV { node: i, value: x }) })
        .collect()
}

/// `β_ji` for every mesh edge, with the detector evaluated on `u`.
pub fn stabilizer_coefficients(
    state: &State,
    mesh: &Mesh,
    k: &StiffnessMatrix,
    stencil: &SymmetricStencil,
    p: &SchemeParams,
) -> Result<Vec<f64>, SchemeError> {
    let lv = log_v(&state.v)?;
    let alpha = shock_detector_all(mesh, stencil, &state.u, p.q_detector);
    let u = &state.u;
    Ok(k.edges()
        .iter()
        .zip(k.off_diagonal())
        .map(|(&(i, j), &kij)| {
            let fij = f_from_logs(u[i], u[j], lv[i], lv[j], kij, p);
            let fji = f_from_logs(u[j], u[i], lv[j], lv[i], kij, p);
            beta_from_f(fij, fji, alpha[i], alpha[j])
        })
        .collect())
}

/// `(B x, y) = Σ_edges β_e (x_j - x_i)(y_j - y_i)`.
pub fn stabilizer_form(edges: &[(usize, usize)], beta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    edges
        .iter()
        .zip(beta)
        .map(|(&(i, j), &b)| b * (x[j] - x[i]) * (y[j] - y[i]))
        .sum()
}

/// Right-hand side of the `u` equation, `u' = F^u(u, v)`.
pub fn rhs_u(
    state: &State,
    mesh: &Mesh,
    k: &StiffnessMatrix,
    m: &LumpedMass,
    stencil: &SymmetricStencil,
    p: &SchemeParams,
) -> Result<Vec<f64>, SchemeError> {
    let u = &state.u;
    let lv = log_v(&state.v)?;
    let alpha = shock_detector_all(mesh, stencil, u, p.q_detector);
    let mut out = vec![0.0; u.len()];
    for (&(i, j), &kij) in k.edges().iter().zip(k.off_diagonal()) {
        let du = u[j] - u[i];
        let dlv = lv[j] - lv[i];
        let diffusion = kij * du;
        let chemotaxis = p.chi * tau_ji(u[i], u[j], p) * dlv * kij;
        let fij = f_from_logs(u[i], u[j], lv[i], lv[j], kij, p);
        let fji = f_from_logs(u[j], u[i], lv[j], lv[i], kij, p);
        let stab = beta_from_f(fij, fji, alpha[i], alpha[j]) * du;
        let flux = -diffusion + chemotaxis + stab;
        out[i] += flux;
        out[j] -= flux;
    }
    for (o, &mi) in out.iter_mut().zip(m.values()) {
        *o /= mi;
    }
    Ok(out)
}

/// Right-hand side of the `v` equation, `v' = F^v(u, v)`.
pub fn rhs_v(state: &State, k: &StiffnessMatrix, m: &LumpedMass) -> Vec<f64> {
    let kv = k.apply(&state.v);
    kv.iter()
        .zip(m.values())
        .zip(state.u.iter().zip(&state.v))
        .map(|((kv, mi), (u, v))| -kv / mi - u * v)
        .collect()
}
