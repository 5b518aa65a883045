//! Per-step readings of the quantities bounded by the discrete energy laws,
//! their running time integrals, and the residuals of those laws.
//!
//! With `w = -log(v / Vmax)` and `z = log(1 + u)`, the monitored laws are
//!
//! ```text
//! ‖v(t)‖_h² + ∫ (‖∇v‖² + ‖u^½ v‖_h²)  <= ‖v(0)‖_h²
//! ‖w(t)‖_L¹ + ∫ ‖∇w‖²                 <= t ‖u(0)‖_L¹ + ‖w(0)‖_L¹
//! ∫ ‖∇z‖²                             <= 4 [(1 + t) ‖u(0)‖_L¹ + ‖w(0)‖_L¹]
//! ```

use crate::fem::{LumpedMass, StiffnessMatrix};
use crate::scheme::State;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub l1_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub l2h_v_sq: f64,
    pub grad_v_sq: f64,
    pub reac_sq: f64,
    pub w_l1: f64,
    pub grad_w_sq: f64,
    pub z_l1: f64,
    pub grad_z_sq: f64,
    pub int_grad_v_sq: f64,
    pub int_reac_sq: f64,
    pub int_grad_w_sq: f64,
    pub int_grad_z_sq: f64,
}

/// Column order of the diagnostics CSV.
pub const CSV_COLUMNS: [&str; 18] = [
    "t",
    "mass_u",
    "l1_v",
    "min_u",
    "max_u",
    "min_v",
    "max_v",
    "l2h_v_sq",
    "grad_v_sq",
    "reac_sq",
    "w_l1",
    "grad_w_sq",
    "z_l1",
    "grad_z_sq",
    "int_grad_v_sq",
    "int_reac_sq",
    "int_grad_w_sq",
    "int_grad_z_sq",
];

impl DiagnosticsRecord {
    pub fn csv_values(&self) -> [f64; 18] {
        [
            self.t,
            self.mass_u,
            self.l1_v,
            self.min_u,
            self.max_u,
            self.min_v,
            self.max_v,
            self.l2h_v_sq,
            self.grad_v_sq,
            self.reac_sq,
            self.w_l1,
            self.grad_w_sq,
            self.z_l1,
            self.grad_z_sq,
            self.int_grad_v_sq,
            self.int_reac_sq,
            self.int_grad_w_sq,
            self.int_grad_z_sq,
        ]
    }
}

/// `w_i = -log(v_i / Vmax)`.
pub fn w_field(v: &[f64], v_max: f64) -> Vec<f64> {
    v.iter().map(|&x| -(x / v_max).ln()).collect()
}

/// `z_i = log(1 + u_i)`.
pub fn z_field(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| x.ln_1p()).collect()
}

/// Instantaneous readings; the time integrals are left at zero.
pub fn snapshot(state: &State, k: &StiffnessMatrix, m: &LumpedMass, v_max: f64) -> DiagnosticsRecord {
    let (u, v) = (&state.u, &state.v);
    let w = w_field(v, v_max);
    let z = z_field(u);
    let fold_min = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
    let fold_max = |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DiagnosticsRecord {
        t: state.t,
        mass_u: m.integrate(u),
        l1_v: m.integrate(v),
        min_u: fold_min(u),
        max_u: fold_max(u),
        min_v: fold_min(v),
        max_v: fold_max(v),
        l2h_v_sq: m.values().iter().zip(v).map(|(m, v)| m * v * v).sum(),
        grad_v_sq: k.quad_form(v),
        reac_sq: m.values().iter().zip(u).zip(v).map(|((m, u), v)| m * u * v * v).sum(),
        w_l1: m.integrate(&w),
        grad_w_sq: k.quad_form(&w),
        z_l1: m.integrate(&z),
        grad_z_sq: k.quad_form(&z),
        ..Default::default()
    }
}

/// Accumulates records with trapezoidal time integrals.
#[derive(Debug, Clone, Default)]
pub struct Monitor {
    records: Vec<DiagnosticsRecord>,
}

impl Monitor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `rec`, filling its integrals from the previous record.
    pub fn push(&mut self, mut rec: DiagnosticsRecord) -> &DiagnosticsRecord {
        if let Some(prev) = self.records.last() {
            let half_dt = 0.5 * (rec.t - prev.t);
            rec.int_grad_v_sq = prev.int_grad_v_sq + half_dt * (prev.grad_v_sq + rec.grad_v_sq);
            rec.int_reac_sq = prev.int_reac_sq + half_dt * (prev.reac_sq + rec.reac_sq);
            rec.int_grad_w_sq = prev.int_grad_w_sq + half_dt * (prev.grad_w_sq + rec.grad_w_sq);
            rec.int_grad_z_sq = prev.int_grad_z_sq + half_dt * (prev.grad_z_sq + rec.grad_z_sq);
        }
        self.records.push(rec);
        self.records.last().unwrap()
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

fn ends(records: &[DiagnosticsRecord]) -> (&DiagnosticsRecord, &DiagnosticsRecord) {
    let first = records.first().expect("at least one diagnostics record");
    (first, records.last().unwrap())
}

/// `‖v(t)‖_h² + ∫(‖∇v‖² + ‖u^½ v‖_h²) - ‖v(0)‖_h²`, expected `<= tol`.
pub fn check_energy_v(records: &[DiagnosticsRecord]) -> f64 {
    let (first, last) = ends(records);
    last.l2h_v_sq + last.int_grad_v_sq + last.int_reac_sq - first.l2h_v_sq
}

/// `‖w(t)‖_L¹ + ∫‖∇w‖² - t ‖u(0)‖_L¹ - ‖w(0)‖_L¹`, expected `<= tol`.
pub fn check_energy_w(records: &[DiagnosticsRecord]) -> f64 {
    let (first, last) = ends(records);
    last.w_l1 + last.int_grad_w_sq - (last.t - first.t) * first.mass_u - first.w_l1
}

/// `∫‖∇ log(1+u)‖² - 4[(1 + t) ‖u(0)‖_L¹ + ‖w(0)‖_L¹]`, expected `<= 0`.
pub fn check_energy_z(records: &[DiagnosticsRecord]) -> f64 {
    let (first, last) = ends(records);
    last.int_grad_z_sq - 4.0 * ((1.0 + last.t - first.t) * first.mass_u + first.w_l1)
}

/// Slack allowed for the first-order time discretization in the v and w laws.
pub fn tol_energy(t: f64, dt_max: f64, mass_u0: f64) -> f64 {
    1e-6 + 10.0 * dt_max * (1.0 + t) * mass_u0
}
