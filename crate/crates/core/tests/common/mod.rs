//! Test-only reference evaluations. Nothing here calls the production
//! assembly, stencils or edge formulas: basis functions come from inverting
//! vertex matrices with nalgebra, bilinear forms are dense double sums, and the
//! edge quantities are rewritten in a cancellation-free form derived
//! separately from the production series.
#![allow(dead_code)]

use ksfem::mesh::Mesh;
use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};

pub type P = [f64; 2];

pub fn tri_points(mesh: &Mesh, t: usize) -> [P; 3] {
    let tri = mesh.triangles()[t];
    [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])]
}

/// Rows of the inverse vertex matrix: column `k` holds `(c0, cx, cy)` of `φ_k`.
pub fn basis(p: [P; 3]) -> (Matrix3<f64>, f64) {
    let v = Matrix3::new(1.0, p[0][0], p[0][1], 1.0, p[1][0], p[1][1], 1.0, p[2][0], p[2][1]);
    let area = 0.5 * v.determinant().abs();
    (v.try_inverse().expect("non-degenerate triangle"), area)
}

pub fn dense_stiffness(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.num_nodes();
    let mut k = DMatrix::zeros(n, n);
    for t in 0..mesh.num_triangles() {
        let (c, area) = basis(tri_points(mesh, t));
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            for b in 0..3 {
                k[(tri[a], tri[b])] += area * (c[(1, a)] * c[(1, b)] + c[(2, a)] * c[(2, b)]);
            }
        }
    }
    k
}

/// Row sums of the consistent mass matrix, `∫ φ_i`.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.num_triangles() {
        let (_, area) = basis(tri_points(mesh, t));
        for &i in &mesh.triangles()[t] {
            m[i] += area / 3.0;
        }
    }
    m
}

/// `∫ |∇ i_h x|²` triangle by triangle.
pub fn grad_sq(mesh: &Mesh, x: &[f64]) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            let (c, area) = basis(tri_points(mesh, t));
            let tri = mesh.triangles()[t];
            let vals = Vector3::new(x[tri[0]], x[tri[1]], x[tri[2]]);
            let coef = c * vals;
            area * (coef[1] * coef[1] + coef[2] * coef[2])
        })
        .sum()
}

/// Triangle containing `p` and the barycentric coordinates of `p` in it.
pub fn locate(mesh: &Mesh, p: P) -> Option<(usize, [f64; 3])> {
    (0..mesh.num_triangles()).find_map(|t| {
        let (c, _) = basis(tri_points(mesh, t));
        let lam = c.transpose() * Vector3::new(1.0, p[0], p[1]);
        lam.iter().all(|&l| l >= -1e-12).then(|| (t, [lam[0], lam[1], lam[2]]))
    })
}

/// Value of the P1 field at `p`, searching every triangle.
pub fn eval_p1(mesh: &Mesh, x: &[f64], p: P) -> Option<f64> {
    let (t, lam) = locate(mesh, p)?;
    let tri = mesh.triangles()[t];
    Some(lam[0] * x[tri[0]] + lam[1] * x[tri[1]] + lam[2] * x[tri[2]])
}

fn rule24() -> &'static [(f64, f64)] {
    static RULE: std::sync::OnceLock<Vec<(f64, f64)>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(24))
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect()
}

/// `ln(1+e)/e = ∫₀¹ dt/(1+et)`.
pub fn ell(e: f64) -> f64 {
    if e.abs() < 0.5 {
        rule24().iter().map(|(t, w)| w / (1.0 + e * t)).sum()
    } else {
        e.ln_1p() / e
    }
}

/// `(e - ln(1+e))/e² = ∫₀¹ t/(1+et) dt`.
pub fn h(e: f64) -> f64 {
    if e.abs() < 0.5 {
        rule24().iter().map(|(t, w)| w * t / (1.0 + e * t)).sum()
    } else {
        (e - e.ln_1p()) / (e * e)
    }
}

/// `τ = Λ · ab ln(b/a)/(b-a)` with `a = 1+u_i`, `b = 1+u_j`, written as
/// `Λ · b ℓ(e)` for `e = (b-a)/a`.
pub fn tau(ui: f64, uj: f64) -> f64 {
    let lambda = 0.5 * (ui / (1.0 + ui) + uj / (1.0 + uj));
    if ui == uj {
        return lambda * (1.0 + ui);
    }
    let a = 1.0 + ui;
    let e = (uj - ui) / a;
    lambda * (1.0 + uj) * ell(e)
}

/// `(u_i - τ)/(u_j - u_i) = (a-1)/a · h(e) - ℓ(e) (1 - 1/(2a))`.
pub fn bracket(ui: f64, uj: f64) -> f64 {
    let a = 1.0 + ui;
    let e = (uj - ui) / a;
    (a - 1.0) / a * h(e) - ell(e) * (1.0 - 0.5 / a)
}

/// Symmetric point of the pair `(i, j)` and its distance from `a_i`: the
/// far-side exit of the ray from `a_i` away from `a_j` through the incident
/// triangles.
pub fn symmetric_point(mesh: &Mesh, i: usize, j: usize) -> Option<(P, f64)> {
    let ai = Vector2::from(mesh.node(i));
    let dir = ai - Vector2::from(mesh.node(j));
    let mut best: Option<f64> = None;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        if !tri.contains(&i) {
            continue;
        }
        let o: Vec<usize> = tri.iter().copied().filter(|&k| k != i).collect();
        let p = Vector2::from(mesh.node(o[0]));
        let q = Vector2::from(mesh.node(o[1]));
        // ai + s dir = p + g (q - p)
        let m = Matrix2::from_columns(&[dir, p - q]);
        let Some(sol) = m.lu().solve(&(p - ai)) else { continue };
        let (s, g) = (sol[0], sol[1]);
        if s > 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&g) {
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    }
    let s = best?;
    let pt = ai + dir * s;
    Some(([pt[0], pt[1]], s * dir.norm()))
}

pub fn symmetric_value(mesh: &Mesh, x: &[f64], i: usize, j: usize) -> Option<(f64, f64)> {
    let (pt, len) = symmetric_point(mesh, i, j)?;
    Some((eval_p1(mesh, x, pt)?, len))
}

pub fn detector(mesh: &Mesh, x: &[f64], i: usize, q: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let ai = mesh.node(i);
    for &j in mesh.neighbors(i) {
        let aj = mesh.node(j);
        let s = (x[j] - x[i]) / (aj[0] - ai[0]).hypot(aj[1] - ai[1]);
        num += s;
        den += s.abs();
        if let Some((xs, rs)) = symmetric_value(mesh, x, i, j) {
            let ss = (xs - x[i]) / rs;
            num += ss;
            den += ss.abs();
        }
    }
    if den < 1e-300 {
        0.0
    } else {
        (num.max(0.0) / den).min(1.0).powf(q)
    }
}

/// Nodal right-hand sides from testing the semidiscrete forms with each basis
/// function, as dense sums over every pair `i < j`.
pub fn rhs(mesh: &Mesh, u: &[f64], v: &[f64], chi: f64, q: f64, eps_equal: f64) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.num_nodes();
    let k = dense_stiffness(mesh);
    let m = lumped_mass(mesh);
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let alpha: Vec<f64> = (0..n).map(|i| detector(mesh, u, i, q)).collect();
    let f = |i: usize, j: usize| {
        if (u[j] - u[i]).abs() <= eps_equal * (2.0 + u[i] + u[j]) {
            0.0
        } else {
            chi * (lv[j] - lv[i]) * bracket(u[i], u[j]) * k[(i, j)]
        }
    };
    let mut fu = vec![0.0; n];
    let mut fv = vec![0.0; n];
    for a in 0..n {
        let phi = |idx: usize| if idx == a { 1.0 } else { 0.0 };
        // (∇u, ∇φ_a)
        let diff_u: f64 = (0..n).map(|j| k[(j, a)] * u[j]).sum();
        let diff_v: f64 = (0..n).map(|j| k[(j, a)] * v[j]).sum();
        let (mut chem, mut stab) = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                // (u ∇ i_h log v, ∇φ)_* = -Σ τ δ(log v) δφ k
                chem += tau(u[i], u[j]) * (lv[j] - lv[i]) * (phi(i) - phi(j)) * k[(i, j)];
                let beta = (alpha[i] * f(i, j)).max(alpha[j] * f(j, i)).max(0.0);
                stab += beta * (u[j] - u[i]) * (phi(j) - phi(i));
            }
        }
        fu[a] = (-diff_u + chi * chem - stab) / m[a];
        fv[a] = -diff_v / m[a] - u[a] * v[a];
    }
    (fu, fv)
}
