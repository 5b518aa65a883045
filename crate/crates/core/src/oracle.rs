//! Brute-force reference evaluations for small meshes.
//!
//! Everything here is computed along a path independent of the production
//! assembly: basis functions come from inverting the vertex Vandermonde
//! matrix of each triangle, bilinear forms are dense double sums over all node
//! pairs, and symmetric-node values are obtained by ray casting plus point
//! location instead of the precomputed stencil weights. Cost is O(n²) or
//! worse, so keep meshes tiny.

use crate::mesh::{Mesh, Point};
use crate::scheme::{flux_bracket, tau_ji, SchemeParams, State};

/// Coefficients `(c0, cx, cy)` of the three affine basis functions of a
/// triangle, `φ_k(x, y) = c0 + cx x + cy y`, by Cramer's rule on
/// `[1 x y] c = e_k`.
pub fn affine_basis(p: [Point; 3]) -> [[f64; 3]; 3] {
    let m = [[1.0, p[0][0], p[0][1]], [1.0, p[1][0], p[1][1]], [1.0, p[2][0], p[2][1]]];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let det = det3(m);
    let mut out = [[0.0; 3]; 3];
    for (k, coeffs) in out.iter_mut().enumerate() {
        for col in 0..3 {
            let mut a = m;
            for (row, r) in a.iter_mut().enumerate() {
                r[col] = if row == k { 1.0 } else { 0.0 };
            }
            coeffs[col] = det3(a) / det;
        }
    }
    out
}

fn tri_points(mesh: &Mesh, t: usize) -> [Point; 3] {
    let tri = mesh.triangles()[t];
    [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])]
}

fn tri_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs()
}

/// Dense `K[i][j] = ∫ ∇φ_i · ∇φ_j`.
pub fn dense_stiffness(mesh: &Mesh) -> Vec<Vec<f64>> {
    let n = mesh.num_nodes();
    let mut k = vec![vec![0.0; n]; n];
    for t in 0..mesh.num_triangles() {
        let p = tri_points(mesh, t);
        let area = tri_area(p);
        let c = affine_basis(p);
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            for b in 0..3 {
                k[tri[a]][tri[b]] += area * (c[a][1] * c[b][1] + c[a][2] * c[b][2]);
            }
        }
    }
    k
}

/// Lumped mass via the vertex rule applied to `φ_i`, i.e. `∫ i_h(φ_i)`.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.num_triangles() {
        let area = tri_area(tri_points(mesh, t));
        for &k in &mesh.triangles()[t] {
            m[k] += area / 3.0;
        }
    }
    m
}

/// `∫ |∇ x_h|²` by per-triangle constant gradients.
pub fn grad_norm_sq(mesh: &Mesh, x: &[f64]) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            let p = tri_points(mesh, t);
            let c = affine_basis(p);
            let tri = mesh.triangles()[t];
            let gx: f64 = (0..3).map(|k| x[tri[k]] * c[k][1]).sum();
            let gy: f64 = (0..3).map(|k| x[tri[k]] * c[k][2]).sum();
            tri_area(p) * (gx * gx + gy * gy)
        })
        .sum()
}

/// Symmetric-node value of `x` for the pair `(i, j)` found by casting a ray
/// from `a_i` away from `a_j` to the far side of every incident triangle, then
/// evaluating the P1 field there. `None` when no incident triangle lies in
/// that direction.
pub fn symmetric_value(mesh: &Mesh, x: &[f64], i: usize, j: usize) -> Option<(f64, f64)> {
    let ai = mesh.node(i);
    let aj = mesh.node(j);
    let dir = [ai[0] - aj[0], ai[1] - aj[1]];
    let mut best: Option<f64> = None;
    for &t in mesh.node_triangles(i) {
        let tri = mesh.triangles()[t];
        let others: Vec<usize> = tri.iter().copied().filter(|&k| k != i).collect();
        let (p, q) = (mesh.node(others[0]), mesh.node(others[1]));
        // parametrize the ray a_i + s dir and the segment p + g (q - p)
        let e = [q[0] - p[0], q[1] - p[1]];
        let det = dir[0] * (-e[1]) - dir[1] * (-e[0]);
        if det.abs() < 1e-14 {
            continue;
        }
        let r = [p[0] - ai[0], p[1] - ai[1]];
        let s = (r[0] * (-e[1]) - r[1] * (-e[0])) / det;
        let g = (dir[0] * r[1] - dir[1] * r[0]) / det;
        if s > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&g) {
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    }
    let s = best?;
    let point = [ai[0] + s * dir[0], ai[1] + s * dir[1]];
    let value = mesh.eval_p1(x, point)?;
    let len = s * dir[0].hypot(dir[1]);
    Some((value, len))
}

/// Shock detector from its definition, with symmetric values from
/// [`symmetric_value`].
pub fn detector(mesh: &Mesh, x: &[f64], i: usize, q: f64) -> f64 {
    let mut jump = 0.0;
    let mut avg2 = 0.0;
    for &j in mesh.neighbors(i) {
        let aj = mesh.node(j);
        let ai = mesh.node(i);
        let r = (aj[0] - ai[0]).hypot(aj[1] - ai[1]);
        let s = (x[j] - x[i]) / r;
        jump += s;
        avg2 += s.abs();
        if let Some((xs, rs)) = symmetric_value(mesh, x, i, j) {
            let ss = (xs - x[i]) / rs;
            jump += ss;
            avg2 += ss.abs();
        }
    }
    if avg2 < 1e-300 {
        0.0
    } else {
        (jump.max(0.0) / avg2).min(1.0).powf(q)
    }
}

/// Right-hand sides obtained by testing the semidiscrete equations with each
/// basis function, evaluating
///
/// ```text
/// (∂_t u, φ)_h + (∇u, ∇φ) - χ (u ∇ i_h log v, ∇φ)_* + (B(u, v) u, φ) = 0
/// (∂_t v, φ)_h + (∇v, ∇φ) + (u v, φ)_h = 0
/// ```
///
/// as dense sums over every index pair `i < j`.
pub fn rhs(mesh: &Mesh, state: &State, p: &SchemeParams) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.num_nodes();
    let k = dense_stiffness(mesh);
    let m = lumped_mass(mesh);
    let (u, v) = (&state.u, &state.v);
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let alpha: Vec<f64> = (0..n).map(|i| detector(mesh, u, i, p.q_detector)).collect();

    let f = |i: usize, j: usize| -> f64 {
        if (u[j] - u[i]).abs() <= p.eps_equal * (2.0 + u[i] + u[j]) {
            0.0
        } else {
            let bracket = flux_bracket(u[i], u[j], p);
            p.chi * (lv[j] - lv[i]) * bracket * k[j][i]
        }
    };

    let mut fu = vec![0.0; n];
    let mut fv = vec![0.0; n];
    for a in 0..n {
        let phi = |idx: usize| if idx == a { 1.0 } else { 0.0 };
        let diff_u: f64 = (0..n).map(|j| u[j] * k[j][a]).sum();
        let diff_v: f64 = (0..n).map(|j| v[j] * k[j][a]).sum();
        let mut chem = 0.0;
        let mut stab = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let tau = tau_ji(u[i], u[j], p);
                chem += tau * (lv[j] - lv[i]) * (phi(i) - phi(j)) * k[j][i];
                let beta = (alpha[i] * f(i, j)).max(alpha[j] * f(j, i)).max(0.0);
                stab += beta * (u[j] - u[i]) * (phi(j) - phi(i));
            }
        }
        fu[a] = (-diff_u + p.chi * chem - stab) / m[a];
        fv[a] = (-diff_v - m[a] * u[a] * v[a]) / m[a];
    }
    (fu, fv)
}
