//! P1 assembly: stiffness couplings, lumped masses, the lumped inner product
//! and the nodal / averaged interpolation operators.

use crate::error::FemError;
use crate::mesh::{Mesh, Point};

/// Sparse symmetric P1 stiffness matrix, stored as one value per mesh edge
/// (same order as [`Mesh::edges`]) plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    edges: Vec<(usize, usize)>,
    off: Vec<f64>,
    diag: Vec<f64>,
}

impl StiffnessMatrix {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `k_ij` for each edge, parallel to [`StiffnessMatrix::edges`].
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn edge_value(&self, e: usize) -> f64 {
        self.off[e]
    }

    pub fn get(&self, mesh: &Mesh, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        mesh.edge_index(i, j).map_or(0.0, |e| self.off[e])
    }

    /// `(K x)_i = Σ_j k_ij (x_j - x_i)`, i.e. the product with the diagonal
    /// eliminated through the zero row sums. Constant vectors map to exact zeros.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (&(i, j), &k) in self.edges.iter().zip(&self.off) {
            let d = k * (x[j] - x[i]);
            out[i] += d;
            out[j] -= d;
        }
        out
    }

    /// `xᵀ K x = Σ_edges (-k_ij) (x_j - x_i)²`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .zip(&self.off)
            .map(|(&(i, j), &k)| -k * (x[j] - x[i]) * (x[j] - x[i]))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.off.iter().chain(&self.diag).fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// Constant P1 basis gradients of a triangle and its area.
pub fn basis_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        g[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Assembles `k_ij = (∇φ_j, ∇φ_i)`, accumulating triangle contributions in
/// triangle order.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<StiffnessMatrix, FemError> {
    let n = mesh.num_nodes();
    let mut off = vec![0.0; mesh.edges().len()];
    let mut diag = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = basis_gradients([mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])]);
        if !(area > 0.0) {
            return Err(FemError::Degenerate { triangle: t });
        }
        for a in 0..3 {
            diag[tri[a]] += area * (g[a][0] * g[a][0] + g[a][1] * g[a][1]);
            for b in (a + 1)..3 {
                let e = mesh.edge_index(tri[a], tri[b]).expect("triangle edge missing from mesh");
                off[e] += area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    Ok(StiffnessMatrix { edges: mesh.edges().to_vec(), off, diag })
}

/// Lumped masses `m_i = ∫ φ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass(Vec<f64>);

impl LumpedMass {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `Σ m_i x_i`, the exact integral of the P1 field `x`.
    pub fn integrate(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(m, x)| m * x).sum()
    }
}

impl std::ops::Index<usize> for LumpedMass {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn assemble_lumped_mass(mesh: &Mesh) -> LumpedMass {
    let mut m = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.triangle_area(t) / 3.0;
        for &k in tri {
            m[k] += third;
        }
    }
    LumpedMass(m)
}

/// `(x, y)_h = Σ_i m_i x_i y_i`.
pub fn inner_h(x: &[f64], y: &[f64], m: &LumpedMass) -> Result<f64, FemError> {
    if x.len() != y.len() || x.len() != m.0.len() {
        let right = if x.len() != y.len() { y.len() } else { m.0.len() };
        return Err(FemError::LengthMismatch { left: x.len(), right });
    }
    Ok(m.0.iter().zip(x).zip(y).map(|((m, x), y)| m * x * y).sum())
}

/// Nodal interpolation `i_h f`.
pub fn interp_nodal(f: impl Fn(Point) -> f64, mesh: &Mesh) -> Vec<f64> {
    mesh.nodes().iter().map(|&p| f(p)).collect()
}

/// For each node, the incident triangle with the smallest index.
pub fn default_association(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.num_nodes()).map(|i| mesh.node_triangles(i)[0]).collect()
}

/// Degree-5 seven-point rule on the reference triangle, as
/// `(barycentric coordinates, weight)` with weights summing to one.
pub fn quadrature_7pt() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Mean of `f` over triangle `t` by the seven-point rule. The weighted sum is
/// clamped to the range of its samples so constants come back bit-exact.
pub fn triangle_average(f: &impl Fn(Point) -> f64, mesh: &Mesh, t: usize) -> f64 {
    let tri = mesh.triangles()[t];
    let p = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for (l, w) in quadrature_7pt() {
        let x = l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0];
        let y = l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1];
        let fx = f([x, y]);
        sum += w * fx;
        lo = lo.min(fx);
        hi = hi.max(fx);
    }
    sum.clamp(lo, hi)
}

/// Average interpolation `j_h f`: node `i` takes the mean of `f` over the
/// triangle `assoc[i]`.
pub fn interp_average(f: impl Fn(Point) -> f64, mesh: &Mesh, assoc: &[usize]) -> Vec<f64> {
    assoc.iter().map(|&t| triangle_average(&f, mesh, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, check_weak_acuteness, Rect};

    fn unit_right_triangle() -> Mesh {
        Mesh::from_raw(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn reference_triangle_stiffness() {
        let m = unit_right_triangle();
        let k = assemble_stiffness(&m).unwrap();
        assert_eq!(k.diagonal(), &[1.0, 0.5, 0.5]);
        assert_eq!(k.get(&m, 0, 1), -0.5);
        assert_eq!(k.get(&m, 0, 2), -0.5);
        assert_eq!(k.get(&m, 1, 2), 0.0);
    }

    #[test]
    fn row_sums_vanish() {
        let r = Rect { x0: 0.0, x1: 3.0, y0: -1.0, y1: 1.0 };
        let m = build_structured_mesh(7, r).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let mut rows = k.diagonal().to_vec();
        for (&(i, j), &v) in k.edges().iter().zip(k.off_diagonal()) {
            rows[i] += v;
            rows[j] += v;
        }
        let scale = k.max_abs();
        assert!(rows.iter().all(|r| r.abs() <= 1e-12 * scale));
    }

    #[test]
    fn unit_square_couplings() {
        let m = build_structured_mesh(1, Rect::UNIT).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        for &v in k.off_diagonal() {
            assert!(v == -0.5 || v == 0.0, "{v}");
        }
        assert!(check_weak_acuteness(&k, 1e-12).pass);
    }

    #[test]
    fn lumped_masses() {
        let m = build_structured_mesh(1, Rect::UNIT).unwrap();
        let lm = assemble_lumped_mass(&m);
        // nodes 0 and 3 lie on the shared diagonal
        let sixth = 1.0 / 6.0;
        let third = 1.0 / 3.0;
        let expect = [third, sixth, sixth, third];
        for (a, b) in lm.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((lm.total() - 1.0).abs() < 1e-15);
        let lm = assemble_lumped_mass(&unit_right_triangle());
        assert!(lm.values().iter().all(|&v| (v - sixth).abs() < 1e-16));
    }

    #[test]
    fn inner_h_basics() {
        let m = build_structured_mesh(4, Rect::UNIT).unwrap();
        let lm = assemble_lumped_mass(&m);
        let ones = vec![1.0; m.num_nodes()];
        assert!((inner_h(&ones, &ones, &lm).unwrap() - 1.0).abs() < 1e-14);
        let mut e = vec![0.0; m.num_nodes()];
        e[7] = 1.0;
        assert_eq!(inner_h(&e, &e, &lm).unwrap(), lm[7]);
        assert!(matches!(inner_h(&ones, &ones[1..], &lm), Err(FemError::LengthMismatch { .. })));
    }

    #[test]
    fn inner_h_matches_per_triangle_vertex_rule() {
        let m = build_structured_mesh(1, Rect::UNIT).unwrap();
        let lm = assemble_lumped_mass(&m);
        let x = [0.3, -1.2, 2.5, 0.7];
        let y = [1.1, 0.4, -0.6, 3.0];
        let brute: f64 = m
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| m.triangle_area(t) / 3.0 * tri.iter().map(|&k| x[k] * y[k]).sum::<f64>())
            .sum();
        assert!((inner_h(&x, &y, &lm).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn nodal_interpolation() {
        let m = build_structured_mesh(2, Rect::UNIT).unwrap();
        let x = interp_nodal(|p| p[0] * p[0], &m);
        assert_eq!(&x[..3], &[0.0, 0.25, 1.0]);
        let c = interp_nodal(|_| 4.5, &m);
        assert!(c.iter().all(|&v| v == 4.5));
        let aff = interp_nodal(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0, &m);
        let q = [0.37, 0.81];
        assert!((m.eval_p1(&aff, q).unwrap() - (2.0 * q[0] - 3.0 * q[1] + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn quadrature_exact_to_degree_five() {
        // ∫_T x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let m = unit_right_triangle();
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let avg = triangle_average(&|p: Point| p[0].powi(a as i32) * p[1].powi(b as i32), &m, 0);
                let exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                assert!((avg - exact).abs() < 1e-15, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn average_interpolation() {
        let m = build_structured_mesh(3, Rect::UNIT).unwrap();
        let assoc = default_association(&m);
        let c = interp_average(|_| 0.8, &m, &assoc);
        assert!(c.iter().all(|&v| v == 0.8));
        let f = |p: Point| 0.1 + 0.9 * p[0] - 0.2 * p[1];
        let x = interp_average(f, &m, &assoc);
        for (i, &t) in assoc.iter().enumerate() {
            let tri = m.triangles()[t];
            assert!(tri.contains(&i));
            let cx = tri.iter().map(|&k| m.node(k)[0]).sum::<f64>() / 3.0;
            let cy = tri.iter().map(|&k| m.node(k)[1]).sum::<f64>() / 3.0;
            assert!((x[i] - f([cx, cy])).abs() < 1e-14);
        }
    }

    #[test]
    fn average_interpolation_of_indicator_is_bounded() {
        let m = build_structured_mesh(5, Rect::UNIT).unwrap();
        let assoc = default_association(&m);
        let f = |p: Point| if p[1] > 0.5 { 1.0 } else { 0.0 };
        let x = interp_average(f, &m, &assoc);
        assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // strictly positive floor keeps the nodal values strictly positive
        let g = |p: Point| 0.05 + f(p);
        let y = interp_average(g, &m, &assoc);
        assert!(y.iter().all(|&v| (0.05..=1.05).contains(&v)));
        // compare with a refined midpoint rule on triangles whose closure
        // does not touch the jump
        for (i, &t) in assoc.iter().enumerate() {
            let tri = m.triangles()[t];
            let ys: Vec<f64> = tri.iter().map(|&k| m.node(k)[1]).collect();
            let (lo, hi) = (ys.iter().cloned().fold(1.0, f64::min), ys.iter().cloned().fold(0.0, f64::max));
            if hi < 0.5 || lo > 0.5 {
                assert!((x[i] - f([0.0, lo])).abs() < 1e-15);
            }
        }
    }
}
