//! Triangulations of polygonal domains: generation, loading, validation,
//! node patches and the symmetric-node stencils used by the shock detector.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::MeshError;
use crate::fem::StiffnessMatrix;

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// A conforming triangulation with the derived connectivity the scheme needs.
///
/// Triangles are stored counter-clockwise. `edges` holds each unordered
/// adjacent pair once with `i < j`, sorted lexicographically.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    h: f64,
    min_edge: f64,
    edges: Vec<(usize, usize)>,
    /// node -> sorted neighbours (excluding the node itself)
    neighbors: Vec<Vec<usize>>,
    /// node -> edge index for each entry of `neighbors`
    neighbor_edges: Vec<Vec<usize>>,
    /// node -> incident triangles, ascending
    node_triangles: Vec<Vec<usize>>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.triangles == other.triangles
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Validates a raw node/triangle list and builds connectivity.
    ///
    /// Clockwise triangles are flipped. Fails on out-of-range indices,
    /// zero-area triangles, edges shared by more than two triangles, folded
    /// or duplicated triangles and nodes not referenced by any triangle.
    pub fn from_raw(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::NonConforming("mesh has no triangles".into()));
        }
        let n = nodes.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&k| k >= n) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index: bad, nodes: n });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Degenerate { triangle: t });
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            let scale = dist(nodes[tri[0]], nodes[tri[1]])
                .max(dist(nodes[tri[1]], nodes[tri[2]]))
                .max(dist(nodes[tri[0]], nodes[tri[2]]));
            if !(area.abs() > 1e-14 * scale * scale) {
                return Err(MeshError::Degenerate { triangle: t });
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }

        // edge -> (triangle, opposite vertex)
        let mut edge_map: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                edge_map.entry((a.min(b), a.max(b))).or_default().push((t, c));
            }
        }
        for (&(a, b), owners) in &edge_map {
            if owners.len() > 2 {
                return Err(MeshError::NonConforming(format!(
                    "edge ({a}, {b}) is shared by {} triangles",
                    owners.len()
                )));
            }
            if owners.len() == 2 {
                // the two opposite vertices must lie on opposite sides of the edge
                let s0 = signed_area(nodes[a], nodes[b], nodes[owners[0].1]);
                let s1 = signed_area(nodes[a], nodes[b], nodes[owners[1].1]);
                if s0 * s1 >= 0.0 {
                    return Err(MeshError::NonConforming(format!(
                        "triangles {} and {} overlap across edge ({a}, {b})",
                        owners[0].0, owners[1].0
                    )));
                }
            }
        }

        let mut edges: Vec<(usize, usize)> = edge_map.keys().copied().collect();
        edges.sort_unstable();

        let mut node_triangles = vec![Vec::new(); n];
        for (t, tri) in triangles.iter().enumerate() {
            for &k in tri {
                node_triangles[k].push(t);
            }
        }
        if let Some(orphan) = node_triangles.iter().position(|ts| ts.is_empty()) {
            return Err(MeshError::NonConforming(format!("node {orphan} belongs to no triangle")));
        }

        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
        let (neighbors, neighbor_edges): (Vec<Vec<usize>>, Vec<Vec<usize>>) = adjacency
            .into_iter()
            .map(|mut row| {
                row.sort_unstable();
                row.into_iter().unzip()
            })
            .unzip();

        let mut h: f64 = 0.0;
        let mut min_edge = f64::INFINITY;
        for &(i, j) in &edges {
            let l = dist(nodes[i], nodes[j]);
            h = h.max(l);
            min_edge = min_edge.min(l);
        }

        Ok(Mesh { nodes, triangles, h, min_edge, edges, neighbors, neighbor_edges, node_triangles })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Maximum triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// `min |r_ij| / h`, the quasi-uniformity witness.
    pub fn quasi_uniformity(&self) -> f64 {
        self.min_edge / self.h
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of node `i` in its patch, ascending, excluding `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Edge indices parallel to [`Mesh::neighbors`].
    pub fn neighbor_edges(&self, i: usize) -> &[usize] {
        &self.neighbor_edges[i]
    }

    pub fn node_triangles(&self, i: usize) -> &[usize] {
        &self.node_triangles[i]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let pos = self.neighbors[i].binary_search(&j).ok()?;
        Some(self.neighbor_edges[i][pos])
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let area = signed_area(pa, pb, pc);
        [
            signed_area(p, pb, pc) / area,
            signed_area(pa, p, pc) / area,
            signed_area(pa, pb, p) / area,
        ]
    }

    /// First triangle containing `p` (with relative slack `tol` in barycentric
    /// coordinates), by linear search.
    pub fn locate(&self, p: Point, tol: f64) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| self.barycentric(t, p).iter().all(|&l| l >= -tol))
    }

    /// Evaluates the P1 field with nodal values `x` at `p`.
    pub fn eval_p1(&self, x: &[f64], p: Point) -> Option<f64> {
        let t = self.locate(p, 1e-12)?;
        let lam = self.barycentric(t, p);
        let tri = self.triangles[t];
        Some((0..3).map(|k| lam[k] * x[tri[k]]).sum())
    }

    /// Serializes to the plain-text mesh format read by [`load_mesh`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes {}", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{} {}", p[0], p[1]).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        s
    }
}

/// Uniform mesh of `rect` with `n` cells per side, each cell split along the
/// diagonal from its lower-left to its upper-right corner.
///
/// Nodes are numbered row by row (lexicographic in `(y, x)`).
pub fn build_structured_mesh(n: usize, rect: Rect) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidParameter("n must be at least 1".into()));
    }
    if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
        return Err(MeshError::InvalidParameter(format!("empty rectangle {rect:?}")));
    }
    let hx = (rect.x1 - rect.x0) / n as f64;
    let hy = (rect.y1 - rect.y0) / n as f64;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for r in 0..=n {
        let y = if r == n { rect.y1 } else { rect.y0 + r as f64 * hy };
        for c in 0..=n {
            let x = if c == n { rect.x1 } else { rect.x0 + c as f64 * hx };
            nodes.push([x, y]);
        }
    }
    let id = |r: usize, c: usize| r * (n + 1) + c;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            let (sw, se, nw, ne) = (id(r, c), id(r, c + 1), id(r + 1, c), id(r + 1, c + 1));
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }
    Mesh::from_raw(nodes, triangles)
}

/// Parses the text mesh format:
///
/// ```text
/// # comment
/// nodes N
/// x y          (N lines)
/// triangles M
/// i j k        (M lines, 0-based)
/// ```
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    lines.reverse();

    fn take_header(lines: &mut Vec<(usize, &str)>, key: &str) -> Result<usize, MeshError> {
        let (ln, l) = lines
            .pop()
            .ok_or_else(|| MeshError::Parse { line: 0, msg: format!("missing '{key}' header") })?;
        let mut it = l.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => v
                .parse()
                .map_err(|_| MeshError::Parse { line: ln, msg: format!("bad count '{v}'") }),
            _ => Err(MeshError::Parse { line: ln, msg: format!("expected '{key} <count>'") }),
        }
    }

    fn take_row<T: std::str::FromStr, const N: usize>(
        lines: &mut Vec<(usize, &str)>,
        what: &str,
    ) -> Result<[T; N], MeshError> {
        let (ln, l) = lines
            .pop()
            .ok_or_else(|| MeshError::Parse { line: 0, msg: format!("unexpected end of file in {what}") })?;
        let vals: Vec<T> = l
            .split_whitespace()
            .map(|tok| tok.parse::<T>())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Parse { line: ln, msg: format!("malformed {what} line '{l}'") })?;
        vals.try_into().map_err(|_| MeshError::Parse {
            line: ln,
            msg: format!("{what} line needs {N} values: '{l}'"),
        })
    }

    let n_nodes = take_header(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let p: [f64; 2] = take_row(&mut lines, "node")?;
        nodes.push(p);
    }
    let n_tri = take_header(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(n_tri);
    for _ in 0..n_tri {
        triangles.push(take_row::<usize, 3>(&mut lines, "triangle")?);
    }
    if let Some(&(ln, l)) = lines.last() {
        return Err(MeshError::Parse { line: ln, msg: format!("trailing content '{l}'") });
    }
    Mesh::from_raw(nodes, triangles)
}

pub fn load_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    parse_mesh(&text)
}

/// Result of the weak-acuteness check.
#[derive(Debug, Clone, PartialEq)]
pub struct AcutenessReport {
    pub pass: bool,
    /// Offending pairs `(i, j, k_ij)` with `k_ij > tol`.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Weakly acute iff every off-diagonal stiffness coupling is `<= tol`.
pub fn check_weak_acuteness(stiffness: &StiffnessMatrix, tol: f64) -> AcutenessReport {
    let violations: Vec<_> = stiffness
        .edges()
        .iter()
        .zip(stiffness.off_diagonal())
        .filter(|(_, &k)| k > tol)
        .map(|(&(i, j), &k)| (i, j, k))
        .collect();
    AcutenessReport { pass: violations.is_empty(), violations }
}

/// Interpolation data for the symmetric node of an ordered pair `(i, j)`:
/// `x_sym = gamma * x[k1] + (1 - gamma) * x[k2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymNode {
    pub gamma: f64,
    pub k1: usize,
    pub k2: usize,
    /// `|a_sym - a_i|`
    pub r_sym_len: f64,
}

impl SymNode {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.gamma * x[self.k1] + (1.0 - self.gamma) * x[self.k2]
    }
}

/// Symmetric-node stencils for every ordered adjacent pair, laid out
/// parallel to `Mesh::neighbors(i)`.
#[derive(Debug, Clone)]
pub struct SymmetricStencil {
    r_len: Vec<Vec<f64>>,
    sym: Vec<Vec<Option<SymNode>>>,
}

impl SymmetricStencil {
    /// Entries for node `i`: `(j, |r_ij|, symmetric node)` in neighbour order.
    pub fn row<'a>(
        &'a self,
        mesh: &'a Mesh,
        i: usize,
    ) -> impl Iterator<Item = (usize, f64, Option<&'a SymNode>)> + 'a {
        mesh.neighbors(i)
            .iter()
            .zip(&self.r_len[i])
            .zip(&self.sym[i])
            .map(|((&j, &r), s)| (j, r, s.as_ref()))
    }

    pub fn get(&self, mesh: &Mesh, i: usize, j: usize) -> Option<(f64, Option<SymNode>)> {
        let pos = mesh.neighbors(i).binary_search(&j).ok()?;
        Some((self.r_len[i][pos], self.sym[i][pos]))
    }

    pub fn num_present(&self) -> usize {
        self.sym.iter().flatten().filter(|s| s.is_some()).count()
    }
}

const RAY_TOL: f64 = 1e-12;

/// Locates the symmetric node of each adjacent pair `(i, j)`: the exit point of
/// the ray from `a_i` in direction `a_i - a_j` through the boundary of the
/// patch of `a_i`. When the ray leaves the domain at `a_i` itself the entry is
/// `None`.
pub fn compute_symmetric_stencils(mesh: &Mesh) -> SymmetricStencil {
    let n = mesh.num_nodes();
    let mut r_len = Vec::with_capacity(n);
    let mut sym = Vec::with_capacity(n);
    for i in 0..n {
        let ai = mesh.node(i);
        let mut lens = Vec::new();
        let mut row = Vec::new();
        for &j in mesh.neighbors(i) {
            let aj = mesh.node(j);
            lens.push(dist(ai, aj));
            let dir = [ai[0] - aj[0], ai[1] - aj[1]];
            row.push(trace_ray(mesh, i, dir));
        }
        r_len.push(lens);
        sym.push(row);
    }
    SymmetricStencil { r_len, sym }
}

fn trace_ray(mesh: &Mesh, i: usize, dir: Point) -> Option<SymNode> {
    let ai = mesh.node(i);
    let dlen = dir[0].hypot(dir[1]);
    let mut best: Option<SymNode> = None;
    for &t in mesh.node_triangles(i) {
        let tri = mesh.triangles()[t];
        let pos = tri.iter().position(|&k| k == i).unwrap();
        let (p, q) = (tri[(pos + 1) % 3], tri[(pos + 2) % 3]);
        let (ap, aq) = (mesh.node(p), mesh.node(q));
        // solve ai + s*dir = aq + g*(ap - aq)
        let e = [ap[0] - aq[0], ap[1] - aq[1]];
        let rhs = [aq[0] - ai[0], aq[1] - ai[1]];
        let det = -dir[0] * e[1] + dir[1] * e[0];
        if det.abs() <= 1e-14 * dlen * e[0].hypot(e[1]) {
            continue;
        }
        let s = (-rhs[0] * e[1] + rhs[1] * e[0]) / det;
        let g = (dir[0] * rhs[1] - dir[1] * rhs[0]) / det;
        if s <= 0.0 || !(-RAY_TOL..=1.0 + RAY_TOL).contains(&g) {
            continue;
        }
        let g = g.clamp(0.0, 1.0);
        let cand = if g >= 1.0 - RAY_TOL {
            SymNode { gamma: 1.0, k1: p, k2: q, r_sym_len: dist(ai, ap) }
        } else if g <= RAY_TOL {
            SymNode { gamma: 1.0, k1: q, k2: p, r_sym_len: dist(ai, aq) }
        } else {
            let (k1, k2, gamma) = if p < q { (p, q, g) } else { (q, p, 1.0 - g) };
            SymNode { gamma, k1, k2, r_sym_len: s * dlen }
        };
        best = Some(match best {
            None => cand,
            // the ray hits a patch node shared by two segments; keep the
            // segment whose other endpoint has the smaller index
            Some(prev) if cand.gamma == 1.0 && prev.gamma == 1.0 && cand.k1 == prev.k1 => {
                if cand.k2 < prev.k2 {
                    cand
                } else {
                    prev
                }
            }
            Some(prev) => prev,
        });
    }
    best
}
