mod common;

use ksfem::diagnostics::snapshot;
use ksfem::fem::{assemble_lumped_mass, assemble_stiffness};
use ksfem::mesh::{build_structured_mesh, compute_symmetric_stencils, Mesh, Rect};
use ksfem::scheme::{flux_bracket, shock_detector_alpha, tau_ji, Discretization, SchemeParams, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small meshes: structured ones plus the n = 2 mesh with its centre moved.
fn small_meshes(rng: &mut ChaCha8Rng) -> Vec<Mesh> {
    let mut out = vec![
        build_structured_mesh(1, Rect::UNIT).unwrap(),
        build_structured_mesh(2, Rect::UNIT).unwrap(),
        build_structured_mesh(2, Rect { x0: -1.0, x1: 2.0, y0: 0.5, y1: 1.25 }).unwrap(),
    ];
    for _ in 0..5 {
        let base = build_structured_mesh(2, Rect::UNIT).unwrap();
        let mut nodes = base.nodes().to_vec();
        nodes[4][0] += rng.gen_range(-0.15..0.15);
        nodes[4][1] += rng.gen_range(-0.15..0.15);
        out.push(Mesh::from_raw(nodes, base.triangles().to_vec()).unwrap());
    }
    out
}

#[test]
fn stiffness_and_mass_match_dense_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for mesh in small_meshes(&mut rng) {
        assert!(mesh.num_triangles() <= 8);
        let k = assemble_stiffness(&mesh).unwrap();
        let dense = common::dense_stiffness(&mesh);
        let n = mesh.num_nodes();
        for i in 0..n {
            assert!((k.diagonal()[i] - dense[(i, i)]).abs() < 1e-14);
            for j in 0..n {
                if i != j {
                    assert!((k.get(&mesh, i, j) - dense[(i, j)]).abs() < 1e-14, "K[{i}][{j}]");
                }
            }
        }
        let m = assemble_lumped_mass(&mesh);
        for (a, b) in m.values().iter().zip(common::lumped_mass(&mesh)) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((m.total() - mesh.area()).abs() < 1e-14);
    }
}

#[test]
fn quadratic_forms_match_per_triangle_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for mesh in small_meshes(&mut rng) {
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_lumped_mass(&mesh);
        for _ in 0..20 {
            let u: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let v: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(0.1..1.0)).collect();
            let vmax = v.iter().copied().fold(0.0, f64::max);
            assert!((k.quad_form(&u) - common::grad_sq(&mesh, &u)).abs() < 1e-13);
            let rec = snapshot(&State::new(u.clone(), v.clone()), &k, &m, vmax);
            assert!((rec.grad_v_sq - common::grad_sq(&mesh, &v)).abs() < 1e-13);
            let w: Vec<f64> = v.iter().map(|x| -(x / vmax).ln()).collect();
            assert!((rec.grad_w_sq - common::grad_sq(&mesh, &w)).abs() < 1e-13);
            let z: Vec<f64> = u.iter().map(|x| x.ln_1p()).collect();
            assert!((rec.grad_z_sq - common::grad_sq(&mesh, &z)).abs() < 1e-13);
        }
    }
}

#[test]
fn stencils_match_ray_casting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut meshes = small_meshes(&mut rng);
    meshes.push(build_structured_mesh(5, Rect::UNIT).unwrap());
    for mesh in meshes {
        let st = compute_symmetric_stencils(&mesh);
        let x: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..mesh.num_nodes() {
            for (j, _, sym) in st.row(&mesh, i) {
                match (sym, common::symmetric_value(&mesh, &x, i, j)) {
                    (None, None) => {}
                    (Some(s), Some((val, len))) => {
                        assert!((s.value(&x) - val).abs() < 1e-12, "value at ({i}, {j})");
                        assert!((s.r_sym_len - len).abs() < 1e-12, "length at ({i}, {j})");
                    }
                    (a, b) => panic!("pair ({i}, {j}): stencil {a:?} vs reference {b:?}"),
                }
            }
            let q = 2.0;
            assert!((shock_detector_alpha(&mesh, &st, &x, i, q) - common::detector(&mesh, &x, i, q)).abs() < 1e-12);
        }
    }
}

#[test]
fn edge_formulas_match_reference() {
    let p = SchemeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100_000 {
        let ui = 10f64.powf(rng.gen_range(-4.0..3.0)) * rng.gen_range(0.0..1.0);
        let du = match rng.gen_range(0..3) {
            0 => 10f64.powf(rng.gen_range(-15.0..-6.0)),
            1 => 10f64.powf(rng.gen_range(-6.0..-2.0)),
            _ => rng.gen_range(0.0..10.0),
        } * if rng.gen() { 1.0 } else { -1.0 };
        let uj = (ui + du).max(0.0);
        if uj == ui {
            continue;
        }
        let t = tau_ji(ui, uj, &p);
        let t_ref = common::tau(ui, uj);
        assert!((t - t_ref).abs() <= 1e-14 * t_ref.max(1.0), "tau({ui}, {uj}) = {t} vs {t_ref}");
        let b = flux_bracket(ui, uj, &p);
        let b_ref = common::bracket(ui, uj);
        assert!((b - b_ref).abs() <= 1e-12, "bracket({ui}, {uj}) = {b} vs {b_ref}");
    }
}

#[test]
fn reference_bracket_agrees_with_closed_form_away_from_cancellation() {
    for (ui, uj) in [(0.0, 1.0), (2.0, 0.5), (0.3, 7.0), (5.0, 4.0)] {
        let closed = (ui - common::tau(ui, uj)) / (uj - ui);
        assert!((closed - common::bracket(ui, uj)).abs() < 1e-13);
    }
}

#[test]
fn rhs_matches_dense_forms_on_small_meshes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mesh in small_meshes(&mut rng) {
        for chi in [0.0, 1.0, 2.5] {
            let params = SchemeParams { chi, ..Default::default() };
            let disc = Discretization::new(mesh.clone(), params).unwrap();
            for _ in 0..20 {
                let u: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(0.0..3.0)).collect();
                let v: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s = State::new(u.clone(), v.clone());
                let (ou, ov) = common::rhs(&mesh, &u, &v, chi, params.q_detector, params.eps_equal);
                let fu = disc.rhs_u(&s).unwrap();
                let fv = disc.rhs_v(&s);
                for i in 0..mesh.num_nodes() {
                    let scale = 1.0 + ou[i].abs();
                    assert!((fu[i] - ou[i]).abs() < 1e-12 * scale, "F^u[{i}] {} vs {}", fu[i], ou[i]);
                    assert!((fv[i] - ov[i]).abs() < 1e-12 * (1.0 + ov[i].abs()));
                }
            }
        }
    }
}

#[test]
fn library_oracle_agrees_with_test_oracle() {
    let mesh = build_structured_mesh(2, Rect::UNIT).unwrap();
    let p = SchemeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let u: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..3.0)).collect();
        let v: Vec<f64> = (0..9).map(|_| rng.gen_range(0.05..1.0)).collect();
        let (a, _) = ksfem::oracle::rhs(&mesh, &State::new(u.clone(), v.clone()), &p);
        let (b, _) = common::rhs(&mesh, &u, &v, p.chi, p.q_detector, p.eps_equal);
        for i in 0..9 {
            assert!((a[i] - b[i]).abs() < 1e-12 * (1.0 + b[i].abs()));
        }
    }
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    let rule = common::gauss_legendre(24);
    assert!((rule.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-15);
    for k in 0..47 {
        let exact = 1.0 / (k as f64 + 1.0);
        let q: f64 = rule.iter().map(|(t, w)| w * t.powi(k)).sum();
        assert!((q - exact).abs() < 1e-15, "degree {k}");
    }
}
