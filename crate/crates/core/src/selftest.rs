//! Quick oracle suite run by `ksfem self-test`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::assemble_stiffness;
use crate::inequalities;
use crate::mesh::{build_structured_mesh, check_weak_acuteness, Mesh, Rect};
use crate::oracle;
use crate::scheme::{flux_bracket, shock_detector_all, tau_ji, Discretization, SchemeParams, State};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        rhs_oracle(&mut rng),
        detector_lemma(&mut rng),
        elementary_inequalities(&mut rng),
        acuteness_gate(),
    ]
}

fn rhs_oracle(rng: &mut ChaCha8Rng) -> CheckResult {
    let disc = Discretization::new(build_structured_mesh(1, Rect::UNIT).unwrap(), SchemeParams::default()).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let u: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s = State::new(u, v);
        let (ou, ov) = oracle::rhs(&disc.mesh, &s, &disc.params);
        let fu = disc.rhs_u(&s).unwrap();
        let fv = disc.rhs_v(&s);
        for k in 0..4 {
            worst = worst.max((fu[k] - ou[k]).abs()).max((fv[k] - ov[k]).abs());
        }
    }
    check("rhs matches brute-force forms", worst <= 1e-13, format!("max abs diff {worst:e}"))
}

fn detector_lemma(rng: &mut ChaCha8Rng) -> CheckResult {
    let disc = Discretization::new(build_structured_mesh(8, Rect::UNIT).unwrap(), SchemeParams::default()).unwrap();
    let (mesh, st) = (&disc.mesh, &disc.stencil);
    let n = mesh.num_nodes();
    let mut failures = 0usize;
    let mut minima = 0usize;
    for _ in 0..200 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha = shock_detector_all(mesh, st, &x, 2.0);
        for i in 0..n {
            if !(0.0..=1.0).contains(&alpha[i]) {
                failures += 1;
            }
            let strict_min = st.row(mesh, i).all(|(j, _, sym)| x[j] > x[i] && sym.is_none_or(|s| s.value(&x) > x[i]));
            if strict_min {
                minima += 1;
                if alpha[i] != 1.0 {
                    failures += 1;
                }
            }
        }
    }
    let constant = shock_detector_all(mesh, st, &vec![0.3; n], 2.0);
    failures += constant.iter().filter(|&&a| a != 0.0).count();
    check("detector bounds and minimum lemma", failures == 0, format!("{minima} minima, {failures} failures"))
}

fn elementary_inequalities(rng: &mut ChaCha8Rng) -> CheckResult {
    let p = SchemeParams::default();
    let mut failures = 0usize;
    for _ in 0..20_000 {
        let x = 10f64.powf(rng.gen_range(-6.0..6.0));
        let y = 10f64.powf(rng.gen_range(-6.0..6.0));
        let (l, r) = inequalities::log_sq(x, y);
        let (l2, r2) = inequalities::log_bridge(x, y);
        if l > r * (1.0 + 1e-12) + 1e-300 || l2 > r2 * (1.0 + 1e-12) {
            failures += 1;
        }
        let tau = tau_ji(x, y, &p);
        if !(tau >= 0.0 && tau <= inequalities::tau_upper_bound(x, y)) {
            failures += 1;
        }
        if x != y && flux_bracket(x, y, &p).abs() > 1.0 {
            failures += 1;
        }
    }
    check("elementary inequalities", failures == 0, format!("{failures} failures"))
}

fn acuteness_gate() -> CheckResult {
    let mut ok = (1..=16).all(|n| {
        let m = build_structured_mesh(n, Rect::UNIT).unwrap();
        check_weak_acuteness(&assemble_stiffness(&m).unwrap(), 1e-12).pass
    });
    ok &= !check_weak_acuteness(&assemble_stiffness(&obtuse_quad()).unwrap(), 1e-12).pass;
    check("weak acuteness gate", ok, String::new())
}

/// Two triangles sharing a diagonal with 100° angles opposite it.
pub fn obtuse_quad() -> Mesh {
    let y = 1.0 / 50f64.to_radians().tan();
    Mesh::from_raw(vec![[-1.0, 0.0], [0.0, -y], [1.0, 0.0], [0.0, y]], vec![[0, 1, 2], [0, 2, 3]]).unwrap()
}
