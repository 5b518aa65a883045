use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ksfem::config::parse_config;
use ksfem::driver::{self, print_summary, resolve_out_dir, EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK};
use ksfem::fem::assemble_stiffness;
use ksfem::mesh::{check_weak_acuteness, compute_symmetric_stencils, load_mesh};
use ksfem::selftest;

#[derive(Parser)]
#[command(name = "ksfem", version, about = "Stabilized P1 solver for Keller-Segel chemotaxis with signal absorption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Solve { config: PathBuf },
    /// Validate a mesh file and report its quality.
    CheckMesh {
        mesh: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol_acute: f64,
    },
    /// Run the built-in oracle suite.
    SelfTest {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Solve { config } => solve(&config),
        Command::CheckMesh { mesh, tol_acute } => check_mesh(&mesh, tol_acute),
        Command::SelfTest { seed } => self_test(seed),
    };
    ExitCode::from(code as u8)
}

fn solve(path: &Path) -> i32 {
    let config = match parse_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let out_dir = resolve_out_dir(&config);
    match driver::run(&config, &out_dir) {
        Ok(summary) => {
            print_summary(&mut std::io::stdout().lock(), &summary).ok();
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn check_mesh(path: &Path, tol_acute: f64) -> i32 {
    let mesh = match load_mesh(path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let k = assemble_stiffness(&mesh).expect("loaded mesh has no degenerate triangles");
    let report = check_weak_acuteness(&k, tol_acute);
    let stencil = compute_symmetric_stencils(&mesh);
    let pairs: usize = (0..mesh.num_nodes()).map(|i| mesh.neighbors(i).len()).sum();
    println!("nodes {} triangles {} edges {}", mesh.num_nodes(), mesh.num_triangles(), mesh.edges().len());
    println!("h {:e} quasi-uniformity {:.6} area {:e}", mesh.h(), mesh.quasi_uniformity(), mesh.area());
    println!("symmetric nodes found for {} of {} ordered pairs", stencil.num_present(), pairs);
    for &(i, j, k) in report.violations.iter().take(20) {
        println!("obtuse pair ({i}, {j}): k = {k:e}");
    }
    if report.pass {
        println!("PASS weakly acute");
        EXIT_OK
    } else {
        println!("FAIL weakly acute: {} violations", report.violations.len());
        EXIT_INVARIANT
    }
}

fn self_test(seed: u64) -> i32 {
    let results = selftest::run_all(seed);
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}
