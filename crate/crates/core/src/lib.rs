//! Stabilized P1 finite elements for the Keller-Segel system with logarithmic
//! sensitivity and signal absorption,
//!
//! ```text
//! u_t = Δu - χ ∇·(u ∇log v),    v_t = Δv - u v,
//! ```
//!
//! with homogeneous Neumann boundary conditions. The spatial scheme keeps
//! `u >= 0`, `0 < v <= max v0` and conserves the mass of `u`; the time loop
//! integrates the nodal ODE system with a guarded explicit Euler method.

pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fem;
pub mod inequalities;
pub mod mesh;
pub mod oracle;
pub mod output;
pub mod scheme;
pub mod selftest;
pub mod timeloop;

pub use error::{Bound, ConfigError, FemError, MeshError, SchemeError, StepError};
pub use fem::{LumpedMass, StiffnessMatrix};
pub use mesh::{Mesh, Rect, SymmetricStencil};
pub use scheme::{SchemeParams, State};
