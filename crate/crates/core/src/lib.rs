//! Dynamic-domain semi-Lagrangian solver for the one-dimensional stochastic
//! Vlasov equation with transport noise
//!
//! ```text
//! df + (v f_x + E f_v) dt + sigma(x) f_v o dbeta = 0
//! ```
//!
//! on `[0, L) x R`. The velocity domain starts at `[-U0, U0]` and grows only
//! when the density near its boundary exceeds a threshold.

pub mod characteristics;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod experiments;
pub mod interp;
pub mod io;
pub mod noise;
pub mod solver;

pub use characteristics::{displacement_bound, inverse_step, jacobian_det, IntegratorKind};
pub use config::{load_config, FieldSpec, InitialSpec, ReconstructionKind, SimulationConfig};
pub use diagnostics::{reference_laws, DiagnosticsRecord, ReferenceLaws};
pub use error::{Error, Result};
pub use field::{solve_field, CaseOneField, CaseTwoField, SigmaModel, SigmaSpec};
pub use grid::{update_halfwidth, DensityField, PhaseGrid};
pub use noise::BrownianIncrements;
pub use solver::{choose_u0, run, run_nonadaptive, DomainMode, RunResult, Simulation};
