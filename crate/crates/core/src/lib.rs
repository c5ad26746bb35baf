//! Multiscale simulation of slow–fast systems with a periodically forced
//! fast component: periodic micro solves, a macro AB2 integrator driven by
//! period-averaged reactions, a fully resolved reference and tooling for
//! convergence studies.

pub mod config;
pub mod error;
pub mod micro;
pub mod model;
pub mod multiscale;
pub mod report;
pub mod resolved;
pub mod study;

pub use error::{Error, Result};
pub use micro::{MicroGrid, MicroSolution, PeriodicMethod, PeriodicSolverConfig};
pub use model::{DecayLaw, FastState, FastSystem, Forcing, Mode, ScalarLaw, ScaleParams};
pub use multiscale::{run_multiscale, MacroGrid, MacroTrajectory, RunStatus};
pub use resolved::{run_resolved, ResolvedTrajectory};
