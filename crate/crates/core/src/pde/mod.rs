//! Discretized evolution of `tau u_tt - Delta u + a(x) u_t = lambda |u|^p`.

pub mod banded;
pub mod grid;
pub mod problem;
pub mod stepper;

pub use grid::{Geometry, Grid, GridSpec, RadialOrigin};
pub use problem::{Bump, Coefficients, Damping, EvolutionProblem, FieldState, InitialData};
pub use stepper::Stepper;
pub mod run;

pub use run::{blowup_rate, run_until_blowup, BlowupRecord, RunControls, RunOutcome, RunStatus, Snapshots, THRESHOLDS};
pub mod trace;

pub use trace::{functional_trace, initial_mass, phi_weights};
