//! Greedy cleaning of Poisson-dusted halflines.
//!
//! `N^alpha` workers start at the common origin of `N` halflines, each carrying
//! rate-1 Poisson dust. Whenever its clock rings a worker jumps to the nearest
//! surviving particle under the star metric and removes it. The crate
//! simulates this system, the auxiliary single-halfline models, and solves the
//! escape integral equation used as a numerical reference.

pub mod dynamics;
pub mod env;
pub mod error;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod singleline;
pub mod stats;

pub use dynamics::{
    classify, run_trial, run_trial_with_events, settled_lines, JumpEvent, JumpKind, SimConfig,
    Simulation, Site, StopReason, TrialSummary, WorkerState,
};
pub use env::{DustLine, Env, LineId};
pub use error::{Error, Result};
pub use oracle::{solve_p1, EscapeTable, SolverConfig};
pub use singleline::{estimate_pk, run_single, Mover, Outcome, PkEstimate, SingleLineConfig};
pub use stats::{
    env_regularity, run_sweep, wilson_interval, wn_count, RegularityFrequencies, SweepCell,
    SweepSpec, WnCount,
};
