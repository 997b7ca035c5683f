//! Shared fixtures for the benchmarks.

use dustsim_core::{SimConfig, SolverConfig};

/// A trial that reaches its horizon in a few milliseconds.
pub fn small_trial(n: usize, alpha: f64, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(n, alpha, seed);
    c.stop_on_quiescence = false;
    c.horizon = Some(20.0);
    c.rho_sample_interval = 1.0;
    c
}

/// Oracle grid coarse enough to solve in well under a second.
pub fn coarse_solver() -> SolverConfig {
    SolverConfig::new(1e-2, 20.0, 1e-8, 10_000)
}
