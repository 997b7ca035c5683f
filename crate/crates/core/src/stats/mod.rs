//! Trial orchestration and estimators.

pub mod regularity;
pub mod sweep;

pub use regularity::{env_regularity, wn_count, RegularityFrequencies, WnCount};
pub use sweep::{run_sweep, MRow, SweepCell, SweepSpec};

use serde::{Deserialize, Serialize};

use crate::dynamics::{SeededSimulation, SimConfig};
use crate::error::{invalid, Result};
use crate::rng::trial_seed;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n >= 1 && successes <= n, "need 0 <= successes <= n, n >= 1");
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Linear-interpolation quantile of an ascending slice (type 7).
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    let hi = sorted[(i + 1).min(sorted.len() - 1)];
    Some(sorted[i] + w * (hi - sorted[i]))
}

/// The critical spatial scale `sqrt(2 (1 - alpha) ln 2)`.
pub fn critical_scale(alpha: f64) -> f64 {
    (2.0 * (1.0 - alpha) * std::f64::consts::LN_2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoBoundResult {
    pub n: usize,
    pub alpha: f64,
    /// Observation time `N^(1-alpha) e^(-k sqrt(ln N))`.
    pub s0: f64,
    /// Threshold `e^(-(k - delta) sqrt(ln N))`.
    pub bound: f64,
    pub trials: u64,
    pub exceedances: u64,
    pub frequency: f64,
}

/// How often `rho` at time `s0` is at least the bound.
pub fn rho_bound_check(
    n: usize,
    alpha: f64,
    k: f64,
    delta: f64,
    trials: u64,
    root: u64,
) -> Result<RhoBoundResult> {
    if !(delta > 0.0 && delta < k) {
        return Err(invalid("need 0 < delta < k"));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let sq = (n as f64).ln().sqrt();
    let s0 = (n as f64).powf(1.0 - alpha) * (-k * sq).exp();
    let bound = (-(k - delta) * sq).exp();
    let mut exceedances = 0;
    for i in 0..trials {
        let mut cfg = SimConfig::new(n, alpha, trial_seed(root, n as u64, alpha, i));
        cfg.horizon = Some(s0);
        cfg.stop_on_quiescence = false;
        let mut sim = SeededSimulation::seeded(cfg)?;
        sim.run(None)?;
        if sim.rho() >= bound {
            exceedances += 1;
        }
    }
    Ok(RhoBoundResult {
        n,
        alpha,
        s0,
        bound,
        trials,
        exceedances,
        frequency: exceedances as f64 / trials as f64,
    })
}
