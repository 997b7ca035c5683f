//! Workers on a single halfline with a particle at the origin.
//!
//! All dust starts to the right of every worker, and a worker always jumps
//! either to the origin or to the nearest particle on its right. So the
//! surviving dust always lies beyond the rightmost worker and the state
//! reduces to the worker positions plus the position of the next particle.

pub mod blocking;
pub mod deterministic;

pub use blocking::{estimate_nonblocking_prob, is_blocking, BlockingEstimate};
pub use deterministic::{check_monotonicity, deterministic_run, MonotonicityCase};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, substream, ExpGaps, GapSource, CLOCK_STREAM, ENV_STREAM};

/// Which worker moves next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mover {
    /// Independent rate-1 clocks; the next mover is uniform.
    PoissonClocks,
    /// Cyclic repetition of a fixed sequence of 1-based worker ids.
    FixedOrder(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLineConfig {
    /// Initial positions, nondecreasing; `k` is their count.
    pub initial_positions: Vec<f64>,
    pub origin_particle: bool,
    pub mover: Mover,
    /// Escape is certified once every worker is beyond this distance and
    /// closer to the next particle than to the origin.
    pub barrier: f64,
    pub max_jumps: u64,
}

impl SingleLineConfig {
    /// `k` workers stacked at `x`.
    pub fn stacked(k: usize, x: f64) -> Self {
        Self {
            initial_positions: vec![x; k],
            origin_particle: true,
            mover: Mover::PoissonClocks,
            barrier: 30.0,
            max_jumps: 1_000_000,
        }
    }

    pub fn k(&self) -> usize {
        self.initial_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let xs = &self.initial_positions;
        if xs.is_empty() {
            return Err(invalid("need at least one worker"));
        }
        if xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("positions must be positive and finite"));
        }
        if xs.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("positions must be nondecreasing"));
        }
        if !(self.barrier > 0.0) {
            return Err(invalid("barrier must be positive"));
        }
        if self.max_jumps == 0 {
            return Err(invalid("max_jumps must be positive"));
        }
        if let Mover::FixedOrder(order) = &self.mover {
            let k = xs.len();
            if order.is_empty() || order.iter().any(|&w| w == 0 || w > k) {
                return Err(invalid("move order must use worker ids 1..=k"));
            }
            if (1..=k).any(|w| !order.contains(&w)) {
                return Err(invalid("every worker must appear in the move order"));
            }
        }
        Ok(())
    }

    /// Checks the spread condition `x_0 <= (2 - delta) x_{-k+1}`.
    pub fn within_ratio(&self, delta: f64) -> bool {
        let xs = &self.initial_positions;
        xs[xs.len() - 1] <= (2.0 - delta) * xs[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub origin_removed: bool,
    pub censored: bool,
    pub jumps_used: u64,
}

impl Outcome {
    pub fn escaped(&self) -> bool {
        !self.origin_removed && !self.censored
    }
}

/// Simulates one run. `gaps` supplies the dust, `clock` picks movers.
pub fn run_single<G: GapSource, R: Rng>(
    config: &SingleLineConfig,
    gaps: &mut G,
    clock: &mut R,
) -> Result<Outcome> {
    config.validate()?;
    let mut pos = config.initial_positions.clone();
    let k = pos.len();
    let mut next = pos[k - 1] + gaps.next_gap();
    let mut jumps = 0;
    let mut turn = 0usize;
    while jumps < config.max_jumps {
        let w = match &config.mover {
            Mover::PoissonClocks if k == 1 => 0,
            Mover::PoissonClocks => clock.random_range(0..k),
            Mover::FixedOrder(order) => {
                let w = order[turn % order.len()] - 1;
                turn += 1;
                w
            }
        };
        let p = pos[w];
        jumps += 1;
        // Equidistant origin wins.
        if config.origin_particle && p <= next - p {
            return Ok(Outcome {
                origin_removed: true,
                censored: false,
                jumps_used: jumps,
            });
        }
        pos[w] = next;
        next += gaps.next_gap();
        let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
        if min > config.barrier && next < 2.0 * min {
            return Ok(Outcome {
                origin_removed: false,
                censored: false,
                jumps_used: jumps,
            });
        }
    }
    Ok(Outcome {
        origin_removed: false,
        censored: true,
        jumps_used: jumps,
    })
}

/// Dust and clock streams for trial `index` under `root`. Shared across
/// starting points and worker counts so estimates are coupled.
pub fn trial_streams(root: u64, index: u64) -> (ExpGaps<ChaCha8Rng>, ChaCha8Rng) {
    let seed = derive_seed(&[root, index]);
    (ExpGaps(substream(seed, ENV_STREAM)), substream(seed, CLOCK_STREAM))
}

/// Monte Carlo escape estimate with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkEstimate {
    pub trials: u64,
    pub escapes: u64,
    pub removals: u64,
    pub censored: u64,
    /// Escapes over decided (uncensored) trials.
    pub p_hat: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
    /// Censored trials counted as failures.
    pub p_low: f64,
    /// Censored trials counted as escapes.
    pub p_high: f64,
}

impl PkEstimate {
    pub fn from_counts(trials: u64, escapes: u64, censored: u64) -> Self {
        let decided = trials - censored;
        let p_hat = if decided > 0 {
            escapes as f64 / decided as f64
        } else {
            0.0
        };
        let stderr = if decided > 0 {
            (p_hat * (1.0 - p_hat) / decided as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let t = trials.max(1) as f64;
        Self {
            trials,
            escapes,
            removals: decided - escapes,
            censored,
            p_hat,
            stderr,
            censored_fraction: censored as f64 / t,
            p_low: escapes as f64 / t,
            p_high: (escapes + censored) as f64 / t,
        }
    }
}

/// Runs `trials` coupled trials of `config`.
pub fn estimate_pk(config: &SingleLineConfig, trials: u64, root: u64) -> Result<PkEstimate> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    config.validate()?;
    let mut escapes = 0;
    let mut censored = 0;
    for i in 0..trials {
        let (mut gaps, mut clock) = trial_streams(root, i);
        let out = run_single(config, &mut gaps, &mut clock)?;
        escapes += out.escaped() as u64;
        censored += out.censored as u64;
    }
    Ok(PkEstimate::from_counts(trials, escapes, censored))
}

/// Escape probability conditional on the dust: for each of `envs` dust
/// environments, the fraction of `clock_trials` clock streams that escape.
pub fn conditional_escape_distribution(
    config: &SingleLineConfig,
    envs: u64,
    clock_trials: u64,
    root: u64,
) -> Result<Vec<f64>> {
    if envs == 0 || clock_trials == 0 {
        return Err(invalid("need at least one environment and one clock trial"));
    }
    config.validate()?;
    let mut out = Vec::with_capacity(envs as usize);
    for e in 0..envs {
        let env_seed = derive_seed(&[root, 0x656e76, e]);
        let mut escapes = 0;
        for c in 0..clock_trials {
            // Replaying the same gap stream reveals the same dust.
            let mut gaps = ExpGaps(substream(env_seed, ENV_STREAM));
            let mut clock = substream(derive_seed(&[env_seed, c]), CLOCK_STREAM);
            escapes += run_single(config, &mut gaps, &mut clock)?.escaped() as u64;
        }
        out.push(escapes as f64 / clock_trials as f64);
    }
    Ok(out)
}

/// `k` positions with the smallest at `x` and the rest drawn uniformly from
/// `[x, (2 - delta) x)`, sorted.
pub fn sample_spread_positions<R: Rng>(x: f64, k: usize, delta: f64, rng: &mut R) -> Vec<f64> {
    let mut xs: Vec<f64> = std::iter::once(x)
        .chain((1..k).map(|_| x * rng.random_range(1.0..(2.0 - delta))))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}
