//! Parameter sweeps over `(N, alpha)` cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile, wilson_interval};
use crate::dynamics::{default_streak, run_trial, SimConfig, TrialSummary};
use crate::error::{invalid, Result};
use crate::rng::trial_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    pub trials: u64,
    pub root_seed: u64,
    /// Per-trial settings; `n`, `alpha` and `seed` are overwritten per cell.
    /// `horizon = None` with `default_horizon` set picks the default per cell.
    pub template: SimConfig,
    pub default_horizon: bool,
    /// Same for `quiescence_k`.
    pub default_streak: bool,
    pub m_values: Vec<usize>,
    /// Trial-level parallelism; results do not depend on it.
    pub jobs: usize,
}

impl SweepSpec {
    pub fn new(n_values: Vec<usize>, alpha_values: Vec<f64>, trials: u64, root_seed: u64) -> Self {
        Self {
            n_values,
            alpha_values,
            trials,
            root_seed,
            template: SimConfig::new(16, 0.5, 0),
            default_horizon: true,
            default_streak: true,
            m_values: vec![2],
            jobs: 1,
        }
    }

    /// Config for trial `index` of cell `(n, alpha)`.
    pub fn trial_config(&self, n: usize, alpha: f64, index: u64) -> SimConfig {
        let mut cfg = self.template.clone();
        cfg.n = n;
        cfg.alpha = alpha;
        cfg.seed = trial_seed(self.root_seed, n as u64, alpha, index);
        if self.default_horizon {
            let fresh = SimConfig::new(n, alpha, cfg.seed);
            cfg.horizon = fresh.horizon;
            cfg.rho_sample_interval = fresh.rho_sample_interval;
        }
        if self.default_streak {
            cfg.quiescence_k = default_streak(n);
        }
        cfg.m_max = cfg.m_max.max(self.m_values.iter().copied().max().unwrap_or(2));
        cfg
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.n_values.is_empty() || self.alpha_values.is_empty() {
            return Err(invalid("sweep needs at least one N and one alpha"));
        }
        if self.m_values.iter().any(|&m| m < 2) || self.m_values.is_empty() {
            return Err(invalid("m values must be at least 2"));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs must be at least 1"));
        }
        for &n in &self.n_values {
            for &a in &self.alpha_values {
                self.trial_config(n, a, 0).validate()?;
            }
        }
        Ok(())
    }
}

/// Per-`m` doubling statistics of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRow {
    pub m: usize,
    pub violations: u64,
    pub violation_freq: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: usize,
    pub alpha: f64,
    pub workers: usize,
    pub trials: u64,
    pub rows: Vec<MRow>,
    pub theta_p50: Option<f64>,
    pub theta_p95: Option<f64>,
    pub mean_skips: f64,
    pub censored: u64,
    pub censored_frac: f64,
    /// More than 20% of trials hit the event cap.
    pub unreliable: bool,
    /// Per sigma threshold: `(x, hits, mean hit time over hits)`.
    pub sigma: Vec<(f64, u64, Option<f64>)>,
    /// Workers (summed over trials) that reached a streak of `quiescence_k`.
    pub workers_reaching_k: u64,
    /// ... and of those, the ones that skipped again later.
    pub workers_skipping_after_k: u64,
    pub warnings: Vec<String>,
}

/// What a cell keeps from each trial.
#[derive(Debug, Clone)]
struct TrialRecord {
    max_mult: usize,
    theta: Option<f64>,
    skips: u64,
    censored: bool,
    sigma: Vec<Option<f64>>,
    reaching_k: u64,
    skipping_after_k: u64,
}

impl From<TrialSummary> for TrialRecord {
    fn from(s: TrialSummary) -> Self {
        Self {
            max_mult: s.max_multiplicity(),
            theta: s.theta_hat,
            skips: s.skip_count,
            censored: s.censored(),
            sigma: s.sigma_hits.iter().map(|h| h.time).collect(),
            reaching_k: s.workers_reaching_k as u64,
            skipping_after_k: s.workers_skipping_after_k as u64,
        }
    }
}

fn run_cell(spec: &SweepSpec, n: usize, alpha: f64) -> Result<SweepCell> {
    let configs: Vec<SimConfig> = (0..spec.trials)
        .map(|i| spec.trial_config(n, alpha, i))
        .collect();
    let records: Vec<TrialRecord> = configs
        .par_iter()
        .map(|c| run_trial(c).map(TrialRecord::from))
        .collect::<Result<_>>()?;

    let probe = &configs[0];
    let trials = spec.trials;
    let mut warnings = Vec::new();
    let workers = probe.workers();
    if (probe.quiescence_k as f64) * (workers as f64) > 0.1 * probe.max_events as f64 {
        warnings.push(format!(
            "N={n} alpha={alpha}: quiescence_k * W = {} exceeds 10% of max_events {}",
            probe.quiescence_k as u128 * workers as u128,
            probe.max_events
        ));
    }

    if let Some(h) = probe.horizon {
        if h < probe.quiescence_k as f64 {
            warnings.push(format!(
                "N={n} alpha={alpha}: horizon {h} is below quiescence_k {}, no worker can settle",
                probe.quiescence_k
            ));
        }
    }

    let rows = spec
        .m_values
        .iter()
        .map(|&m| {
            let violations = records.iter().filter(|r| r.max_mult >= m).count() as u64;
            let (lo, hi) = wilson_interval(violations, trials, 1.96);
            MRow {
                m,
                violations,
                violation_freq: violations as f64 / trials as f64,
                wilson_lo: lo,
                wilson_hi: hi,
            }
        })
        .collect();

    let mut thetas: Vec<f64> = records.iter().filter_map(|r| r.theta).collect();
    thetas.sort_by(f64::total_cmp);
    let censored = records.iter().filter(|r| r.censored).count() as u64;
    let censored_frac = censored as f64 / trials as f64;
    if censored_frac > 0.2 {
        warnings.push(format!(
            "N={n} alpha={alpha}: {:.1}% of trials censored, cell unreliable",
            100.0 * censored_frac
        ));
    }
    let sigma = probe
        .sigma_thresholds
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let hits: Vec<f64> = records.iter().filter_map(|r| r.sigma[j]).collect();
            let mean = (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64);
            (x, hits.len() as u64, mean)
        })
        .collect();

    Ok(SweepCell {
        n,
        alpha,
        workers,
        trials,
        rows,
        theta_p50: quantile(&thetas, 0.5),
        theta_p95: quantile(&thetas, 0.95),
        mean_skips: records.iter().map(|r| r.skips as f64).sum::<f64>() / trials as f64,
        censored,
        censored_frac,
        unreliable: censored_frac > 0.2,
        sigma,
        workers_reaching_k: records.iter().map(|r| r.reaching_k).sum(),
        workers_skipping_after_k: records.iter().map(|r| r.skipping_after_k).sum(),
        warnings,
    })
}

/// Runs every cell, `N` major and `alpha` minor. Output depends only on the
/// spec, not on `jobs` or scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut cells = Vec::new();
        for &n in &spec.n_values {
            for &alpha in &spec.alpha_values {
                cells.push(run_cell(spec, n, alpha)?);
            }
        }
        Ok(cells)
    })
}
