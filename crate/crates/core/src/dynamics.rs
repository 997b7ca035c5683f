//! Greedy workers on the star of halflines.
//!
//! `W = floor(N^alpha)` workers start at the origin. The superposition of
//! their rate-1 clocks is simulated as one rate-`W` clock whose rings are
//! assigned to a uniformly chosen worker. On a ring the worker jumps to the
//! nearest surviving particle in the star metric (`|x - y|` on the same
//! line, `x + y` across lines) and removes it.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::env::{Env, LineId};
use crate::error::{invalid, Error, Result};
use crate::rng::{substream, ExpGaps, GapSource, CLOCK_STREAM, ENV_STREAM};

/// `floor(N^alpha)`, guarded against `powf` landing just under an integer.
pub fn worker_count(n: usize, alpha: f64) -> usize {
    let w = (n as f64).powf(alpha);
    ((w + 1e-9).floor() as usize).max(1)
}

/// Default settlement streak `ceil(log^3 N)`, at least 1.
pub fn default_streak(n: usize) -> u64 {
    let l = (n as f64).ln();
    (l * l * l).ceil().max(1.0) as u64
}

/// Default hard horizon `8 N^(1 - alpha + 0.3)`.
pub fn default_horizon(n: usize, alpha: f64) -> f64 {
    8.0 * (n as f64).powf(1.0 - alpha + 0.3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    Advance,
    Skip,
}

impl JumpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpKind::Advance => "advance",
            JumpKind::Skip => "skip",
        }
    }
}

/// A point of the star: line `0` is the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub line: LineId,
    pub pos: f64,
}

impl Site {
    pub const ORIGIN: Site = Site { line: 0, pos: 0.0 };
}

/// Star-metric distance.
pub fn star_distance(a: Site, b: Site) -> f64 {
    if a.line == b.line || a.line == 0 || b.line == 0 {
        (a.pos - b.pos).abs()
    } else {
        a.pos + b.pos
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub worker_id: usize,
    pub from: Site,
    pub to: Site,
    pub kind: JumpKind,
}

/// Advance iff the jump starts at the origin or stays on its line.
pub fn classify(from: Site, to: Site) -> JumpKind {
    if from.line == 0 || from.line == to.line {
        JumpKind::Advance
    } else {
        JumpKind::Skip
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub worker_id: usize,
    pub line: LineId,
    pub position: f64,
    /// Consecutive advances since the last skip.
    pub streak: u64,
    pub last_skip_time: Option<f64>,
    pub jump_count: u64,
}

impl WorkerState {
    fn at_origin(worker_id: usize) -> Self {
        Self {
            worker_id,
            line: 0,
            position: 0.0,
            streak: 0,
            last_skip_time: None,
            jump_count: 0,
        }
    }

    pub fn site(&self) -> Site {
        Site {
            line: self.line,
            pos: self.position,
        }
    }
}

/// Where a worker would jump next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub line: LineId,
    pub pos: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Quiescence,
    Horizon,
    EventCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Hard time limit; `None` runs until quiescence or the event cap.
    pub horizon: Option<f64>,
    pub stop_on_quiescence: bool,
    /// Advances in a row after which a worker counts as settled.
    pub quiescence_k: u64,
    /// Quiescence also needs `rho` strictly above this floor.
    pub quiescence_rho: f64,
    pub sigma_thresholds: Vec<f64>,
    pub rho_sample_interval: f64,
    pub max_events: u64,
    /// Largest `m` for which `A_m` violations are reported.
    pub m_max: usize,
}

impl SimConfig {
    pub fn new(n: usize, alpha: f64, seed: u64) -> Self {
        let horizon = default_horizon(n.max(1), alpha);
        Self {
            n,
            alpha,
            seed,
            horizon: Some(horizon),
            stop_on_quiescence: true,
            quiescence_k: default_streak(n.max(1)),
            quiescence_rho: 1.0,
            sigma_thresholds: vec![0.1, 0.5, 1.0],
            rho_sample_interval: (horizon / 500.0).max(1e-6),
            max_events: 100_000_000,
            m_max: 4,
        }
    }

    pub fn workers(&self) -> usize {
        worker_count(self.n, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("horizon must be positive and finite"));
            }
        } else if !self.stop_on_quiescence {
            return Err(invalid("need a horizon or quiescence stopping"));
        }
        if self.quiescence_k == 0 {
            return Err(invalid("quiescence_k must be positive"));
        }
        if self.quiescence_rho.is_nan() {
            return Err(invalid("quiescence_rho is NaN"));
        }
        if self.max_events == 0 {
            return Err(invalid("max_events must be positive"));
        }
        if !(self.rho_sample_interval > 0.0) {
            return Err(invalid("rho_sample_interval must be positive"));
        }
        if self.sigma_thresholds.iter().any(|&x| !(x > 0.0)) {
            return Err(invalid("sigma thresholds must be positive"));
        }
        if self.sigma_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sigma thresholds must be strictly ascending"));
        }
        if self.m_max < 2 {
            return Err(invalid("m_max must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaHit {
    pub x: f64,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trackers {
    pub sigma: Vec<SigmaHit>,
    pub theta: Option<f64>,
    pub rho_samples: Vec<(f64, f64)>,
    pub skip_count: u64,
    pub advance_count: u64,
}

impl Trackers {
    fn new(thresholds: &[f64]) -> Self {
        Self {
            sigma: thresholds
                .iter()
                .map(|&x| SigmaHit { x, time: None })
                .collect(),
            theta: None,
            rho_samples: Vec::new(),
            skip_count: 0,
            advance_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerFinal {
    pub worker_id: usize,
    pub line: LineId,
    pub position: f64,
    pub streak: u64,
    pub settled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
    pub quiescence_k: u64,
    pub quiescence_rho: f64,
    pub horizon: Option<f64>,
    pub stop_reason: StopReason,
    pub final_time: f64,
    pub theta_hat: Option<f64>,
    pub sigma_hits: Vec<SigmaHit>,
    pub events: u64,
    pub skip_count: u64,
    pub advance_count: u64,
    pub final_workers: Vec<WorkerFinal>,
    pub settled_line_multiplicities: BTreeMap<LineId, usize>,
    /// Keyed by `m`: whether at least `m` settled workers share a line.
    pub a_m_violation: BTreeMap<usize, bool>,
    pub a_2: bool,
    pub settled_workers: usize,
    pub unsettled_workers: usize,
    /// Workers that at some point had a streak of at least `quiescence_k`.
    pub workers_reaching_k: usize,
    /// ... and of those, how many skipped afterwards.
    pub workers_skipping_after_k: usize,
    pub final_rho: f64,
    pub rho_samples: Vec<(f64, f64)>,
}

impl TrialSummary {
    pub fn censored(&self) -> bool {
        self.stop_reason == StopReason::EventCap
    }

    pub fn max_multiplicity(&self) -> usize {
        self.settled_line_multiplicities
            .values()
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Counts workers with streak at least `k` on each line.
pub fn settled_lines<'a>(
    workers: impl IntoIterator<Item = &'a WorkerState>,
    k: u64,
) -> BTreeMap<LineId, usize> {
    let mut out = BTreeMap::new();
    for w in workers {
        if w.line != 0 && w.streak >= k {
            *out.entry(w.line).or_insert(0) += 1;
        }
    }
    out
}

/// A single trial in progress.
pub struct Simulation<G: GapSource, R: Rng> {
    config: SimConfig,
    env: Env<G>,
    clock: R,
    workers: Vec<WorkerState>,
    time: f64,
    events: u64,
    trackers: Trackers,
    next_sample: f64,
    settled_now: usize,
    reached_k: Vec<bool>,
    skipped_after_k: Vec<bool>,
}

impl<G: GapSource, R: Rng> Simulation<G, R> {
    pub fn new(config: SimConfig, gaps: G, clock: R) -> Result<Self> {
        config.validate()?;
        let env = Env::new(config.n, gaps)?;
        let w = config.workers();
        let trackers = Trackers::new(&config.sigma_thresholds);
        Ok(Self {
            env,
            clock,
            workers: (1..=w).map(WorkerState::at_origin).collect(),
            time: 0.0,
            events: 0,
            trackers,
            next_sample: 0.0,
            settled_now: 0,
            reached_k: vec![false; w],
            skipped_after_k: vec![false; w],
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }

    pub fn trackers(&self) -> &Trackers {
        &self.trackers
    }

    pub fn env(&self) -> &Env<G> {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut Env<G> {
        &mut self.env
    }

    pub fn rho(&mut self) -> f64 {
        self.env.rho()
    }

    /// Nearest surviving particle for worker index `idx` (0-based).
    ///
    /// Ties prefer the worker's own line, then the smaller line id, then the
    /// smaller position.
    pub fn nearest_target(&mut self, idx: usize) -> Target {
        let Site { line, pos: x } = self.workers[idx].site();
        if line == 0 {
            let (l, p) = self.env.global_min_leftmost(None).expect("n >= 1");
            return Target {
                line: l,
                pos: p,
                distance: p,
            };
        }
        let s = self.env.successor(line, x);
        let mut best = Target {
            line,
            pos: s,
            distance: s - x,
        };
        if let Some(p) = self.env.predecessor(line, x) {
            // Predecessor has the smaller position, so it wins ties.
            if x - p <= best.distance {
                best = Target {
                    line,
                    pos: p,
                    distance: x - p,
                };
            }
        }
        if let Some((l, p)) = self.env.global_min_leftmost(Some(line)) {
            if x + p < best.distance {
                best = Target {
                    line: l,
                    pos: p,
                    distance: x + p,
                };
            }
        }
        best
    }

    fn sample_until(&mut self, t: f64) {
        if self.next_sample <= t {
            let rho = self.env.rho();
            while self.next_sample <= t {
                self.trackers.rho_samples.push((self.next_sample, rho));
                self.next_sample += self.config.rho_sample_interval;
            }
        }
    }

    /// Time of the next global ring, without applying it.
    fn draw_ring(&mut self) -> (f64, usize) {
        let w = self.workers.len();
        let dt: f64 = self.clock.sample::<f64, _>(Exp1) / w as f64;
        let idx = if w == 1 { 0 } else { self.clock.random_range(0..w) };
        (self.time + dt, idx)
    }

    fn apply(&mut self, time: f64, idx: usize) -> Result<JumpEvent> {
        self.sample_until(time);
        self.time = time;
        let target = self.nearest_target(idx);
        self.env.remove(target.line, target.pos)?;
        let k = self.config.quiescence_k;
        let worker = &mut self.workers[idx];
        let from = worker.site();
        let to = Site {
            line: target.line,
            pos: target.pos,
        };
        let kind = classify(from, to);
        worker.line = to.line;
        worker.position = to.pos;
        worker.jump_count += 1;
        match kind {
            JumpKind::Advance => {
                worker.streak += 1;
                if worker.streak == k {
                    self.settled_now += 1;
                    self.reached_k[idx] = true;
                }
                self.trackers.advance_count += 1;
            }
            JumpKind::Skip => {
                if worker.streak >= k {
                    self.settled_now -= 1;
                }
                if self.reached_k[idx] {
                    self.skipped_after_k[idx] = true;
                }
                worker.streak = 0;
                worker.last_skip_time = Some(time);
                self.trackers.skip_count += 1;
                self.trackers.theta = Some(time);
                for hit in self.trackers.sigma.iter_mut() {
                    if hit.time.is_none() && to.pos >= hit.x {
                        hit.time = Some(time);
                    }
                }
                let rho = self.env.rho();
                self.trackers.rho_samples.push((time, rho));
            }
        }
        self.events += 1;
        Ok(JumpEvent {
            time,
            worker_id: idx + 1,
            from,
            to,
            kind,
        })
    }

    /// One clock ring: advances the clock and performs the jump.
    pub fn step(&mut self) -> Result<JumpEvent> {
        let (t, idx) = self.draw_ring();
        self.apply(t, idx)
    }

    pub fn is_quiescent(&mut self) -> bool {
        self.settled_now == self.workers.len() && self.env.rho() > self.config.quiescence_rho
    }

    /// Runs until quiescence, the horizon or the event cap.
    pub fn run(&mut self, mut sink: Option<&mut dyn FnMut(&JumpEvent)>) -> Result<StopReason> {
        loop {
            if self.config.stop_on_quiescence && self.is_quiescent() {
                return Ok(StopReason::Quiescence);
            }
            if self.events >= self.config.max_events {
                return Ok(StopReason::EventCap);
            }
            let (t, idx) = self.draw_ring();
            if let Some(h) = self.config.horizon {
                if t >= h {
                    self.sample_until(h);
                    self.time = h;
                    return Ok(StopReason::Horizon);
                }
            }
            let ev = self.apply(t, idx)?;
            if let Some(f) = sink.as_mut() {
                f(&ev);
            }
        }
    }

    /// Asserts the per-worker invariants and, optionally, the full
    /// environment index. Quadratic in `W`; meant for tests.
    pub fn check_invariants(&mut self, with_env: bool) -> Result<()> {
        let mut jumps = 0;
        for w in &self.workers {
            if (w.line == 0) != (w.jump_count == 0)
                || (w.position == 0.0) != (w.line == 0)
                || w.streak > w.jump_count
            {
                return Err(Error::Invariant(format!("worker state {w:?}")));
            }
            jumps += w.jump_count;
        }
        if jumps != self.trackers.advance_count + self.trackers.skip_count {
            return Err(Error::Invariant("jump counts do not add up".into()));
        }
        for (i, a) in self.workers.iter().enumerate() {
            for b in &self.workers[i + 1..] {
                if a.line != 0 && a.line == b.line && a.position == b.position {
                    return Err(Error::Invariant(format!(
                        "workers {} and {} coincide",
                        a.worker_id, b.worker_id
                    )));
                }
            }
        }
        if with_env {
            self.env.check_consistency()?;
        }
        Ok(())
    }

    pub fn summary(&mut self, stop_reason: StopReason) -> TrialSummary {
        let k = self.config.quiescence_k;
        let settled = settled_lines(&self.workers, k);
        let settled_workers: usize = settled.values().sum();
        let max_mult = settled.values().copied().max().unwrap_or(0);
        let a_m_violation: BTreeMap<usize, bool> = (2..=self.config.m_max)
            .map(|m| (m, max_mult >= m))
            .collect();
        let final_rho = self.env.rho();
        let final_workers = self
            .workers
            .iter()
            .map(|w| WorkerFinal {
                worker_id: w.worker_id,
                line: w.line,
                position: w.position,
                streak: w.streak,
                settled: w.line != 0 && w.streak >= k,
            })
            .collect();
        let mut rho_samples = self.trackers.rho_samples.clone();
        rho_samples.push((self.time, final_rho));
        TrialSummary {
            n: self.config.n,
            alpha: self.config.alpha,
            seed: self.config.seed,
            workers: self.workers.len(),
            quiescence_k: k,
            quiescence_rho: self.config.quiescence_rho,
            horizon: self.config.horizon,
            stop_reason,
            final_time: self.time,
            theta_hat: self.trackers.theta,
            sigma_hits: self.trackers.sigma.clone(),
            events: self.events,
            skip_count: self.trackers.skip_count,
            advance_count: self.trackers.advance_count,
            final_workers,
            a_2: max_mult >= 2,
            settled_line_multiplicities: settled,
            a_m_violation,
            settled_workers,
            unsettled_workers: self.workers.len() - settled_workers,
            workers_reaching_k: self.reached_k.iter().filter(|&&b| b).count(),
            workers_skipping_after_k: self.skipped_after_k.iter().filter(|&&b| b).count(),
            final_rho,
            rho_samples,
        }
    }
}

/// Concrete simulation type driven by ChaCha substreams.
pub type SeededSimulation = Simulation<ExpGaps<rand_chacha::ChaCha8Rng>, rand_chacha::ChaCha8Rng>;

impl SeededSimulation {
    /// Dust from stream [`ENV_STREAM`], clocks from [`CLOCK_STREAM`] of
    /// `config.seed`.
    pub fn seeded(config: SimConfig) -> Result<Self> {
        let seed = config.seed;
        Simulation::new(
            config,
            ExpGaps(substream(seed, ENV_STREAM)),
            substream(seed, CLOCK_STREAM),
        )
    }
}

/// Runs one trial to completion.
pub fn run_trial(config: &SimConfig) -> Result<TrialSummary> {
    run_trial_with_events(config, None)
}

/// Like [`run_trial`], forwarding every jump to `sink`.
pub fn run_trial_with_events(
    config: &SimConfig,
    sink: Option<&mut dyn FnMut(&JumpEvent)>,
) -> Result<TrialSummary> {
    let mut sim = SeededSimulation::seeded(config.clone())?;
    let reason = sim.run(sink)?;
    Ok(sim.summary(reason))
}
