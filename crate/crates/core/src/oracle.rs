//! Numerical ground truth for the single-worker escape probability.
//!
//! `P(x)`, the probability that one worker started at `x` on a halfline with
//! a particle at the origin and rate-1 dust on `(x, inf)` never removes the
//! origin particle, solves
//!
//! ```text
//! P(x) = int_0^x e^{-y} P(x + y) dy,      P(0) = 0,  P(inf) = 1.
//! ```
//!
//! The main table is the fixed point of this map on a uniform grid with
//! trapezoidal quadrature and the closure `P = 1` beyond `x_max`, iterated
//! from `P = 1` (an upper solution, so iterates decrease monotonically).
//! Below `refine_above` a geometric sub-grid carries `log P`, filled by a
//! single downward sweep of the same integral: at `x` it only needs values on
//! `[x, 2x]`.

use std::io::Write;

use crate::error::{invalid, Error, Result};

/// `-1 / (2 ln 2)`, the limit of `log P(x) / log^2 x` as `x -> 0`.
pub fn asymptotic_constant() -> f64 {
    -1.0 / (2.0 * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub x_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Start of the geometric sub-grid.
    pub refine_above: f64,
    /// Smallest node of the geometric sub-grid.
    pub refine_floor: f64,
    /// Sub-grid nodes per doubling of `x`.
    pub nodes_per_octave: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            x_max: 30.0,
            tol: 1e-10,
            max_iter: 10_000,
            refine_above: 0.05,
            refine_floor: 1e-6,
            nodes_per_octave: 512,
        }
    }
}

impl SolverConfig {
    pub fn new(h: f64, x_max: f64, tol: f64, max_iter: usize) -> Self {
        Self {
            h,
            x_max,
            tol,
            max_iter,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<usize> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(invalid("h must be positive"));
        }
        if !(self.x_max >= 10.0) || !self.x_max.is_finite() {
            return Err(invalid("x_max must be at least 10"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        let steps = self.x_max / self.h;
        let n = steps.round();
        if (steps - n).abs() > 1e-6 * n.max(1.0) {
            return Err(invalid("x_max must be a multiple of h"));
        }
        if !(self.refine_floor > 0.0 && self.refine_floor < self.refine_above)
            || self.refine_above * 2.0 > self.x_max
            || self.nodes_per_octave < 2
        {
            return Err(invalid("bad sub-grid parameters"));
        }
        Ok(n as usize)
    }
}

/// Discretized solution of the escape equation.
#[derive(Debug, Clone)]
pub struct EscapeTable {
    h: f64,
    x_max: f64,
    values: Vec<f64>,
    iterations_used: usize,
    residual: f64,
    residual_history: Vec<f64>,
    refine_above: f64,
    nodes_per_octave: usize,
    /// `log P` at `refine_above * 2^(-j / nodes_per_octave)`, `j = 0, 1, ...`
    log_fine: Vec<f64>,
}

/// Trapezoidal application of the integral map on the uniform grid.
struct Operator {
    n: usize,
    h: f64,
    /// `e^{-u h}` for `u = 0..=2n`.
    decay: Vec<f64>,
    /// Nodes at or below this index are summed directly, which keeps
    /// relative accuracy where `P` is tiny.
    direct_upto: usize,
}

impl Operator {
    fn new(n: usize, h: f64) -> Self {
        let decay = (0..=2 * n).map(|u| (-(u as f64) * h).exp()).collect();
        let direct_upto = ((1.0 / h).round() as usize).min(n);
        Self {
            n,
            h,
            decay,
            direct_upto,
        }
    }

    #[inline]
    fn value(p: &[f64], u: usize) -> f64 {
        p.get(u).copied().unwrap_or(1.0)
    }

    fn apply(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        let h = self.h;
        // suffix[u] = sum_{v >= u} e^{-x_v} P(x_v), P = 1 past x_max.
        let mut q = vec![0.0; 2 * n + 1];
        for (u, qu) in q.iter_mut().enumerate() {
            *qu = self.decay[u] * Self::value(p, u);
        }
        let mut suffix = vec![0.0; 2 * n + 2];
        for u in (0..=2 * n).rev() {
            suffix[u] = suffix[u + 1] + q[u];
        }
        out[0] = 0.0;
        for i in 1..=n {
            out[i] = if i <= self.direct_upto {
                let mut s = 0.5 * (Self::value(p, i) + self.decay[i] * Self::value(p, 2 * i));
                for j in 1..i {
                    s += self.decay[j] * Self::value(p, i + j);
                }
                h * s
            } else {
                let s = suffix[i] - suffix[2 * i + 1] - 0.5 * (q[i] + q[2 * i]);
                h * (i as f64 * h).exp() * s
            };
            // The trapezoid overshoots 1 by O(h^2) near x_max when P = 1.
            out[i] = out[i].min(1.0);
        }
    }
}

/// Solves for `P` by fixed-point iteration and builds the refined sub-grid.
pub fn solve_p1(config: &SolverConfig) -> Result<EscapeTable> {
    let n = config.validate()?;
    let op = Operator::new(n, config.h);
    let mut cur = vec![1.0; n + 1];
    cur[0] = 0.0;
    let mut next = vec![0.0; n + 1];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iter {
        op.apply(&cur, &mut next);
        iterations += 1;
        residual = 0.0;
        for (a, b) in cur.iter().zip(&next) {
            let d = (a - b).abs();
            if d > residual {
                residual = d;
            }
            // Iterates from the upper solution can only go down.
            debug_assert!(*b <= *a + 1e-12, "non-monotone iterate: {b} > {a}");
        }
        history.push(residual);
        std::mem::swap(&mut cur, &mut next);
        if residual < config.tol {
            break;
        }
    }
    if residual >= config.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            tol: config.tol,
        });
    }
    let mut table = EscapeTable {
        h: config.h,
        x_max: config.x_max,
        values: cur,
        iterations_used: iterations,
        residual,
        residual_history: history,
        refine_above: config.refine_above,
        nodes_per_octave: config.nodes_per_octave,
        log_fine: Vec::new(),
    };
    table.refine(config.refine_floor);
    Ok(table)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl EscapeTable {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// `P` at the uniform grid nodes `0, h, ..., x_max`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    /// Sup-norm of the last update.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    fn fine_node(&self, j: usize) -> f64 {
        self.refine_above * (-(j as f64) / self.nodes_per_octave as f64).exp2()
    }

    /// Nodes and `log P` of the geometric sub-grid, ascending in `x`.
    pub fn fine_grid(&self) -> Vec<(f64, f64)> {
        (0..self.log_fine.len())
            .rev()
            .map(|j| (self.fine_node(j), self.log_fine[j]))
            .collect()
    }

    /// `log P` from the uniform grid by log-linear interpolation.
    fn log_coarse(&self, x: f64) -> f64 {
        if x >= self.x_max {
            return 0.0;
        }
        let t = x / self.h;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let w = t - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        if a > 0.0 {
            (1.0 - w) * a.ln() + w * b.ln()
        } else {
            (w * b).ln()
        }
    }

    fn refine(&mut self, floor: f64) {
        let m = self.nodes_per_octave;
        let octaves = (self.refine_above / floor).log2();
        let count = (octaves * m as f64).ceil() as usize + 1;
        // Nodes j - m .. j - 1 lie above refine_above for j < m.
        let mut logp: Vec<f64> = Vec::with_capacity(count);
        let ln2 = std::f64::consts::LN_2;
        let mut terms = vec![0.0; m];
        for j in 0..count {
            let g = self.fine_node(j);
            if j == 0 {
                logp.push(self.log_coarse(g));
                continue;
            }
            // u = g 2^s, s in [0, 1], trapezoid in s with step 1/m.
            for (idx, mm) in (1..=m).enumerate() {
                let u = g * (mm as f64 / m as f64).exp2();
                let log_pu = if mm <= j {
                    logp[j - mm]
                } else {
                    self.log_coarse(u)
                };
                let weight = if mm == m { 0.5 } else { 1.0 } / m as f64;
                terms[idx] = weight.ln() - (u - g) + log_pu + (u * ln2).ln();
            }
            let self_weight = 0.5 / m as f64 * g * ln2;
            logp.push(log_sum_exp(&terms) - (1.0 - self_weight).ln());
        }
        self.log_fine = logp;
    }

    /// `log P(x)` for `x > 0`.
    pub fn log_eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Precondition(format!("negative x {x}")));
        }
        if x == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if x >= self.refine_above {
            return Ok(self.log_coarse(x).min(0.0));
        }
        let m = self.nodes_per_octave as f64;
        let j = (self.refine_above / x).log2() * m;
        let last = self.log_fine.len() - 1;
        let (j0, j1) = if j >= last as f64 {
            // Quadratic in log x through the three smallest nodes.
            (last - 2, last)
        } else {
            let j0 = j.floor() as usize;
            (j0, j0 + 1)
        };
        if j1 - j0 == 1 {
            let w = j - j0 as f64;
            return Ok((1.0 - w) * self.log_fine[j0] + w * self.log_fine[j1]);
        }
        let (a, b, c) = (
            self.log_fine[j0],
            self.log_fine[j0 + 1],
            self.log_fine[j1],
        );
        let t = j - j0 as f64;
        // Lagrange through t = 0, 1, 2.
        Ok(a * (t - 1.0) * (t - 2.0) / 2.0 - b * t * (t - 2.0) + c * t * (t - 1.0) / 2.0)
    }

    /// Interpolated `P(x)`: linear on the uniform grid, `1` beyond `x_max`,
    /// log-linear on the sub-grid below `refine_above`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Precondition(format!("negative x {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x > self.x_max {
            return Ok(1.0);
        }
        if x < self.refine_above {
            return Ok(self.log_eval(x)?.exp());
        }
        let t = x / self.h;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let w = t - i as f64;
        Ok((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }

    /// `log P(x) / log^2 x` for `0 < x < 1`.
    pub fn log_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Precondition(format!("log_ratio needs 0 < x < 1, got {x}")));
        }
        let lp = self.log_eval(x)?;
        if !lp.is_finite() {
            return Err(Error::Underflow(x));
        }
        let l = x.ln();
        Ok(lp / (l * l))
    }

    /// Largest `|T P - P|` over the uniform grid, where `T` is the discrete
    /// integral map the table was solved with.
    pub fn defect(&self) -> f64 {
        let n = self.values.len() - 1;
        let op = Operator::new(n, self.h);
        let mut out = vec![0.0; n + 1];
        op.apply(&self.values, &mut out);
        out.iter()
            .zip(&self.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rows `x,P`: sub-grid nodes below `refine_above`, then the uniform grid
    /// from `refine_above` on. Starts with `0,0`.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        let mut rows = vec![(0.0, 0.0)];
        for (x, lp) in self.fine_grid() {
            if x < self.refine_above {
                rows.push((x, lp.exp()));
            }
        }
        let start = (self.refine_above / self.h).ceil() as usize;
        for i in start..self.values.len() {
            rows.push((self.node(i), self.values[i]));
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x,P")?;
        for (x, p) in self.rows() {
            writeln!(out, "{x:?},{p:?}")?;
        }
        Ok(())
    }
}
