//! The deterministic single-line model with a fixed order of moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_instance(x: &[f64], d: &[f64], order: &[usize]) -> Result<()> {
    let pre = |m: &str| Err(Error::Precondition(m.to_string()));
    if x.is_empty() || x.iter().any(|&v| !(v > 0.0)) || x.windows(2).any(|w| w[0] > w[1]) {
        return pre("worker positions must be positive and nondecreasing");
    }
    if d.windows(2).any(|w| w[0] > w[1]) {
        return pre("particles must be nondecreasing");
    }
    if let Some(&d1) = d.first() {
        if !(d1 > x[x.len() - 1]) {
            return pre("first particle must lie beyond every worker");
        }
    }
    let k = x.len();
    if order.is_empty() || order.iter().any(|&w| w == 0 || w > k) || (1..=k).any(|w| !order.contains(&w)) {
        return pre("move order must cover workers 1..=k");
    }
    Ok(())
}

/// Plays the moves `order` (cyclically) on workers at `x` with particles at
/// `0` and `d`. Returns `true` (escape) if every particle in `d` is consumed
/// before the origin is; an equidistant origin is preferred.
pub fn deterministic_run(x: &[f64], d: &[f64], order: &[usize], max_steps: usize) -> Result<bool> {
    check_instance(x, d, order)?;
    let mut pos = x.to_vec();
    let mut next = 0;
    for step in 0..max_steps {
        let Some(&target) = d.get(next) else {
            return Ok(true);
        };
        let w = order[step % order.len()] - 1;
        let p = pos[w];
        if p <= target - p {
            return Ok(false);
        }
        pos[w] = target;
        next += 1;
    }
    if next == d.len() {
        return Ok(true);
    }
    Err(Error::StepBudget(max_steps))
}

/// An instance pair for one of the two monotonicity properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotonicityCase {
    /// Escape from `x` implies escape from `x_hat >= x` with the same dust.
    Componentwise {
        x: Vec<f64>,
        x_hat: Vec<f64>,
        d: Vec<f64>,
        order: Vec<usize>,
    },
    /// Escape after shifting everything right by `c` implies escape from the
    /// original instance.
    Shift {
        x: Vec<f64>,
        d: Vec<f64>,
        c: f64,
        order: Vec<usize>,
    },
}

/// Whether the implication of `case` holds on that instance.
pub fn check_monotonicity(case: &MonotonicityCase) -> Result<bool> {
    match case {
        MonotonicityCase::Componentwise { x, x_hat, d, order } => {
            if x.len() != x_hat.len() || x.iter().zip(x_hat).any(|(a, b)| b < a) {
                return Err(Error::Precondition("x_hat must dominate x componentwise".into()));
            }
            let steps = d.len() + 1;
            let base = deterministic_run(x, d, order, steps)?;
            let raised = deterministic_run(x_hat, d, order, steps)?;
            Ok(!base || raised)
        }
        MonotonicityCase::Shift { x, d, c, order } => {
            if !(*c > 0.0) {
                return Err(Error::Precondition("shift must be positive".into()));
            }
            let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
            let ds: Vec<f64> = d.iter().map(|v| v + c).collect();
            let steps = d.len() + 1;
            let shifted = deterministic_run(&xs, &ds, order, steps)?;
            let base = deterministic_run(x, d, order, steps)?;
            Ok(!shifted || base)
        }
    }
}
