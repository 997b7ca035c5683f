//! `k-(delta)` blocking arrays.
//!
//! A point array on `(x, inf)` is blocking when some window `(y, 2y]` with
//! `delta <= y <= 1/2`, taken relative to `x`, holds fewer than `k` points.
//! The count in `(y, 2y]` is piecewise constant in `y` and only changes at
//! `y = q` and `y = q / 2` for shifted points `q`, so checking those
//! breakpoints and the midpoints between them decides the question exactly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, substream, ExpGaps, GapSource, ENV_STREAM};

fn window_count(shifted: &[f64], y: f64) -> usize {
    let hi = shifted.partition_point(|&q| q <= 2.0 * y);
    let lo = shifted.partition_point(|&q| q <= y);
    hi - lo
}

/// Whether sorted `points` are `k-(delta)` blocking relative to `x`.
///
/// With `delta >= 1/2` there is no admissible window and the answer is
/// `false`.
pub fn is_blocking(points: &[f64], x: f64, k: usize, delta: f64) -> bool {
    let (lo, hi) = (delta, 0.5);
    if !(lo < hi) {
        return false;
    }
    let shifted: Vec<f64> = points.iter().filter(|&&p| p > x).map(|&p| p - x).collect();
    let mut cuts = vec![lo, hi];
    for &q in &shifted {
        for c in [q, 0.5 * q] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut min = usize::MAX;
    for (i, &c) in cuts.iter().enumerate() {
        min = min.min(window_count(&shifted, c));
        if let Some(&d) = cuts.get(i + 1) {
            min = min.min(window_count(&shifted, 0.5 * (c + d)));
        }
        if min < k {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingEstimate {
    pub trials: u64,
    pub nonblocking: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

/// Fraction of fresh rate-1 Poisson arrays on `(0, 2]` that are not
/// `k-(delta)` blocking (reference point `x = 0`).
pub fn estimate_nonblocking_prob(
    k: usize,
    delta: f64,
    trials: u64,
    root: u64,
) -> Result<BlockingEstimate> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta must lie in (0,1)"));
    }
    let mut nonblocking = 0;
    let mut points = Vec::new();
    for i in 0..trials {
        let mut gaps = ExpGaps(substream(derive_seed(&[root, i]), ENV_STREAM));
        points.clear();
        let mut p = gaps.next_gap();
        while p <= 2.0 {
            points.push(p);
            p += gaps.next_gap();
        }
        if !is_blocking(&points, 0.0, k, delta) {
            nonblocking += 1;
        }
    }
    let p_hat = nonblocking as f64 / trials as f64;
    Ok(BlockingEstimate {
        trials,
        nonblocking,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
    })
}
