//! Regularity diagnostics of the initial dust environment.
//!
//! With `L = ln^2 N` and `Y = 8 L`:
//!
//! * `F0`: some line has `M(y) <= y/2` or `M(y) >= 2y` for a `y` in `[L, Y]`,
//!   where `M(y)` counts its points in `[0, y]`;
//! * `F1`: some line has at least `ln N` points in `[0, 2]`;
//! * `F2`: some line has a count in `(y, 5y/4)` outside `(y/8, y/2)` for a
//!   `y` in `[L, Y]`;
//! * `F3`: on the merged distances `t_1 < t_2 < ...`, some `i <= N / ln N` has
//!   `t_{i+W} - t_i` outside `(1/(2 N^(1-alpha)), 2/N^(1-alpha))`;
//! * `F4`: some `i` in `(sqrt N, N / ln N)` has `|N t_i / i - 1| >= 2 / ln N`.
//!
//! Dust on `[0, 2]` is drawn point by point. Further out each line gets
//! Poisson counts on geometric blocks; a line is expanded into exact points
//! (uniform within blocks given the counts) only when the block counts
//! cannot rule out an `F0` violation, or while `F2` is still undecided for
//! the sample.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::dynamics::worker_count;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, substream, ENV_STREAM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityFrequencies {
    pub n: usize,
    pub alpha: f64,
    pub trials: u64,
    pub counts: [u64; 5],
    pub freqs: [f64; 5],
}

/// Which of `F0..F4` occurred in one environment sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegularityFlags(pub [bool; 5]);

struct Layout {
    l: f64,
    y_max: f64,
    /// Block edges from 2 up to `1.25 * y_max`.
    edges: Vec<f64>,
    f1_threshold: f64,
}

impl Layout {
    fn new(n: usize) -> Self {
        let ln = (n as f64).ln();
        let l = ln * ln;
        let y_max = 8.0 * l;
        let top = 1.25 * y_max;
        let mut edges = vec![2.0, l];
        let mut e = l;
        while e < top {
            e = (1.25 * e).min(top);
            edges.push(e);
        }
        Self {
            l,
            y_max,
            edges,
            f1_threshold: ln,
        }
    }
}

/// Exact `F0` test on the ascending points of one line (covering `[0, Y]`).
pub fn f0_violated(points: &[f64], l: f64, y_max: f64) -> bool {
    let start = points.partition_point(|&t| t <= l);
    // On [t_j, t_{j+1}) the count is j; check both ends of each piece.
    let mut left = l;
    let mut count = start;
    loop {
        let right = points.get(count).copied().unwrap_or(f64::INFINITY).min(y_max);
        if count as f64 >= 2.0 * left || count as f64 <= right / 2.0 {
            return true;
        }
        if right >= y_max {
            return false;
        }
        left = right;
        count += 1;
    }
}

/// Exact `F2` test on the ascending points of one line (covering
/// `[0, 1.25 Y]`).
pub fn f2_violated(points: &[f64], l: f64, y_max: f64) -> bool {
    let mut cuts = vec![l, y_max];
    for &t in points {
        for c in [t, 0.8 * t] {
            if c > l && c < y_max {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let y = 0.5 * (a + b);
        let c = (points.partition_point(|&t| t < 1.25 * y) - points.partition_point(|&t| t <= y))
            as f64;
        c <= b / 8.0 || c >= a / 2.0
    })
}

/// Exact `F3` test on merged ascending distances.
pub fn f3_violated(merged: &[f64], n: usize, alpha: f64) -> bool {
    let w = worker_count(n, alpha);
    let scale = (n as f64).powf(1.0 - alpha);
    let (lo, hi) = (0.5 / scale, 2.0 / scale);
    let imax = ((n as f64) / (n as f64).ln()).floor() as usize;
    (1..=imax)
        .take_while(|&i| i - 1 + w < merged.len())
        .any(|i| {
            let gap = merged[i - 1 + w] - merged[i - 1];
            gap <= lo || gap >= hi
        })
}

/// Exact `F4` test on merged ascending distances.
pub fn f4_violated(merged: &[f64], n: usize) -> bool {
    let nf = n as f64;
    let ln = nf.ln();
    let lo = nf.sqrt();
    let hi = nf / ln;
    let first = lo.floor() as usize + 1;
    (first..)
        .take_while(|&i| (i as f64) < hi && i <= merged.len())
        .any(|i| (nf * merged[i - 1] / i as f64 - 1.0).abs() >= 2.0 / ln)
}

fn sample_flags(n: usize, alpha: f64, layout: &Layout, rng: &mut ChaCha8Rng) -> RegularityFlags {
    let mut flags = [false; 5];
    let nb = layout.edges.len() - 1;
    let poissons: Vec<Poisson<f64>> = layout
        .edges
        .windows(2)
        .map(|w| Poisson::new(w[1] - w[0]).expect("positive block length"))
        .collect();
    let mut merged = Vec::with_capacity(2 * n + 16);
    let mut near = Vec::new();
    let mut counts = vec![0u64; nb];
    let mut points = Vec::new();
    for _ in 0..n {
        near.clear();
        let mut p: f64 = rng.sample(Exp1);
        while p <= 2.0 {
            near.push(p);
            p += rng.sample::<f64, _>(Exp1);
        }
        merged.extend_from_slice(&near);
        if near.len() as f64 >= layout.f1_threshold {
            flags[1] = true;
        }
        for (c, d) in counts.iter_mut().zip(&poissons) {
            *c = d.sample(rng) as u64;
        }

        let mut need_exact = !flags[2];
        if !flags[0] && !need_exact {
            let mut cum = near.len() as u64;
            for (b, w) in layout.edges.windows(2).enumerate() {
                let (a, e) = (w[0], w[1]);
                let before = cum;
                cum += counts[b];
                if e <= layout.l || a >= layout.y_max {
                    continue;
                }
                let lo_y = a.max(layout.l);
                let hi_y = e.min(layout.y_max);
                if before as f64 <= hi_y / 2.0 || cum as f64 >= 2.0 * lo_y {
                    need_exact = true;
                    break;
                }
            }
        }
        if !need_exact {
            continue;
        }
        points.clear();
        points.extend_from_slice(&near);
        for (b, w) in layout.edges.windows(2).enumerate() {
            let start = points.len();
            for _ in 0..counts[b] {
                points.push(w[0] + (w[1] - w[0]) * rng.random::<f64>());
            }
            points[start..].sort_by(f64::total_cmp);
        }
        if !flags[0] && f0_violated(&points, layout.l, layout.y_max) {
            flags[0] = true;
        }
        if !flags[2] && f2_violated(&points, layout.l, layout.y_max) {
            flags[2] = true;
        }
    }
    merged.sort_by(f64::total_cmp);
    flags[3] = f3_violated(&merged, n, alpha);
    flags[4] = f4_violated(&merged, n);
    RegularityFlags(flags)
}

/// Seed of environment sample `index`.
pub fn regularity_seed(root: u64, n: usize, index: u64) -> u64 {
    derive_seed(&[root, 0x7265_6775, n as u64, index])
}

/// Flags of a single environment sample.
pub fn regularity_flags(n: usize, alpha: f64, seed: u64) -> RegularityFlags {
    let layout = Layout::new(n);
    sample_flags(n, alpha, &layout, &mut substream(seed, ENV_STREAM))
}

/// Frequencies of `F0..F4` over `trials` fresh environments.
pub fn env_regularity(n: usize, alpha: f64, trials: u64, root: u64) -> Result<RegularityFrequencies> {
    if n < 16 {
        return Err(invalid("environment diagnostics need N >= 16"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0,1)"));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let layout = Layout::new(n);
    let mut counts = [0u64; 5];
    for s in 0..trials {
        let mut rng = substream(regularity_seed(root, n, s), ENV_STREAM);
        let RegularityFlags(f) = sample_flags(n, alpha, &layout, &mut rng);
        for (c, hit) in counts.iter_mut().zip(f) {
            *c += hit as u64;
        }
    }
    let freqs = counts.map(|c| c as f64 / trials as f64);
    Ok(RegularityFrequencies {
        n,
        alpha,
        trials,
        counts,
        freqs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnCount {
    pub n: usize,
    /// Interval `(e^(-k1 sqrt(ln N)), e^(-k2 sqrt(ln N)))`.
    pub lower: f64,
    pub upper: f64,
    pub w_n: u64,
    /// `W_N / (N e^(-k2 sqrt(ln N)))`.
    pub ratio: f64,
    /// Exact binomial mean and standard deviation of `W_N`.
    pub mean: f64,
    pub sd: f64,
}

/// Counts lines whose first particle falls in the scaled interval.
pub fn wn_count(n: usize, k1: f64, k2: f64, seed: u64) -> Result<WnCount> {
    if !(k2 > 0.0 && k2 < k1) {
        return Err(invalid("need 0 < k2 < k1"));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let sq = (n as f64).ln().sqrt();
    let lower = (-k1 * sq).exp();
    let upper = (-k2 * sq).exp();
    let mut rng = substream(derive_seed(&[seed, 0x776e, n as u64]), ENV_STREAM);
    let w_n = (0..n)
        .filter(|_| {
            let first: f64 = rng.sample(Exp1);
            first > lower && first < upper
        })
        .count() as u64;
    let p = (-lower).exp() - (-upper).exp();
    let nf = n as f64;
    Ok(WnCount {
        n,
        lower,
        upper,
        w_n,
        ratio: w_n as f64 / (nf * upper),
        mean: nf * p,
        sd: (nf * p * (1.0 - p)).sqrt(),
    })
}
