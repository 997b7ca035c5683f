//! Lazily revealed rate-1 Poisson dust on `N` halflines.
//!
//! Each line keeps only the particles revealed so far, in sorted order, up to
//! a frontier. Beyond the frontier the dust is still an untouched rate-1
//! Poisson process, so new particles are drawn on demand as
//! `frontier + Exp(1)` gaps. Every line always holds at least one surviving
//! revealed particle, which makes its leftmost particle known at all times.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};
use crate::rng::GapSource;

/// Index of a halfline, `1..=N`. Line `0` denotes the origin.
pub type LineId = usize;

/// Surviving dust on one halfline.
#[derive(Debug, Clone, PartialEq)]
pub struct DustLine {
    line_id: LineId,
    particles: Vec<f64>,
    frontier: f64,
    removed_count: u64,
}

impl DustLine {
    /// A line with nothing revealed yet.
    pub fn empty(line_id: LineId) -> Self {
        Self {
            line_id,
            particles: Vec::new(),
            frontier: 0.0,
            removed_count: 0,
        }
    }

    pub fn line_id(&self) -> LineId {
        self.line_id
    }

    /// Surviving revealed particles, ascending.
    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn frontier(&self) -> f64 {
        self.frontier
    }

    pub fn removed_count(&self) -> u64 {
        self.removed_count
    }

    pub fn leftmost(&self) -> Option<f64> {
        self.particles.first().copied()
    }

    /// Appends one particle one gap beyond the frontier.
    pub fn reveal_next<G: GapSource>(&mut self, gaps: &mut G) -> f64 {
        let p = self.frontier + gaps.next_gap();
        self.particles.push(p);
        self.frontier = p;
        p
    }

    /// Reveals dust until the frontier lies strictly beyond `up_to`; the
    /// first particle past `up_to` is kept. No-op if already revealed.
    pub fn extend<G: GapSource>(&mut self, up_to: f64, gaps: &mut G) {
        if self.frontier >= up_to {
            return;
        }
        while self.frontier <= up_to {
            self.reveal_next(gaps);
        }
    }

    /// Smallest surviving particle strictly greater than `x`.
    pub fn successor<G: GapSource>(&mut self, x: f64, gaps: &mut G) -> f64 {
        loop {
            let idx = self.particles.partition_point(|&p| p <= x);
            if let Some(&s) = self.particles.get(idx) {
                return s;
            }
            if self.frontier < x {
                self.extend(x, gaps);
            } else {
                self.reveal_next(gaps);
            }
        }
    }

    /// Smallest surviving particle strictly greater than `x` among the
    /// revealed ones, without revealing more.
    pub fn revealed_successor(&self, x: f64) -> Option<f64> {
        let idx = self.particles.partition_point(|&p| p <= x);
        self.particles.get(idx).copied()
    }

    /// Largest surviving particle strictly less than `x`.
    pub fn predecessor(&self, x: f64) -> Option<f64> {
        let idx = self.particles.partition_point(|&p| p < x);
        idx.checked_sub(1).map(|i| self.particles[i])
    }

    /// Deletes the particle at exactly `pos`. Returns whether it was the
    /// leftmost one.
    pub fn remove(&mut self, pos: f64) -> Result<bool> {
        let idx = self.particles.partition_point(|&p| p < pos);
        if self.particles.get(idx) != Some(&pos) {
            return Err(Error::Invariant(format!(
                "no particle at {pos} on line {}",
                self.line_id
            )));
        }
        self.particles.remove(idx);
        self.removed_count += 1;
        Ok(idx == 0)
    }

    /// Checks ordering and frontier bounds.
    pub fn check_invariants(&self) -> Result<()> {
        let sorted = self.particles.windows(2).all(|w| w[0] < w[1]);
        let positive = self.particles.iter().all(|&p| p > 0.0);
        let bounded = self.particles.last().is_none_or(|&p| p <= self.frontier);
        if sorted && positive && bounded {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "line {} inconsistent: {:?} frontier {}",
                self.line_id, self.particles, self.frontier
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    pos: f64,
    line: LineId,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pos
            .total_cmp(&other.pos)
            .then(self.line.cmp(&other.line))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All halflines plus a min-heap over their leftmost particles.
///
/// The heap may hold stale keys; they are discarded when they surface.
#[derive(Debug, Clone)]
pub struct Env<G> {
    lines: Vec<DustLine>,
    heap: BinaryHeap<Reverse<Key>>,
    gaps: G,
}

impl<G: GapSource> Env<G> {
    /// Reveals the first particle of each of `n` lines, in line order.
    pub fn new(n: usize, mut gaps: G) -> Result<Self> {
        if n == 0 {
            return Err(invalid("number of halflines must be at least 1"));
        }
        let mut lines = Vec::with_capacity(n);
        let mut heap = BinaryHeap::with_capacity(2 * n);
        for id in 1..=n {
            let mut line = DustLine::empty(id);
            let pos = line.reveal_next(&mut gaps);
            heap.push(Reverse(Key { pos, line: id }));
            lines.push(line);
        }
        Ok(Self { lines, heap, gaps })
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn line(&self, id: LineId) -> &DustLine {
        &self.lines[id - 1]
    }

    pub fn lines(&self) -> &[DustLine] {
        &self.lines
    }

    pub fn gaps_mut(&mut self) -> &mut G {
        &mut self.gaps
    }

    /// Leftmost surviving particle of `id`.
    pub fn leftmost(&self, id: LineId) -> f64 {
        self.lines[id - 1]
            .leftmost()
            .expect("every line keeps a revealed survivor")
    }

    pub fn extend(&mut self, id: LineId, up_to: f64) {
        let Self { lines, gaps, .. } = self;
        lines[id - 1].extend(up_to, gaps);
    }

    pub fn successor(&mut self, id: LineId, x: f64) -> f64 {
        let Self { lines, gaps, .. } = self;
        lines[id - 1].successor(x, gaps)
    }

    pub fn predecessor(&self, id: LineId, x: f64) -> Option<f64> {
        self.lines[id - 1].predecessor(x)
    }

    /// Removes the particle at `pos` on line `id`, keeping the line
    /// non-empty and the heap up to date.
    pub fn remove(&mut self, id: LineId, pos: f64) -> Result<()> {
        let Self { lines, heap, gaps } = self;
        let line = &mut lines[id - 1];
        let was_leftmost = line.remove(pos)?;
        if line.particles.is_empty() {
            line.reveal_next(gaps);
        }
        if was_leftmost {
            heap.push(Reverse(Key {
                pos: line.particles[0],
                line: id,
            }));
        }
        Ok(())
    }

    fn is_current(&self, key: &Key) -> bool {
        self.lines[key.line - 1].particles.first() == Some(&key.pos)
    }

    fn drop_stale(&mut self) {
        while let Some(Reverse(top)) = self.heap.peek() {
            if self.is_current(top) {
                break;
            }
            self.heap.pop();
        }
    }

    /// Line with the smallest leftmost particle, skipping `exclude`. Ties go
    /// to the smaller line id. Returns `None` only when every line is
    /// excluded (a single-line environment).
    pub fn global_min_leftmost(&mut self, exclude: Option<LineId>) -> Option<(LineId, f64)> {
        self.drop_stale();
        let Reverse(top) = *self.heap.peek()?;
        if Some(top.line) != exclude {
            return Some((top.line, top.pos));
        }
        let held = self.heap.pop().expect("peeked");
        self.drop_stale();
        let second = self.heap.peek().map(|Reverse(k)| (k.line, k.pos));
        self.heap.push(held);
        second
    }

    /// Distance from the origin to the nearest surviving particle.
    pub fn rho(&mut self) -> f64 {
        self.global_min_leftmost(None).expect("at least one line").1
    }

    /// Verifies every line and that the heap minimum agrees with a scan.
    pub fn check_consistency(&mut self) -> Result<()> {
        for line in &self.lines {
            line.check_invariants()?;
            if line.particles.is_empty() {
                return Err(Error::Invariant(format!("line {} empty", line.line_id)));
            }
        }
        let scan = self
            .lines
            .iter()
            .map(|l| (l.line_id, l.particles[0]))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let got = self.global_min_leftmost(None);
        if got != scan {
            return Err(Error::Invariant(format!("heap min {got:?} != scan {scan:?}")));
        }
        Ok(())
    }
}
