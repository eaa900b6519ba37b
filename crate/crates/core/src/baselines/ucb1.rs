//! UCB1 over all K * L arms.
//!
//! Each arm is pulled once in ascending row-major order; afterwards the arm
//! maximizing `mean + sqrt(2 ln t / T)` is chosen, where `t` is the number of
//! rewards observed so far and `T` the arm's own count. Ties go to the lowest
//! row-major index.

use crate::model::{Arm, Policy};
use crate::rng::SimRng;

/// Arms scanned per block when locating the maximum.
const CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct Ucb1 {
    k: usize,
    l: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    means: Vec<f64>,
    /// `1 / sqrt(T)` per arm, so an index costs one multiply-add.
    inv_sqrt_counts: Vec<f64>,
    observed: u64,
}

impl Ucb1 {
    pub fn new(k: usize, l: usize) -> Self {
        let arms = k * l;
        Self {
            k,
            l,
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            means: vec![0.0; arms],
            inv_sqrt_counts: vec![0.0; arms],
            observed: 0,
        }
    }

    pub fn count(&self, arm: Arm) -> u64 {
        self.counts[arm.row * self.l + arm.col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn mean(&self, arm: Arm) -> f64 {
        self.means[arm.row * self.l + arm.col]
    }

    /// Total rewards observed.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn index(&self, arm: Arm) -> f64 {
        let a = arm.row * self.l + arm.col;
        let bonus = (2.0 * (self.observed as f64).ln()).sqrt();
        self.means[a] + bonus * self.inv_sqrt_counts[a]
    }

    fn best_index(&self) -> usize {
        let bonus = (2.0 * (self.observed as f64).ln()).sqrt();
        let score = |a: usize| self.means[a] + bonus * self.inv_sqrt_counts[a];

        // Block maxima vectorize well; only the first block holding the
        // overall maximum is rescanned for its lowest index.
        let mut best_value = f64::NEG_INFINITY;
        let mut best_block = 0;
        for (b, (means, inv)) in self
            .means
            .chunks(CHUNK)
            .zip(self.inv_sqrt_counts.chunks(CHUNK))
            .enumerate()
        {
            let block_max = block_max(means, inv, bonus);
            if block_max > best_value {
                best_value = block_max;
                best_block = b;
            }
        }
        let start = best_block * CHUNK;
        let end = (start + CHUNK).min(self.means.len());
        (start..end)
            .find(|&a| score(a) == best_value)
            .unwrap_or(start)
    }
}

/// `max(means + bonus * inv)` over one block, kept in independent lanes so
/// the loop vectorizes. Max is exact, so lane order does not matter.
fn block_max(means: &[f64], inv: &[f64], bonus: f64) -> f64 {
    const LANES: usize = 8;
    let mut lanes = [f64::NEG_INFINITY; LANES];
    let body = means.len() / LANES * LANES;
    for (m, s) in means[..body]
        .chunks_exact(LANES)
        .zip(inv[..body].chunks_exact(LANES))
    {
        for i in 0..LANES {
            let x = m[i] + bonus * s[i];
            lanes[i] = if x > lanes[i] { x } else { lanes[i] };
        }
    }
    let mut best = lanes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (m, s) in means[body..].iter().zip(&inv[body..]) {
        let x = m + bonus * s;
        if x > best {
            best = x;
        }
    }
    best
}

impl Policy for Ucb1 {
    fn name(&self) -> String {
        "ucb1".into()
    }

    fn choose(&mut self, _t: u64, _rng: &mut SimRng) -> Arm {
        let arms = (self.k * self.l) as u64;
        let a = if self.observed < arms {
            self.observed as usize
        } else {
            self.best_index()
        };
        Arm::new(a / self.l, a % self.l)
    }

    fn observe(&mut self, arm: Arm, reward: f64) {
        let a = arm.row * self.l + arm.col;
        self.counts[a] += 1;
        self.sums[a] += reward;
        let n = self.counts[a] as f64;
        self.means[a] = self.sums[a] / n;
        self.inv_sqrt_counts[a] = 1.0 / n.sqrt();
        self.observed += 1;
    }
}
