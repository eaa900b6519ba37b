//! Reward processes: rank-1 instances with Bernoulli, Gaussian or point-mass
//! coordinates, the spike family, and a misspecified low-rank Bernoulli model.
//!
//! Only the pulled coordinate pair is sampled on each step. For Bernoulli
//! coordinates the product of two independent draws is itself Bernoulli with
//! the product mean, so a single uniform draw is used.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax_lowest, Arm, NoiseModel, Rank1Instance};
use crate::rng::SimRng;

/// Parameters of the spike family: one elevated row and one elevated column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeSpec {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub p_u: f64,
    pub p_v: f64,
    pub delta_u: f64,
    pub delta_v: f64,
}

impl SpikeSpec {
    pub fn new(k: usize, l: usize, p_u: f64, p_v: f64, delta_u: f64, delta_v: f64) -> Self {
        Self {
            k,
            l,
            p_u,
            p_v,
            delta_u,
            delta_v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidParameter("spike needs K, L >= 1".into()));
        }
        for (p, d, side) in [(self.p_u, self.delta_u, "u"), (self.p_v, self.delta_v, "v")] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "p_{side} = {p} not in [0, 1]"
                )));
            }
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "delta_{side} = {d} must be > 0"
                )));
            }
            if p + d > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "p_{side} + delta_{side} = {} exceeds 1",
                    p + d
                )));
            }
        }
        Ok(())
    }
}

/// Builds the spike instance with Bernoulli noise; row 0 and column 0 are
/// the elevated ones.
pub fn make_spike(spec: &SpikeSpec) -> Result<Rank1Instance> {
    spec.validate()?;
    let side = |n: usize, p: f64, d: f64| {
        let mut means = vec![p; n];
        means[0] = p + d;
        means
    };
    Rank1Instance::new(
        side(spec.k, spec.p_u, spec.delta_u),
        side(spec.l, spec.p_v, spec.delta_v),
        NoiseModel::Bernoulli,
    )
}

/// Parameters of the synthetic low-rank environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowRankSpec {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub rank: usize,
    /// Ratio of the first to the second singular value.
    pub leading_weight: f64,
    pub seed: u64,
}

/// A Bernoulli reward matrix of known rank. Arm `(i, j)` pays 1 with
/// probability `M(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankMatrix {
    k: usize,
    l: usize,
    rank: usize,
    /// Row-major K x L.
    means: Vec<f64>,
    best: Arm,
    best_reward: f64,
}

impl LowRankMatrix {
    pub fn num_rows(&self) -> usize {
        self.k
    }

    pub fn num_cols(&self) -> usize {
        self.l
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mean(&self, arm: Arm) -> f64 {
        self.means[arm.row * self.l + arm.col]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn best_arm(&self) -> Arm {
        self.best
    }

    pub fn best_reward(&self) -> f64 {
        self.best_reward
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.l, &self.means)
    }

    /// For a rank-1 matrix, row and column means whose outer product
    /// reproduces it: `u(i) = M(i, j*) / sqrt(M*)`, `v(j) = M(i*, j) / sqrt(M*)`.
    pub fn as_rank1(&self) -> Option<Rank1Instance> {
        if self.rank != 1 || self.best_reward <= 0.0 {
            return None;
        }
        let scale = self.best_reward.sqrt();
        let u = (0..self.k)
            .map(|i| self.mean(Arm::new(i, self.best.col)) / scale)
            .map(|x| x.clamp(0.0, 1.0))
            .collect();
        let v = (0..self.l)
            .map(|j| self.mean(Arm::new(self.best.row, j)) / scale)
            .map(|x| x.clamp(0.0, 1.0))
            .collect();
        Rank1Instance::new(u, v, NoiseModel::Bernoulli).ok()
    }

    /// Writes the mean matrix as CSV, K lines of L comma-separated values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for row in self.means.chunks(self.l) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(file, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

const LOWRANK_ATTEMPTS: u64 = 64;
const LOWRANK_MAX_ENTRY: f64 = 0.95;
const LOWRANK_LEADING_FLOOR: f64 = 0.5;
/// Smallest `sigma_r / sigma_1` accepted as genuinely rank `r`.
const LOWRANK_RANK_TOL: f64 = 1e-6;

/// Generates a low-rank mean matrix deterministically from `spec.seed`.
///
/// The leading factor pair is drawn uniformly from `[0.5, 1]` and the other
/// `rank - 1` pairs from `[-1, 1]`. One SVD pass then fixes the spectrum so
/// that `sigma_1 / sigma_2 = leading_weight` (tail singular values keep their
/// relative sizes), and the matrix is scaled so its largest entry is 0.95.
/// Draws whose reshaped matrix has a negative entry are rejected and the
/// generator retries on the next stream; clipping would raise the rank.
pub fn make_lowrank(spec: &LowRankSpec) -> Result<LowRankMatrix> {
    let LowRankSpec {
        k,
        l,
        rank,
        leading_weight,
        seed,
    } = *spec;
    if k == 0 || l == 0 {
        return Err(Error::InvalidParameter("low-rank needs K, L >= 1".into()));
    }
    if rank == 0 || rank > k.min(l) {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} must be in [1, min(K, L)] = [1, {}]",
            k.min(l)
        )));
    }
    if !(leading_weight > 1.0 && leading_weight.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "leading_weight must exceed 1, got {leading_weight}"
        )));
    }

    for attempt in 0..LOWRANK_ATTEMPTS {
        let mut rng = crate::rng::stream(seed, attempt, crate::rng::StreamRole::Environment);
        if let Some(means) = draw_lowrank(k, l, rank, leading_weight, &mut rng) {
            let (flat_best, _) = argmax_lowest(&means);
            let best = Arm::new(flat_best / l, flat_best % l);
            return Ok(LowRankMatrix {
                k,
                l,
                rank,
                best_reward: means[flat_best],
                means,
                best,
            });
        }
    }
    Err(Error::InfeasibleSpectrum(format!(
        "no non-negative matrix with rank {rank} and weight {leading_weight} after {LOWRANK_ATTEMPTS} draws"
    )))
}

fn draw_lowrank(
    k: usize,
    l: usize,
    rank: usize,
    weight: f64,
    rng: &mut SimRng,
) -> Option<Vec<f64>> {
    let mut rows = DMatrix::<f64>::zeros(k, rank);
    let mut cols = DMatrix::<f64>::zeros(l, rank);
    for c in 0..rank {
        let lo = if c == 0 { LOWRANK_LEADING_FLOOR } else { -1.0 };
        for i in 0..k {
            rows[(i, c)] = rng.random_range(lo..1.0);
        }
        for j in 0..l {
            cols[(j, c)] = rng.random_range(lo..1.0);
        }
    }
    let raw = &rows * cols.transpose();
    let svd = raw.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&o| svd.singular_values[o]).collect();
    if rank > 1 && !(sv[rank - 1] > LOWRANK_RANK_TOL * sv[0]) {
        return None;
    }

    let mut reshaped = DMatrix::<f64>::zeros(k, l);
    for (pos, &o) in order.iter().take(rank).enumerate() {
        let target = if pos == 0 {
            sv[0]
        } else {
            sv[0] / weight * sv[pos] / sv[1]
        };
        reshaped += target * u.column(o) * v_t.row(o);
    }
    // singular vectors carry an arbitrary sign
    if reshaped.sum() < 0.0 {
        reshaped = -reshaped;
    }
    let max = reshaped.max();
    if !(max > 0.0) {
        return None;
    }
    reshaped *= LOWRANK_MAX_ENTRY / max;
    if reshaped.min() < 0.0 {
        return None;
    }

    let mut means = Vec::with_capacity(k * l);
    for i in 0..k {
        for j in 0..l {
            means.push(reshaped[(i, j)].min(1.0));
        }
    }
    Some(means)
}

/// A samplable reward process.
#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Rank1(Rank1Instance),
    LowRank(LowRankMatrix),
}

impl Environment {
    pub fn num_rows(&self) -> usize {
        match self {
            Environment::Rank1(inst) => inst.num_rows(),
            Environment::LowRank(m) => m.num_rows(),
        }
    }

    pub fn num_cols(&self) -> usize {
        match self {
            Environment::Rank1(inst) => inst.num_cols(),
            Environment::LowRank(m) => m.num_cols(),
        }
    }

    pub fn expected_reward(&self, arm: Arm) -> f64 {
        match self {
            Environment::Rank1(inst) => inst.expected_reward(arm),
            Environment::LowRank(m) => m.mean(arm),
        }
    }

    pub fn best_reward(&self) -> f64 {
        match self {
            Environment::Rank1(inst) => inst.best_reward(),
            Environment::LowRank(m) => m.best_reward(),
        }
    }

    pub fn pseudo_regret(&self, arm: Arm) -> f64 {
        self.best_reward() - self.expected_reward(arm)
    }

    /// Expected-regret table, row-major, for fast per-step accounting.
    pub fn regret_table(&self) -> Vec<f64> {
        let best = self.best_reward();
        let (k, l) = (self.num_rows(), self.num_cols());
        let mut out = Vec::with_capacity(k * l);
        for i in 0..k {
            for j in 0..l {
                out.push(best - self.expected_reward(Arm::new(i, j)));
            }
        }
        out
    }

    pub fn sample_reward(&self, arm: Arm, rng: &mut SimRng) -> f64 {
        match self {
            Environment::Rank1(inst) => match inst.noise() {
                NoiseModel::Bernoulli => bernoulli(inst.expected_reward(arm), rng),
                NoiseModel::PointMass => inst.expected_reward(arm),
                NoiseModel::Gaussian { sigma } => {
                    let x: f64 = rng.sample(StandardNormal);
                    let y: f64 = rng.sample(StandardNormal);
                    (inst.row_means()[arm.row] + sigma * x)
                        * (inst.col_means()[arm.col] + sigma * y)
                }
            },
            Environment::LowRank(m) => bernoulli(m.mean(arm), rng),
        }
    }
}

fn bernoulli(p: f64, rng: &mut SimRng) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}
