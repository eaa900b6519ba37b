//! Problem instances, gap statistics and the policy interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// A (row, column) pair, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arm {
    pub row: usize,
    pub col: usize,
}

impl Arm {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Distribution of the per-coordinate row and column values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    /// Independent Bernoulli coordinates.
    Bernoulli,
    /// Independent `Normal(mean, sigma^2)` coordinates, not clipped.
    Gaussian { sigma: f64 },
    /// Deterministic coordinates equal to their means.
    #[serde(alias = "point_mass")]
    PointMass,
}

/// Ground truth of a rank-1 problem: row means, column means and noise.
///
/// Serialized as `{"K":..,"L":..,"u":[..],"v":[..],"noise":{"kind":..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Rank1Instance {
    row_means: Vec<f64>,
    col_means: Vec<f64>,
    noise: NoiseModel,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    noise: NoiseModel,
}

impl TryFrom<RawInstance> for Rank1Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.u.len() != raw.k {
            return Err(Error::InvalidInstance(format!(
                "K = {} but u has {} entries",
                raw.k,
                raw.u.len()
            )));
        }
        if raw.v.len() != raw.l {
            return Err(Error::InvalidInstance(format!(
                "L = {} but v has {} entries",
                raw.l,
                raw.v.len()
            )));
        }
        Rank1Instance::new(raw.u, raw.v, raw.noise)
    }
}

impl From<Rank1Instance> for RawInstance {
    fn from(inst: Rank1Instance) -> Self {
        RawInstance {
            k: inst.num_rows(),
            l: inst.num_cols(),
            u: inst.row_means,
            v: inst.col_means,
            noise: inst.noise,
        }
    }
}

impl Rank1Instance {
    pub fn new(row_means: Vec<f64>, col_means: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        if row_means.is_empty() || col_means.is_empty() {
            return Err(Error::InvalidInstance(
                "need at least one row and one column".into(),
            ));
        }
        let in_unit = |x: &f64| (0.0..=1.0).contains(x);
        if !row_means.iter().all(in_unit) {
            return Err(Error::InvalidInstance(
                "row means must lie in [0, 1]".into(),
            ));
        }
        if !col_means.iter().all(in_unit) {
            return Err(Error::InvalidInstance(
                "column means must lie in [0, 1]".into(),
            ));
        }
        if let NoiseModel::Gaussian { sigma } = noise {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
        }
        Ok(Self {
            row_means,
            col_means,
            noise,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.row_means.len()
    }

    pub fn num_cols(&self) -> usize {
        self.col_means.len()
    }

    pub fn row_means(&self) -> &[f64] {
        &self.row_means
    }

    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        let rows = std::mem::take(&mut self.row_means);
        let cols = std::mem::take(&mut self.col_means);
        Self::new(rows, cols, noise)
    }

    /// The same problem with rows and columns exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            row_means: self.col_means.clone(),
            col_means: self.row_means.clone(),
            noise: self.noise,
        }
    }

    pub fn contains(&self, arm: Arm) -> bool {
        arm.row < self.num_rows() && arm.col < self.num_cols()
    }

    pub fn expected_reward(&self, arm: Arm) -> f64 {
        self.row_means[arm.row] * self.col_means[arm.col]
    }

    pub fn best_reward(&self) -> f64 {
        let best = optimal_arm(self).arm;
        self.expected_reward(best)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Lowest index of the maximum; `true` in the second slot when the maximum
/// is attained more than once.
pub(crate) fn argmax_lowest(values: &[f64]) -> (usize, bool) {
    let mut best = 0;
    let mut tied = false;
    for (idx, &x) in values.iter().enumerate().skip(1) {
        if x > values[best] {
            best = idx;
            tied = false;
        } else if x == values[best] {
            tied = true;
        }
    }
    (best, tied)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalArm {
    pub arm: Arm,
    pub unique_row: bool,
    pub unique_col: bool,
}

impl OptimalArm {
    pub fn is_unique(&self) -> bool {
        self.unique_row && self.unique_col
    }
}

/// `(argmax u, argmax v)` with lowest-index tie-breaking.
pub fn optimal_arm(instance: &Rank1Instance) -> OptimalArm {
    let (row, row_tied) = argmax_lowest(instance.row_means());
    let (col, col_tied) = argmax_lowest(instance.col_means());
    OptimalArm {
        arm: Arm::new(row, col),
        unique_row: !row_tied,
        unique_col: !col_tied,
    }
}

/// Gap statistics of an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub row_gaps: Vec<f64>,
    pub col_gaps: Vec<f64>,
    pub min_row_gap: Option<f64>,
    pub min_col_gap: Option<f64>,
    /// `min(mean(u), mean(v))`.
    pub mu: f64,
    /// Row gaps with zeros replaced by the minimum column gap. When no column
    /// gap is positive the optimal row never costs regret and its entry is
    /// `+inf`.
    pub modified_row_gaps: Vec<f64>,
    pub modified_col_gaps: Vec<f64>,
    pub optimal_arm: Arm,
}

fn min_positive(gaps: &[f64]) -> Option<f64> {
    gaps.iter()
        .copied()
        .filter(|&g| g > 0.0)
        .min_by(f64::total_cmp)
}

fn substitute_zeros(gaps: &[f64], other_min: Option<f64>) -> Vec<f64> {
    gaps.iter()
        .map(|&g| {
            if g > 0.0 {
                g
            } else {
                other_min.unwrap_or(f64::INFINITY)
            }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn compute_gaps(instance: &Rank1Instance) -> Result<GapSummary> {
    let best = optimal_arm(instance).arm;
    let u = instance.row_means();
    let v = instance.col_means();
    let row_gaps: Vec<f64> = u.iter().map(|&x| u[best.row] - x).collect();
    let col_gaps: Vec<f64> = v.iter().map(|&y| v[best.col] - y).collect();
    let min_row_gap = min_positive(&row_gaps);
    let min_col_gap = min_positive(&col_gaps);
    if min_row_gap.is_none() && min_col_gap.is_none() {
        return Err(Error::DegenerateInstance);
    }
    Ok(GapSummary {
        modified_row_gaps: substitute_zeros(&row_gaps, min_col_gap),
        modified_col_gaps: substitute_zeros(&col_gaps, min_row_gap),
        mu: mean(u).min(mean(v)),
        row_gaps,
        col_gaps,
        min_row_gap,
        min_col_gap,
        optimal_arm: best,
    })
}

/// Expected reward of the best arm minus that of `arm`.
pub fn pseudo_regret(instance: &Rank1Instance, arm: Arm) -> f64 {
    instance.best_reward() - instance.expected_reward(arm)
}

/// An online learner: picks one arm per step and sees its reward.
///
/// `observe` must be called exactly once after each `choose`, with the arm
/// that was just chosen.
pub trait Policy: Send {
    fn name(&self) -> String;

    /// `t` is the 1-based step index.
    fn choose(&mut self, t: u64, rng: &mut SimRng) -> Arm;

    fn observe(&mut self, arm: Arm, reward: f64);
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn choose(&mut self, t: u64, rng: &mut SimRng) -> Arm {
        (**self).choose(t, rng)
    }

    fn observe(&mut self, arm: Arm, reward: f64) {
        (**self).observe(arm, reward)
    }
}
