//! Staged row/column elimination for rank-1 bandits.
//!
//! Stage `l` targets precision `2^-l` and runs until `n_l = ceil(4 * 4^l * ln n)`
//! rounds have been played in total. Each round explores every remaining row
//! against one random column, then every remaining column against one random
//! row. Random picks are routed through the substitution maps `row_map` and
//! `col_map`, which send every original index to the representative that
//! replaced it, so exploration only ever touches surviving rows and columns.
//!
//! At the end of a stage each remaining row gets the interval
//! `sum_j C_u(i, j) / n_l +- sqrt(ln n / n_l)` and every row whose upper bound
//! is at or below the leader's lower bound is remapped to the leader. Columns
//! are handled the same way from their own accumulator, simultaneously.
//!
//! Natural logarithms throughout; bounds are not clipped to `[0, 1]`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Arm, Policy};
use crate::rng::SimRng;

/// Which half of an exploration round a pull belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Remaining rows against one random (mapped) column; feeds `C_u`.
    RowExploration,
    /// Remaining columns against one random (mapped) row; feeds `C_v`.
    ColExploration,
}

/// `ceil(4 * 4^stage * ln n)`, the cumulative number of rounds by the end of
/// `stage`.
pub fn stage_length(stage: u32, horizon: u64) -> Result<u64> {
    if horizon < 3 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be at least 3, got {horizon}"
        )));
    }
    let log_n = (horizon as f64).ln();
    let exact = 4.0 * 4f64.powi(stage as i32) * log_n;
    let rounded = exact.ceil();
    // u64::MAX as f64 rounds up to 2^64, so `>=` is the safe test
    if !rounded.is_finite() || rounded >= u64::MAX as f64 {
        return Err(Error::Overflow(format!(
            "stage length for stage {stage} exceeds u64"
        )));
    }
    Ok(rounded as u64)
}

/// Confidence interval on one row's or column's averaged reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub index: usize,
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    pub fn upper(&self) -> f64 {
        self.center + self.radius
    }

    pub fn lower(&self) -> f64 {
        self.center - self.radius
    }
}

/// Bounds computed at the end of a stage, in ascending index order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBounds {
    pub rows: Vec<Interval>,
    pub cols: Vec<Interval>,
}

/// What happened at the end of one stage. Serializes to one JSON line of the
/// stage log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: u32,
    pub n_stage: u64,
    pub num_rows: usize,
    pub num_cols: usize,
    pub row_leader: usize,
    pub col_leader: usize,
    pub eliminated_rows: Vec<usize>,
    pub eliminated_cols: Vec<usize>,
    /// Pulls issued during this stage.
    pub pulls: u64,
    #[serde(skip)]
    pub bounds: ConfidenceBounds,
    #[serde(skip)]
    pub row_map: Vec<usize>,
    #[serde(skip)]
    pub col_map: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    /// Rounds completed in the current stage.
    round: u64,
    block: Block,
    /// Position inside the current block.
    pos: usize,
    /// Mapped column (row block) or mapped row (column block) drawn at the
    /// start of the block.
    pivot: usize,
}

/// The elimination policy and its per-stage bookkeeping.
#[derive(Debug, Clone)]
pub struct Rank1Elim {
    k: usize,
    l: usize,
    horizon: u64,
    log_n: f64,
    stage: u32,
    tilde_gap: f64,
    n_cur: u64,
    n_prev: u64,
    row_map: Vec<usize>,
    col_map: Vec<usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// `C_u`, row-major K x L.
    row_rewards: Vec<f64>,
    /// `C_v`, row-major K x L.
    col_rewards: Vec<f64>,
    cursor: Cursor,
    pending: Option<(Arm, Block)>,
    stage_pulls: u64,
    history: Option<Vec<StageRecord>>,
}

fn unique_sorted(map: &[usize]) -> Vec<usize> {
    let mut out = map.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

impl Rank1Elim {
    pub fn new(k: usize, l: usize, horizon: u64) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::InvalidParameter("K and L must be at least 1".into()));
        }
        let n0 = stage_length(0, horizon)?;
        Ok(Self {
            k,
            l,
            horizon,
            log_n: (horizon as f64).ln(),
            stage: 0,
            tilde_gap: 1.0,
            n_cur: n0,
            n_prev: 0,
            row_map: (0..k).collect(),
            col_map: (0..l).collect(),
            rows: (0..k).collect(),
            cols: (0..l).collect(),
            row_rewards: vec![0.0; k * l],
            col_rewards: vec![0.0; k * l],
            cursor: Cursor {
                round: 0,
                block: Block::RowExploration,
                pos: 0,
                pivot: 0,
            },
            pending: None,
            stage_pulls: 0,
            history: None,
        })
    }

    /// Keep a [`StageRecord`] for every finished stage.
    pub fn with_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    pub fn history(&self) -> &[StageRecord] {
        self.history.as_deref().unwrap_or(&[])
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn tilde_gap(&self) -> f64 {
        self.tilde_gap
    }

    pub fn n_stage(&self) -> u64 {
        self.n_cur
    }

    pub fn n_previous(&self) -> u64 {
        self.n_prev
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn row_map(&self) -> &[usize] {
        &self.row_map
    }

    pub fn col_map(&self) -> &[usize] {
        &self.col_map
    }

    /// Remaining rows, ascending.
    pub fn active_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn active_cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn row_reward(&self, i: usize, j: usize) -> f64 {
        self.row_rewards[i * self.l + j]
    }

    pub fn col_reward(&self, i: usize, j: usize) -> f64 {
        self.col_rewards[i * self.l + j]
    }

    /// Pulls issued so far in the current stage.
    pub fn stage_pulls(&self) -> u64 {
        self.stage_pulls
    }

    /// Rounds a stage must play: `n_l - n_{l-1}`.
    pub fn rounds_in_stage(&self) -> u64 {
        self.n_cur - self.n_prev
    }

    pub fn is_singleton(&self) -> bool {
        self.rows.len() == 1 && self.cols.len() == 1
    }

    /// Next arm of the exploration schedule and the block it belongs to.
    /// Draws the block's random pivot from `rng` on the first pull of a block.
    pub fn next_pull(&mut self, rng: &mut SimRng) -> (Arm, Block) {
        if self.is_singleton() {
            let arm = Arm::new(self.rows[0], self.cols[0]);
            self.pending = Some((arm, Block::RowExploration));
            return (arm, Block::RowExploration);
        }
        let c = &mut self.cursor;
        if c.pos == 0 {
            c.pivot = match c.block {
                Block::RowExploration => self.col_map[rng.random_range(0..self.l)],
                Block::ColExploration => self.row_map[rng.random_range(0..self.k)],
            };
        }
        let arm = match c.block {
            Block::RowExploration => Arm::new(self.rows[c.pos], c.pivot),
            Block::ColExploration => Arm::new(c.pivot, self.cols[c.pos]),
        };
        self.pending = Some((arm, c.block));
        (arm, c.block)
    }

    /// Adds the reward of the pending pull to its block's accumulator and
    /// advances the schedule, closing the stage after its last round.
    pub fn record(&mut self, arm: Arm, reward: f64, block: Block) -> Result<()> {
        match self.pending.take() {
            Some((expected, expected_block)) if expected == arm && expected_block == block => {}
            other => {
                self.pending = other;
                return Err(Error::ContractViolation(format!(
                    "recorded {arm:?} in {block:?} but the pending pull is {other:?}"
                )));
            }
        }
        self.stage_pulls += 1;
        if self.is_singleton() {
            return Ok(());
        }
        let cell = arm.row * self.l + arm.col;
        let c = &mut self.cursor;
        match block {
            Block::RowExploration => {
                self.row_rewards[cell] += reward;
                c.pos += 1;
                if c.pos == self.rows.len() {
                    c.pos = 0;
                    c.block = Block::ColExploration;
                }
            }
            Block::ColExploration => {
                self.col_rewards[cell] += reward;
                c.pos += 1;
                if c.pos == self.cols.len() {
                    c.pos = 0;
                    c.block = Block::RowExploration;
                    c.round += 1;
                }
            }
        }
        if self.cursor.round == self.rounds_in_stage() {
            self.end_of_stage();
        }
        Ok(())
    }

    /// Current intervals of all remaining rows and columns.
    pub fn confidence_bounds(&self) -> ConfidenceBounds {
        let n_l = self.n_cur as f64;
        let radius = (self.log_n / n_l).sqrt();
        let rows = self
            .rows
            .iter()
            .map(|&i| {
                let total: f64 = self.row_rewards[i * self.l..(i + 1) * self.l].iter().sum();
                Interval {
                    index: i,
                    center: total / n_l,
                    radius,
                }
            })
            .collect();
        let cols = self
            .cols
            .iter()
            .map(|&j| {
                let total: f64 = (0..self.k).map(|i| self.col_rewards[i * self.l + j]).sum();
                Interval {
                    index: j,
                    center: total / n_l,
                    radius,
                }
            })
            .collect();
        ConfidenceBounds { rows, cols }
    }

    /// Computes bounds, eliminates, and moves to the next stage.
    pub fn end_of_stage(&mut self) -> ConfidenceBounds {
        let bounds = self.confidence_bounds();
        let (row_leader, eliminated_rows) = eliminate(&bounds.rows, &mut self.row_map);
        let (col_leader, eliminated_cols) = eliminate(&bounds.cols, &mut self.col_map);

        if let Some(history) = self.history.as_mut() {
            history.push(StageRecord {
                stage: self.stage,
                n_stage: self.n_cur,
                num_rows: self.rows.len(),
                num_cols: self.cols.len(),
                row_leader,
                col_leader,
                eliminated_rows,
                eliminated_cols,
                pulls: self.stage_pulls,
                bounds: bounds.clone(),
                row_map: self.row_map.clone(),
                col_map: self.col_map.clone(),
            });
        }

        self.rows = unique_sorted(&self.row_map);
        self.cols = unique_sorted(&self.col_map);
        self.stage += 1;
        self.tilde_gap /= 2.0;
        self.n_prev = self.n_cur;
        // Past stage ~30 the cumulative length no longer fits in u64; such a
        // stage would outlast any horizon anyway.
        self.n_cur = stage_length(self.stage, self.horizon).unwrap_or(u64::MAX);
        self.cursor = Cursor {
            round: 0,
            block: Block::RowExploration,
            pos: 0,
            pivot: 0,
        };
        self.stage_pulls = 0;
        bounds
    }

    /// Writes the stage history as JSON lines.
    pub fn write_history(&self, mut out: impl std::io::Write) -> Result<()> {
        for record in self.history() {
            serde_json::to_writer(&mut out, record)?;
            writeln!(out).map_err(|e| Error::io("<stage log>", e))?;
        }
        Ok(())
    }
}

/// Leader by lower bound (lowest index on ties), then remap every original
/// index whose representative's upper bound is `<=` the leader's lower bound.
/// Returns the leader and the representatives eliminated.
fn eliminate(intervals: &[Interval], map: &mut [usize]) -> (usize, Vec<usize>) {
    let mut leader = &intervals[0];
    for iv in &intervals[1..] {
        if iv.lower() > leader.lower() {
            leader = iv;
        }
    }
    let threshold = leader.lower();
    let leader_index = leader.index;
    let eliminated: Vec<usize> = intervals
        .iter()
        .filter(|iv| iv.upper() <= threshold)
        .map(|iv| iv.index)
        .collect();
    if !eliminated.is_empty() {
        for rep in map.iter_mut() {
            if eliminated.binary_search(rep).is_ok() {
                *rep = leader_index;
            }
        }
    }
    (leader_index, eliminated)
}

impl Policy for Rank1Elim {
    fn name(&self) -> String {
        "rank1elim".into()
    }

    fn choose(&mut self, _t: u64, rng: &mut SimRng) -> Arm {
        self.next_pull(rng).0
    }

    fn observe(&mut self, arm: Arm, reward: f64) {
        let block = match self.pending {
            Some((_, block)) => block,
            None => panic!("observe({arm:?}) without a preceding choose"),
        };
        if let Err(e) = self.record(arm, reward, block) {
            panic!("{e}");
        }
    }
}
