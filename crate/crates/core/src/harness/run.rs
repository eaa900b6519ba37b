use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::model::Policy;
use crate::rng::{stream, SimRng, StreamRole};

/// One replication's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub policy: String,
    pub seed: u64,
    pub replication: u64,
    pub checkpoints: Vec<u64>,
    /// Cumulative pseudo-regret after each checkpoint step.
    pub cumulative_regret: Vec<f64>,
    /// `K x L` pull counts after the final step.
    pub pull_counts: Vec<Vec<u64>>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    pub fn total_pulls(&self) -> u64 {
        self.pull_counts.iter().flatten().sum()
    }
}

/// `count` evenly spaced steps ending at `n`: `ceil(n (c + 1) / count)`.
pub fn checkpoint_steps(n: u64, count: usize) -> Vec<u64> {
    let count = count.clamp(1, n.max(1) as usize) as u128;
    (1..=count)
        .map(|c| ((n as u128 * c).div_ceil(count)) as u64)
        .collect()
}

/// Runs `policy` against `env` for `n` steps, recording cumulative
/// pseudo-regret at `checkpoints` (ascending, last one `n`).
pub fn simulate<P: Policy + ?Sized>(
    env: &Environment,
    policy: &mut P,
    n: u64,
    checkpoints: &[u64],
    env_rng: &mut SimRng,
    policy_rng: &mut SimRng,
) -> Result<(Vec<f64>, Vec<Vec<u64>>)> {
    let (k, l) = (env.num_rows(), env.num_cols());
    let regret = env.regret_table();
    let mut counts = vec![0u64; k * l];
    let mut cumulative = 0.0;
    let mut trace = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for t in 1..=n {
        let arm = policy.choose(t, policy_rng);
        if arm.row >= k || arm.col >= l {
            return Err(Error::ContractViolation(format!(
                "{} chose {arm:?} outside a {k}x{l} grid",
                policy.name()
            )));
        }
        let reward = env.sample_reward(arm, env_rng);
        policy.observe(arm, reward);
        let idx = arm.row * l + arm.col;
        counts[idx] += 1;
        cumulative += regret[idx];
        if next.peek() == Some(&&t) {
            trace.push(cumulative);
            next.next();
        }
    }
    let pulls = counts.chunks(l).map(<[u64]>::to_vec).collect();
    Ok((trace, pulls))
}

fn run_with_env(
    config: &ExperimentConfig,
    env: &Environment,
    replication: u64,
) -> Result<RegretTrace> {
    let (k, l) = (env.num_rows(), env.num_cols());
    let mut policy = config.policy.build(k, l, config.n)?;
    let checkpoints = checkpoint_steps(config.n, config.checkpoints);
    let mut env_rng = stream(config.seed, replication, StreamRole::Environment);
    let mut policy_rng = stream(config.seed, replication, StreamRole::Policy);
    let (cumulative_regret, pull_counts) = simulate(
        env,
        policy.as_mut(),
        config.n,
        &checkpoints,
        &mut env_rng,
        &mut policy_rng,
    )?;
    Ok(RegretTrace {
        policy: config.policy.to_string(),
        seed: config.seed,
        replication,
        checkpoints,
        cumulative_regret,
        pull_counts,
    })
}

pub fn run_single(config: &ExperimentConfig, replication: u64) -> Result<RegretTrace> {
    config.validate()?;
    let env = config.env.build()?;
    run_with_env(config, &env, replication)
}

/// How independent jobs are scheduled. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on; sequential
    /// otherwise.
    #[default]
    Parallel,
}

fn map_jobs<T, F>(execution: Execution, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..jobs).into_par_iter().map(f).collect()
        }
        _ => (0..jobs).map(f).collect(),
    }
}

pub fn run_replications(
    config: &ExperimentConfig,
    execution: Execution,
) -> Result<Vec<RegretTrace>> {
    config.validate()?;
    let env = config.env.build()?;
    map_jobs(execution, config.reps as usize, |rep| {
        run_with_env(config, &env, rep as u64)
    })
    .into_iter()
    .collect()
}

/// Per-checkpoint mean and sample standard deviation across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub policy: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn mean_std(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn aggregate(traces: &[RegretTrace]) -> Result<TraceSummary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::EmptyResults("no traces to aggregate".into()))?;
    if traces.iter().any(|t| t.checkpoints != first.checkpoints) {
        return Err(Error::InvalidParameter(
            "traces have different checkpoints".into(),
        ));
    }
    let (mean, std) = (0..first.checkpoints.len())
        .map(|c| mean_std(traces.iter().map(move |t| t.cumulative_regret[c])))
        .unzip();
    Ok(TraceSummary {
        policy: first.policy.clone(),
        steps: first.checkpoints.clone(),
        mean,
        std,
    })
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub p_u: Option<f64>,
    pub p_v: Option<f64>,
    pub delta_u: Option<f64>,
    pub delta_v: Option<f64>,
    pub policy: String,
    pub n: u64,
    pub reps: u64,
    pub regret_mean: f64,
    /// `NaN` for a single replication.
    pub regret_std: f64,
}

pub fn summarize(
    config: &ExperimentConfig,
    env: &Environment,
    traces: &[RegretTrace],
) -> Result<SummaryRow> {
    if traces.is_empty() {
        return Err(Error::EmptyResults("no traces to summarize".into()));
    }
    let (regret_mean, regret_std) = mean_std(traces.iter().map(RegretTrace::final_regret));
    let spike = config.env.spike();
    Ok(SummaryRow {
        k: env.num_rows(),
        l: env.num_cols(),
        p_u: spike.map(|s| s.p_u),
        p_v: spike.map(|s| s.p_v),
        delta_u: spike.map(|s| s.delta_u),
        delta_v: spike.map(|s| s.delta_v),
        policy: config.policy.to_string(),
        n: config.n,
        reps: traces.len() as u64,
        regret_mean,
        regret_std,
    })
}

/// Outcome of one grid cell. A failing cell does not stop the sweep.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub config: ExperimentConfig,
    pub outcome: std::result::Result<(SummaryRow, TraceSummary), String>,
}

impl CellResult {
    pub fn summary(&self) -> Option<&SummaryRow> {
        self.outcome.as_ref().ok().map(|(s, _)| s)
    }

    pub fn trace(&self) -> Option<&TraceSummary> {
        self.outcome.as_ref().ok().map(|(_, t)| t)
    }
}

/// Runs every (cell, replication) pair as one job and reports cells in grid
/// order.
pub fn run_sweep(grid: &[ExperimentConfig], execution: Execution) -> Vec<CellResult> {
    let envs: Vec<Result<Environment>> = grid
        .iter()
        .map(|c| c.validate().and_then(|_| c.env.build()))
        .collect();
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .filter(|(cell, _)| envs[*cell].is_ok())
        .flat_map(|(cell, c)| (0..c.reps).map(move |rep| (cell, rep)))
        .collect();
    let results = map_jobs(execution, jobs.len(), |job| {
        let (cell, rep) = jobs[job];
        let env = envs[cell].as_ref().expect("filtered above");
        run_with_env(&grid[cell], env, rep)
    });

    let mut per_cell: Vec<Vec<Result<RegretTrace>>> = grid.iter().map(|_| Vec::new()).collect();
    for (&(cell, _), result) in jobs.iter().zip(results) {
        per_cell[cell].push(result);
    }
    grid.iter()
        .zip(envs)
        .zip(per_cell)
        .map(|((config, env), results)| {
            let outcome = env.and_then(|env| {
                let traces = results.into_iter().collect::<Result<Vec<_>>>()?;
                Ok((summarize(config, &env, &traces)?, aggregate(&traces)?))
            });
            CellResult {
                config: config.clone(),
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}
