use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rank1bandit::baselines::PolicySpec;
use rank1bandit::env::{Environment, SpikeSpec};
use rank1bandit::error::{Error, Result};
use rank1bandit::harness::{
    self, preset, run_sweep, simulate, summarize, CellResult, EnvSpec, Execution, ExperimentConfig,
    TraceSummary,
};
use rank1bandit::lowerbound::{gaussian_lower_bound, regret_lower_bound};
use rank1bandit::rank1elim::Rank1Elim;
use rank1bandit::rng::{stream, StreamRole};
use rank1bandit::Rank1Instance;

#[derive(Parser)]
#[command(
    name = "rank1bandit",
    version,
    about = "Stochastic rank-1 bandit simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Horizon (steps per replication).
    #[arg(long)]
    n: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run replications on the current thread only.
    #[arg(long)]
    sequential: bool,
}

impl RunOpts {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on one environment.
    Simulate {
        /// `spike:K=..,L=..,p_u=..,p_v=..,delta_u=..,delta_v=..`,
        /// `instance:file.json` or `lowrank:K=..,L=..,rank=..,leading_weight=..,seed=..`.
        #[arg(long, required_unless_present = "config")]
        env: Option<String>,
        /// e.g. `rank1elim`, `ucb1`, `linucb:lambda=1,eps=0.01,scale=1`, `glmucb:scale=1`.
        #[arg(long, required_unless_present = "config")]
        policy: Option<String>,
        /// JSON experiment config; command-line flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-stage log of replication 0 (rank1elim only).
        #[arg(long)]
        stage_log: bool,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Run a predefined grid.
    Sweep {
        /// table1-left, table1-mid, table1-right or fig2.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Run several policies on a square spike instance.
    Compare {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "L")]
        l: Option<usize>,
        /// Comma-separated policy specs; options attach to the preceding name.
        #[arg(long, default_value = "rank1elim,ucb1")]
        policies: String,
        #[arg(long, default_value_t = 0.7)]
        p: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Print the asymptotic regret lower bound of an instance as JSON.
    Lowerbound {
        #[arg(long)]
        instance: PathBuf,
        /// Use the Gaussian bound with this standard deviation.
        #[arg(long)]
        gaussian: Option<f64>,
    },
}

fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            env,
            policy,
            config,
            checkpoints,
            out,
            stage_log,
            run,
        } => {
            let env: Option<EnvSpec> = env.map(|e| e.parse()).transpose()?;
            let policy: Option<PolicySpec> = policy.map(|p| p.parse()).transpose()?;
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
                    ExperimentConfig::from_json(&text)?
                }
                None => ExperimentConfig::new(
                    env.clone().expect("required by clap"),
                    policy.expect("required by clap"),
                    2_000_000,
                    20,
                    0,
                ),
            };
            if let Some(env) = env {
                cfg.env = env;
            }
            if let Some(policy) = policy {
                cfg.policy = policy;
            }
            if let Some(n) = run.n {
                cfg.n = n;
                cfg.checkpoints = cfg.checkpoints.min(n as usize).max(1);
            }
            cfg.reps = run.reps.unwrap_or(cfg.reps);
            cfg.seed = run.seed.unwrap_or(cfg.seed);
            if let Some(c) = checkpoints {
                cfg.checkpoints = c;
            }
            if out.is_some() {
                cfg.out = out;
            }
            simulate_cmd(&cfg, run.execution(), stage_log)
        }
        Command::Sweep {
            preset: name,
            out,
            run,
        } => {
            let mut p = preset(&name)?;
            if let Some(n) = run.n {
                p = p.with_horizon(n);
            }
            if let Some(reps) = run.reps {
                p = p.with_reps(reps);
            }
            if let Some(seed) = run.seed {
                p = p.with_seed(seed);
            }
            let cells = run_sweep(&p.grid, run.execution());
            write_cells(&out, &name, &cells)
        }
        Command::Compare {
            k,
            l,
            policies,
            p,
            delta,
            out,
            run,
        } => {
            let env = EnvSpec::Spike(SpikeSpec::new(k, l.unwrap_or(k), p, p, delta, delta));
            let n = run.n.unwrap_or(100_000);
            let grid = split_policies(&policies)?
                .into_iter()
                .map(|policy| {
                    ExperimentConfig::new(
                        env.clone(),
                        policy,
                        n,
                        run.reps.unwrap_or(5),
                        run.seed.unwrap_or(0),
                    )
                })
                .collect::<Vec<_>>();
            let cells = run_sweep(&grid, run.execution());
            match out {
                Some(dir) => write_cells(&dir, &format!("K = {k}"), &cells),
                None => {
                    print_cells(&cells);
                    Ok(())
                }
            }
        }
        Command::Lowerbound { instance, gaussian } => {
            let text = std::fs::read_to_string(&instance).map_err(|e| io(&instance, e))?;
            let inst = Rank1Instance::from_json(&text)?;
            let report = match gaussian {
                Some(sigma) => gaussian_lower_bound(&inst, sigma)?,
                None => regret_lower_bound(&inst)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `linucb:lambda=1,eps=0.01,ucb1` splits into `linucb:lambda=1,eps=0.01` and `ucb1`.
fn split_policies(text: &str) -> Result<Vec<PolicySpec>> {
    let mut specs: Vec<String> = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match specs.last_mut() {
            Some(prev) if token.contains('=') && !token.contains(':') => {
                prev.push(',');
                prev.push_str(token);
            }
            _ => specs.push(token.to_string()),
        }
    }
    if specs.is_empty() {
        return Err(Error::InvalidParameter("no policies given".into()));
    }
    specs.iter().map(|s| s.parse()).collect()
}

fn simulate_cmd(cfg: &ExperimentConfig, execution: Execution, stage_log: bool) -> Result<()> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    let traces = harness::run_replications(cfg, execution)?;
    let summary = summarize(cfg, &env, &traces)?;
    let curve = harness::aggregate(&traces)?;
    let Some(out) = &cfg.out else {
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    };
    harness::write_summary_csv(&out.join("summary.csv"), std::slice::from_ref(&summary))?;
    harness::write_summary_json(&out.join("summary.json"), std::slice::from_ref(&summary))?;
    harness::write_trace_csv(&out.join("trace.csv"), &curve)?;
    harness::write_traces_json(&out.join("traces.json"), &traces)?;
    harness::write_trace_svg(&out.join("regret.svg"), &cfg.policy.to_string(), &[curve])?;
    std::fs::write(out.join("config.json"), serde_json::to_string_pretty(cfg)?)
        .map_err(|e| io(out, e))?;
    if stage_log {
        write_stage_log(cfg, &env, &out.join("stages.jsonl"))?;
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn write_stage_log(cfg: &ExperimentConfig, env: &Environment, path: &Path) -> Result<()> {
    if cfg.policy != PolicySpec::Rank1Elim {
        return Err(Error::InvalidParameter(
            "--stage-log needs --policy rank1elim".into(),
        ));
    }
    let mut policy = Rank1Elim::new(env.num_rows(), env.num_cols(), cfg.n)?.with_history();
    let mut env_rng = stream(cfg.seed, 0, StreamRole::Environment);
    let mut policy_rng = stream(cfg.seed, 0, StreamRole::Policy);
    simulate(
        env,
        &mut policy,
        cfg.n,
        &[cfg.n],
        &mut env_rng,
        &mut policy_rng,
    )?;
    let file = File::create(path).map_err(|e| io(path, e))?;
    policy.write_history(BufWriter::new(file))
}

fn env_label(env: &EnvSpec) -> String {
    match env {
        EnvSpec::Spike(s) => format!(
            "K={} L={} p_u={} p_v={} delta_u={} delta_v={}",
            s.k, s.l, s.p_u, s.p_v, s.delta_u, s.delta_v
        ),
        EnvSpec::Instance(inst) => format!("instance {}x{}", inst.num_rows(), inst.num_cols()),
        EnvSpec::InstanceFile { path } => path.display().to_string(),
        EnvSpec::Lowrank(s) => format!(
            "lowrank K={} L={} rank={} weight={} seed={}",
            s.k, s.l, s.rank, s.leading_weight, s.seed
        ),
    }
}

fn print_cells(cells: &[CellResult]) {
    for cell in cells {
        match &cell.outcome {
            Ok((summary, _)) => println!("{}", serde_json::to_string(summary).unwrap_or_default()),
            Err(e) => eprintln!(
                "{}",
                json!({"cell": cell.config.policy.to_string(), "error": e})
            ),
        }
    }
}

fn write_cells(out: &Path, title: &str, cells: &[CellResult]) -> Result<()> {
    let rows: Vec<_> = cells.iter().filter_map(|c| c.summary().cloned()).collect();
    let failures: Vec<_> = cells
        .iter()
        .enumerate()
        .filter_map(|(idx, c)| {
            c.outcome
                .as_ref()
                .err()
                .map(|e| json!({"cell": idx, "config": c.config, "error": e}))
        })
        .collect();
    if !failures.is_empty() {
        std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
        std::fs::write(
            out.join("failures.json"),
            serde_json::to_string_pretty(&failures)?,
        )
        .map_err(|e| io(out, e))?;
        eprintln!(
            "{} of {} cells failed; see failures.json",
            failures.len(),
            cells.len()
        );
    }
    harness::write_summary_csv(&out.join("summary.csv"), &rows)?;
    harness::write_summary_json(&out.join("summary.json"), &rows)?;

    // One chart per environment with a curve per policy; a single-policy
    // sweep instead gets one chart with a curve per cell.
    let mut groups: Vec<(String, Vec<TraceSummary>)> = Vec::new();
    for (idx, cell) in cells.iter().enumerate() {
        let Some(trace) = cell.trace() else { continue };
        harness::write_trace_csv(&out.join(format!("traces/cell_{idx:02}.csv")), trace)?;
        let key = env_label(&cell.config.env);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, curves)) => curves.push(trace.clone()),
            None => groups.push((key, vec![trace.clone()])),
        }
    }
    if groups.iter().all(|(_, curves)| curves.len() == 1) {
        let curves: Vec<TraceSummary> = groups
            .into_iter()
            .map(|(key, mut curves)| {
                let mut curve = curves.remove(0);
                curve.policy = key;
                curve
            })
            .collect();
        if !curves.is_empty() {
            harness::write_trace_svg(&out.join("regret.svg"), title, &curves)?;
        }
    } else {
        for (idx, (key, curves)) in groups.iter().enumerate() {
            harness::write_trace_svg(&out.join(format!("regret_{idx:02}.svg")), key, curves)?;
        }
    }
    for row in &rows {
        println!("{}", serde_json::to_string(row)?);
    }
    Ok(())
}
