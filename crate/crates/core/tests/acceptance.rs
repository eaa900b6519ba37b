//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs as a plain binary so the lines are always shown.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rank1bandit::env::{make_spike, Environment, LowRankSpec, SpikeSpec};
use rank1bandit::harness::{run_sweep, simulate, EnvSpec, Execution, ExperimentConfig};
use rank1bandit::lowerbound::{kl_bernoulli, regret_lower_bound, verify_cstar_optimality};
use rank1bandit::model::{compute_gaps, optimal_arm, Policy};
use rank1bandit::rank1elim::Rank1Elim;
use rank1bandit::rng::{stream, StreamRole};
use rank1bandit::{NoiseModel, Rank1Instance};

const N: u64 = 2_000_000;
const SEED: u64 = 20_160_501;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn spike(k: usize, l: usize, p_u: f64, p_v: f64, d_u: f64, d_v: f64) -> EnvSpec {
    EnvSpec::Spike(SpikeSpec::new(k, l, p_u, p_v, d_u, d_v))
}

/// Mean final regret of each cell, in order.
fn mean_regrets(cells: &[(EnvSpec, &str)], n: u64, reps: u64) -> Vec<f64> {
    let grid: Vec<ExperimentConfig> = cells
        .iter()
        .map(|(env, policy)| {
            ExperimentConfig::new(env.clone(), policy.parse().unwrap(), n, reps, SEED)
        })
        .collect();
    run_sweep(&grid, Execution::Parallel)
        .iter()
        .map(|c| c.summary().expect("cell failed").regret_mean)
        .collect()
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.0}"))
        .collect::<Vec<_>>()
        .join(" -> ")
}

fn table_anchor() -> Outcome {
    let r = mean_regrets(&[(spike(8, 8, 0.7, 0.7, 0.2, 0.2), "rank1elim")], N, 20)[0];
    outcome(
        (14_000.0..=21_000.0).contains(&r),
        format!("8x8 mean regret {r:.0}, window [14000, 21000]"),
    )
}

fn table_trends() -> Outcome {
    let by_k = mean_regrets(
        &[8, 16, 32].map(|k| (spike(k, 8, 0.7, 0.7, 0.2, 0.2), "rank1elim")),
        N,
        20,
    );
    let by_gap = mean_regrets(
        &[0.2, 0.1, 0.05].map(|d| (spike(8, 8, 0.7, 0.7, d, d), "rank1elim")),
        N,
        20,
    );
    let by_p = mean_regrets(
        &[0.7, 0.35, 0.175].map(|p| (spike(8, 8, p, p, 0.2, 0.2), "rank1elim")),
        N,
        20,
    );
    let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]);
    let gap_ratio = by_gap[2] / by_gap[0];
    let p_ratio = by_p[2] / by_p[0];
    let pass = increasing(&by_k)
        && increasing(&by_gap)
        && (2.5..=6.0).contains(&gap_ratio)
        && increasing(&by_p)
        && (3.5..=8.0).contains(&p_ratio);
    outcome(
        pass,
        format!(
            "K: {}; gap: {} (ratio {gap_ratio:.2}, want [2.5, 6]); p: {} (ratio {p_ratio:.2}, want [3.5, 8])",
            fmt(&by_k),
            fmt(&by_gap),
            fmt(&by_p)
        ),
    )
}

fn crossover() -> Outcome {
    let env = spike(64, 64, 0.7, 0.7, 0.2, 0.2);
    let r = mean_regrets(&[(env.clone(), "rank1elim"), (env, "ucb1")], N, 10);
    outcome(
        r[0] < r[1],
        format!("64x64: rank1elim {:.0} vs ucb1 {:.0}", r[0], r[1]),
    )
}

fn optimal_survival() -> Outcome {
    let inst = make_spike(&SpikeSpec::new(4, 4, 0.5, 0.5, 0.25, 0.25)).unwrap();
    let best = optimal_arm(&inst).arm;
    let env = Environment::Rank1(inst);
    let (n, reps) = (100_000, 200);
    let survived = (0..reps)
        .filter(|&rep| {
            let mut policy = Rank1Elim::new(4, 4, n).unwrap();
            let mut env_rng = stream(SEED, rep, StreamRole::Environment);
            let mut policy_rng = stream(SEED, rep, StreamRole::Policy);
            simulate(&env, &mut policy, n, &[n], &mut env_rng, &mut policy_rng).unwrap();
            policy.row_map()[best.row] == best.row && policy.col_map()[best.col] == best.col
        })
        .count();
    let rate = survived as f64 / reps as f64;
    outcome(
        rate >= 0.99,
        format!(
            "{survived}/{reps} runs kept the optimal row and column ({:.1}%)",
            100.0 * rate
        ),
    )
}

fn lower_bound_values() -> Outcome {
    let inst = make_spike(&SpikeSpec::new(2, 2, 0.5, 0.5, 0.25, 0.25)).unwrap();
    let total = regret_lower_bound(&inst).unwrap().total;
    let by_hand = 2.0 * (0.1875 / kl_bernoulli(0.375, 0.5625).unwrap());
    let rel = (total - by_hand).abs() / by_hand;

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut instances = vec![inst];
    for k in 1..=3 {
        for l in 1..=3 {
            if k * l == 1 {
                continue;
            }
            for _ in 0..4 {
                let u = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
                let v = (0..l).map(|_| rng.random_range(0.05..0.95)).collect();
                instances.push(Rank1Instance::new(u, v, NoiseModel::Bernoulli).unwrap());
            }
        }
    }
    let verified = instances
        .iter()
        .filter(|i| matches!(verify_cstar_optimality(i), Ok(true)))
        .count();
    outcome(
        rel <= 1e-9 && verified == instances.len(),
        format!(
            "2x2 total {total:.12} vs {by_hand:.12} (rel {rel:.1e}); c* optimal on {verified}/{} instances",
            instances.len()
        ),
    )
}

fn kl_scaling() -> Outcome {
    let grid: Vec<f64> = (0..50)
        .map(|k| 0.02 + 0.96 * (k as f64 + 0.5) / 50.0)
        .collect();
    let (mut checked, mut violations) = (0u64, 0u64);
    for &p in &grid {
        for &q in &grid {
            if p == q {
                continue;
            }
            let full = kl_bernoulli(p, q).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for &a in &grid {
                let d = kl_bernoulli(a * p, a * q).unwrap();
                checked += 1;
                if d >= a * full || d <= prev {
                    violations += 1;
                }
                prev = d;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in {checked} grid points"),
    )
}

fn componentwise_regret() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut violations = 0;
    let draws = 10_000;
    for _ in 0..draws {
        let k = rng.random_range(1..=10);
        let l = rng.random_range(1..=10);
        let u: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..l).map(|_| rng.random::<f64>()).collect();
        let inst = Rank1Instance::new(u.clone(), v.clone(), NoiseModel::Bernoulli).unwrap();
        let Ok(gaps) = compute_gaps(&inst) else {
            continue;
        };
        let (i, j) = (rng.random_range(0..k), rng.random_range(0..l));
        let lhs = inst.best_reward() - u[i] * v[j];
        // slack covers one rounding step in each product
        if lhs > gaps.row_gaps[i] + gaps.col_gaps[j] + 4.0 * f64::EPSILON {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in {draws} draws"),
    )
}

fn structural() -> Outcome {
    let mut failures = Vec::new();
    let mut stages_checked = 0;
    let cases = [
        make_spike(&SpikeSpec::new(8, 8, 0.7, 0.7, 0.2, 0.2)).unwrap(),
        make_spike(&SpikeSpec::new(5, 3, 0.3, 0.5, 0.4, 0.2)).unwrap(),
        Rank1Instance::new(
            vec![0.9, 0.6, 0.6, 0.2],
            vec![0.8, 0.1, 0.75],
            NoiseModel::Bernoulli,
        )
        .unwrap(),
    ];
    for (case, inst) in cases.iter().enumerate() {
        for seed in 0..4 {
            let (k, l) = (inst.num_rows(), inst.num_cols());
            let n = 400_000;
            let env = Environment::Rank1(inst.clone());
            let mut policy = Rank1Elim::new(k, l, n).unwrap().with_history();
            let mut env_rng = stream(seed, 0, StreamRole::Environment);
            let mut policy_rng = stream(seed, 0, StreamRole::Policy);
            // independent step counter per stage
            let mut counted: Vec<u64> = Vec::new();
            for t in 1..=n {
                let stage = policy.stage() as usize;
                if policy.is_singleton() {
                    break;
                }
                counted.resize(counted.len().max(stage + 1), 0);
                counted[stage] += 1;
                let arm = policy.choose(t, &mut policy_rng);
                let reward = env.sample_reward(arm, &mut env_rng);
                policy.observe(arm, reward);
            }
            let log_n = (n as f64).ln();
            let mut prev_rows: Vec<usize> = (0..k).collect();
            let mut prev_cols: Vec<usize> = (0..l).collect();
            let mut n_prev = 0;
            for rec in policy.history() {
                stages_checked += 1;
                let tag = format!("case {case} seed {seed} stage {}", rec.stage);
                let width = 2.0 * (log_n / rec.n_stage as f64).sqrt();
                if rec
                    .bounds
                    .rows
                    .iter()
                    .chain(&rec.bounds.cols)
                    .any(|iv| (iv.upper() - iv.lower() - width).abs() > 1e-12)
                {
                    failures.push(format!("{tag}: width"));
                }
                let expected = (rec.num_rows + rec.num_cols) as u64 * (rec.n_stage - n_prev);
                if rec.pulls != expected || counted[rec.stage as usize] != expected {
                    failures.push(format!(
                        "{tag}: pulls {} counted {} expected {expected}",
                        rec.pulls, counted[rec.stage as usize]
                    ));
                }
                if rec.row_map.iter().any(|&r| rec.row_map[r] != r)
                    || rec.col_map.iter().any(|&c| rec.col_map[c] != c)
                {
                    failures.push(format!("{tag}: map not idempotent"));
                }
                let mut rows = rec.row_map.clone();
                rows.sort_unstable();
                rows.dedup();
                let mut cols = rec.col_map.clone();
                cols.sort_unstable();
                cols.dedup();
                let shrinks = rows.iter().all(|r| prev_rows.contains(r))
                    && cols.iter().all(|c| prev_cols.contains(c));
                let leaders_kept = rows.contains(&rec.row_leader) && cols.contains(&rec.col_leader);
                if !shrinks
                    || !leaders_kept
                    || rec.num_rows != prev_rows.len()
                    || rec.num_cols != prev_cols.len()
                {
                    failures.push(format!("{tag}: active sets"));
                }
                prev_rows = rows;
                prev_cols = cols;
                n_prev = rec.n_stage;
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{stages_checked} stages checked")
    } else {
        format!("{stages_checked} stages checked; {}", failures.join("; "))
    };
    outcome(failures.is_empty() && stages_checked > 0, detail)
}

fn misspecification() -> Outcome {
    let n = 1_000_000;
    let env = EnvSpec::Lowrank(LowRankSpec {
        k: 32,
        l: 32,
        rank: 5,
        leading_weight: 10.0,
        seed: 3,
    });
    let config = ExperimentConfig::new(env, "rank1elim".parse().unwrap(), n, 5, SEED);
    let cells = run_sweep(&[config], Execution::Parallel);
    let trace = cells[0].trace().expect("low-rank run failed");
    let at = |step: u64| trace.mean[trace.steps.iter().position(|&s| s == step).unwrap()];
    let first = at(n / 4) / (n / 4) as f64;
    let last = (at(n) - at(3 * n / 4)) / (n / 4) as f64;
    outcome(
        last < first / 3.0,
        format!(
            "slope first quartile {first:.4}, last quartile {last:.4} (ratio {:.3}, want < 0.333)",
            last / first
        ),
    )
}

fn glm_ucb_not_competitive() -> Outcome {
    let env = spike(16, 16, 0.7, 0.7, 0.2, 0.2);
    let r = mean_regrets(&[(env.clone(), "rank1elim"), (env, "glmucb:scale=1")], N, 3);
    outcome(
        r[1] > r[0],
        format!("16x16: glmucb {:.0} vs rank1elim {:.0}", r[1], r[0]),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("table anchor 8x8", table_anchor),
        ("table scaling trends", table_trends),
        ("crossover vs ucb1 at 64x64", crossover),
        ("optimal arm survival", optimal_survival),
        ("lower bound values and c* optimality", lower_bound_values),
        ("kl scaling grid", kl_scaling),
        ("componentwise regret", componentwise_regret),
        ("rank1elim structure", structural),
        ("misspecified low rank flattens", misspecification),
        ("glm-ucb not competitive", glm_ucb_not_competitive),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {name}: {} [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!result.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
