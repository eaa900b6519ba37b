//! Asymptotic regret lower bound for Bernoulli rank-1 bandits, its optimal
//! exploration allocation `c*`, and the Gaussian analogue.
//!
//! The bound is the value of a relaxed program: minimize
//! `sum gap(i, j) c(i, j)` over `c >= 0` subject to one information constraint
//! per suboptimal row (along that row) and one per suboptimal column (along
//! that column). Its optimum puts all mass on the optimal row and column, which
//! gives the closed form computed here. [`verify_cstar_optimality`] re-solves
//! the program exactly for small instances as an independent check.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{compute_gaps, optimal_arm, Arm, NoiseModel, Rank1Instance};

/// Bernoulli KL divergence `d(p, q)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} not in [0, 1]")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::NonIdentifiable(format!("q = {q} not in (0, 1)")));
    }
    let head = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    // ln((1-p)/(1-q)) = ln_1p(-p) - ln_1p(-q), accurate for small p and q.
    let tail = if p < 1.0 {
        (1.0 - p) * ((-p).ln_1p() - (-q).ln_1p())
    } else {
        0.0
    };
    Ok((head + tail).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub optimal_arm: Arm,
    /// One term per suboptimal row, in row order.
    pub row_terms: Vec<f64>,
    /// One term per suboptimal column, in column order.
    pub col_terms: Vec<f64>,
    /// Coefficient of `ln n`.
    pub total: f64,
    /// Row-major `K x L` allocation; zero outside the optimal row and column,
    /// including the optimal cell itself.
    pub allocation: Vec<Vec<f64>>,
}

impl LowerBoundReport {
    pub fn allocation_at(&self, arm: Arm) -> f64 {
        self.allocation[arm.row][arm.col]
    }
}

fn unique_optimum(instance: &Rank1Instance) -> Result<Arm> {
    let opt = optimal_arm(instance);
    if !opt.is_unique() {
        return Err(Error::NonUniqueOptimum);
    }
    Ok(opt.arm)
}

fn assemble(
    instance: &Rank1Instance,
    best: Arm,
    row_info: impl Fn(usize) -> Result<f64>,
    col_info: impl Fn(usize) -> Result<f64>,
) -> Result<LowerBoundReport> {
    let (k, l) = (instance.num_rows(), instance.num_cols());
    let w_star = instance.best_reward();
    let mut allocation = vec![vec![0.0; l]; k];
    let mut row_terms = Vec::with_capacity(k.saturating_sub(1));
    let mut col_terms = Vec::with_capacity(l.saturating_sub(1));
    for i in (0..k).filter(|&i| i != best.row) {
        let arm = Arm::new(i, best.col);
        let c = 1.0 / row_info(i)?;
        allocation[i][best.col] = c;
        row_terms.push((w_star - instance.expected_reward(arm)) * c);
    }
    for j in (0..l).filter(|&j| j != best.col) {
        let arm = Arm::new(best.row, j);
        let c = 1.0 / col_info(j)?;
        allocation[best.row][j] = c;
        col_terms.push((w_star - instance.expected_reward(arm)) * c);
    }
    let total = row_terms.iter().sum::<f64>() + col_terms.iter().sum::<f64>();
    Ok(LowerBoundReport {
        optimal_arm: best,
        row_terms,
        col_terms,
        total,
        allocation,
    })
}

fn positive_info(d: f64, what: &str) -> Result<f64> {
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NonIdentifiable(format!(
            "{what} has zero information"
        )))
    }
}

/// Closed-form Bernoulli lower bound and its allocation.
pub fn regret_lower_bound(instance: &Rank1Instance) -> Result<LowerBoundReport> {
    if instance.noise() != NoiseModel::Bernoulli {
        return Err(Error::InvalidParameter(
            "the KL lower bound needs Bernoulli noise; use the Gaussian bound instead".into(),
        ));
    }
    let best = unique_optimum(instance)?;
    let w_star = instance.best_reward();
    assemble(
        instance,
        best,
        |i| {
            let d = kl_bernoulli(instance.expected_reward(Arm::new(i, best.col)), w_star)?;
            positive_info(d, &format!("row {i}"))
        },
        |j| {
            let d = kl_bernoulli(instance.expected_reward(Arm::new(best.row, j)), w_star)?;
            positive_info(d, &format!("column {j}"))
        },
    )
}

/// Lower bound for Gaussian coordinates with common standard deviation
/// `sigma`: `(2 sigma^2 / v*) sum 1/gap_u(i) + (2 sigma^2 / u*) sum 1/gap_v(j)`.
pub fn gaussian_lower_bound(instance: &Rank1Instance, sigma: f64) -> Result<LowerBoundReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must be positive"
        )));
    }
    let best = unique_optimum(instance)?;
    let gaps = compute_gaps(instance)?;
    let u_star = instance.row_means()[best.row];
    let v_star = instance.col_means()[best.col];
    let two_var = 2.0 * sigma * sigma;
    assemble(
        instance,
        best,
        |i| {
            let diff = v_star * gaps.row_gaps[i];
            positive_info(diff * diff / two_var, &format!("row {i}"))
        },
        |j| {
            let diff = u_star * gaps.col_gaps[j];
            positive_info(diff * diff / two_var, &format!("column {j}"))
        },
    )
}

/// The relaxed program in the form `min cost . c` s.t. `A c >= 1`, `c >= 0`.
/// Variables are every cell except the optimal one (it appears in no
/// constraint and costs nothing).
#[derive(Debug, Clone)]
pub struct RelaxedProgram {
    pub cells: Vec<Arm>,
    pub cost: Vec<f64>,
    /// One row per constraint; suboptimal rows first, then suboptimal columns.
    pub constraints: Vec<Vec<f64>>,
}

impl RelaxedProgram {
    pub fn new(instance: &Rank1Instance) -> Result<Self> {
        let best = unique_optimum(instance)?;
        let (k, l) = (instance.num_rows(), instance.num_cols());
        let u = instance.row_means();
        let v = instance.col_means();
        let w_star = instance.best_reward();
        let cells: Vec<Arm> = (0..k)
            .flat_map(|i| (0..l).map(move |j| Arm::new(i, j)))
            .filter(|&a| a != best)
            .collect();
        let cost = cells
            .iter()
            .map(|&a| w_star - instance.expected_reward(a))
            .collect();
        let mut constraints = Vec::new();
        for i in (0..k).filter(|&i| i != best.row) {
            let row = cells
                .iter()
                .map(|a| {
                    if a.row == i {
                        kl_bernoulli(u[i] * v[a.col], u[best.row] * v[a.col])
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            constraints.push(row);
        }
        for j in (0..l).filter(|&j| j != best.col) {
            let row = cells
                .iter()
                .map(|a| {
                    if a.col == j {
                        kl_bernoulli(u[a.row] * v[j], u[a.row] * v[best.col])
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            constraints.push(row);
        }
        Ok(Self {
            cells,
            cost,
            constraints,
        })
    }

    pub fn objective(&self, c: &[f64]) -> f64 {
        self.cost.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    /// Smallest constraint slack `min_r (A c)_r - 1`.
    pub fn min_slack(&self, c: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() - 1.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Allocation matrix restricted to the program's variables.
    pub fn flatten(&self, allocation: &[Vec<f64>]) -> Vec<f64> {
        self.cells
            .iter()
            .map(|a| allocation[a.row][a.col])
            .collect()
    }

    /// Exact optimum by enumerating basic solutions of `A c - s = 1`.
    /// Practical only for a handful of constraints.
    pub fn solve_exact(&self) -> Result<f64> {
        let m = self.constraints.len();
        let n = self.cells.len();
        if m == 0 {
            return Ok(0.0);
        }
        let total = n + m;
        // Column `x` of the standard-form matrix: a cell, or a negated slack.
        let column = |x: usize| -> DVector<f64> {
            if x < n {
                DVector::from_iterator(m, self.constraints.iter().map(|row| row[x]))
            } else {
                let mut e = DVector::zeros(m);
                e[x - n] = -1.0;
                e
            }
        };
        let rhs = DVector::from_element(m, 1.0);
        let mut best = f64::INFINITY;
        let mut basis: Vec<usize> = (0..m).collect();
        loop {
            let mut b = DMatrix::zeros(m, m);
            for (slot, &x) in basis.iter().enumerate() {
                b.set_column(slot, &column(x));
            }
            if let Some(sol) = b.lu().solve(&rhs) {
                if sol.iter().all(|&s| s.is_finite() && s >= -1e-12) {
                    let value: f64 = basis
                        .iter()
                        .zip(sol.iter())
                        .filter(|(&x, _)| x < n)
                        .map(|(&x, &s)| self.cost[x] * s)
                        .sum();
                    best = best.min(value);
                }
            }
            if !next_combination(&mut basis, total) {
                break;
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Oracle("no feasible basic solution".into()))
        }
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    for pos in (0..m).rev() {
        if idx[pos] < n - m + pos {
            idx[pos] += 1;
            for next in pos + 1..m {
                idx[next] = idx[next - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Largest instance size accepted by [`verify_cstar_optimality`].
pub const MAX_VERIFY_SIDE: usize = 3;

/// Re-solves the relaxed program exactly and reports whether its optimum
/// matches the closed-form total within `1e-6` relative.
pub fn verify_cstar_optimality(instance: &Rank1Instance) -> Result<bool> {
    if instance.num_rows() > MAX_VERIFY_SIDE || instance.num_cols() > MAX_VERIFY_SIDE {
        return Err(Error::InvalidParameter(format!(
            "exact verification supports K, L <= {MAX_VERIFY_SIDE}"
        )));
    }
    let report = regret_lower_bound(instance)?;
    let program = RelaxedProgram::new(instance)?;
    let oracle = program.solve_exact()?;
    Ok((oracle - report.total).abs() <= 1e-6 * report.total.abs().max(f64::MIN_POSITIVE))
}

/// Moves mass `t` onto the interior cell `arm` (off the optimal row and
/// column) while shrinking `c*(arm.row, j*)` and `c*(i*, arm.col)` just enough
/// to stay feasible. Returns the change in objective, which is positive when
/// `c*` is optimal.
pub fn redistribution_delta(instance: &Rank1Instance, arm: Arm, t: f64) -> Result<f64> {
    let report = regret_lower_bound(instance)?;
    let best = report.optimal_arm;
    if arm.row == best.row || arm.col == best.col {
        return Err(Error::InvalidParameter(format!(
            "{arm:?} lies on the optimal row or column"
        )));
    }
    let u = instance.row_means();
    let v = instance.col_means();
    let row_info = kl_bernoulli(u[arm.row] * v[arm.col], u[best.row] * v[arm.col])?;
    let col_info = kl_bernoulli(u[arm.row] * v[arm.col], u[arm.row] * v[best.col])?;
    let row_anchor = Arm::new(arm.row, best.col);
    let col_anchor = Arm::new(best.row, arm.col);
    let row_d = 1.0 / report.allocation_at(row_anchor);
    let col_d = 1.0 / report.allocation_at(col_anchor);
    let new_row = ((1.0 - row_info * t) / row_d).max(0.0);
    let new_col = ((1.0 - col_info * t) / col_d).max(0.0);
    let w_star = instance.best_reward();
    let gap = |a: Arm| w_star - instance.expected_reward(a);
    Ok(gap(arm) * t
        + gap(row_anchor) * (new_row - report.allocation_at(row_anchor))
        + gap(col_anchor) * (new_col - report.allocation_at(col_anchor)))
}
