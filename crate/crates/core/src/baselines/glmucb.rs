//! GLM-UCB with the exponential mean function.
//!
//! The parameter is `theta = (ln u_hat, ln v_hat)`, clipped to `[ln eps, 0]`, so
//! the predicted mean of arm `(i, j)` is `exp(theta_i + theta_{K+j}) =
//! u_hat(i) v_hat(j)`. Estimates are maintained by online EM: every reward
//! contributes its posterior expectations of the hidden row and column values
//! to per-row and per-column running sums, and the M-step sets each estimate
//! to its running average.
//!
//! The confidence radius is
//! `scale * (2 k_mu kappa R / c_mu) * sqrt(2 d ln t * ln(2 d / delta))`
//! with `k_mu = 1` (the slope of `exp` on `(-inf, 0]`), `R = 1/2`,
//! `kappa = sqrt(3 + 2 ln(1 + 2 |x|^2 / lambda))`, `|x|^2 = 2`, and
//! `c_mu = max(min_i u_hat(i) * min_j v_hat(j), eps^2)`.

use crate::baselines::design::Design;
use crate::baselines::em::em_posterior;
use crate::model::{Arm, Policy};
use crate::rng::SimRng;

const DESIGN_LAMBDA: f64 = 1.0;
const LIPSCHITZ: f64 = 1.0;
const NOISE_SCALE: f64 = 0.5;
const FEATURE_NORM_SQ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmUcbParams {
    pub eps: f64,
    pub scale: f64,
    pub delta: f64,
    /// Starting value of every row and column estimate.
    pub initial_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct GlmUcb {
    k: usize,
    l: usize,
    params: GlmUcbParams,
    row_est: Vec<f64>,
    col_est: Vec<f64>,
    row_success: Vec<f64>,
    row_exposure: Vec<f64>,
    col_success: Vec<f64>,
    col_exposure: Vec<f64>,
    design: Design,
    observed: u64,
}

impl GlmUcb {
    pub fn new(k: usize, l: usize, params: GlmUcbParams) -> Self {
        let init = params.initial_estimate.clamp(params.eps, 1.0);
        Self {
            k,
            l,
            params,
            row_est: vec![init; k],
            col_est: vec![init; l],
            row_success: vec![0.0; k],
            row_exposure: vec![0.0; k],
            col_success: vec![0.0; l],
            col_exposure: vec![0.0; l],
            design: Design::new(k + l, DESIGN_LAMBDA),
            observed: 0,
        }
    }

    pub fn row_estimates(&self) -> &[f64] {
        &self.row_est
    }

    pub fn col_estimates(&self) -> &[f64] {
        &self.col_est
    }

    /// `(ln u_hat, ln v_hat)`.
    pub fn theta(&self) -> Vec<f64> {
        self.row_est
            .iter()
            .chain(&self.col_est)
            .map(|x| x.ln())
            .collect()
    }

    pub fn predicted_mean(&self, arm: Arm) -> f64 {
        let theta_sum = self.row_est[arm.row].ln() + self.col_est[arm.col].ln();
        theta_sum.exp()
    }

    pub fn c_mu(&self) -> f64 {
        let min_u = self.row_est.iter().copied().fold(1.0, f64::min);
        let min_v = self.col_est.iter().copied().fold(1.0, f64::min);
        (min_u * min_v).max(self.params.eps * self.params.eps)
    }

    pub fn radius(&self, t: u64) -> f64 {
        let d = (self.k + self.l) as f64;
        let kappa = (3.0 + 2.0 * (1.0 + 2.0 * FEATURE_NORM_SQ / DESIGN_LAMBDA).ln()).sqrt();
        let log_t = (t.max(1) as f64).ln();
        let conf = (2.0 * d / self.params.delta).ln();
        self.params.scale * 2.0 * LIPSCHITZ * kappa * NOISE_SCALE / self.c_mu()
            * (2.0 * d * log_t * conf).sqrt()
    }

    /// Sets all estimates directly.
    pub fn set_estimates(&mut self, rows: &[f64], cols: &[f64]) {
        let (lo, hi) = (self.params.eps, 1.0);
        self.row_est = rows.iter().map(|x| x.clamp(lo, hi)).collect();
        self.col_est = cols.iter().map(|x| x.clamp(lo, hi)).collect();
    }

    /// One online EM step for reward `w` at `arm`. Rewards strictly between 0
    /// and 1 are treated as a mixture of a success and a failure.
    pub fn em_update(&mut self, arm: Arm, w: f64) {
        let eps = self.params.eps;
        let p = self.row_est[arm.row].clamp(eps, 1.0 - eps);
        let q = self.col_est[arm.col].clamp(eps, 1.0 - eps);
        let w = w.clamp(0.0, 1.0);
        let (u0, v0) = em_posterior(0.0, p, q).expect("p, q clamped inside (0, 1)");
        let eu = w + (1.0 - w) * u0;
        let ev = w + (1.0 - w) * v0;

        self.row_success[arm.row] += eu;
        self.row_exposure[arm.row] += 1.0;
        self.col_success[arm.col] += ev;
        self.col_exposure[arm.col] += 1.0;
        self.row_est[arm.row] =
            (self.row_success[arm.row] / self.row_exposure[arm.row]).clamp(eps, 1.0);
        self.col_est[arm.col] =
            (self.col_success[arm.col] / self.col_exposure[arm.col]).clamp(eps, 1.0);
    }
}

impl Policy for GlmUcb {
    fn name(&self) -> String {
        "glmucb".into()
    }

    fn choose(&mut self, _t: u64, _rng: &mut SimRng) -> Arm {
        let rho = self.radius(self.observed);
        let mut best = Arm::new(0, 0);
        let mut best_value = f64::NEG_INFINITY;
        for i in 0..self.k {
            for j in 0..self.l {
                let c = self.k + j;
                let value = self.row_est[i] * self.col_est[j]
                    + rho * self.design.quad(i, c).max(0.0).sqrt();
                if value > best_value {
                    best_value = value;
                    best = Arm::new(i, j);
                }
            }
        }
        best
    }

    fn observe(&mut self, arm: Arm, reward: f64) {
        self.em_update(arm, reward);
        self.design.add(arm.row, self.k + arm.col);
        self.observed += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_spike, Environment, SpikeSpec};
    use crate::rng::{stream, StreamRole};
    use rand::Rng;

    fn params() -> GlmUcbParams {
        GlmUcbParams {
            eps: 0.01,
            scale: 1.0,
            delta: 1e-4,
            initial_estimate: 0.5,
        }
    }

    #[test]
    fn unit_estimates_predict_one() {
        let mut p = GlmUcb::new(3, 2, params());
        p.set_estimates(&[1.0; 3], &[1.0; 2]);
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(p.predicted_mean(Arm::new(i, j)), 1.0);
            }
        }
        assert!(p.theta().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn c_mu_floor() {
        let mut p = GlmUcb::new(2, 2, params());
        p.set_estimates(&[0.0, 0.5], &[0.0, 0.5]);
        assert!((p.c_mu() - 1e-4).abs() < 1e-18);
        assert!((1.0 / p.c_mu() - 1e4).abs() < 1e-8);
        assert!(p.theta().iter().all(|&t| t >= 0.01f64.ln() && t <= 0.0));
    }

    /// Batch EM on per-arm success/failure counts, run to convergence from a
    /// uniform start.
    fn offline_em(succ: &[Vec<f64>], fail: &[Vec<f64>], init: f64) -> (Vec<f64>, Vec<f64>) {
        let (k, l) = (succ.len(), succ[0].len());
        let mut u = vec![init; k];
        let mut v = vec![init; l];
        for _ in 0..5000 {
            let mut nu = vec![0.0; k];
            let mut du = vec![0.0; k];
            let mut nv = vec![0.0; l];
            let mut dv = vec![0.0; l];
            for i in 0..k {
                for j in 0..l {
                    let (pu, pv) = (u[i], v[j]);
                    let miss = 1.0 - pu * pv;
                    let eu = pu * (1.0 - pv) / miss;
                    let ev = pv * (1.0 - pu) / miss;
                    nu[i] += succ[i][j] + fail[i][j] * eu;
                    du[i] += succ[i][j] + fail[i][j];
                    nv[j] += succ[i][j] + fail[i][j] * ev;
                    dv[j] += succ[i][j] + fail[i][j];
                }
            }
            u = (0..k).map(|i| nu[i] / du[i]).collect();
            v = (0..l).map(|j| nv[j] / dv[j]).collect();
        }
        (u, v)
    }

    #[test]
    fn online_em_converges_under_uniform_exploration() {
        let inst = make_spike(&SpikeSpec::new(4, 4, 0.7, 0.7, 0.2, 0.2)).unwrap();
        let env = Environment::Rank1(inst.clone());
        let mut p = GlmUcb::new(4, 4, params());
        let mut rng = stream(17, 0, StreamRole::Policy);
        let mut env_rng = stream(17, 0, StreamRole::Environment);
        let mut succ = vec![vec![0.0; 4]; 4];
        let mut fail = vec![vec![0.0; 4]; 4];
        for _ in 0..100_000 {
            let arm = Arm::new(rng.random_range(0..4), rng.random_range(0..4));
            let w = env.sample_reward(arm, &mut env_rng);
            p.em_update(arm, w);
            if w == 1.0 {
                succ[arm.row][arm.col] += 1.0;
            } else {
                fail[arm.row][arm.col] += 1.0;
            }
        }
        let (ou, ov) = offline_em(&succ, &fail, 0.5);
        for i in 0..4 {
            assert!(
                (p.row_estimates()[i] - inst.row_means()[i]).abs() < 0.05,
                "{:?}",
                p.row_estimates()
            );
            assert!(
                (p.col_estimates()[i] - inst.col_means()[i]).abs() < 0.05,
                "{:?}",
                p.col_estimates()
            );
            assert!((ou[i] - inst.row_means()[i]).abs() < 0.05, "offline {ou:?}");
            assert!((ov[i] - inst.col_means()[i]).abs() < 0.05, "offline {ov:?}");
        }
    }

    #[test]
    fn estimates_stay_in_range() {
        let mut p = GlmUcb::new(2, 2, params());
        for t in 0..1000 {
            p.observe(Arm::new(t % 2, 0), 0.0);
        }
        assert!(p.row_estimates().iter().all(|&x| (0.01..=1.0).contains(&x)));
        assert!(p.c_mu() >= 1e-4);
    }
}
