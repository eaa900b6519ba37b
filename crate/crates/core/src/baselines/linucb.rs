//! LinUCB on log-transformed rewards.
//!
//! `ln(u(i) v(j)) = ln u(i) + ln v(j)` is linear in the K + L indicator
//! features, so the policy regresses `ln max(w, eps)` on those features and
//! plays the arm with the largest optimistic estimate. The radius is the
//! self-normalized bound
//! `R sqrt(2 ln(det(V)^(1/2) det(lambda I)^(-1/2) / delta)) + sqrt(lambda) S`
//! with `R = |ln eps| / 2` (transformed rewards live in `[ln eps, 0]`) and
//! `S = sqrt(K + L) |ln eps|`.

use crate::baselines::design::Design;
use crate::model::{Arm, Policy};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinUcbParams {
    pub lambda: f64,
    /// Floor applied before the log transform.
    pub eps: f64,
    /// Multiplier on the confidence radius.
    pub scale: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct LinUcb {
    k: usize,
    l: usize,
    params: LinUcbParams,
    design: Design,
    response: Vec<f64>,
    noise_scale: f64,
    param_bound: f64,
}

/// `ln max(w, eps)`.
pub fn log_reward(w: f64, eps: f64) -> f64 {
    w.max(eps).ln()
}

impl LinUcb {
    pub fn new(k: usize, l: usize, params: LinUcbParams) -> Self {
        let d = k + l;
        let range = params.eps.ln().abs();
        Self {
            k,
            l,
            params,
            design: Design::new(d, params.lambda),
            response: vec![0.0; d],
            noise_scale: range / 2.0,
            param_bound: (d as f64).sqrt() * range,
        }
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn theta(&self) -> Vec<f64> {
        self.design.solve(&self.response)
    }

    pub fn radius(&self) -> f64 {
        let d = self.design.dim() as f64;
        let log_ratio = 0.5 * (self.design.log_det() - d * self.params.lambda.ln());
        let inner = 2.0 * (log_ratio - self.params.delta.ln());
        self.params.scale
            * (self.noise_scale * inner.max(0.0).sqrt()
                + self.params.lambda.sqrt() * self.param_bound)
    }
}

impl Policy for LinUcb {
    fn name(&self) -> String {
        "linucb".into()
    }

    fn choose(&mut self, _t: u64, _rng: &mut SimRng) -> Arm {
        let theta = self.theta();
        let beta = self.radius();
        let mut best = Arm::new(0, 0);
        let mut best_value = f64::NEG_INFINITY;
        for i in 0..self.k {
            for j in 0..self.l {
                let c = self.k + j;
                let value = theta[i] + theta[c] + beta * self.design.quad(i, c).max(0.0).sqrt();
                if value > best_value {
                    best_value = value;
                    best = Arm::new(i, j);
                }
            }
        }
        best
    }

    fn observe(&mut self, arm: Arm, reward: f64) {
        let y = log_reward(reward, self.params.eps);
        let c = self.k + arm.col;
        self.response[arm.row] += y;
        self.response[c] += y;
        self.design.add(arm.row, c);
    }
}
