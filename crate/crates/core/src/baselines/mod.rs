//! Comparison policies and the policy spec strings used by the CLI.
//!
//! Spec grammar: a name optionally followed by `:key=value,key=value`, e.g.
//! `ucb1`, `rank1elim`, `linucb:lambda=1,eps=0.01,scale=1`,
//! `glmucb:eps=0.01,scale=1`. `delta` defaults to `1 / n` for both linear
//! policies.

pub mod design;
pub mod em;
pub mod glmucb;
pub mod linucb;
pub mod ucb1;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use design::feature_vector;
pub use em::em_posterior;
pub use glmucb::{GlmUcb, GlmUcbParams};
pub use linucb::{LinUcb, LinUcbParams};
pub use ucb1::Ucb1;

use crate::error::{Error, Result};
use crate::model::Policy;
use crate::rank1elim::Rank1Elim;

pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Rank1Elim,
    Ucb1,
    LinUcb {
        lambda: f64,
        eps: f64,
        scale: f64,
        delta: Option<f64>,
    },
    GlmUcb {
        eps: f64,
        scale: f64,
        delta: Option<f64>,
    },
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Rank1Elim => "rank1elim",
            PolicySpec::Ucb1 => "ucb1",
            PolicySpec::LinUcb { .. } => "linucb",
            PolicySpec::GlmUcb { .. } => "glmucb",
        }
    }

    pub fn build(&self, k: usize, l: usize, horizon: u64) -> Result<Box<dyn Policy>> {
        let default_delta = 1.0 / horizon.max(1) as f64;
        Ok(match *self {
            PolicySpec::Rank1Elim => Box::new(Rank1Elim::new(k, l, horizon)?),
            PolicySpec::Ucb1 => Box::new(Ucb1::new(k, l)),
            PolicySpec::LinUcb {
                lambda,
                eps,
                scale,
                delta,
            } => Box::new(LinUcb::new(
                k,
                l,
                LinUcbParams {
                    lambda,
                    eps,
                    scale,
                    delta: delta.unwrap_or(default_delta),
                },
            )),
            PolicySpec::GlmUcb { eps, scale, delta } => Box::new(GlmUcb::new(
                k,
                l,
                GlmUcbParams {
                    eps,
                    scale,
                    delta: delta.unwrap_or(default_delta),
                    initial_estimate: 0.5,
                },
            )),
        })
    }
}

fn spec_error(spec: &str, reason: impl Into<String>) -> Error {
    Error::PolicySpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (text, None),
        };
        let mut pairs = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
                let (key, value) = item
                    .split_once('=')
                    .ok_or_else(|| spec_error(s, format!("expected key=value, got `{item}`")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| spec_error(s, format!("`{value}` is not a number")))?;
                pairs.push((key.trim().to_ascii_lowercase(), value));
            }
        }
        let mut take = |key: &str| -> Option<f64> {
            let pos = pairs.iter().position(|(k, _)| k == key)?;
            Some(pairs.remove(pos).1)
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "rank1elim" => PolicySpec::Rank1Elim,
            "ucb1" => PolicySpec::Ucb1,
            "linucb" => PolicySpec::LinUcb {
                lambda: take("lambda").unwrap_or(1.0),
                eps: take("eps").unwrap_or(DEFAULT_EPS),
                scale: take("scale").unwrap_or(1.0),
                delta: take("delta"),
            },
            "glmucb" => PolicySpec::GlmUcb {
                eps: take("eps").unwrap_or(DEFAULT_EPS),
                scale: take("scale").unwrap_or(1.0),
                delta: take("delta"),
            },
            other => return Err(spec_error(s, format!("unknown policy `{other}`"))),
        };
        if let Some((key, _)) = pairs.first() {
            return Err(spec_error(s, format!("unknown option `{key}`")));
        }
        spec.validate().map_err(|reason| spec_error(s, reason))?;
        Ok(spec)
    }
}

impl PolicySpec {
    fn validate(&self) -> std::result::Result<(), String> {
        let check_eps = |eps: f64| {
            if eps > 0.0 && eps < 1.0 {
                Ok(())
            } else {
                Err(format!("eps must be in (0, 1), got {eps}"))
            }
        };
        let check_delta = |delta: Option<f64>| match delta {
            Some(d) if !(d > 0.0 && d < 1.0) => Err(format!("delta must be in (0, 1), got {d}")),
            _ => Ok(()),
        };
        match *self {
            PolicySpec::Rank1Elim | PolicySpec::Ucb1 => Ok(()),
            PolicySpec::LinUcb {
                lambda,
                eps,
                scale,
                delta,
            } => {
                if !(lambda > 0.0) {
                    return Err(format!("lambda must be positive, got {lambda}"));
                }
                if !(scale >= 0.0) {
                    return Err(format!("scale must be non-negative, got {scale}"));
                }
                check_eps(eps)?;
                check_delta(delta)
            }
            PolicySpec::GlmUcb { eps, scale, delta } => {
                if !(scale >= 0.0) {
                    return Err(format!("scale must be non-negative, got {scale}"));
                }
                check_eps(eps)?;
                check_delta(delta)
            }
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Rank1Elim => write!(f, "rank1elim"),
            PolicySpec::Ucb1 => write!(f, "ucb1"),
            PolicySpec::LinUcb {
                lambda,
                eps,
                scale,
                delta,
            } => {
                write!(f, "linucb:lambda={lambda},eps={eps},scale={scale}")?;
                if let Some(d) = delta {
                    write!(f, ",delta={d}")?;
                }
                Ok(())
            }
            PolicySpec::GlmUcb { eps, scale, delta } => {
                write!(f, "glmucb:eps={eps},scale={scale}")?;
                if let Some(d) = delta {
                    write!(f, ",delta={d}")?;
                }
                Ok(())
            }
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(spec: PolicySpec) -> String {
        spec.to_string()
    }
}
