use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::PolicySpec;
use crate::env::{make_lowrank, make_spike, Environment, LowRankSpec, SpikeSpec};
use crate::error::{Error, Result};
use crate::model::Rank1Instance;

pub const DEFAULT_CHECKPOINTS: usize = 200;

/// Where the rewards come from.
///
/// JSON: `{"type": "spike", "K": 8, ...}`, `{"type": "instance", "u": [..], ...}`,
/// `{"type": "instance_file", "path": "..."}` or `{"type": "lowrank", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnvSpec {
    Spike(SpikeSpec),
    Instance(Rank1Instance),
    InstanceFile { path: PathBuf },
    Lowrank(LowRankSpec),
}

impl EnvSpec {
    pub fn build(&self) -> Result<Environment> {
        match self {
            EnvSpec::Spike(spec) => Ok(Environment::Rank1(make_spike(spec)?)),
            EnvSpec::Instance(inst) => Ok(Environment::Rank1(inst.clone())),
            EnvSpec::InstanceFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Ok(Environment::Rank1(Rank1Instance::from_json(&text)?))
            }
            EnvSpec::Lowrank(spec) => Ok(Environment::LowRank(make_lowrank(spec)?)),
        }
    }

    pub fn spike(&self) -> Option<&SpikeSpec> {
        match self {
            EnvSpec::Spike(s) => Some(s),
            _ => None,
        }
    }
}

/// CLI form: `spike:K=8,L=8,p_u=0.7,p_v=0.7,delta_u=0.2,delta_v=0.2`,
/// `instance:path/to/file.json` or
/// `lowrank:K=32,L=32,rank=5,leading_weight=10,seed=1`.
impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter(format!("environment `{s}`: {reason}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind == "instance" {
            if rest.is_empty() {
                return Err(bad("missing file path".into()));
            }
            return Ok(EnvSpec::InstanceFile { path: rest.into() });
        }
        let mut fields = HashMap::new();
        for item in rest.split(',').filter(|x| !x.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{item}`")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| bad(format!("`{value}` is not a number")))?;
            fields.insert(key.trim().to_string(), value);
        }
        let mut get = |key: &str, default: Option<f64>| {
            fields
                .remove(key)
                .or(default)
                .ok_or_else(|| bad(format!("missing `{key}`")))
        };
        let spec = match kind {
            "spike" => {
                let spec = SpikeSpec::new(
                    get("K", None)? as usize,
                    get("L", None)? as usize,
                    get("p_u", Some(0.7))?,
                    get("p_v", Some(0.7))?,
                    get("delta_u", Some(0.2))?,
                    get("delta_v", Some(0.2))?,
                );
                spec.validate()?;
                EnvSpec::Spike(spec)
            }
            "lowrank" => EnvSpec::Lowrank(LowRankSpec {
                k: get("K", None)? as usize,
                l: get("L", None)? as usize,
                rank: get("rank", None)? as usize,
                leading_weight: get("leading_weight", None)?,
                seed: get("seed", Some(0.0))? as u64,
            }),
            other => return Err(bad(format!("unknown kind `{other}`"))),
        };
        if let Some(key) = fields.keys().next() {
            return Err(bad(format!("unknown field `{key}`")));
        }
        Ok(spec)
    }
}

fn default_checkpoints() -> usize {
    DEFAULT_CHECKPOINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    pub n: u64,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec, policy: PolicySpec, n: u64, reps: u64, seed: u64) -> Self {
        Self {
            env,
            policy,
            n,
            reps,
            seed,
            checkpoints: DEFAULT_CHECKPOINTS.min(n as usize),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must be >= 3",
                self.n
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be >= 1".into()));
        }
        if self.checkpoints == 0 || self.checkpoints as u64 > self.n {
            return Err(Error::InvalidParameter(format!(
                "checkpoints = {} must be in [1, n]",
                self.checkpoints
            )));
        }
        Ok(())
    }

    /// Parses a JSON config. A missing `checkpoints` field means
    /// `min(200, n)`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut config: Self = serde_json::from_str(text)?;
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if raw.get("checkpoints").is_none() {
            config.checkpoints = DEFAULT_CHECKPOINTS.min(config.n as usize);
        }
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "env": {"type": "spike", "K": 4, "L": 3, "p_u": 0.5, "p_v": 0.5, "delta_u": 0.25, "delta_v": 0.25},
            "policy": "linucb:lambda=1,eps=0.01,scale=0.5",
            "n": 1000, "reps": 3, "seed": 9
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.checkpoints, DEFAULT_CHECKPOINTS);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(back, config);
        assert_eq!(config.env.build().unwrap().num_rows(), 4);
    }

    #[test]
    fn inline_instance_and_lowrank() {
        let text = r#"{"env": {"type": "instance", "K": 1, "L": 2, "u": [1.0], "v": [1.0, 0.5],
                       "noise": {"kind": "pointmass"}},
                       "policy": "ucb1", "n": 10, "reps": 1, "checkpoints": 5}"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.env.build().unwrap().best_reward(), 1.0);
        let text = r#"{"env": {"type": "lowrank", "K": 8, "L": 8, "rank": 2, "leading_weight": 5, "seed": 1},
                       "policy": "rank1elim", "n": 100, "reps": 2}"#;
        assert!(ExperimentConfig::from_json(text)
            .unwrap()
            .env
            .build()
            .is_ok());
    }

    #[test]
    fn parses_cli_strings() {
        let spec: EnvSpec = "spike:K=8,L=16,p_u=0.35,p_v=0.7,delta_u=0.2,delta_v=0.1"
            .parse()
            .unwrap();
        assert_eq!(
            spec,
            EnvSpec::Spike(SpikeSpec::new(8, 16, 0.35, 0.7, 0.2, 0.1))
        );
        let spec: EnvSpec = "spike:K=4,L=4".parse().unwrap();
        assert_eq!(
            spec,
            EnvSpec::Spike(SpikeSpec::new(4, 4, 0.7, 0.7, 0.2, 0.2))
        );
        let spec: EnvSpec = "lowrank:K=32,L=32,rank=5,leading_weight=10"
            .parse()
            .unwrap();
        assert!(matches!(
            spec,
            EnvSpec::Lowrank(LowRankSpec {
                rank: 5,
                seed: 0,
                ..
            })
        ));
        let spec: EnvSpec = "instance:data/x.json".parse().unwrap();
        assert_eq!(
            spec,
            EnvSpec::InstanceFile {
                path: "data/x.json".into()
            }
        );
        for bad in [
            "spike:L=4",
            "spike:K=4,L=4,q=1",
            "spike:K=4,L=4,p_u=0.9",
            "cube:K=1",
            "instance:",
        ] {
            assert!(bad.parse::<EnvSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn invariants() {
        let env = EnvSpec::Spike(SpikeSpec::new(2, 2, 0.5, 0.5, 0.25, 0.25));
        let mut c = ExperimentConfig::new(env, PolicySpec::Ucb1, 100, 2, 0);
        assert!(c.validate().is_ok());
        c.checkpoints = 101;
        assert!(c.validate().is_err());
        c.checkpoints = 10;
        c.n = 2;
        assert!(c.validate().is_err());
        c.n = 100;
        c.reps = 0;
        assert!(c.validate().is_err());
        let missing = EnvSpec::InstanceFile {
            path: "/nonexistent/instance.json".into(),
        };
        assert!(matches!(missing.build(), Err(Error::Io { .. })));
    }
}
