use super::config::{EnvSpec, ExperimentConfig};
use crate::baselines::PolicySpec;
use crate::env::SpikeSpec;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = ["table1-left", "table1-mid", "table1-right", "fig2"];

/// A named grid plus the knobs the CLI lets users override.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub grid: Vec<ExperimentConfig>,
}

const HORIZON: u64 = 2_000_000;
const REPS: u64 = 20;

fn spike_cell(spec: SpikeSpec, policy: PolicySpec) -> ExperimentConfig {
    ExperimentConfig::new(EnvSpec::Spike(spec), policy, HORIZON, REPS, 0)
}

/// Builds a named grid at full scale (`n = 2e6`, 20 replications).
pub fn preset(name: &str) -> Result<Preset> {
    let grid = match name {
        "table1-left" => {
            let mut grid = Vec::new();
            for k in [8, 16, 32] {
                for l in [8, 16, 32] {
                    grid.push(spike_cell(
                        SpikeSpec::new(k, l, 0.7, 0.7, 0.2, 0.2),
                        PolicySpec::Rank1Elim,
                    ));
                }
            }
            grid
        }
        "table1-mid" => {
            let mut grid = Vec::new();
            for p_u in [0.7, 0.35, 0.175] {
                for p_v in [0.7, 0.35, 0.175] {
                    grid.push(spike_cell(
                        SpikeSpec::new(8, 8, p_u, p_v, 0.2, 0.2),
                        PolicySpec::Rank1Elim,
                    ));
                }
            }
            grid
        }
        "table1-right" => {
            let mut grid = Vec::new();
            for d_u in [0.2, 0.1, 0.05] {
                for d_v in [0.2, 0.1, 0.05] {
                    grid.push(spike_cell(
                        SpikeSpec::new(8, 8, 0.7, 0.7, d_u, d_v),
                        PolicySpec::Rank1Elim,
                    ));
                }
            }
            grid
        }
        "fig2" => {
            let policies = ["rank1elim", "ucb1", "linucb", "glmucb"];
            let mut grid = Vec::new();
            for k in [16, 32, 64] {
                for p in policies {
                    grid.push(spike_cell(
                        SpikeSpec::new(k, k, 0.7, 0.7, 0.2, 0.2),
                        p.parse()?,
                    ));
                }
            }
            grid
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.to_string(),
        grid,
    })
}

impl Preset {
    pub fn with_horizon(mut self, n: u64) -> Self {
        for c in &mut self.grid {
            c.n = n;
            c.checkpoints = c.checkpoints.min(n as usize);
        }
        self
    }

    pub fn with_reps(mut self, reps: u64) -> Self {
        for c in &mut self.grid {
            c.reps = reps;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        for c in &mut self.grid {
            c.seed = seed;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert!(p.grid.iter().all(|c| c.n == 2_000_000 && c.reps == 20));
            assert!(p
                .grid
                .iter()
                .all(|c| c.validate().is_ok() && c.env.build().is_ok()));
        }
        assert_eq!(preset("table1-left").unwrap().grid.len(), 9);
        assert_eq!(preset("fig2").unwrap().grid.len(), 12);
        let mid = preset("table1-mid").unwrap();
        assert_eq!(mid.grid[8].env.spike().unwrap().p_v, 0.175);
        assert!(preset("table2").is_err());
        let small = preset("table1-right")
            .unwrap()
            .with_horizon(50)
            .with_reps(2);
        assert!(small
            .grid
            .iter()
            .all(|c| c.n == 50 && c.checkpoints == 50 && c.reps == 2));
    }
}
