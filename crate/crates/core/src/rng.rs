//! Seeded random streams.
//!
//! Every replication draws from ChaCha8 keyed by the experiment's base seed.
//! Replication `r` uses stream `2r` for the environment and `2r + 1` for the
//! policy, so streams never overlap and do not depend on thread scheduling.
//! ChaCha's output is specified bit-for-bit, which keeps CSVs reproducible
//! across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by environments and policies.
pub type SimRng = ChaCha8Rng;

/// Which consumer a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Environment,
    Policy,
}

pub fn stream(base_seed: u64, replication: u64, role: StreamRole) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let offset = match role {
        StreamRole::Environment => 0,
        StreamRole::Policy => 1,
    };
    rng.set_stream(replication.wrapping_mul(2).wrapping_add(offset));
    rng
}
