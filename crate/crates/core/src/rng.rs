//! Seeded random streams.
//!
//! Every run draws from a xoshiro256++ generator seeded through SplitMix64
//! (the `seed_from_u64` expansion of `rand_xoshiro`). Streams for independent
//! replications are derived from a master seed with a single SplitMix64
//! finalizer over `(master, point, replication)`, so a sweep is reproducible
//! regardless of the order in which replications execute.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for every simulated run.
pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const POINT_MULT: u64 = 0xD1B5_4A32_D192_ED03;
const REP_MULT: u64 = 0xAEF1_7502_108E_F2D9;

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `replication` of sweep point `point`.
pub fn stream_seed(master: u64, point: u64, replication: u64) -> u64 {
    splitmix64(
        master
            ^ point.wrapping_add(1).wrapping_mul(POINT_MULT)
            ^ replication.wrapping_add(1).wrapping_mul(REP_MULT),
    )
}

pub fn sim_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
