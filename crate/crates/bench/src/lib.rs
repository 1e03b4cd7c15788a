//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use tanglesim_core::testgen::{random_tangle, GrowthParams};
use tanglesim_core::Tangle;

/// Deterministic tangle with a handful of resolved conflicts.
pub fn bench_tangle(sites: usize) -> Tangle {
    let mut rng = ChaCha12Rng::seed_from_u64(0x0BE0_0001);
    random_tangle(
        &mut rng,
        &GrowthParams {
            sites,
            label_probability: 0.01,
            keys: 3,
            branches: 2,
        },
    )
}
