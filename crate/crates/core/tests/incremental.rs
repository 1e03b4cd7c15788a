//! The incrementally maintained two-step state must equal a resolution from
//! scratch after every event, whatever the interleaving.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use tanglesim_core::testgen::{incremental_matches_batch, GrowthParams};

#[test]
fn incremental_equals_batch_small_sweep() {
    let params = GrowthParams {
        sites: 0, // unused by the event driver
        label_probability: 0.25,
        keys: 3,
        branches: 2,
    };
    for seed in 0..200u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        if let Err(msg) = incremental_matches_batch(&mut rng, 48, &params) {
            panic!("seed {seed}: {msg}");
        }
    }
}

#[test]
fn incremental_equals_batch_with_three_branches() {
    let params = GrowthParams {
        sites: 0,
        label_probability: 0.35,
        keys: 2,
        branches: 3,
    };
    for seed in 0..100u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(1_000_000 + seed);
        if let Err(msg) = incremental_matches_batch(&mut rng, 40, &params) {
            panic!("seed {seed}: {msg}");
        }
    }
}
