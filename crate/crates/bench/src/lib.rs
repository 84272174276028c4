//! Fixtures shared by the benchmarks.

use nclf_core::algebra::CPerpElement;
use nclf_core::{Dims, TripletEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cperp_triplets(n: usize, seed: u64) -> Vec<[CPerpElement; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| std::array::from_fn(|_| CPerpElement::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect()
}

/// Uniform random events with labels at a fixed base rate.
pub fn random_events(dims: Dims, n: usize, seed: u64) -> Vec<TripletEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            TripletEvent::new(
                rng.random_range(0..dims[0] as u32),
                rng.random_range(0..dims[1] as u32),
                rng.random_range(0..dims[2] as u32),
                rng.random_bool(0.57),
            )
        })
        .collect()
}
