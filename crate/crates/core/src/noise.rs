//! Counter-based Gaussian noise.
//!
//! Every draw is addressed by `(seed, particle, step, channel)`, so a
//! simulation produces the same numbers no matter how particles are
//! scheduled across threads.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;

/// Noise channels used by the closed-loop simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Channel {
    InitialState = 1,
    Process = 2,
    Measurement = 3,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a draw address into a stream key.
#[inline]
pub fn stream_key(seed: u64, particle: u64, step: u64, channel: Channel) -> u64 {
    let mut k = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    k = mix(k ^ particle);
    k = mix(k ^ step.wrapping_mul(0xd6e8_feb8_6659_fd93));
    mix(k ^ channel as u64)
}

/// Derives a child seed, e.g. one per RRT trial.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_add(0x632b_e59b_d9b4_e019))
}

/// Fills `out` with independent standard normals for one address.
#[inline]
pub fn standard_normals(seed: u64, particle: u64, step: u64, channel: Channel, out: &mut [f64]) {
    let mut rng = SplitMix64::seed_from_u64(stream_key(seed, particle, step, channel));
    for x in out.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }
}
