//! Fixtures shared by the benchmarks.

use rbfront_core::kawasaki::KawasakiState;
use rbfront_core::{RngStream, TorusSite};

/// A uniform Kawasaki configuration on a `side × side` torus.
pub fn kawasaki_state(side: u32, n: usize, seed: u64) -> KawasakiState {
    let mut rng = RngStream::new(seed, 0).rng();
    KawasakiState::uniform(side, n, 2.0, 1.0, &mut rng).expect("fits on the torus")
}

/// `n` pseudo-random torus sites (duplicates allowed).
pub fn scattered_sites(side: u32, n: usize, seed: u64) -> Vec<TorusSite> {
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x % side as u64) as u32
    };
    (0..n).map(|_| TorusSite { x: next(), y: next(), side }).collect()
}
