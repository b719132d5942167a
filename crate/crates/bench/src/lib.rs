//! Shared problem generators for the criterion benches.

use shufreg::synth::{generate, SynthInstance};

/// Noisy synthetic instance with `d_x = 2`, `d_y = 1`.
pub fn instance(n: usize, seed: u64) -> SynthInstance {
    generate(n, 2, 1, 0.01, seed).expect("valid synthetic dimensions")
}
