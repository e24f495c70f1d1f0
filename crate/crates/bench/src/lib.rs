//! Benchmark fixtures shared by the criterion benches.

use zakdd::channel::complex_gaussian;
use zakdd::seed::rng;
use zakdd::{GridParams, TDSequence, C64};

/// Grid with a 30 kHz Doppler period.
pub fn grid(m: usize, n: usize) -> GridParams {
    GridParams::new(m, n, 30e3).expect("valid grid")
}

/// Unit-variance complex Gaussian samples.
pub fn noise(len: usize, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    (0..len).map(|_| complex_gaussian(&mut r, 1.0)).collect()
}

/// Random unit-norm time-domain sequence.
pub fn random_td(g: GridParams, seed: u64) -> TDSequence {
    TDSequence::new(g, noise(g.mn(), seed)).expect("length MN").normalized()
}
