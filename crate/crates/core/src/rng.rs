//! Seeded random-number helpers. Every randomized routine in this crate
//! takes an explicit seed so diagnostics and probes are reproducible.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with i.i.d. uniform entries in [-1, 1].
pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Log-uniform magnitude in [lo, hi] with random sign. Used by probes that
/// must exercise several orders of magnitude evenly.
pub fn log_uniform_signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    let m = (rng.gen_range(lo.ln()..=hi.ln())).exp();
    if rng.gen::<bool>() {
        m
    } else {
        -m
    }
}
