//! Seeded randomness. All random data derives from one `u64` seed through
//! ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial `Σ a_k cos(k x) + b_k sin(k x)` over the
/// given integer modes, amplitudes uniform in `[-amp, amp]` and damped by
/// `1/k`. Returns `(mode, a, b)` triples.
pub fn fourier_coefficients(rng: &mut SeededRng, modes: &[u32], amp: f64) -> Vec<(u32, f64, f64)> {
    modes
        .iter()
        .map(|&k| {
            let d = amp / (k.max(1) as f64);
            (k, rng.gen_range(-d..=d), rng.gen_range(-d..=d))
        })
        .collect()
}

pub fn eval_fourier(coeffs: &[(u32, f64, f64)], x: f64) -> f64 {
    coeffs
        .iter()
        .map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
        .sum()
}
