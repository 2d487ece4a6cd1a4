//! Tracks the aim fraction from noisy covered/remaining ratios.

use autogain::analysis::{AimPointFilter, KalmanConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = KalmanConfig::default();
    let mut f = AimPointFilter::new(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 1..=500 {
        let d_target = rng.random_range(20.0..200.0);
        let d_c = d_target * (0.94 + rng.random_range(-0.2..0.2));
        let p = f.observe(d_target, d_c).expect("positive distance");
        if i % 50 == 0 {
            println!("update {i:>3}: p = {p:.4}");
        }
    }
    println!("aiming error for a 100 mm target covered 80 mm: {:.2} mm", f.p * 100.0 - 80.0);
}
