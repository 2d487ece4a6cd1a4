//! Smooths a jittery hand-tracker stream with the 1€ filter.

use autogain::transfer::{one_euro_filter, OneEuroConfig};

fn main() -> autogain::Result<()> {
    let cfg = OneEuroConfig { min_cutoff: 1.0, beta: 0.05, d_cutoff: 1.0 };
    let samples: Vec<(f64, f64)> = (0..60)
        .map(|k| {
            let t = k as f64 * 1000.0 / 60.0;
            let target = if k < 20 { 0.0 } else { 50.0 };
            let jitter = if k % 2 == 0 { 0.7 } else { -0.7 };
            (t, target + jitter)
        })
        .collect();
    let out = one_euro_filter(&samples, cfg)?;
    for ((t, raw), f) in samples.iter().zip(&out).step_by(4) {
        println!("{t:>7.1} ms  raw {raw:>6.1}  filtered {f:>7.2}");
    }
    Ok(())
}
