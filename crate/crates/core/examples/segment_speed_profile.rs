//! Splits a two-bump speed profile into submovements.

use autogain::segmentation::{gaussian_smooth, persistence_extrema, segment_submovements, SegmentationConfig};

fn bump(n: usize, peak: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            peak * 16.0 * t * t * (1.0 - t) * (1.0 - t)
        })
        .collect()
}

fn main() -> autogain::Result<()> {
    let mut speeds = bump(30, 40.0);
    speeds.extend(bump(15, 8.0));
    // sensor jitter that should not split anything
    for (i, v) in speeds.iter_mut().enumerate() {
        *v += if i % 2 == 0 { 0.3 } else { 0.0 };
    }

    let cfg = SegmentationConfig::default();
    let smooth = gaussian_smooth(&speeds, cfg.sigma)?;
    let ext = persistence_extrema(&smooth, cfg.persistence);
    println!("minima {:?}", ext.minima);
    println!("maxima {:?}", ext.maxima);
    for p in &ext.pairs {
        println!("pair min {} max {} persistence {:.2}", p.min, p.max, p.persistence);
    }
    for s in segment_submovements(&speeds, &cfg)? {
        println!("submovement {}..{} peak at {}", s.start_idx, s.end_idx, s.peak_idx);
    }
    Ok(())
}
