//! Draws pointing tasks and shows their difficulty spread.

use autogain::simulation::generate_task;
use autogain::DeviceSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> autogain::Result<()> {
    let d = DeviceSpec::trackpad();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut from = (640.0, 400.0);
    let mut hist = [0usize; 7];
    for i in 0..5000 {
        let t = generate_task(&mut rng, &d, from)?;
        hist[((t.id_bits - 2.0) / 0.5) as usize] += 1;
        if i < 5 {
            println!(
                "target ({:.0}, {:.0}) px, width {:.1} mm, ID {:.2} bits (placed {:.2})",
                t.target.cx, t.target.cy, t.target.width_mm, t.id_bits, t.id_actual
            );
        }
        from = (t.target.cx, t.target.cy);
    }
    for (k, n) in hist.iter().enumerate() {
        let lo = 2.0 + 0.5 * k as f64;
        println!("{lo:.1}-{:.1} bits {:>5} {}", lo + 0.5, n, "#".repeat(n / 20));
    }
    Ok(())
}
