//! Runs the default trackpad session and prints per-block metrics.
//!
//! cargo run --example simulate_session -- [seed] [trials]

use autogain::simulation::run_session;
use autogain::SessionConfig;

fn main() -> autogain::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = SessionConfig::trackpad();
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    if let Some(n) = args.next() {
        cfg.session.trials = n.parse().expect("trials must be an integer");
    }
    let out = run_session(&cfg)?;
    println!("block  hits  mean|R|mm  subm/trial  time_s");
    for b in &out.metrics.blocks {
        println!(
            "{:>5} {:>5} {:>10.3} {:>11.3} {:>7.3}",
            b.block, b.hits, b.mean_abs_r_mm, b.submovements_per_trial, b.completion_proxy_s
        );
    }
    let c = out.metrics.class_counts;
    println!(
        "aborted {}  normal/ballistic {}  normal/corrective {}  interrupted {}  unaimed {}",
        out.metrics.aborted, c.normal_ballistic, c.normal_non_ballistic, c.interrupted, c.unaimed
    );
    println!("final p {:.3}", out.metrics.p_trace.last().copied().unwrap_or(f64::NAN));
    let g = out.final_table.gains();
    let shown: Vec<String> = g.iter().take(40).map(|v| format!("{v:.3}")).collect();
    println!("gains[..40] {}", shown.join(" "));
    Ok(())
}
