//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` are still run and reported; they
//! do not fail the target, but an unexpected failure does.

mod common;

use std::time::{Duration, Instant};

use autogain::analysis::{
    classify, AimPointFilter, ClassificationConfig, KalmanConfig, SpeedOccupancy, SubmovementClass,
    SubmovementGeometry,
};
use autogain::optimizer::{apply_update, change_rate_from_budget, compute_deltas, ChangeRate};
use autogain::segmentation::persistence_extrema;
use autogain::simulation::{generate_task, run_session, trend_slope};
use autogain::trajectory::{read_log, replay, trial_records, write_records};
use autogain::transfer::{apply_input, interpolate_gain, CursorState};
use autogain::{DeviceSpec, GainTable, InputEvent, SessionConfig};
use common::{brute_persistence, literal_update, Mix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Criteria that fail with the shipped defaults, with the reason.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    6,
    "block-10/block-1 mean |R| lands near 0.5 for the synthetic user; see README",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    o.detail = format!("{} [{:.2?}]", o.detail, el);
    if el > limit {
        o.pass = false;
        o.detail.push_str(&format!(" exceeded {limit:?}"));
    }
    o
}

fn c1_change_rate() -> Outcome {
    let c = change_rate_from_budget(1.0, 10_000.0, 2.0).unwrap().value();
    outcome(c == 5e-5, format!("C = {c:e}"))
}

fn c2_update_oracle() -> Outcome {
    let mut rng = Mix(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let bins = 1 + rng.below(16) as usize;
        let n = rng.below(7) as usize;
        let gains: Vec<f64> = (0..bins).map(|_| rng.range(0.05, 4.0)).collect();
        let errors: Vec<f64> = (0..n).map(|_| rng.range(-300.0, 300.0)).collect();
        let occ: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..bins).map(|_| rng.below(2) == 1).collect())
            .collect();
        let c = rng.range(0.0, 1e-3);

        let occupancies: Vec<SpeedOccupancy> = occ
            .iter()
            .map(|bits| SpeedOccupancy { bits: bits.clone() })
            .collect();
        let entries: Vec<(f64, &SpeedOccupancy)> = errors.iter().copied().zip(&occupancies).collect();
        let mut g = GainTable::from_gains(0.01, gains.clone()).unwrap();
        let batch = compute_deltas(&entries, ChangeRate::new(c).unwrap(), bins).unwrap();
        apply_update(&mut g, &batch);
        let want = literal_update(&gains, g.floor(), c, &errors, &occ);
        for (a, b) in g.gains().iter().zip(&want) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    outcome(worst <= 1e-12, format!("1000 trials, worst relative difference {worst:e}"))
}

fn c3_persistence_oracle() -> Outcome {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let mismatches: Vec<(usize, Option<Vec<f64>>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let mut checked = 0usize;
                    let mut bad = None;
                    let mut v = Vec::with_capacity(12);
                    for len in 1..=12u32 {
                        let total = 4u64.pow(len);
                        let mut code = t as u64;
                        while code < total {
                            v.clear();
                            let mut c = code;
                            for _ in 0..len {
                                v.push((c % 4) as f64);
                                c /= 4;
                            }
                            let got = persistence_extrema(&v, 0.2);
                            let want = brute_persistence(&v, 0.2);
                            let mut pairs: Vec<(usize, usize, f64)> =
                                got.pairs.iter().map(|p| (p.min, p.max, p.persistence)).collect();
                            pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                            let same = got.minima == want.minima
                                && got.maxima == want.maxima
                                && pairs == want.pairs
                                && got.global_max_index == want.global_max;
                            if !same && bad.is_none() {
                                bad = Some(v.clone());
                            }
                            checked += 1;
                            code += threads as u64;
                        }
                    }
                    (checked, bad)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let checked: usize = mismatches.iter().map(|m| m.0).sum();
    match mismatches.into_iter().find_map(|m| m.1) {
        None => outcome(true, format!("{checked} series identical")),
        Some(v) => outcome(false, format!("first mismatch on {v:?}")),
    }
}

fn c4_kalman() -> Outcome {
    let mut f = AimPointFilter::new(&KalmanConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..500 {
        f.update(0.94 + rng.random_range(-0.2..0.2));
    }
    outcome((f.p - 0.94).abs() < 0.02, format!("p = {:.4} after 500 updates (seed 42)", f.p))
}

fn c5_tasks() -> Outcome {
    let d = DeviceSpec::trackpad();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut prev = (640.0, 400.0);
    let mut counts = [0f64; 10];
    let mut bad = 0;
    for _ in 0..10_000 {
        let t = generate_task(&mut rng, &d, prev).unwrap();
        let dist = d.px_to_mm((t.target.cx - prev.0).hypot(t.target.cy - prev.1));
        let id_c = (1.0 + dist / t.target.width_mm).log2();
        let r = d.mm_to_px(t.target.width_mm) / 2.0;
        let on_screen = t.target.cx - r >= 0.0
            && t.target.cx + r <= 1280.0
            && t.target.cy - r >= 0.0
            && t.target.cy + r <= 800.0;
        if (id_c - t.id_bits).abs() >= 0.1 || !on_screen || !(2.0..5.5).contains(&t.id_bits) {
            bad += 1;
        }
        counts[(((t.id_bits - 2.0) / 0.35) as usize).min(9)] += 1.0;
        prev = (t.target.cx, t.target.cy);
    }
    let expected = 1000.0;
    let chi2: f64 = counts.iter().map(|o| (o - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
    outcome(
        bad == 0 && p > 0.01,
        format!("{bad} violations, chi2 = {chi2:.2}, p = {p:.3}"),
    )
}

fn c6_convergence() -> Outcome {
    let cfg = SessionConfig::trackpad();
    let out = run_session(&cfg).unwrap();
    let b = &out.metrics.blocks;
    let ratio = b[9].mean_abs_r_mm / b[0].mean_abs_r_mm;
    let subs: Vec<f64> = b.iter().map(|x| x.submovements_per_trial).collect();
    let slope = trend_slope(&subs);

    // bins used by at least a tenth of the selected trials
    let bins = out.final_table.len();
    let mut usage = vec![0usize; bins];
    let mut selected = 0;
    for t in &out.trials {
        if let Some(a) = &t.analysis {
            selected += 1;
            let mut used = vec![false; bins];
            for r in &a.records {
                for j in r.occupancy.occupied() {
                    used[j] = true;
                }
            }
            for (u, x) in usage.iter_mut().zip(used) {
                *u += usize::from(x);
            }
        }
    }
    let initial = |j: usize| out.initial_table.gains().get(j).copied().unwrap_or(1.0);
    let max_change = (0..bins)
        .filter(|&j| usage[j] * 10 >= selected)
        .map(|j| (out.final_table.gains()[j] - initial(j)).abs())
        .fold(0.0, f64::max);

    let (a, bb, c) = (ratio <= 0.5, slope < 0.0, max_change > 0.05);
    outcome(
        a && bb && c,
        format!(
            "(a) |R| block10/block1 = {:.3}/{:.3} = {ratio:.3} {}; (b) submovement slope {slope:.4} {}; (c) max change in common bins {max_change:.3} {}",
            b[9].mean_abs_r_mm,
            b[0].mean_abs_r_mm,
            if a { "ok" } else { "MISS" },
            if bb { "ok" } else { "MISS" },
            if c { "ok" } else { "MISS" },
        ),
    )
}

fn c7_zero_rate() -> Outcome {
    let mut cfg = SessionConfig::trackpad();
    cfg.optimizer.change_rate = 0.0;
    let out = run_session(&cfg).unwrap();
    let (g0, g1) = (&out.initial_table, &out.final_table);
    let n0 = g0.len();
    let stored = g1.gains()[..n0]
        .iter()
        .zip(g0.gains())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let last = g0.gains()[n0 - 1].to_bits();
    let appended = g1.gains()[n0..].iter().all(|g| g.to_bits() == last);
    let top = g1.bin_start(g1.len()) * 1.5;
    let curve = (0..=20_000)
        .map(|k| top * k as f64 / 20_000.0)
        .all(|v| interpolate_gain(g0, v).to_bits() == interpolate_gain(g1, v).to_bits());
    outcome(
        stored && appended && curve,
        format!(
            "{} stored bins identical, {} bins appended at the edge gain, curve identical: {curve}",
            n0,
            g1.len() - n0
        ),
    )
}

fn c8_replay() -> Outcome {
    let mut cfg = SessionConfig::trackpad();
    cfg.seed = 8;
    let out = run_session(&cfg).unwrap();
    let mut log = Vec::new();
    for t in &out.trials {
        write_records(&mut log, &trial_records(t)).unwrap();
    }
    let records = read_log(log.as_slice(), "memory").unwrap();
    let r = replay(&records, &cfg).unwrap();
    let same = r.table.len() == out.final_table.len()
        && r.table
            .gains()
            .iter()
            .zip(out.final_table.gains())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    outcome(same, format!("{} trials replayed, {} bins", r.selected_trials, r.table.len()))
}

fn c9_unit_conversion() -> Outcome {
    let mut rng = Mix(9);
    let (mut worst, mut carried): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let res = rng.range(0.5, 20.0);
        let d = DeviceSpec {
            res_in: res,
            res_out: res,
            freq_in: rng.range(30.0, 1000.0),
            screen_w: 1_000_000,
            screen_h: 1_000_000,
        };
        let g = GainTable::constant(rng.range(0.001, 0.1), 8, 1.0).unwrap();
        let mut c = CursorState::at(500_000, 500_000);
        let (mut cx, mut cy) = (0i64, 0i64);
        for k in 0..rng.below(300) {
            let e = InputEvent::new(
                k as f64,
                rng.below(41) as i32 - 20,
                rng.below(41) as i32 - 20,
            );
            cx += i64::from(e.dx);
            cy += i64::from(e.dy);
            c = apply_input(&e, &g, &d, c);
            let dx = (c.x - 500_000 - cx) as f64;
            let dy = (c.y - 500_000 - cy) as f64;
            worst = worst.max(dx.abs()).max(dy.abs());
            carried = carried.max((dx + c.rx).abs()).max((dy + c.ry).abs());
        }
    }
    outcome(
        worst <= 1.0 && carried < 1e-6,
        format!("500 random streams, worst pixel deviation {worst}, with remainder {carried:e}"),
    )
}

fn c10_classification() -> Outcome {
    let cfg = ClassificationConfig::default();
    let g = |d_c: f64, dev: f64, gap: f64| SubmovementGeometry {
        d_target_mm: 100.0,
        d_c_mm: d_c,
        max_ang_dev_deg: dev,
        max_gap_ms: gap,
        degenerate: false,
    };
    let class = |geo: SubmovementGeometry| classify(&[geo, g(90.0, 0.0, 8.0)], &cfg)[0];
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };
    check("44.9 deg", class(g(90.0, 44.9, 8.0)).class == SubmovementClass::Normal);
    check("45.1 deg", class(g(90.0, 45.1, 8.0)).class == SubmovementClass::Unaimed);
    check("0.49", class(g(49.0, 0.0, 8.0)).class == SubmovementClass::Interrupted);
    check("0.51", class(g(51.0, 0.0, 8.0)).class == SubmovementClass::Normal);
    let c129 = class(g(90.0, 0.0, 129.0));
    check("129 ms", !c129.clutched && c129.class == SubmovementClass::Normal);
    let c131 = class(g(90.0, 0.0, 131.0));
    check("131 ms", c131.clutched && c131.class == SubmovementClass::Interrupted);
    let last = classify(&[g(90.0, 0.0, 8.0), g(90.0, 0.0, 500.0)], &cfg)[1];
    check("final never clutched", !last.clutched && last.class == SubmovementClass::Normal);
    let only = classify(&[g(90.0, 0.0, 500.0)], &cfg)[0];
    check("single never clutched", !only.clutched);
    if fails.is_empty() {
        outcome(true, "all boundary cases classified as expected")
    } else {
        outcome(false, format!("wrong: {}", fails.join(", ")))
    }
}

fn main() {
    // `cargo test -- --list` and friends probe test binaries; nothing to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: Vec<(u32, &str, Duration, fn() -> Outcome)> = vec![
        (1, "change-rate formula", Duration::from_secs(1), c1_change_rate),
        (2, "gain update matches product form", Duration::from_secs(1), c2_update_oracle),
        (3, "persistence matches brute force", Duration::from_secs(120), c3_persistence_oracle),
        (4, "aim-point filter convergence", Duration::from_secs(1), c4_kalman),
        (5, "task randomizer", Duration::from_secs(10), c5_tasks),
        (6, "closed-loop convergence", Duration::from_secs(60), c6_convergence),
        (7, "zero change rate leaves gains unchanged", Duration::from_secs(60), c7_zero_rate),
        (8, "replay round trip", Duration::from_secs(60), c8_replay),
        (9, "unit conversion", Duration::from_secs(5), c9_unit_conversion),
        (10, "classification thresholds", Duration::from_secs(1), c10_classification),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, f) in criteria {
        let o = timed(limit, f);
        let known = EXPECTED_FAILURES.iter().find(|(k, _)| *k == id);
        println!(
            "{} criterion {id:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        match (o.pass, known) {
            (false, Some((_, why))) => println!("     expected failure: {why}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => println!("     listed as an expected failure but passed"),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
