//! One trial's worth of gain update: errors and occupancies in, new table out.

use autogain::analysis::SpeedOccupancy;
use autogain::optimizer::{apply_update, change_rate_from_budget, compute_deltas};
use autogain::GainTable;

fn occupancy(bins: usize, used: std::ops::Range<usize>) -> SpeedOccupancy {
    let mut o = SpeedOccupancy::empty(bins);
    for j in used {
        o.bits[j] = true;
    }
    o
}

fn main() -> autogain::Result<()> {
    // gain change of 1 after 10 000 submovements erring by 2 mm on average
    let c = change_rate_from_budget(1.0, 10_000.0, 2.0)?;
    println!("C = {:e} per mm", c.value());

    let mut g = GainTable::constant(0.0079, 12, 1.0)?;
    // a long undershooting ballistic movement, then a short overshooting correction
    let first = occupancy(12, 0..10);
    let second = occupancy(12, 0..4);
    let batch = compute_deltas(&[(40.0, &first), (-3.0, &second)], c, g.len())?;
    apply_update(&mut g, &batch);
    for (j, gain) in g.gains().iter().enumerate() {
        println!("bin {j:>2} [{:.4}, {:.4}) m/s  claimed by {:?}  gain {gain:.6}",
            g.bin_start(j), g.bin_start(j + 1), batch.claimed_by[j]);
    }
    Ok(())
}
