//! Bin-local gain update driven by submovement aiming errors.
//!
//! Each speed bin is corrected at most once per trial, by the latest
//! submovement that used it.

use serde::{Deserialize, Serialize};

use crate::analysis::SpeedOccupancy;
use crate::error::{Error, Result};
use crate::transfer::GainTable;

/// Gain change per millimetre of aiming error per submovement, mm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChangeRate(f64);

impl ChangeRate {
    /// Recommended starting point.
    pub const DEFAULT: ChangeRate = ChangeRate(5e-5);
    /// Rate used with the trackpad.
    pub const TRACKPAD: ChangeRate = ChangeRate(6.4e-5);
    /// Rate used with the hand tracker.
    pub const HAND_TRACKER: ChangeRate = ChangeRate(3.6e-5);

    /// Any finite non-negative rate. Zero freezes the table.
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c >= 0.0 {
            Ok(ChangeRate(c))
        } else {
            Err(Error::invalid("optimizer.change_rate", "must be finite and >= 0"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ChangeRate {
    fn default() -> Self {
        ChangeRate::DEFAULT
    }
}

/// Rate that changes a bin's gain by `delta_g` after `m` submovements whose
/// mean aiming error is `mu_r` mm.
pub fn change_rate_from_budget(delta_g: f64, m: f64, mu_r: f64) -> Result<ChangeRate> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(delta_g) && ok(m) && ok(mu_r)) {
        return Err(Error::ChangeRateInput { delta_g, m, mu_r });
    }
    Ok(ChangeRate(delta_g / (m * mu_r)))
}

/// Deltas for one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateBatch {
    pub bins: usize,
    /// Aiming error of each eligible submovement, trial order.
    pub errors: Vec<f64>,
    pub deltas: Vec<Vec<f64>>,
    /// Submovement that claimed each bin, if any.
    pub claimed_by: Vec<Option<usize>>,
}

impl UpdateBatch {
    pub fn empty(bins: usize) -> Self {
        UpdateBatch {
            bins,
            claimed_by: vec![None; bins],
            ..Default::default()
        }
    }

    /// Summed delta of bin `j`.
    pub fn total(&self, j: usize) -> f64 {
        self.claimed_by[j].map_or(0.0, |i| self.deltas[i][j])
    }
}

/// Turns aiming errors and occupancies into per-bin deltas, walking the
/// submovements from last to first so each bin goes to its latest user.
///
/// Every occupancy must have `bins` entries.
pub fn compute_deltas(
    entries: &[(f64, &SpeedOccupancy)],
    c: ChangeRate,
    bins: usize,
) -> Result<UpdateBatch> {
    if let Some((_, occ)) = entries.iter().find(|(_, o)| o.len() != bins) {
        return Err(Error::OccupancyLength {
            expected: bins,
            found: occ.len(),
        });
    }
    let mut batch = UpdateBatch::empty(bins);
    batch.errors = entries.iter().map(|(r, _)| *r).collect();
    batch.deltas = vec![vec![0.0; bins]; entries.len()];
    for (i, (r, occ)) in entries.iter().enumerate().rev() {
        let delta = c.0 * r;
        for j in occ.occupied() {
            if batch.claimed_by[j].is_none() {
                batch.claimed_by[j] = Some(i);
                batch.deltas[i][j] = delta;
            }
        }
    }
    Ok(batch)
}

/// Adds a batch to the table, growing it first if the batch is wider, and
/// clamps the touched bins at the floor.
pub fn apply_update(g: &mut GainTable, batch: &UpdateBatch) {
    if batch.bins > g.len() {
        g.grow_to(batch.bins);
    }
    for j in 0..batch.bins.min(g.len()) {
        if batch.claimed_by[j].is_some() {
            g.add(j, batch.total(j));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(bins: usize, on: &[usize]) -> SpeedOccupancy {
        let mut o = SpeedOccupancy::empty(bins);
        for &j in on {
            o.bits[j] = true;
        }
        o
    }

    #[test]
    fn budget_formula() {
        assert_eq!(change_rate_from_budget(1.0, 10_000.0, 2.0).unwrap().value(), 5e-5);
        assert_eq!(change_rate_from_budget(1.0, 1_000.0, 20.0).unwrap().value(), 5e-5);
        assert_eq!(change_rate_from_budget(2.0, 1.0, 1.0).unwrap().value(), 2.0);
        assert!(change_rate_from_budget(0.0, 1.0, 1.0).is_err());
        assert!(change_rate_from_budget(1.0, -3.0, 1.0).is_err());
    }

    #[test]
    fn single_submovement_delta() {
        let o = occ(6, &[2, 3]);
        let b = compute_deltas(&[(2.0, &o)], ChangeRate::new(5e-5).unwrap(), 6).unwrap();
        assert_eq!(b.deltas[0], vec![0.0, 0.0, 1e-4, 1e-4, 0.0, 0.0]);
    }

    #[test]
    fn later_submovement_claims_shared_bin() {
        let c = ChangeRate::new(5e-5).unwrap();
        let (a, b) = (occ(8, &[3, 4]), occ(8, &[4]));
        let batch = compute_deltas(&[(5.0, &a), (-1.0, &b)], c, 8).unwrap();
        assert_eq!(batch.total(4), -5e-5);
        assert_eq!(batch.deltas[0][4], 0.0);
        assert_eq!(batch.total(3), 5.0 * 5e-5);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let o = occ(4, &[1]);
        assert!(matches!(
            compute_deltas(&[(1.0, &o)], ChangeRate::DEFAULT, 5),
            Err(Error::OccupancyLength { expected: 5, found: 4 })
        ));
    }

    #[test]
    fn empty_batch_is_identity() {
        let mut g = GainTable::constant(0.01, 5, 1.3).unwrap();
        let before = g.clone();
        apply_update(&mut g, &compute_deltas(&[], ChangeRate::DEFAULT, 5).unwrap());
        assert_eq!(g, before);
    }

    #[test]
    fn repeated_undershoot_accumulates() {
        let mut g = GainTable::constant(0.01, 4, 1.0).unwrap();
        let o = occ(4, &[1]);
        for _ in 0..100 {
            let b = compute_deltas(&[(2.0, &o)], ChangeRate::new(5e-5).unwrap(), 4).unwrap();
            apply_update(&mut g, &b);
        }
        assert!((g.gains()[1] - 1.01).abs() < 1e-12);
        assert_eq!(g.gains()[0], 1.0);
    }

    #[test]
    fn floor_clamps_large_overshoot() {
        let mut g = GainTable::constant(0.01, 2, 0.5).unwrap();
        let o = occ(2, &[0]);
        let b = compute_deltas(&[(-1e6, &o)], ChangeRate::DEFAULT, 2).unwrap();
        apply_update(&mut g, &b);
        assert_eq!(g.gains()[0], g.floor());
    }

    #[test]
    fn wider_batch_grows_table() {
        let mut g = GainTable::constant(0.01, 2, 1.0).unwrap().with_growth(8);
        let o = occ(4, &[3]);
        let b = compute_deltas(&[(100.0, &o)], ChangeRate::new(1e-3).unwrap(), 4).unwrap();
        apply_update(&mut g, &b);
        assert_eq!(g.len(), 4);
        assert_eq!(g.gains()[2], 1.0);
        assert!((g.gains()[3] - 1.1).abs() < 1e-12);
    }
}
