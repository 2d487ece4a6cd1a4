//! Per-submovement evaluation: geometry, classification, the aim-point
//! filter, aiming errors and speed occupancy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::SubmovementSpan;
use crate::transfer::{input_speed, DeviceSpec, GainTable, InputEvent};

/// A circular target. Centre in pixels, diameter in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub cx: f64,
    pub cy: f64,
    pub width_mm: f64,
}

impl TargetSpec {
    pub fn radius_px(&self, d: &DeviceSpec) -> f64 {
        d.mm_to_px(self.width_mm) / 2.0
    }

    pub fn contains(&self, d: &DeviceSpec, x: f64, y: f64) -> bool {
        (x - self.cx).hypot(y - self.cy) <= self.radius_px(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmovementClass {
    Normal,
    Interrupted,
    Unaimed,
}

impl SubmovementClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SubmovementClass::Normal => "normal",
            SubmovementClass::Interrupted => "interrupted",
            SubmovementClass::Unaimed => "unaimed",
        }
    }
}

/// Which aim point an interrupted, non-ballistic submovement is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterruptedAim {
    /// The target centre, like every other non-ballistic submovement.
    #[default]
    TargetCenter,
    /// The estimated aim point `p * d_target`.
    AimPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationConfig {
    pub max_angular_deviation_deg: f64,
    /// Overshoot beyond the target, as a fraction of `d_target`, that makes a
    /// submovement unaimed.
    pub overshoot_fraction: f64,
    /// Submovements covering less than this fraction of `d_target` are interrupted.
    pub interrupted_fraction: f64,
    pub clutch_gap_ms: f64,
    /// Number of normal submovements that are still ballistic.
    pub ballistic_normals: usize,
    pub interrupted_aim: InterruptedAim,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            max_angular_deviation_deg: 45.0,
            overshoot_fraction: 0.5,
            interrupted_fraction: 0.5,
            clutch_gap_ms: 130.0,
            ballistic_normals: 2,
            interrupted_aim: InterruptedAim::TargetCenter,
        }
    }
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("classification.max_angular_deviation_deg", self.max_angular_deviation_deg),
            ("classification.overshoot_fraction", self.overshoot_fraction),
            ("classification.interrupted_fraction", self.interrupted_fraction),
            ("classification.clutch_gap_ms", self.clutch_gap_ms),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Result of projecting a submovement onto the direction of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Signed distance covered toward the target, mm.
    pub d_c_mm: f64,
    /// Start coincided with the target centre, so the direction is undefined.
    pub degenerate: bool,
}

/// Distance a path covered toward the target centre, measured along the
/// line from its first point to the centre.
pub fn projected_distance(path: &[(f64, f64)], target: (f64, f64), res_out: f64) -> Projection {
    let (Some(&(x0, y0)), Some(&(x1, y1))) = (path.first(), path.last()) else {
        return Projection {
            d_c_mm: 0.0,
            degenerate: true,
        };
    };
    let (tx, ty) = (target.0 - x0, target.1 - y0);
    let dist = tx.hypot(ty);
    if dist < 1e-9 {
        return Projection {
            d_c_mm: 0.0,
            degenerate: true,
        };
    }
    let along = ((x1 - x0) * tx + (y1 - y0) * ty) / dist;
    Projection {
        d_c_mm: along / res_out,
        degenerate: false,
    }
}

/// Largest angle, in degrees, between the chord first->last and the segment
/// from the first point to any other point.
pub fn max_angular_deviation(path: &[(f64, f64)]) -> f64 {
    let (Some(&(x0, y0)), Some(&(xn, yn))) = (path.first(), path.last()) else {
        return 0.0;
    };
    let (cx, cy) = (xn - x0, yn - y0);
    let chord = cx.hypot(cy);
    if chord == 0.0 {
        return 0.0;
    }
    path[1..path.len() - 1]
        .iter()
        .filter_map(|&(x, y)| {
            let (px, py) = (x - x0, y - y0);
            (px != 0.0 || py != 0.0).then(|| {
                (px * cy - py * cx).abs().atan2(px * cx + py * cy).to_degrees()
            })
        })
        .fold(0.0, f64::max)
}

/// Inputs to classification for one submovement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmovementGeometry {
    pub d_target_mm: f64,
    pub d_c_mm: f64,
    pub max_ang_dev_deg: f64,
    /// Longest interval between consecutive events inside the span, ms.
    pub max_gap_ms: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: SubmovementClass,
    pub ballistic: bool,
    pub clutched: bool,
}

impl Classification {
    pub fn updates_gain(&self) -> bool {
        self.class != SubmovementClass::Unaimed
    }

    pub fn updates_aim_point(&self) -> bool {
        self.class == SubmovementClass::Normal && self.ballistic
    }
}

/// Classifies a trial's submovements, given in chronological order.
pub fn classify(geoms: &[SubmovementGeometry], cfg: &ClassificationConfig) -> Vec<Classification> {
    let last = geoms.len().saturating_sub(1);
    let mut normals = 0;
    geoms
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let clutched = i != last && g.max_gap_ms > cfg.clutch_gap_ms;
            let overshoot = (g.d_c_mm - g.d_target_mm).max(0.0);
            let class = if g.degenerate
                || g.max_ang_dev_deg > cfg.max_angular_deviation_deg
                || overshoot > cfg.overshoot_fraction * g.d_target_mm
            {
                SubmovementClass::Unaimed
            } else if g.d_c_mm < cfg.interrupted_fraction * g.d_target_mm || clutched {
                SubmovementClass::Interrupted
            } else {
                SubmovementClass::Normal
            };
            let ballistic = normals < cfg.ballistic_normals;
            if class == SubmovementClass::Normal {
                normals += 1;
            }
            Classification {
                class,
                ballistic,
                clutched,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanConfig {
    /// Process noise.
    pub q: f64,
    /// Measurement noise.
    pub r: f64,
    pub p0: f64,
    pub cov0: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            q: 0.2,
            r: 40.0,
            p0: 1.0,
            cov0: 1.0,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kalman.q", self.q), ("kalman.r", self.r), ("kalman.cov0", self.cov0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        if !self.p0.is_finite() {
            return Err(Error::invalid("kalman.p0", "must be finite"));
        }
        Ok(())
    }
}

/// Scalar random-walk Kalman filter tracking the aim fraction `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimPointFilter {
    pub p: f64,
    pub cov: f64,
    pub q: f64,
    pub r: f64,
}

impl AimPointFilter {
    pub fn new(cfg: &KalmanConfig) -> Self {
        AimPointFilter {
            p: cfg.p0,
            cov: cfg.cov0,
            q: cfg.q,
            r: cfg.r,
        }
    }

    /// Gain the next measurement will be weighted with.
    pub fn next_gain(&self) -> f64 {
        let predicted = self.cov + self.q;
        predicted / (predicted + self.r)
    }

    /// Predict and correct with a measured aim fraction.
    pub fn update(&mut self, z: f64) -> f64 {
        self.cov += self.q;
        let k = self.cov / (self.cov + self.r);
        self.p += k * (z - self.p);
        self.cov *= 1.0 - k;
        self.p
    }

    /// Feeds the covered fraction `d_c / d_target`. Skipped when `d_target` is 0.
    pub fn observe(&mut self, d_target: f64, d_c: f64) -> Option<f64> {
        (d_target > 0.0).then(|| self.update(d_c / d_target))
    }
}

/// Aiming error in mm: positive undershoots the aim point, negative overshoots.
pub fn aiming_error(p: f64, d_target: f64, d_c: f64, ballistic: bool) -> f64 {
    let d_aim = if ballistic { p * d_target } else { d_target };
    d_aim - d_c
}

/// Aiming error for a classified submovement, `None` when unaimed.
pub fn classified_aiming_error(
    c: &Classification,
    p: f64,
    d_target: f64,
    d_c: f64,
    cfg: &ClassificationConfig,
) -> Option<f64> {
    match c.class {
        SubmovementClass::Unaimed => None,
        SubmovementClass::Interrupted
            if !c.ballistic && cfg.interrupted_aim == InterruptedAim::AimPoint =>
        {
            Some(aiming_error(p, d_target, d_c, true))
        }
        _ => Some(aiming_error(p, d_target, d_c, c.ballistic)),
    }
}

/// Speed bins touched by a submovement.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpeedOccupancy {
    pub bits: Vec<bool>,
}

impl SpeedOccupancy {
    pub fn empty(bins: usize) -> Self {
        SpeedOccupancy {
            bits: vec![false; bins],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits.get(j).copied().unwrap_or(false)
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j)
    }
}

/// Marks the bin of every moving event. Stationary events do not touch any
/// bin. The array covers the table, extended if a growable table would need
/// more bins.
pub fn speed_occupancy(events: &[InputEvent], d: &DeviceSpec, g: &GainTable) -> SpeedOccupancy {
    let mut occ = SpeedOccupancy::empty(g.len());
    for e in events {
        let v = input_speed(e, d);
        if v <= 0.0 {
            continue;
        }
        let j = g.bin_index(v);
        if j >= occ.bits.len() {
            occ.bits.resize(j + 1, false);
        }
        occ.bits[j] = true;
    }
    occ
}

/// A fully evaluated submovement.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmovementRecord {
    pub span: SubmovementSpan,
    /// Cursor positions from the starting minimum to the ending minimum, px.
    pub cursor_points: Vec<(f64, f64)>,
    pub d_target_mm: f64,
    pub d_c_mm: f64,
    pub max_ang_dev_deg: f64,
    pub max_gap_ms: f64,
    pub degenerate: bool,
    pub class: SubmovementClass,
    pub ballistic: bool,
    pub clutched: bool,
    pub occupancy: SpeedOccupancy,
    /// Aim fraction used for the error, after any update from this submovement.
    pub p: f64,
    pub aiming_error_mm: Option<f64>,
}

impl SubmovementRecord {
    pub fn classification(&self) -> Classification {
        Classification {
            class: self.class,
            ballistic: self.ballistic,
            clutched: self.clutched,
        }
    }
}

/// Cursor points, longest event gap and moving events of a span.
///
/// `cursor_path[k + 1]` is the cursor after event `k`; a span owns events
/// `start_idx + 1 ..= end_idx`.
pub fn span_slices<'a>(
    span: &SubmovementSpan,
    events: &'a [InputEvent],
    cursor_path: &'a [(f64, f64)],
) -> (&'a [(f64, f64)], f64, &'a [InputEvent]) {
    let points = &cursor_path[span.start_idx + 1..=span.end_idx + 1];
    let owned = &events[span.start_idx + 1..=span.end_idx];
    let max_gap = events[span.start_idx..=span.end_idx]
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, f64::max);
    (points, max_gap, owned)
}
