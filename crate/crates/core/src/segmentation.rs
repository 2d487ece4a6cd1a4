//! Submovement segmentation of a trial's speed profile.
//!
//! The profile is smoothed with a truncated Gaussian, its extrema are paired
//! by 0-dimensional sublevel-set persistence, and every surviving
//! minimum-maximum-minimum triplet from the highest peak onward becomes a
//! submovement.
//!
//! Ties between equal samples are broken by index: of two equal values the
//! one with the lower index counts as lower. Zero-persistence pairs that this
//! creates on plateaus are dropped, and a maximum on a flat top is reported
//! at the first sample of the plateau.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::InputEvent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Gaussian kernel width, samples.
    pub sigma: f64,
    /// Minimum persistence of a retained min-max pair, in series units.
    pub persistence: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            sigma: 3.0,
            persistence: 0.2,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("segmentation.sigma", "must be > 0"));
        }
        if !(self.persistence.is_finite() && self.persistence >= 0.0) {
            return Err(Error::invalid("segmentation.persistence", "must be >= 0"));
        }
        Ok(())
    }
}

/// Per-event speed in counts per event.
pub fn speed_series(events: &[InputEvent]) -> Vec<f64> {
    events.iter().map(InputEvent::counts).collect()
}

/// Normalised Gaussian kernel truncated at `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Convolves with a Gaussian, replicating edge samples.
pub fn gaussian_smooth(values: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("segmentation.sigma", "must be > 0"));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let last = values.len() as i64 - 1;
    Ok((0..values.len() as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let j = (i + k as i64 - radius).clamp(0, last);
                    w * values[j as usize]
                })
                .sum()
        })
        .collect())
}

/// A minimum and the maximum that killed its component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub min: usize,
    pub max: usize,
    pub persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtremaSet {
    /// Sorted by index.
    pub minima: Vec<usize>,
    /// Sorted by index.
    pub maxima: Vec<usize>,
    /// Retained pairs in the order the filtration produced them.
    pub pairs: Vec<PersistencePair>,
    /// Highest retained maximum; the lowest index wins a tie.
    pub global_max_index: Option<usize>,
}

impl ExtremaSet {
    /// Extrema merged by index, `true` marking a maximum.
    pub fn merged(&self) -> Vec<(usize, bool)> {
        let mut all: Vec<(usize, bool)> = self
            .minima
            .iter()
            .map(|&i| (i, false))
            .chain(self.maxima.iter().map(|&i| (i, true)))
            .collect();
        all.sort_unstable();
        all
    }
}

fn lower(values: &[f64], a: usize, b: usize) -> bool {
    (values[a], a) < (values[b], b)
}

/// Start of the constant run that ends at `i`.
pub(crate) fn plateau_start(values: &[f64], mut i: usize) -> usize {
    while i > 0 && values[i - 1] == values[i] {
        i -= 1;
    }
    i
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Pairs extrema by persistence and keeps pairs of at least `threshold`.
///
/// The global minimum is always kept. Every retained maximum has a retained
/// minimum on each side, and retained extrema alternate by index.
pub fn persistence_extrema(values: &[f64], threshold: f64) -> ExtremaSet {
    let n = values.len();
    if n == 0 {
        return ExtremaSet::default();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| a.cmp(&b))
    });

    const UNSEEN: usize = usize::MAX;
    let mut parent = vec![UNSEEN; n];
    // Birth (minimum) of each component, stored at its root.
    let mut birth = vec![UNSEEN; n];
    let mut pairs = Vec::new();

    for &i in &order {
        let left = (i > 0 && parent[i - 1] != UNSEEN).then(|| i - 1);
        let right = (i + 1 < n && parent[i + 1] != UNSEEN).then_some(i + 1);
        match (left, right) {
            (None, None) => {
                parent[i] = i;
                birth[i] = i;
            }
            (Some(nb), None) | (None, Some(nb)) => {
                parent[i] = find(&mut parent, nb);
            }
            (Some(l), Some(r)) => {
                let rl = find(&mut parent, l);
                let rr = find(&mut parent, r);
                let (old, young) = if lower(values, birth[rl], birth[rr]) {
                    (rl, rr)
                } else {
                    (rr, rl)
                };
                let min = birth[young];
                pairs.push(PersistencePair {
                    min,
                    max: i,
                    persistence: values[i] - values[min],
                });
                parent[young] = old;
                parent[i] = old;
            }
        }
    }

    let global_min = order[0];
    let kept: Vec<PersistencePair> = pairs
        .into_iter()
        .filter(|p| p.persistence > 0.0 && p.persistence >= threshold)
        .map(|p| PersistencePair {
            max: plateau_start(values, p.max),
            ..p
        })
        .collect();

    let mut minima: Vec<usize> = kept.iter().map(|p| p.min).collect();
    minima.push(global_min);
    minima.sort_unstable();
    let mut maxima: Vec<usize> = kept.iter().map(|p| p.max).collect();
    maxima.sort_unstable();
    let global_max_index = maxima
        .iter()
        .copied()
        .reduce(|best, i| if values[i] > values[best] { i } else { best });

    ExtremaSet {
        minima,
        maxima,
        pairs: kept,
        global_max_index,
    }
}

/// Event indices of one submovement: two speed minima around a maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmovementSpan {
    pub start_idx: usize,
    pub peak_idx: usize,
    pub end_idx: usize,
}

/// Splits an already smoothed series into min-max-min triplets, starting
/// with the one around the highest maximum.
pub fn spans_from_extrema(ext: &ExtremaSet) -> Vec<SubmovementSpan> {
    let Some(global) = ext.global_max_index else {
        return Vec::new();
    };
    let merged = ext.merged();
    merged
        .windows(3)
        .filter_map(|w| match w {
            [(a, false), (p, true), (b, false)] if *p >= global => Some(SubmovementSpan {
                start_idx: *a,
                peak_idx: *p,
                end_idx: *b,
            }),
            _ => None,
        })
        .collect()
}

/// Smooths `speeds`, extracts extrema and returns the submovement spans.
pub fn segment_submovements(speeds: &[f64], cfg: &SegmentationConfig) -> Result<Vec<SubmovementSpan>> {
    let smooth = gaussian_smooth(speeds, cfg.sigma)?;
    Ok(spans_from_extrema(&persistence_extrema(&smooth, cfg.persistence)))
}
