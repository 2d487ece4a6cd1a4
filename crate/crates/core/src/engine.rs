//! The per-trial adaptation pipeline: segment the trial, evaluate each
//! submovement, update the aim-point estimate and apply the gain update.

use crate::analysis::{
    classified_aiming_error, classify, max_angular_deviation, projected_distance, span_slices,
    speed_occupancy, AimPointFilter, ClassificationConfig, KalmanConfig, SubmovementGeometry,
    SubmovementRecord, TargetSpec,
};
use crate::config::{OptimizerConfig, SessionConfig};
use crate::error::{Error, Result};
use crate::optimizer::{apply_update, compute_deltas, ChangeRate, UpdateBatch};
use crate::segmentation::{segment_submovements, speed_series, SegmentationConfig};
use crate::transfer::{apply_input, input_speed, CursorState, DeviceSpec, GainTable, InputEvent};

/// Everything the pipeline needs about one completed trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialInput<'a> {
    pub events: &'a [InputEvent],
    /// Cursor before the first event, then after each event: `events.len() + 1` points.
    pub cursor_path: &'a [(f64, f64)],
    pub target: TargetSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialAnalysis {
    pub records: Vec<SubmovementRecord>,
    pub batch: UpdateBatch,
    /// Aim-point estimates after each filter update in this trial.
    pub p_updates: Vec<f64>,
}

/// Integrates an event stream into a cursor path, starting at `cursor`.
pub fn integrate_cursor(
    events: &[InputEvent],
    g: &GainTable,
    d: &DeviceSpec,
    cursor: &mut CursorState,
) -> Vec<(f64, f64)> {
    let mut path = Vec::with_capacity(events.len() + 1);
    path.push(cursor.position());
    for e in events {
        *cursor = apply_input(e, g, d, *cursor);
        path.push(cursor.position());
    }
    path
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub device: DeviceSpec,
    pub segmentation: SegmentationConfig,
    pub classification: ClassificationConfig,
    pub kalman: KalmanConfig,
    pub optimizer: OptimizerConfig,
}

impl From<&SessionConfig> for EngineConfig {
    fn from(c: &SessionConfig) -> Self {
        EngineConfig {
            device: c.device.spec(),
            segmentation: c.segmentation,
            classification: c.classification,
            kalman: c.kalman,
            optimizer: c.optimizer,
        }
    }
}

/// Adaptation state carried across trials.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    rate: ChangeRate,
    table: GainTable,
    filter: AimPointFilter,
}

impl Engine {
    pub fn new(cfg: EngineConfig, table: GainTable) -> Result<Self> {
        Ok(Engine {
            rate: cfg.optimizer.rate()?,
            filter: AimPointFilter::new(&cfg.kalman),
            cfg,
            table,
        })
    }

    pub fn from_config(c: &SessionConfig) -> Result<Self> {
        Engine::new(c.into(), c.gain_table.build()?)
    }

    pub fn table(&self) -> &GainTable {
        &self.table
    }

    pub fn filter(&self) -> &AimPointFilter {
        &self.filter
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Segments and evaluates a trial, updating the aim-point filter, but
    /// leaves the gain table untouched apart from growth.
    pub fn analyze(&mut self, trial: TrialInput<'_>) -> Result<TrialAnalysis> {
        if trial.cursor_path.len() != trial.events.len() + 1 {
            return Err(Error::invalid(
                "cursor_path",
                format!(
                    "expected {} points for {} events, got {}",
                    trial.events.len() + 1,
                    trial.events.len(),
                    trial.cursor_path.len()
                ),
            ));
        }
        if trial.events.is_empty() {
            return Ok(TrialAnalysis {
                records: Vec::new(),
                batch: UpdateBatch::empty(self.table.len()),
                p_updates: Vec::new(),
            });
        }
        let d = self.cfg.device;
        let spans = segment_submovements(&speed_series(trial.events), &self.cfg.segmentation)?;

        if let Some(v) = spans
            .iter()
            .flat_map(|s| &trial.events[s.start_idx + 1..=s.end_idx])
            .map(|e| input_speed(e, &d))
            .reduce(f64::max)
        {
            let need = self.table.raw_bin(v).saturating_add(1);
            self.table.grow_to(need);
        }

        let target = (trial.target.cx, trial.target.cy);
        let mut geoms = Vec::with_capacity(spans.len());
        let mut parts = Vec::with_capacity(spans.len());
        for span in &spans {
            let (points, max_gap, owned) = span_slices(span, trial.events, trial.cursor_path);
            let (x0, y0) = points[0];
            let proj = projected_distance(points, target, d.res_out);
            geoms.push(SubmovementGeometry {
                d_target_mm: d.px_to_mm((target.0 - x0).hypot(target.1 - y0)),
                d_c_mm: proj.d_c_mm,
                max_ang_dev_deg: max_angular_deviation(points),
                max_gap_ms: max_gap,
                degenerate: proj.degenerate,
            });
            parts.push((points.to_vec(), speed_occupancy(owned, &d, &self.table)));
        }

        let classes = classify(&geoms, &self.cfg.classification);
        let mut p_updates = Vec::new();
        let mut records = Vec::with_capacity(spans.len());
        for (((span, g), c), (points, occupancy)) in
            spans.iter().zip(&geoms).zip(&classes).zip(parts)
        {
            if c.updates_aim_point() {
                if let Some(p) = self.filter.observe(g.d_target_mm, g.d_c_mm) {
                    p_updates.push(p);
                }
            }
            let p = self.filter.p;
            records.push(SubmovementRecord {
                span: *span,
                cursor_points: points,
                d_target_mm: g.d_target_mm,
                d_c_mm: g.d_c_mm,
                max_ang_dev_deg: g.max_ang_dev_deg,
                max_gap_ms: g.max_gap_ms,
                degenerate: g.degenerate,
                class: c.class,
                ballistic: c.ballistic,
                clutched: c.clutched,
                occupancy,
                p,
                aiming_error_mm: classified_aiming_error(
                    c,
                    p,
                    g.d_target_mm,
                    g.d_c_mm,
                    &self.cfg.classification,
                ),
            });
        }

        let entries: Vec<(f64, &_)> = records
            .iter()
            .filter_map(|r| match r.aiming_error_mm {
                Some(err) => Some((err, &r.occupancy)),
                None if self.cfg.optimizer.unaimed_claims_bins => Some((0.0, &r.occupancy)),
                None => None,
            })
            .collect();
        let batch = compute_deltas(&entries, self.rate, self.table.len())?;
        Ok(TrialAnalysis {
            records,
            batch,
            p_updates,
        })
    }

    /// Runs the whole pipeline on a selected trial and updates the gain table.
    pub fn process_trial(&mut self, trial: TrialInput<'_>) -> Result<TrialAnalysis> {
        let analysis = self.analyze(trial)?;
        apply_update(&mut self.table, &analysis.batch);
        Ok(analysis)
    }
}
