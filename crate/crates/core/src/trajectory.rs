//! Trajectory logs, submovement reports and offline replay.
//!
//! A log is JSONL with one object per device event:
//! `{trial, t_ms, dx, dy, target_cx, target_cy, target_w_mm, click}`, plus
//! optional `cursor_x`/`cursor_y` holding the cursor after the event.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{SubmovementClass, SubmovementRecord, TargetSpec};
use crate::config::SessionConfig;
use crate::engine::{integrate_cursor, Engine, TrialInput};
use crate::error::{Error, Result};
use crate::simulation::TrialLog;
use crate::transfer::{CursorState, GainTable, InputEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub trial: usize,
    pub t_ms: f64,
    pub dx: i32,
    pub dy: i32,
    pub target_cx: f64,
    pub target_cy: f64,
    pub target_w_mm: f64,
    pub click: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor_y: Option<f64>,
}

impl EventRecord {
    pub fn event(&self) -> InputEvent {
        InputEvent::new(self.t_ms, self.dx, self.dy)
    }

    fn cursor(&self) -> Option<(f64, f64)> {
        self.cursor_x.zip(self.cursor_y)
    }
}

/// Reads a log, skipping blank lines. Errors name the 1-based line.
pub fn read_log<R: BufRead>(r: R, path: &str) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        let finite = [rec.t_ms, rec.target_cx, rec.target_cy, rec.target_w_mm]
            .iter()
            .all(|v| v.is_finite());
        if !finite || rec.target_w_mm <= 0.0 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: i + 1,
                reason: "non-finite value or non-positive target width".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_log(path: &std::path::Path) -> Result<Vec<EventRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_log(std::io::BufReader::new(f), &path.display().to_string())
}

/// Consecutive records sharing a trial number.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedTrial {
    pub trial: usize,
    pub target: TargetSpec,
    pub events: Vec<InputEvent>,
    /// Logged cursor after each event, when every record carries one.
    pub cursor_after: Option<Vec<(f64, f64)>>,
    pub selected: bool,
}

pub fn group_trials(records: &[EventRecord]) -> Vec<LoggedTrial> {
    records
        .chunk_by(|a, b| a.trial == b.trial)
        .map(|chunk| {
            let first = chunk[0];
            LoggedTrial {
                trial: first.trial,
                target: TargetSpec {
                    cx: first.target_cx,
                    cy: first.target_cy,
                    width_mm: first.target_w_mm,
                },
                events: chunk.iter().map(EventRecord::event).collect(),
                cursor_after: chunk.iter().map(EventRecord::cursor).collect(),
                selected: chunk.iter().any(|r| r.click),
            }
        })
        .collect()
}

/// Log records for simulated trials, cursor positions included. The last
/// event of a hit trial carries the click.
pub fn trial_records(trial: &TrialLog) -> Vec<EventRecord> {
    let n = trial.events.len();
    let t = &trial.task.target;
    trial
        .events
        .iter()
        .zip(&trial.cursor_path[1..])
        .enumerate()
        .map(|(k, (e, &(x, y)))| EventRecord {
            trial: trial.index,
            t_ms: e.t,
            dx: e.dx,
            dy: e.dy,
            target_cx: t.cx,
            target_cy: t.cy,
            target_w_mm: t.width_mm,
            click: trial.hit && k + 1 == n,
            cursor_x: Some(x),
            cursor_y: Some(y),
        })
        .collect()
}

pub fn write_records<W: Write>(mut w: W, records: &[EventRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// One line of the submovement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub trial: usize,
    pub index: usize,
    pub class: SubmovementClass,
    pub ballistic: bool,
    pub clutched: bool,
    pub d_target_mm: f64,
    pub d_c_mm: f64,
    pub max_ang_dev_deg: f64,
    #[serde(rename = "R_mm")]
    pub r_mm: Option<f64>,
    pub occupied_bins: Vec<usize>,
}

impl ReportLine {
    pub fn new(trial: usize, index: usize, r: &SubmovementRecord) -> Self {
        ReportLine {
            trial,
            index,
            class: r.class,
            ballistic: r.ballistic,
            clutched: r.clutched,
            d_target_mm: r.d_target_mm,
            d_c_mm: r.d_c_mm,
            max_ang_dev_deg: r.max_ang_dev_deg,
            r_mm: r.aiming_error_mm,
            occupied_bins: r.occupancy.occupied().collect(),
        }
    }
}

pub fn write_report<W: Write>(mut w: W, lines: &[ReportLine]) -> std::io::Result<()> {
    for l in lines {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub table: GainTable,
    pub report: Vec<ReportLine>,
    pub selected_trials: usize,
    pub p_trace: Vec<f64>,
}

/// Feeds logged trials through the adaptation pipeline in order. Trials
/// without a click are skipped but still move the cursor. Without logged
/// cursor positions the path is re-integrated with the evolving table.
pub fn replay(records: &[EventRecord], cfg: &SessionConfig) -> Result<ReplayOutcome> {
    let mut engine = Engine::from_config(cfg)?;
    let d = cfg.device.spec();
    let (cx, cy) = d.screen_center();
    let mut cursor = CursorState::at(cx, cy);
    let mut last_logged = cursor.position();
    let mut report = Vec::new();
    let mut p_trace = Vec::new();
    let mut selected_trials = 0;

    for trial in group_trials(records) {
        let path = match &trial.cursor_after {
            Some(after) => {
                let mut p = Vec::with_capacity(after.len() + 1);
                p.push(last_logged);
                p.extend(after);
                last_logged = *after.last().expect("non-empty trial");
                cursor = CursorState::at(last_logged.0 as i64, last_logged.1 as i64);
                p
            }
            None => {
                let p = integrate_cursor(&trial.events, engine.table(), &d, &mut cursor);
                last_logged = cursor.position();
                p
            }
        };
        if !trial.selected {
            continue;
        }
        selected_trials += 1;
        let analysis = engine.process_trial(TrialInput {
            events: &trial.events,
            cursor_path: &path,
            target: trial.target,
        })?;
        p_trace.extend(&analysis.p_updates);
        report.extend(
            analysis
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| ReportLine::new(trial.trial, i, r)),
        );
    }
    Ok(ReplayOutcome {
        table: engine.table().clone(),
        report,
        selected_trials,
        p_trace,
    })
}
