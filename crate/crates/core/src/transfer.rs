//! Device-to-cursor transfer: unit conversion, the speed-binned gain table,
//! subpixel cursor integration and input smoothing.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest gain a table entry may hold after an update.
pub const DEFAULT_GAIN_FLOOR: f64 = 0.01;

/// Physical constants of the input device and the display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    /// Device resolution, counts per millimetre.
    pub res_in: f64,
    /// Event rate, events per second.
    pub freq_in: f64,
    /// Display resolution, pixels per millimetre.
    pub res_out: f64,
    pub screen_w: u32,
    pub screen_h: u32,
}

impl DeviceSpec {
    /// 400 CPI trackpad at 125 Hz on a 1280x800 px, 358 mm wide display.
    ///
    /// One count per event is 0.0079 m/s, the bin width used with this device.
    pub fn trackpad() -> Self {
        DeviceSpec {
            res_in: 400.0 / 25.4,
            freq_in: 125.0,
            res_out: 1280.0 / 358.0,
            screen_w: 1280,
            screen_h: 800,
        }
    }

    /// Hand tracker reporting millimetres at 60 Hz on the same display.
    pub fn hand_tracker() -> Self {
        DeviceSpec {
            res_in: 1.0,
            freq_in: 60.0,
            ..DeviceSpec::trackpad()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("device.res_in", self.res_in),
            ("device.freq_in", self.freq_in),
            ("device.res_out", self.res_out),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        if self.screen_w == 0 {
            return Err(Error::invalid("device.screen_w", "must be > 0"));
        }
        if self.screen_h == 0 {
            return Err(Error::invalid("device.screen_h", "must be > 0"));
        }
        Ok(())
    }

    /// (m/s) per count per event.
    pub fn c_in(&self) -> f64 {
        self.freq_in / (self.res_in * 1000.0)
    }

    /// Pixels per event per (m/s).
    pub fn c_out(&self) -> f64 {
        1000.0 * self.res_out / self.freq_in
    }

    pub fn event_interval_ms(&self) -> f64 {
        1000.0 / self.freq_in
    }

    pub fn px_to_mm(&self, px: f64) -> f64 {
        px / self.res_out
    }

    pub fn mm_to_px(&self, mm: f64) -> f64 {
        mm * self.res_out
    }

    pub fn screen_center(&self) -> (i64, i64) {
        (i64::from(self.screen_w / 2), i64::from(self.screen_h / 2))
    }
}

/// One raw device report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    /// Timestamp, milliseconds.
    pub t: f64,
    pub dx: i32,
    pub dy: i32,
}

impl InputEvent {
    pub fn new(t: f64, dx: i32, dy: i32) -> Self {
        InputEvent { t, dx, dy }
    }

    /// Euclidean displacement in counts, i.e. speed in counts per event.
    pub fn counts(&self) -> f64 {
        f64::from(self.dx).hypot(f64::from(self.dy))
    }
}

/// Input speed of one event in m/s.
pub fn input_speed(e: &InputEvent, d: &DeviceSpec) -> f64 {
    d.c_in() * e.counts()
}

/// Discrete gain function: one gain per input-speed interval
/// `[j * bin_width, (j + 1) * bin_width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    bin_width: f64,
    gains: Vec<f64>,
    floor: f64,
    max_bins: Option<usize>,
}

impl GainTable {
    /// Constant table. Does not grow.
    pub fn constant(bin_width: f64, bins: usize, gain: f64) -> Result<Self> {
        Self::from_gains(bin_width, vec![gain; bins])
    }

    pub fn from_gains(bin_width: f64, gains: Vec<f64>) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::invalid("gain_table.bin_width", "must be finite and > 0"));
        }
        if gains.is_empty() {
            return Err(Error::invalid("gain_table.bins", "table must have at least one bin"));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::invalid(
                "gain_table.gains",
                format!("gain {g} must be finite and > 0"),
            ));
        }
        Ok(GainTable {
            bin_width,
            gains,
            floor: DEFAULT_GAIN_FLOOR,
            max_bins: None,
        }
        .with_floor(DEFAULT_GAIN_FLOOR))
    }

    /// Lets the table append bins (initialised to the last gain) up to
    /// `max_bins` when faster speeds are observed.
    pub fn with_growth(mut self, max_bins: usize) -> Self {
        self.max_bins = Some(max_bins.max(self.gains.len()));
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        for g in &mut self.gains {
            *g = g.max(floor);
        }
        self
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn max_bins(&self) -> Option<usize> {
        self.max_bins
    }

    pub fn bin_start(&self, j: usize) -> f64 {
        j as f64 * self.bin_width
    }

    pub fn bin_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.bin_width
    }

    /// Unclamped bin index of a speed.
    pub fn raw_bin(&self, v: f64) -> usize {
        let j = (v / self.bin_width).floor();
        if j <= 0.0 {
            0
        } else if j >= usize::MAX as f64 {
            usize::MAX
        } else {
            j as usize
        }
    }

    /// Bin index of a speed, clamped to the bins this table may hold.
    /// Speeds past a non-growing table land in its last bin.
    pub fn bin_index(&self, v: f64) -> usize {
        let cap = self.max_bins.unwrap_or(self.gains.len());
        self.raw_bin(v).min(cap - 1)
    }

    /// Appends bins at the last gain until `bins` exist, within the growth cap.
    pub fn grow_to(&mut self, bins: usize) {
        let Some(cap) = self.max_bins else { return };
        let target = bins.min(cap);
        if target > self.gains.len() {
            let last = *self.gains.last().expect("non-empty table");
            self.gains.resize(target, last);
        }
    }

    /// Adds `delta` to bin `j` and clamps at the floor.
    pub(crate) fn add(&mut self, j: usize, delta: f64) {
        let g = &mut self.gains[j];
        *g = (*g + delta).max(self.floor);
    }

    /// Writes the `bin_start_mps,gain` snapshot format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_start_mps,gain")?;
        for (j, g) in self.gains.iter().enumerate() {
            writeln!(w, "{},{}", self.bin_start(j), g)?;
        }
        Ok(())
    }
}

/// Gain at speed `v`, interpolated linearly between bin centres and held
/// constant outside the first and last centre.
pub fn interpolate_gain(g: &GainTable, v: f64) -> f64 {
    let gains = &g.gains;
    let pos = v / g.bin_width - 0.5;
    if !(pos > 0.0) {
        return gains[0];
    }
    let lo = pos.floor();
    if lo >= (gains.len() - 1) as f64 {
        return gains[gains.len() - 1];
    }
    let j = lo as usize;
    let frac = pos - lo;
    gains[j] + (gains[j + 1] - gains[j]) * frac
}

/// One row of a gain snapshot file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SnapshotRow {
    pub bin_start_mps: f64,
    pub gain: f64,
}

/// Reads a `bin_start_mps,gain` snapshot. Rejects empty files, missing
/// headers, non-numeric fields and non-increasing bin starts.
pub fn read_snapshot<R: std::io::Read>(r: R, path: &str) -> Result<Vec<SnapshotRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["bin_start_mps", "gain"] {
        return Err(parse_err(path, 1, "expected header `bin_start_mps,gain`"));
    }
    let mut rows: Vec<SnapshotRow> = Vec::new();
    for (i, rec) in rdr.deserialize::<SnapshotRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if !(row.bin_start_mps.is_finite() && row.gain.is_finite()) {
            return Err(parse_err(path, line, "non-finite value"));
        }
        if let Some(prev) = rows.last() {
            if row.bin_start_mps <= prev.bin_start_mps {
                return Err(parse_err(path, line, "bin starts must be increasing"));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "snapshot has no rows"));
    }
    Ok(rows)
}

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

/// Rebuilds a table from snapshot rows. A single-row snapshot needs the bin
/// width from elsewhere.
pub fn table_from_snapshot(rows: &[SnapshotRow], bin_width: Option<f64>) -> Result<GainTable> {
    let w = match (bin_width, rows) {
        (Some(w), _) => w,
        (None, [a, b, ..]) => b.bin_start_mps - a.bin_start_mps,
        (None, _) => {
            return Err(Error::invalid(
                "gain_table.bin_width",
                "cannot infer bin width from a single-row snapshot",
            ))
        }
    };
    GainTable::from_gains(w, rows.iter().map(|r| r.gain).collect())
}

/// Reads a snapshot file from disk.
pub fn load_snapshot(path: &std::path::Path) -> Result<Vec<SnapshotRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(std::io::BufReader::new(f), &path.display().to_string())
}

/// Integer cursor position plus the fractional pixels not yet applied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CursorState {
    pub x: i64,
    pub y: i64,
    pub rx: f64,
    pub ry: f64,
}

impl CursorState {
    pub fn at(x: i64, y: i64) -> Self {
        CursorState { x, y, rx: 0.0, ry: 0.0 }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }
}

/// Floating pixel displacement one event produces under the gain table.
pub fn event_displacement(e: &InputEvent, g: &GainTable, d: &DeviceSpec) -> (f64, f64) {
    let gain = interpolate_gain(g, input_speed(e, d));
    let scale = d.c_out() * d.c_in() * gain;
    (scale * f64::from(e.dx), scale * f64::from(e.dy))
}

/// Moves the cursor by one event, carrying sub-pixel remainders forward.
pub fn apply_input(e: &InputEvent, g: &GainTable, d: &DeviceSpec, c: CursorState) -> CursorState {
    let (fx, fy) = event_displacement(e, g, d);
    let (x, rx) = step_axis(c.x, c.rx + fx, i64::from(d.screen_w));
    let (y, ry) = step_axis(c.y, c.ry + fy, i64::from(d.screen_h));
    CursorState { x, y, rx, ry }
}

fn step_axis(pos: i64, total: f64, extent: i64) -> (i64, f64) {
    let whole = total.trunc();
    let rem = total - whole;
    let next = pos + whole as i64;
    if next < 0 {
        (0, 0.0)
    } else if next >= extent {
        (extent - 1, 0.0)
    } else {
        (next, rem)
    }
}

/// Tuning of the 1€ filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneEuroConfig {
    /// Hz.
    pub min_cutoff: f64,
    pub beta: f64,
    /// Cutoff of the derivative low-pass, Hz.
    #[serde(default = "OneEuroConfig::default_d_cutoff")]
    pub d_cutoff: f64,
}

impl OneEuroConfig {
    fn default_d_cutoff() -> f64 {
        1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_cutoff > 0.0 && self.min_cutoff.is_finite()) {
            return Err(Error::invalid("device.one_euro.min_cutoff", "must be > 0"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("device.one_euro.beta", "must be >= 0"));
        }
        if !(self.d_cutoff > 0.0 && self.d_cutoff.is_finite()) {
            return Err(Error::invalid("device.one_euro.d_cutoff", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for OneEuroConfig {
    /// Tuning used with the hand tracker.
    fn default() -> Self {
        OneEuroConfig {
            min_cutoff: 1e-5,
            beta: 0.05,
            d_cutoff: 1.0,
        }
    }
}

/// Streaming 1€ filter over timestamped scalar samples.
#[derive(Debug, Clone)]
pub struct OneEuroFilter {
    cfg: OneEuroConfig,
    last: Option<(f64, f64, f64)>, // (t_ms, filtered value, filtered derivative)
}

impl OneEuroFilter {
    pub fn new(cfg: OneEuroConfig) -> Self {
        OneEuroFilter { cfg, last: None }
    }

    fn alpha(cutoff: f64, dt_s: f64) -> f64 {
        let tau = 1.0 / (2.0 * PI * cutoff);
        1.0 / (1.0 + tau / dt_s)
    }

    /// Filters one sample; `t_ms` must exceed the previous timestamp.
    pub fn filter(&mut self, t_ms: f64, x: f64) -> Result<f64> {
        let Some((t_prev, x_prev, dx_prev)) = self.last else {
            self.last = Some((t_ms, x, 0.0));
            return Ok(x);
        };
        if !(t_ms > t_prev) {
            return Err(Error::NonIncreasingTimestamps {
                index: 0,
                prev: t_prev,
                next: t_ms,
            });
        }
        let dt = (t_ms - t_prev) / 1000.0;
        let dx = (x - x_prev) / dt;
        let a_d = Self::alpha(self.cfg.d_cutoff, dt);
        let dx_hat = a_d * dx + (1.0 - a_d) * dx_prev;
        let cutoff = self.cfg.min_cutoff + self.cfg.beta * dx_hat.abs();
        let a = Self::alpha(cutoff, dt);
        let x_hat = a * x + (1.0 - a) * x_prev;
        self.last = Some((t_ms, x_hat, dx_hat));
        Ok(x_hat)
    }
}

/// Filters a whole `(t_ms, value)` stream. The first sample passes through.
pub fn one_euro_filter(samples: &[(f64, f64)], cfg: OneEuroConfig) -> Result<Vec<f64>> {
    let mut f = OneEuroFilter::new(cfg);
    samples
        .iter()
        .enumerate()
        .map(|(i, &(t, x))| {
            f.filter(t, x).map_err(|e| match e {
                Error::NonIncreasingTimestamps { prev, next, .. } => {
                    Error::NonIncreasingTimestamps { index: i, prev, next }
                }
                other => other,
            })
        })
        .collect()
}

/// Smooths an event stream by filtering the cumulative device position on
/// each axis and re-quantising the differences to whole counts.
pub fn smooth_events(events: &[InputEvent], cfg: OneEuroConfig) -> Result<Vec<InputEvent>> {
    let mut fx = OneEuroFilter::new(cfg);
    let mut fy = OneEuroFilter::new(cfg);
    let (mut px, mut py) = (0.0_f64, 0.0_f64);
    let (mut emitted_x, mut emitted_y) = (0_i64, 0_i64);
    let mut out = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        px += f64::from(e.dx);
        py += f64::from(e.dy);
        let wrap = |err: Error| match err {
            Error::NonIncreasingTimestamps { prev, next, .. } => {
                Error::NonIncreasingTimestamps { index: i, prev, next }
            }
            other => other,
        };
        let sx = fx.filter(e.t, px).map_err(wrap)?.round() as i64;
        let sy = fy.filter(e.t, py).map_err(wrap)?.round() as i64;
        out.push(InputEvent::new(e.t, (sx - emitted_x) as i32, (sy - emitted_y) as i32));
        emitted_x = sx;
        emitted_y = sy;
    }
    Ok(out)
}
