//! Closed-loop simulation with a synthetic user.
//!
//! The user aims each ballistic submovement at a fixed fraction of the
//! remaining distance, plans motor amplitude through a running estimate of
//! the gain, and executes minimum-jerk strokes with signal-dependent
//! amplitude noise. Strokes longer than the device allows are cut short by
//! clutching. After every selection the adaptation pipeline updates the
//! gain table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{SubmovementClass, TargetSpec};
use crate::config::{SessionConfig, UserModel};
use crate::engine::{Engine, TrialAnalysis, TrialInput};
use crate::error::{Error, Result};
use crate::transfer::{
    apply_input, CursorState, DeviceSpec, GainTable, InputEvent, OneEuroConfig, OneEuroFilter,
};

/// Bounds of the randomised pointing tasks.
pub const ID_RANGE: (f64, f64) = (2.0, 5.5);
pub const WIDTH_RANGE_MM: (f64, f64) = (2.0, 11.5);
pub const ID_TOLERANCE: f64 = 0.1;
pub const TASK_DRAW_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    /// Cursor position the task starts from, px.
    pub start: (f64, f64),
    pub target: TargetSpec,
    /// Requested index of difficulty, bits.
    pub id_bits: f64,
    /// Index of difficulty of the placed target, bits.
    pub id_actual: f64,
}

/// Fitts index of difficulty, bits.
pub fn index_of_difficulty(distance_mm: f64, width_mm: f64) -> f64 {
    (1.0 + distance_mm / width_mm).log2()
}

/// Draws a target whose difficulty from `prev_click` is within 0.1 bit of a
/// uniformly drawn ID, rejecting placements that leave the screen.
pub fn generate_task<R: Rng + ?Sized>(rng: &mut R, d: &DeviceSpec, prev_click: (f64, f64)) -> Result<Task> {
    let id = rng.random_range(ID_RANGE.0..ID_RANGE.1);
    let (w, h) = (f64::from(d.screen_w), f64::from(d.screen_h));
    for _ in 0..TASK_DRAW_CAP {
        let width_mm = rng.random_range(WIDTH_RANGE_MM.0..WIDTH_RANGE_MM.1);
        let cx = rng.random_range(0.0..w);
        let cy = rng.random_range(0.0..h);
        let dist_mm = d.px_to_mm((cx - prev_click.0).hypot(cy - prev_click.1));
        let id_c = index_of_difficulty(dist_mm, width_mm);
        if (id_c - id).abs() >= ID_TOLERANCE {
            continue;
        }
        let r = d.mm_to_px(width_mm) / 2.0;
        if cx - r < 0.0 || cx + r > w || cy - r < 0.0 || cy + r > h {
            continue;
        }
        return Ok(Task {
            start: prev_click,
            target: TargetSpec { cx, cy, width_mm },
            id_bits: id,
            id_actual: id_c,
        });
    }
    Err(Error::TaskRejectionCap { draws: TASK_DRAW_CAP })
}

/// What the user carries from one submovement to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    pub gain_belief: f64,
    /// Strokes planned in the current trial.
    pub issued: usize,
}

impl UserState {
    pub fn new(u: &UserModel) -> Self {
        UserState {
            gain_belief: u.initial_gain_belief,
            issued: 0,
        }
    }

    pub fn start_trial(&mut self) {
        self.issued = 0;
    }

    /// Folds the display/motor ratio of one stroke into the belief.
    pub fn observe_stroke(&mut self, u: &UserModel, display_mm: f64, motor_mm: f64) {
        if motor_mm > 0.0 {
            self.gain_belief += u.alpha * (display_mm / motor_mm - self.gain_belief);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    /// Display distance the user intends to cover, mm.
    pub intent_mm: f64,
    /// Device distance the user will move, mm.
    pub motor_mm: f64,
    /// Unit direction in screen space.
    pub direction: (f64, f64),
    /// Display-space aim point, px.
    pub aim: (f64, f64),
}

/// Plans the next stroke. The first two strokes of a trial aim at `p_user`
/// of the remaining distance; later ones aim at the centre.
pub fn plan_submovement(
    u: &UserModel,
    state: &mut UserState,
    cursor: (f64, f64),
    target: &TargetSpec,
    d: &DeviceSpec,
) -> Plan {
    let frac = if state.issued < 2 { u.p_user } else { 1.0 };
    state.issued += 1;
    let aim = (
        cursor.0 + frac * (target.cx - cursor.0),
        cursor.1 + frac * (target.cy - cursor.1),
    );
    let (vx, vy) = (aim.0 - cursor.0, aim.1 - cursor.1);
    let len = vx.hypot(vy);
    let direction = if len > 0.0 { (vx / len, vy / len) } else { (1.0, 0.0) };
    let intent_mm = d.px_to_mm(len);
    Plan {
        intent_mm,
        motor_mm: intent_mm / state.gain_belief,
        direction,
        aim,
    }
}

/// Relative speed of a minimum-jerk stroke at normalised time `tau`.
pub fn min_jerk_speed(tau: f64) -> f64 {
    30.0 * tau * tau * (1.0 - tau) * (1.0 - tau)
}

/// Number of events a stroke of `amplitude_mm` lasts.
pub fn stroke_events(u: &UserModel, d: &DeviceSpec, amplitude_mm: f64) -> usize {
    let amp_m = amplitude_mm / 1000.0;
    let peak = u.peak_speed_scale * (amplitude_mm / 100.0).sqrt();
    let n = if peak > 0.0 {
        (1.875 * amp_m / peak * d.freq_in).round() as usize
    } else {
        0
    };
    n.max(u.events_per_submovement)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub events: Vec<InputEvent>,
    /// Device distance actually moved, mm, before count quantisation.
    pub realized_mm: f64,
    /// The stroke hit the device edge and the user will clutch.
    pub clutched: bool,
}

/// Renders a plan as raw device events starting at `t0` ms. Speeds follow a
/// minimum-jerk bell that is zero at both ends; counts are rounded
/// cumulatively so the total matches the realised amplitude. When the
/// stroke is longer than the device range it is cut off mid-motion at the
/// range limit, which is where the user clutches.
pub fn execute_submovement<R: Rng + ?Sized>(
    plan: &Plan,
    u: &UserModel,
    d: &DeviceSpec,
    rng: &mut R,
    t0: f64,
) -> Stroke {
    let planned = plan.motor_mm.max(0.0);
    let amplitude = if u.noise_k > 0.0 && planned > 0.0 {
        Normal::new(planned, u.noise_k * planned)
            .expect("finite sd")
            .sample(rng)
            .max(0.0)
    } else {
        planned
    };
    let limit = u.device_range_mm.filter(|&r| amplitude > r);

    let n = stroke_events(u, d, amplitude);
    let weights: Vec<f64> = (0..n)
        .map(|k| min_jerk_speed(k as f64 / (n - 1) as f64))
        .collect();
    let total: f64 = weights.iter().sum();
    let (ux, uy) = plan.direction;
    let dt = d.event_interval_ms();
    let mut cum = 0.0;
    let (mut sent_x, mut sent_y) = (0_i64, 0_i64);
    let mut events = Vec::with_capacity(n);
    for (k, w) in weights.iter().enumerate() {
        cum += w / total;
        let mm = match limit {
            Some(r) => (amplitude * cum).min(r),
            None => amplitude * cum,
        };
        let tx = (mm * d.res_in * ux).round() as i64;
        let ty = (mm * d.res_in * uy).round() as i64;
        events.push(InputEvent::new(
            t0 + k as f64 * dt,
            (tx - sent_x) as i32,
            (ty - sent_y) as i32,
        ));
        sent_x = tx;
        sent_y = ty;
        if limit.is_some_and(|r| mm >= r) {
            break;
        }
    }
    Stroke {
        events,
        realized_mm: limit.unwrap_or(amplitude),
        clutched: limit.is_some(),
    }
}

/// Stateful 1€ smoothing of device motion, per axis on cumulative position.
#[derive(Debug, Clone)]
struct EventSmoother {
    fx: OneEuroFilter,
    fy: OneEuroFilter,
    raw: (f64, f64),
    sent: (i64, i64),
}

impl EventSmoother {
    fn new(cfg: OneEuroConfig) -> Self {
        EventSmoother {
            fx: OneEuroFilter::new(cfg),
            fy: OneEuroFilter::new(cfg),
            raw: (0.0, 0.0),
            sent: (0, 0),
        }
    }

    fn push(&mut self, e: InputEvent) -> Result<InputEvent> {
        self.raw.0 += f64::from(e.dx);
        self.raw.1 += f64::from(e.dy);
        let sx = self.fx.filter(e.t, self.raw.0)?.round() as i64;
        let sy = self.fy.filter(e.t, self.raw.1)?.round() as i64;
        let out = InputEvent::new(e.t, (sx - self.sent.0) as i32, (sy - self.sent.1) as i32);
        self.sent = (sx, sy);
        Ok(out)
    }
}

/// One target acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub index: usize,
    pub task: Task,
    pub events: Vec<InputEvent>,
    /// `events.len() + 1` cursor positions, px.
    pub cursor_path: Vec<(f64, f64)>,
    /// Strokes the user executed, clutch continuations included.
    pub strokes: usize,
    /// Index of the first event of each stroke.
    pub stroke_starts: Vec<usize>,
    pub hit: bool,
    /// Pipeline output; empty for aborted trials.
    pub analysis: Option<TrialAnalysis>,
}

impl TrialLog {
    /// Seconds of event stream: event count over the event rate.
    pub fn completion_proxy_s(&self, d: &DeviceSpec) -> f64 {
        self.events.len() as f64 / d.freq_in
    }

    pub fn input(&self) -> TrialInput<'_> {
        TrialInput {
            events: &self.events,
            cursor_path: &self.cursor_path,
            target: self.task.target,
        }
    }
}

/// Immutable inputs of a trial run.
#[derive(Debug, Clone, Copy)]
pub struct TrialContext<'a> {
    pub user: &'a UserModel,
    pub device: &'a DeviceSpec,
    pub table: &'a GainTable,
    pub smoothing: Option<OneEuroConfig>,
    pub max_submovements: usize,
}

/// Runs plan, execute and transfer until the cursor is on the target or the
/// stroke cap is reached. The cursor carries over to the next trial.
pub fn run_trial<R: Rng + ?Sized>(
    ctx: &TrialContext<'_>,
    state: &mut UserState,
    cursor: &mut CursorState,
    task: &Task,
    index: usize,
    rng: &mut R,
) -> Result<TrialLog> {
    let d = ctx.device;
    let u = ctx.user;
    state.start_trial();
    let mut smoother = ctx.smoothing.map(EventSmoother::new);
    let mut events = Vec::new();
    let mut cursor_path = vec![cursor.position()];
    let mut stroke_starts = Vec::new();
    let mut t = 0.0;
    let mut hit = task.target.contains(d, cursor.position().0, cursor.position().1);
    let mut strokes = 0;

    while !hit && strokes < ctx.max_submovements {
        let plan = plan_submovement(u, state, cursor.position(), &task.target, d);
        let stroke = execute_submovement(&plan, u, d, rng, t);
        strokes += 1;
        stroke_starts.push(events.len());
        let before = cursor.position();
        let (mut mx, mut my) = (0_i64, 0_i64);
        for raw in &stroke.events {
            mx += i64::from(raw.dx);
            my += i64::from(raw.dy);
            let e = match smoother.as_mut() {
                Some(s) => s.push(*raw)?,
                None => *raw,
            };
            *cursor = apply_input(&e, ctx.table, d, *cursor);
            cursor_path.push(cursor.position());
            events.push(e);
        }
        t = stroke.events.last().map_or(t, |e| e.t) + d.event_interval_ms();
        let after = cursor.position();
        let display_mm = d.px_to_mm((after.0 - before.0).hypot(after.1 - before.1));
        let motor_mm = (mx as f64).hypot(my as f64) / d.res_in;
        state.observe_stroke(u, display_mm, motor_mm);
        if stroke.clutched {
            t += u.clutch_gap_ms;
        }
        hit = task.target.contains(d, after.0, after.1);
    }

    Ok(TrialLog {
        index,
        task: *task,
        events,
        cursor_path,
        strokes,
        stroke_starts,
        hit,
        analysis: None,
    })
}

/// Aggregates of one block of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetrics {
    pub block: usize,
    pub trials: usize,
    pub hits: usize,
    /// Mean |R| over submovements with an aiming error, mm.
    pub mean_abs_r_mm: f64,
    /// Segmented submovements per selected trial.
    pub submovements_per_trial: f64,
    /// Mean completion proxy of selected trials, s.
    pub completion_proxy_s: f64,
    /// Gain table at the end of the block.
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionMetrics {
    pub blocks: Vec<BlockMetrics>,
    /// Aim-point estimate after every filter update.
    pub p_trace: Vec<f64>,
    pub aborted: usize,
    pub class_counts: ClassCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub normal_ballistic: usize,
    pub normal_non_ballistic: usize,
    pub interrupted: usize,
    pub unaimed: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.normal_ballistic + self.normal_non_ballistic + self.interrupted + self.unaimed
    }
}

impl SessionMetrics {
    /// Writes `block,mean_abs_R_mm,submovements_per_trial,completion_proxy_s`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "block,mean_abs_R_mm,submovements_per_trial,completion_proxy_s")?;
        for b in &self.blocks {
            writeln!(
                w,
                "{},{},{},{}",
                b.block, b.mean_abs_r_mm, b.submovements_per_trial, b.completion_proxy_s
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub metrics: SessionMetrics,
    pub trials: Vec<TrialLog>,
    pub final_table: GainTable,
    pub initial_table: GainTable,
}

#[derive(Default)]
struct BlockAccumulator {
    trials: usize,
    hits: usize,
    abs_r: Vec<f64>,
    submovements: usize,
    completion: f64,
}

/// Runs a full session, calling `on_trial` after every trial's update with
/// the trial and the table that the next trial will use.
pub fn run_session_with<F>(cfg: &SessionConfig, mut on_trial: F) -> Result<SessionOutcome>
where
    F: FnMut(&TrialLog, &GainTable) -> Result<()>,
{
    cfg.validate()?;
    let d = cfg.device.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut engine = Engine::from_config(cfg)?;
    let initial_table = engine.table().clone();
    let mut user = UserState::new(&cfg.user);
    let (cx, cy) = d.screen_center();
    let mut cursor = CursorState::at(cx, cy);
    let mut metrics = SessionMetrics::default();
    let mut trials = Vec::with_capacity(cfg.session.trials);
    let mut acc = BlockAccumulator::default();

    for index in 0..cfg.session.trials {
        let task = generate_task(&mut rng, &d, cursor.position())?;
        let table = engine.table().clone();
        let ctx = TrialContext {
            user: &cfg.user,
            device: &d,
            table: &table,
            smoothing: cfg.device.one_euro,
            max_submovements: cfg.session.max_submovements,
        };
        let mut log = run_trial(&ctx, &mut user, &mut cursor, &task, index, &mut rng)?;
        acc.trials += 1;
        if log.hit {
            let analysis = engine.process_trial(log.input())?;
            metrics.p_trace.extend(&analysis.p_updates);
            acc.hits += 1;
            acc.submovements += analysis.records.len();
            acc.completion += log.completion_proxy_s(&d);
            for r in &analysis.records {
                if let Some(err) = r.aiming_error_mm {
                    acc.abs_r.push(err.abs());
                }
                let c = &mut metrics.class_counts;
                match (r.class, r.ballistic) {
                    (SubmovementClass::Normal, true) => c.normal_ballistic += 1,
                    (SubmovementClass::Normal, false) => c.normal_non_ballistic += 1,
                    (SubmovementClass::Interrupted, _) => c.interrupted += 1,
                    (SubmovementClass::Unaimed, _) => c.unaimed += 1,
                }
            }
            log.analysis = Some(analysis);
        } else {
            metrics.aborted += 1;
        }
        on_trial(&log, engine.table())?;
        trials.push(log);

        if acc.trials == cfg.session.block_size || index + 1 == cfg.session.trials {
            let a = std::mem::take(&mut acc);
            let per_hit = |x: f64| if a.hits > 0 { x / a.hits as f64 } else { f64::NAN };
            metrics.blocks.push(BlockMetrics {
                block: metrics.blocks.len() + 1,
                trials: a.trials,
                hits: a.hits,
                mean_abs_r_mm: if a.abs_r.is_empty() {
                    f64::NAN
                } else {
                    a.abs_r.iter().sum::<f64>() / a.abs_r.len() as f64
                },
                submovements_per_trial: per_hit(a.submovements as f64),
                completion_proxy_s: per_hit(a.completion),
                gains: engine.table().gains().to_vec(),
            });
        }
    }

    Ok(SessionOutcome {
        metrics,
        trials,
        final_table: engine.table().clone(),
        initial_table,
    })
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutcome> {
    run_session_with(cfg, |_, _| Ok(()))
}

/// Least-squares slope of `ys` against 1, 2, ..., n.
pub fn trend_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n + 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, y)| {
        let dx = i as f64 + 1.0 - mx;
        (a + dx * (y - my), b + dx * dx)
    });
    num / den
}
