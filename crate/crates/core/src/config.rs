//! Session configuration, loadable from JSON. Every field has a default, so
//! `{}` is a valid config describing the trackpad setup.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ClassificationConfig, KalmanConfig};
use crate::error::{Error, Result};
use crate::optimizer::ChangeRate;
use crate::segmentation::SegmentationConfig;
use crate::transfer::{DeviceSpec, GainTable, OneEuroConfig, DEFAULT_GAIN_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub res_in: f64,
    pub freq_in: f64,
    pub res_out: f64,
    pub screen_w: u32,
    pub screen_h: u32,
    /// Smoothing applied to raw device motion before the transfer function.
    pub one_euro: Option<OneEuroConfig>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig::from_spec(DeviceSpec::trackpad())
    }
}

impl DeviceConfig {
    pub fn from_spec(d: DeviceSpec) -> Self {
        DeviceConfig {
            res_in: d.res_in,
            freq_in: d.freq_in,
            res_out: d.res_out,
            screen_w: d.screen_w,
            screen_h: d.screen_h,
            one_euro: None,
        }
    }

    pub fn spec(&self) -> DeviceSpec {
        DeviceSpec {
            res_in: self.res_in,
            freq_in: self.freq_in,
            res_out: self.res_out,
            screen_w: self.screen_w,
            screen_h: self.screen_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainTableConfig {
    /// m/s.
    pub bin_width: f64,
    pub bins: usize,
    pub initial_gain: f64,
    pub gain_floor: f64,
    /// Append bins when faster speeds show up.
    pub grow: bool,
    pub max_bins: usize,
}

impl Default for GainTableConfig {
    fn default() -> Self {
        GainTableConfig {
            bin_width: 0.0079,
            bins: 64,
            initial_gain: 1.0,
            gain_floor: DEFAULT_GAIN_FLOOR,
            grow: true,
            max_bins: 512,
        }
    }
}

impl GainTableConfig {
    pub fn build(&self) -> Result<GainTable> {
        if !(self.gain_floor.is_finite() && self.gain_floor > 0.0) {
            return Err(Error::invalid("gain_table.gain_floor", "must be > 0"));
        }
        if !(self.initial_gain >= self.gain_floor) {
            return Err(Error::invalid("gain_table.initial_gain", "must be >= gain_floor"));
        }
        if self.bins == 0 {
            return Err(Error::invalid("gain_table.bins", "must be >= 1"));
        }
        let t = GainTable::constant(self.bin_width, self.bins, self.initial_gain)?
            .with_floor(self.gain_floor);
        Ok(if self.grow {
            if self.max_bins < self.bins {
                return Err(Error::invalid("gain_table.max_bins", "must be >= bins"));
            }
            t.with_growth(self.max_bins)
        } else {
            t
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// mm⁻¹.
    pub change_rate: f64,
    /// Let unaimed submovements claim bins (with a zero delta) so they
    /// shield earlier submovements.
    pub unaimed_claims_bins: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            change_rate: ChangeRate::TRACKPAD.value(),
            unaimed_claims_bins: false,
        }
    }
}

impl OptimizerConfig {
    pub fn rate(&self) -> Result<ChangeRate> {
        ChangeRate::new(self.change_rate)
    }
}

/// Synthetic user driving the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserModel {
    /// Fraction of the remaining distance a ballistic submovement aims for.
    pub p_user: f64,
    /// Motor amplitude standard deviation per unit planned amplitude.
    pub noise_k: f64,
    /// Smoothing factor of the user's running estimate of the gain.
    pub alpha: f64,
    pub initial_gain_belief: f64,
    /// Fewest events a submovement bell is rendered with.
    pub events_per_submovement: usize,
    /// Peak speed of a 100 mm movement, m/s. Peak speed grows with the
    /// square root of amplitude.
    pub peak_speed_scale: f64,
    /// Longest stroke the device allows before the user must clutch, mm.
    pub device_range_mm: Option<f64>,
    /// Time without events while clutching, ms.
    pub clutch_gap_ms: f64,
}

impl Default for UserModel {
    fn default() -> Self {
        UserModel {
            p_user: 0.94,
            noise_k: 0.1,
            alpha: 0.3,
            initial_gain_belief: 1.0,
            events_per_submovement: 12,
            peak_speed_scale: 0.4,
            device_range_mm: Some(80.0),
            clutch_gap_ms: 300.0,
        }
    }
}

impl UserModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_user > 0.0 && self.p_user <= 1.0) {
            return Err(Error::invalid("user.p_user", "must be in (0, 1]"));
        }
        if !(self.noise_k >= 0.0 && self.noise_k.is_finite()) {
            return Err(Error::invalid("user.noise_k", "must be >= 0"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("user.alpha", "must be in (0, 1]"));
        }
        if !(self.initial_gain_belief > 0.0 && self.initial_gain_belief.is_finite()) {
            return Err(Error::invalid("user.initial_gain_belief", "must be > 0"));
        }
        if self.events_per_submovement < 3 {
            return Err(Error::invalid("user.events_per_submovement", "must be >= 3"));
        }
        if !(self.peak_speed_scale > 0.0 && self.peak_speed_scale.is_finite()) {
            return Err(Error::invalid("user.peak_speed_scale", "must be > 0"));
        }
        if let Some(r) = self.device_range_mm {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("user.device_range_mm", "must be > 0"));
            }
        }
        if !(self.clutch_gap_ms >= 0.0 && self.clutch_gap_ms.is_finite()) {
            return Err(Error::invalid("user.clutch_gap_ms", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionParams {
    pub trials: usize,
    pub block_size: usize,
    /// Submovements after which a trial is aborted.
    pub max_submovements: usize,
    /// Write a gain snapshot every N trials; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            trials: 800,
            block_size: 80,
            max_submovements: 20,
            snapshot_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub device: DeviceConfig,
    pub gain_table: GainTableConfig,
    pub segmentation: SegmentationConfig,
    pub classification: ClassificationConfig,
    pub kalman: KalmanConfig,
    pub optimizer: OptimizerConfig,
    pub user: UserModel,
    pub session: SessionParams,
    pub seed: u64,
}

impl SessionConfig {
    /// Trackpad setup: 0.0079 m/s bins and C = 6.4e-5 mm⁻¹.
    pub fn trackpad() -> Self {
        SessionConfig::default()
    }

    /// Hand-tracker setup: 60 Hz millimetre reports smoothed with a 1€
    /// filter, 0.06 m/s bins and C = 3.6e-5 mm⁻¹.
    pub fn hand_tracker() -> Self {
        SessionConfig {
            device: DeviceConfig {
                one_euro: Some(OneEuroConfig::default()),
                ..DeviceConfig::from_spec(DeviceSpec::hand_tracker())
            },
            gain_table: GainTableConfig {
                bin_width: 0.06,
                bins: 32,
                ..GainTableConfig::default()
            },
            optimizer: OptimizerConfig {
                change_rate: ChangeRate::HAND_TRACKER.value(),
                ..OptimizerConfig::default()
            },
            user: UserModel {
                events_per_submovement: 8,
                peak_speed_scale: 0.6,
                device_range_mm: None,
                ..UserModel::default()
            },
            ..SessionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.device.spec().validate()?;
        if let Some(f) = &self.device.one_euro {
            f.validate()?;
        }
        self.gain_table.build()?;
        self.segmentation.validate()?;
        self.classification.validate()?;
        self.kalman.validate()?;
        self.optimizer.rate()?;
        self.user.validate()?;
        if self.session.block_size == 0 {
            return Err(Error::invalid("session.block_size", "must be >= 1"));
        }
        if self.session.max_submovements == 0 {
            return Err(Error::invalid("session.max_submovements", "must be >= 1"));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str, origin: &str) -> Result<Self> {
        let cfg: SessionConfig = serde_json::from_str(s).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_value(v: serde_json::Value, origin: &str) -> Result<Self> {
        let cfg: SessionConfig = serde_json::from_value(v).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: 0,
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            reason: e.to_string(),
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}
