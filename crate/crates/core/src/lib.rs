//! Speed-binned control-to-display gain that adapts itself from the
//! aiming errors of pointing submovements, plus a synthetic-user simulator.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod optimizer;
pub mod segmentation;
pub mod simulation;
pub mod trajectory;
pub mod transfer;

pub use config::SessionConfig;
pub use engine::{Engine, TrialAnalysis, TrialInput};
pub use error::{Error, Result};
pub use transfer::{DeviceSpec, GainTable, InputEvent};
