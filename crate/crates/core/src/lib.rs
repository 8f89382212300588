//! Central-pattern-generator running controller coupled to a
//! spring-loaded inverted pendulum.
//!
//! The rhythm generator ([`rhythm`]) keeps two coupled phase oscillators that
//! are reset at touchdown and whose period estimate adapts step by step. The
//! pattern formulator ([`pattern`]) turns an oscillator phase into actuator
//! commands. [`harness`] closes the loop around the plant in [`slip`], and
//! [`analysis`] reduces an episode to convergence verdicts.

pub mod analysis;
pub mod config;
pub mod controller_check;
pub mod error;
pub mod harness;
pub mod output;
pub mod params;
pub mod pattern;
pub mod rhythm;
pub mod slip;
pub mod sweep;

pub use error::{ConfigError, OutputError, SimError};
pub use params::{
    ControllerParams, PhysicalParams, Preset, SimConfig, SimulationParams, ValidatedConfig,
};
