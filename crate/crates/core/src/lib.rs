//! Hand-washing compliance monitoring.
//!
//! Washing episodes are cut from a video stream by a motion gate, each frame
//! is labelled with one of the WHO washing movements by a pluggable
//! classifier, labels are smoothed, and a state machine accumulates
//! per-movement durations to decide whether the episode met the configured
//! requirements.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod frame;
pub mod monitor;
pub mod motion;
pub mod movement;
pub mod pipeline;

pub use error::{Error, Result};
pub use frame::Frame;
pub use movement::MovementClass;
