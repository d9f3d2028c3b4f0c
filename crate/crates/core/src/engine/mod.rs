//! Compliance state machine, duration ledger and the two-variable poll
//! interface.

pub mod config;
pub mod ledger;
pub mod machine;
pub mod reference;
pub mod report;

pub use config::{ComplianceConfig, ConfigDocument};
pub use ledger::DurationLedger;
pub use machine::{Engine, EngineEvent, EngineSnapshot, Observation, SharedSnapshot};
pub use reference::{fold_verdict, observations_for, reference_verdict};
pub use report::{
    Assessment, EngineState, EpisodeReport, MissingMovement, MovementSeconds, ReportSpan, Transition, Verdict,
    REPORT_SCHEMA_VERSION, TIME_EPSILON,
};
