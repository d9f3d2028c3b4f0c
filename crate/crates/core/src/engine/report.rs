use serde::{Deserialize, Serialize};

use crate::engine::config::ComplianceConfig;
use crate::engine::ledger::DurationLedger;
use crate::movement::MovementClass;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Slack used when comparing accumulated time against thresholds, so that
/// sums like ten 0.1 s ticks still meet a 1 s requirement.
pub const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineState {
    Waiting,
    InProgress,
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub from: EngineState,
    pub to: EngineState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingMovement {
    pub code: MovementClass,
    pub required_s: f64,
    pub observed_s: f64,
    pub shortfall_s: f64,
}

/// How far a ledger is from satisfying the completion predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub total_active_s: f64,
    pub total_shortfall_s: f64,
    pub missing: Vec<MissingMovement>,
}

impl Assessment {
    pub fn of(ledger: &DurationLedger, cfg: &ComplianceConfig) -> Self {
        let total_active_s = ledger.total_active_s();
        let total_shortfall_s = if total_active_s + TIME_EPSILON >= cfg.total_duration_s {
            0.0
        } else {
            cfg.total_duration_s - total_active_s
        };
        let missing = cfg
            .required_movements
            .iter()
            .filter_map(|&m| {
                let required_s = cfg.min_for(m);
                let observed_s = ledger.seconds(m);
                (observed_s + TIME_EPSILON < required_s).then(|| MissingMovement {
                    code: m,
                    required_s,
                    observed_s,
                    shortfall_s: required_s - observed_s,
                })
            })
            .collect();
        Assessment {
            total_active_s,
            total_shortfall_s,
            missing,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.total_shortfall_s == 0.0 && self.missing.is_empty()
    }

    pub fn verdict(&self) -> Verdict {
        if self.is_complete() {
            Verdict::Ok
        } else {
            Verdict::Failed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSpan {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementSeconds {
    pub code: MovementClass,
    pub seconds: f64,
}

/// The outcome of one washing episode, written as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub schema_version: u32,
    pub episode_id: String,
    pub span: ReportSpan,
    pub verdict: Verdict,
    /// Every class in code order, idle included.
    pub durations: Vec<MovementSeconds>,
    pub total_active_s: f64,
    pub required_total_s: f64,
    pub total_shortfall_s: f64,
    pub missing: Vec<MissingMovement>,
    pub transitions: Vec<Transition>,
}

impl EpisodeReport {
    pub fn build(
        episode_id: String,
        span: ReportSpan,
        ledger: &DurationLedger,
        cfg: &ComplianceConfig,
        transitions: Vec<Transition>,
    ) -> Self {
        let a = Assessment::of(ledger, cfg);
        EpisodeReport {
            schema_version: REPORT_SCHEMA_VERSION,
            episode_id,
            span,
            verdict: a.verdict(),
            durations: ledger.iter().map(|(code, seconds)| MovementSeconds { code, seconds }).collect(),
            total_active_s: a.total_active_s,
            required_total_s: cfg.total_duration_s,
            total_shortfall_s: a.total_shortfall_s,
            missing: a.missing,
            transitions,
        }
    }

    pub fn seconds(&self, m: MovementClass) -> f64 {
        self.durations
            .iter()
            .find(|d| d.code == m)
            .map(|d| d.seconds)
            .unwrap_or(0.0)
    }

    pub fn missing_codes(&self) -> Vec<MovementClass> {
        self.missing.iter().map(|m| m.code).collect()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
