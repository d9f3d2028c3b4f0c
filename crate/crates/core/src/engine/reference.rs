//! Whole-sequence verdicts, used to cross-check the incremental engine.

use crate::engine::config::ComplianceConfig;
use crate::engine::ledger::DurationLedger;
use crate::engine::machine::{Engine, EngineEvent, Observation};
use crate::engine::report::{Verdict, TIME_EPSILON};
use crate::error::Result;
use crate::movement::MovementClass;

/// Sums each movement's durations directly and applies the completion
/// predicate once, at the end. An empty sequence fails.
pub fn reference_verdict(labels: &[(MovementClass, f64)], cfg: &ComplianceConfig) -> (Verdict, DurationLedger) {
    let mut ledger = DurationLedger::new(&cfg.counted_movements);
    for m in MovementClass::ALL {
        let total: f64 = labels.iter().filter(|(l, _)| *l == m).map(|(_, d)| d).sum();
        ledger.set_seconds(m, total);
    }

    let active: f64 = labels
        .iter()
        .filter(|(m, _)| cfg.counted_movements.contains(m) && m.is_washing())
        .map(|(_, d)| d)
        .sum();
    let total_met = active + TIME_EPSILON >= cfg.total_duration_s;
    let all_present = cfg.required_movements.iter().all(|m| {
        let observed: f64 = labels.iter().filter(|(l, _)| l == m).map(|(_, d)| d).sum();
        observed + TIME_EPSILON >= cfg.per_movement_min_s[m]
    });
    let verdict = if !labels.is_empty() && total_met && all_present {
        Verdict::Ok
    } else {
        Verdict::Failed
    };
    (verdict, ledger)
}

/// Tick sequence for a run of timed labels starting at `t0`: a tick at the
/// start (crediting nothing), one at the end of every segment crediting that
/// segment's movement, and a final washing-off tick `off_delay` later.
pub fn observations_for(labels: &[(MovementClass, f64)], t0: f64, off_delay: f64) -> Vec<Observation> {
    let Some(&(first, _)) = labels.first() else {
        return Vec::new();
    };
    let mut obs = vec![Observation::washing(first, t0)];
    let mut t = t0;
    for &(m, d) in labels {
        t += d;
        obs.push(Observation::washing(m, t));
    }
    obs.push(Observation::off(t + off_delay));
    obs
}

/// Verdict obtained by folding [`observations_for`] through a fresh engine.
pub fn fold_verdict(labels: &[(MovementClass, f64)], cfg: &ComplianceConfig) -> Result<Verdict> {
    let mut engine = Engine::new(cfg.clone())?;
    for obs in observations_for(labels, 0.0, 0.05) {
        for event in engine.tick(obs)? {
            if let EngineEvent::Report(r) = event {
                return Ok(r.verdict);
            }
        }
    }
    Ok(Verdict::Failed)
}
