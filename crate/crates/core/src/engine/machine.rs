//! The washing-quality state machine.
//!
//! ```text
//!            washing on                 predicate met
//! Waiting ─────────────▶ InProgress ─────────────────▶ Ok
//!    ▲                       │ washing off               │ washing off
//!    │                       ▼                           │
//!    └────────────────── Failed ◀─ (report) ──────────────┘ (report)
//! ```
//!
//! Time between two washing ticks is credited to the movement observed at the
//! later tick; the first tick of an episode credits nothing.

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::engine::config::ComplianceConfig;
use crate::engine::ledger::DurationLedger;
use crate::engine::report::{Assessment, EngineState, EpisodeReport, ReportSpan, Transition};
use crate::error::{Error, Result};
use crate::movement::MovementClass;

/// One poll-rate input: whether washing is going on and the current label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub washing_on: bool,
    pub movement: MovementClass,
    pub t: f64,
}

impl Observation {
    pub fn washing(movement: MovementClass, t: f64) -> Self {
        Observation {
            washing_on: true,
            movement,
            t,
        }
    }

    pub fn off(t: f64) -> Self {
        Observation {
            washing_on: false,
            movement: MovementClass::Idle,
            t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent {
    StateChanged(Transition),
    Report(EpisodeReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub state: EngineState,
    pub washing_status: bool,
    pub movement_number: MovementClass,
    pub ledger: DurationLedger,
    pub episode_elapsed_s: f64,
    /// Time of the last tick, if any.
    pub t: Option<f64>,
}

impl EngineSnapshot {
    /// The two poll variables: washing status and WHO movement number.
    pub fn poll(&self) -> (bool, u8) {
        (self.washing_status, self.movement_number.code())
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: ComplianceConfig,
    state: EngineState,
    ledger: DurationLedger,
    current: MovementClass,
    episode_start: f64,
    last_washing_t: f64,
    last_t: Option<f64>,
    transitions: Vec<Transition>,
    episodes: u64,
    episode_prefix: String,
}

impl Engine {
    pub fn new(cfg: ComplianceConfig) -> Result<Self> {
        cfg.validate()?;
        let ledger = DurationLedger::new(&cfg.counted_movements);
        Ok(Engine {
            cfg,
            state: EngineState::Waiting,
            ledger,
            current: MovementClass::Idle,
            episode_start: 0.0,
            last_washing_t: 0.0,
            last_t: None,
            transitions: Vec::new(),
            episodes: 0,
            episode_prefix: "episode".into(),
        })
    }

    /// Reports are named `<prefix>-<n>`, counting from 1.
    pub fn with_episode_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.episode_prefix = prefix.into();
        self
    }

    pub fn config(&self) -> &ComplianceConfig {
        &self.cfg
    }

    /// Replaces the configuration. Only allowed between episodes.
    pub fn set_config(&mut self, cfg: ComplianceConfig) -> Result<()> {
        cfg.validate()?;
        if self.state != EngineState::Waiting {
            return Err(Error::InvalidConfig("configuration cannot change mid-episode".into()));
        }
        self.ledger = DurationLedger::new(&cfg.counted_movements);
        self.cfg = cfg;
        Ok(())
    }

    pub fn state(&self) -> EngineState {
        self.state
    }

    pub fn ledger(&self) -> &DurationLedger {
        &self.ledger
    }

    pub fn episode_open(&self) -> bool {
        matches!(self.state, EngineState::InProgress | EngineState::Ok)
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        let open = self.episode_open();
        EngineSnapshot {
            state: self.state,
            washing_status: open,
            movement_number: if open { self.current } else { MovementClass::Idle },
            ledger: self.ledger,
            episode_elapsed_s: if open { self.last_washing_t - self.episode_start } else { 0.0 },
            t: self.last_t,
        }
    }

    pub fn poll(&self) -> (bool, u8) {
        self.snapshot().poll()
    }

    fn transition(&mut self, to: EngineState, t: f64, events: &mut Vec<EngineEvent>) {
        let tr = Transition { t, from: self.state, to };
        self.state = to;
        if to != EngineState::Waiting {
            self.transitions.push(tr);
        }
        events.push(EngineEvent::StateChanged(tr));
    }

    pub fn tick(&mut self, obs: Observation) -> Result<Vec<EngineEvent>> {
        if let Some(prev) = self.last_t {
            if !(obs.t > prev) {
                return Err(Error::NonMonotoneTime {
                    previous: prev,
                    current: obs.t,
                });
            }
        }
        self.last_t = Some(obs.t);
        let mut events = Vec::new();

        match (self.state, obs.washing_on) {
            (EngineState::Waiting, true) => {
                self.ledger = DurationLedger::new(&self.cfg.counted_movements);
                self.transitions.clear();
                self.episode_start = obs.t;
                self.last_washing_t = obs.t;
                self.current = obs.movement;
                self.transition(EngineState::InProgress, obs.t, &mut events);
                self.check_completion(obs.t, &mut events);
            }
            (EngineState::Waiting, false) => {}
            (EngineState::InProgress | EngineState::Ok, true) => {
                self.ledger.add(obs.movement, obs.t - self.last_washing_t);
                self.last_washing_t = obs.t;
                self.current = obs.movement;
                self.check_completion(obs.t, &mut events);
            }
            (EngineState::InProgress | EngineState::Ok, false) => self.close(obs.t, &mut events),
            (EngineState::Failed, _) => unreachable!("failed is left immediately after reporting"),
        }
        Ok(events)
    }

    fn check_completion(&mut self, t: f64, events: &mut Vec<EngineEvent>) {
        if self.state == EngineState::InProgress && Assessment::of(&self.ledger, &self.cfg).is_complete() {
            self.transition(EngineState::Ok, t, events);
        }
    }

    fn close(&mut self, t: f64, events: &mut Vec<EngineEvent>) {
        if self.state == EngineState::InProgress {
            self.transition(EngineState::Failed, t, events);
        }
        self.episodes += 1;
        let report = EpisodeReport::build(
            format!("{}-{}", self.episode_prefix, self.episodes),
            ReportSpan {
                start_s: self.episode_start,
                end_s: t,
            },
            &self.ledger,
            &self.cfg,
            std::mem::take(&mut self.transitions),
        );
        events.push(EngineEvent::Report(report));
        self.transition(EngineState::Waiting, t, events);
        self.current = MovementClass::Idle;
    }

    /// Closes an open episode as if washing stopped at `t` (or at the last
    /// tick, if `t` is earlier).
    pub fn close_at(&mut self, t: f64) -> Vec<EngineEvent> {
        let mut events = Vec::new();
        if self.episode_open() {
            let t = self.last_t.map_or(t, |prev| t.max(prev));
            self.last_t = Some(t);
            self.close(t, &mut events);
        }
        events
    }

    pub fn finalize(&mut self, t: f64) -> Option<EpisodeReport> {
        self.close_at(t).into_iter().find_map(|e| match e {
            EngineEvent::Report(r) => Some(r),
            _ => None,
        })
    }
}

/// A snapshot slot written by the engine's owner and read by any number of
/// pollers. Readers always see a whole snapshot.
#[derive(Debug, Clone)]
pub struct SharedSnapshot(Arc<RwLock<EngineSnapshot>>);

impl SharedSnapshot {
    pub fn new(initial: EngineSnapshot) -> Self {
        SharedSnapshot(Arc::new(RwLock::new(initial)))
    }

    pub fn publish(&self, snapshot: EngineSnapshot) {
        *self.0.write().unwrap_or_else(|e| e.into_inner()) = snapshot;
    }

    pub fn read(&self) -> EngineSnapshot {
        self.0.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn poll(&self) -> (bool, u8) {
        self.read().poll()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::report::Verdict;
    use MovementClass::*;

    fn small_cfg() -> ComplianceConfig {
        ComplianceConfig::with_requirements(1.0, &[(PalmToPalm, 1.0)])
    }

    fn reports(events: &[EngineEvent]) -> Vec<&EpisodeReport> {
        events
            .iter()
            .filter_map(|e| match e {
                EngineEvent::Report(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn starts_waiting() {
        let e = Engine::new(ComplianceConfig::default()).unwrap();
        let s = e.snapshot();
        assert_eq!(s.state, EngineState::Waiting);
        assert!(s.ledger.iter().all(|(_, v)| v == 0.0));
        assert_eq!(e.poll(), (false, 0));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = ComplianceConfig::default();
        cfg.per_movement_min_s.remove(&ThumbRub);
        assert!(matches!(Engine::new(cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn reaches_ok_after_enough_washing() {
        let mut e = Engine::new(small_cfg()).unwrap();
        for k in 0..=12 {
            e.tick(Observation::washing(PalmToPalm, k as f64 * 0.1)).unwrap();
        }
        assert_eq!(e.state(), EngineState::Ok);
        assert_eq!(e.poll(), (true, 2));
        let events = e.tick(Observation::off(1.3)).unwrap();
        let r = reports(&events);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].verdict, Verdict::Ok);
        assert!(r[0].missing.is_empty());
        assert_eq!(e.state(), EngineState::Waiting);
    }

    #[test]
    fn stopping_early_fails_with_shortfall() {
        let mut e = Engine::new(small_cfg()).unwrap();
        for k in 0..=5 {
            e.tick(Observation::washing(PalmToPalm, k as f64 * 0.1)).unwrap();
        }
        let events = e.tick(Observation::off(0.6)).unwrap();
        let kinds: Vec<_> = events
            .iter()
            .map(|e| match e {
                EngineEvent::StateChanged(t) => format!("{:?}->{:?}", t.from, t.to),
                EngineEvent::Report(_) => "report".into(),
            })
            .collect();
        assert_eq!(kinds, ["InProgress->Failed", "report", "Failed->Waiting"]);
        let r = reports(&events)[0];
        assert_eq!(r.verdict, Verdict::Failed);
        assert_eq!(r.missing.len(), 1);
        assert_eq!(r.missing[0].code, PalmToPalm);
        assert!((r.missing[0].shortfall_s - 0.5).abs() < 1e-9);
        assert!((r.total_shortfall_s - 0.5).abs() < 1e-9);
    }

    #[test]
    fn off_ticks_while_waiting_do_nothing() {
        let mut e = Engine::new(small_cfg()).unwrap();
        for k in 0..10 {
            assert!(e.tick(Observation::off(k as f64)).unwrap().is_empty());
        }
        assert_eq!(e.state(), EngineState::Waiting);
    }

    #[test]
    fn poll_reads_current_movement() {
        let mut e = Engine::new(ComplianceConfig::default()).unwrap();
        e.tick(Observation::washing(BackOfFingers, 0.0)).unwrap();
        assert_eq!(e.poll(), (true, 5));
        assert_eq!(e.poll(), e.poll());
        e.tick(Observation::washing(Idle, 0.5)).unwrap();
        assert_eq!(e.poll(), (true, 0));
    }

    #[test]
    fn ok_absorbs_further_washing() {
        let mut e = Engine::new(small_cfg()).unwrap();
        e.tick(Observation::washing(PalmToPalm, 0.0)).unwrap();
        e.tick(Observation::washing(PalmToPalm, 2.0)).unwrap();
        assert_eq!(e.state(), EngineState::Ok);
        e.tick(Observation::washing(FingertipsToPalm, 3.0)).unwrap();
        assert_eq!(e.state(), EngineState::Ok);
        assert_eq!(e.poll(), (true, 7));
        assert_eq!(e.ledger().seconds(FingertipsToPalm), 1.0);
    }

    #[test]
    fn non_monotone_time() {
        let mut e = Engine::new(small_cfg()).unwrap();
        e.tick(Observation::off(1.0)).unwrap();
        assert!(matches!(e.tick(Observation::off(1.0)), Err(Error::NonMonotoneTime { .. })));
    }

    #[test]
    fn finalize_open_and_closed_episodes() {
        let mut e = Engine::new(small_cfg()).unwrap();
        assert!(e.finalize(1.0).is_none());

        e.tick(Observation::washing(PalmToPalm, 2.0)).unwrap();
        e.tick(Observation::washing(PalmToPalm, 2.5)).unwrap();
        let r = e.finalize(3.0).unwrap();
        assert_eq!(r.verdict, Verdict::Failed);
        assert_eq!(r.span, ReportSpan { start_s: 2.0, end_s: 3.0 });
        assert_eq!(e.state(), EngineState::Waiting);

        e.tick(Observation::washing(PalmToPalm, 4.0)).unwrap();
        e.tick(Observation::washing(PalmToPalm, 6.0)).unwrap();
        let r = e.finalize(6.0).unwrap();
        assert_eq!(r.verdict, Verdict::Ok);
        assert_eq!(r.episode_id, "episode-2");
    }

    #[test]
    fn idle_time_is_logged_but_not_counted() {
        let cfg = ComplianceConfig::with_requirements(1.0, &[(PalmToPalm, 0.5)]);
        let mut e = Engine::new(cfg).unwrap();
        e.tick(Observation::washing(PalmToPalm, 0.0)).unwrap();
        e.tick(Observation::washing(PalmToPalm, 0.6)).unwrap();
        e.tick(Observation::washing(Idle, 5.0)).unwrap();
        assert_eq!(e.state(), EngineState::InProgress);
        assert!((e.ledger().seconds(Idle) - 4.4).abs() < 1e-12);
        assert!((e.ledger().total_active_s() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn config_changes_only_between_episodes() {
        let mut e = Engine::new(small_cfg()).unwrap();
        e.tick(Observation::washing(PalmToPalm, 0.0)).unwrap();
        assert!(e.set_config(ComplianceConfig::default()).is_err());
        e.tick(Observation::off(0.1)).unwrap();
        e.set_config(ComplianceConfig::default()).unwrap();
        assert_eq!(e.config().total_duration_s, 40.0);
    }

    #[test]
    fn shared_snapshot_reads_whole_values() {
        let e = Engine::new(small_cfg()).unwrap();
        let shared = SharedSnapshot::new(e.snapshot());
        let reader = shared.clone();
        let handle = std::thread::spawn(move || {
            for _ in 0..1000 {
                let s = reader.read();
                assert_eq!(s.washing_status, s.state != EngineState::Waiting);
            }
        });
        let mut e = e;
        for k in 0..1000 {
            let obs = if k % 7 < 4 { Observation::washing(PalmToPalm, k as f64) } else { Observation::off(k as f64) };
            e.tick(obs).unwrap();
            shared.publish(e.snapshot());
        }
        handle.join().unwrap();
    }
}
