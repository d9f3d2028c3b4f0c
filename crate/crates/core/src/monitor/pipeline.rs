//! Gate → classifier → smoother → engine, one source item at a time.

use crate::dataset::EpisodeAnnotation;
use crate::engine::{ComplianceConfig, Engine, EngineEvent, Observation};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::monitor::source::SourceItem;
use crate::motion::{motion_score, GateEvent, GatePhase, MotionGate};
use crate::movement::MovementClass;
use crate::pipeline::{ClassifyContext, FrameClassifier, MajoritySmoother};

/// Drives one stream. Washing status comes from the motion gate; the
/// movement number is the smoothed classifier label.
///
/// The gate only confirms an episode after sustained motion, so labels seen
/// while it is pending are buffered and replayed into the engine once the
/// episode is confirmed, making the episode start at motion onset.
pub struct MonitorPipeline {
    gate: MotionGate,
    classifier: Box<dyn FrameClassifier>,
    smoother: MajoritySmoother,
    engine: Engine,
    truth: Option<EpisodeAnnotation>,
    prev_frame: Option<Frame>,
    pending: Vec<(f64, MovementClass)>,
    episode_labels: Vec<MovementClass>,
    pending_config: Option<ComplianceConfig>,
    last_t: Option<f64>,
    processed: usize,
}

impl MonitorPipeline {
    pub fn new(
        config: ComplianceConfig,
        classifier: Box<dyn FrameClassifier>,
        truth: Option<EpisodeAnnotation>,
        episode_prefix: &str,
    ) -> Result<Self> {
        let gate = MotionGate::new(config.gate)?;
        let smoother = MajoritySmoother::new(config.smoothing_window);
        let engine = Engine::new(config)?.with_episode_prefix(episode_prefix);
        Ok(MonitorPipeline {
            gate,
            classifier,
            smoother,
            engine,
            truth,
            prev_frame: None,
            pending: Vec::new(),
            episode_labels: Vec::new(),
            pending_config: None,
            last_t: None,
            processed: 0,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn gate(&self) -> &MotionGate {
        &self.gate
    }

    pub fn processed(&self) -> usize {
        self.processed
    }

    /// Queues a configuration; it takes effect once no episode is open.
    pub fn set_config(&mut self, config: ComplianceConfig) -> Result<()> {
        config.validate()?;
        self.pending_config = Some(config);
        self.apply_pending_config()
    }

    fn apply_pending_config(&mut self) -> Result<()> {
        let idle = !self.engine.episode_open() && self.gate.state().phase == GatePhase::Quiet;
        if idle {
            if let Some(cfg) = self.pending_config.take() {
                self.gate.set_params(cfg.gate)?;
                self.smoother = MajoritySmoother::new(cfg.smoothing_window);
                self.engine.set_config(cfg)?;
            }
        }
        Ok(())
    }

    /// Labels fed to the engine during the last closed episode.
    pub fn take_episode_labels(&mut self) -> Vec<MovementClass> {
        std::mem::take(&mut self.episode_labels)
    }

    fn motion(&self, item: &SourceItem) -> Result<f64> {
        match (&item.frame, &self.prev_frame) {
            (Some(cur), Some(prev)) => motion_score(prev, cur),
            (Some(_), None) => Ok(0.0),
            (None, _) => {
                let truth = self
                    .truth
                    .as_ref()
                    .ok_or_else(|| Error::Source("label-only source without ground truth".into()))?;
                let label = truth.label(item.index).ok_or(Error::ReplayIndexOutOfRange {
                    index: item.index,
                    frame_count: truth.frame_count(),
                })?;
                Ok(if label.is_washing() { 1.0 } else { 0.0 })
            }
        }
    }

    fn label(&mut self, item: &SourceItem) -> Result<MovementClass> {
        let ctx = ClassifyContext {
            frame_index: item.index,
            truth: self.truth.as_ref(),
        };
        let scores = self.classifier.classify(item.frame.as_ref(), &ctx)?;
        Ok(self.smoother.push(scores.argmax()))
    }

    fn feed(&mut self, obs: Observation, events: &mut Vec<EngineEvent>) -> Result<()> {
        if obs.washing_on {
            self.episode_labels.push(obs.movement);
        }
        events.extend(self.engine.tick(obs)?);
        Ok(())
    }

    pub fn step(&mut self, item: SourceItem) -> Result<Vec<EngineEvent>> {
        if let Some(prev) = self.last_t {
            if !(item.t > prev) {
                return Err(Error::NonMonotoneTime {
                    previous: prev,
                    current: item.t,
                });
            }
        }
        self.apply_pending_config()?;
        let score = self.motion(&item)?;
        let gate_event = self.gate.update(score, item.t)?;
        let phase = self.gate.state().phase;
        let t = item.t;

        let mut events = Vec::new();
        match gate_event {
            GateEvent::EpisodeStarted { .. } => {
                let label = self.label(&item)?;
                self.pending.push((t, label));
                self.episode_labels.clear();
                for (pt, pl) in std::mem::take(&mut self.pending) {
                    self.feed(Observation::washing(pl, pt), &mut events)?;
                }
            }
            GateEvent::EpisodeEnded(_) => {
                self.feed(Observation::off(t), &mut events)?;
                self.smoother.clear();
            }
            GateEvent::None => match phase {
                GatePhase::Recording => {
                    let label = self.label(&item)?;
                    self.feed(Observation::washing(label, t), &mut events)?;
                }
                GatePhase::MotionPending => {
                    let label = self.label(&item)?;
                    self.pending.push((t, label));
                }
                GatePhase::Quiet => {
                    self.pending.clear();
                    self.smoother.clear();
                }
            },
        }

        if item.frame.is_some() {
            self.prev_frame = item.frame;
        }
        self.last_t = Some(t);
        self.processed += 1;
        Ok(events)
    }

    /// End of stream: closes an open episode at `t` (or at the last item).
    pub fn finish(&mut self, t: Option<f64>) -> Vec<EngineEvent> {
        let t = t.or(self.last_t).unwrap_or(0.0);
        self.pending.clear();
        if self.gate.flush().is_some() || self.engine.episode_open() {
            self.engine.close_at(t)
        } else {
            Vec::new()
        }
    }
}
