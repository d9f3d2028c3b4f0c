//! Motion scoring between consecutive frames and the episode gate that turns a
//! stream of scores into washing episodes.
//!
//! An episode opens only after motion has been sustained for longer than
//! `min_duration_s` (10 s by default). The gate uses two thresholds: motion
//! starts at `on_threshold` and is considered to continue while the score
//! stays at or above `off_threshold`. Quiet stretches no longer than
//! `max_gap_s` do not break a motion run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Side of the square box used to downsample luma before differencing.
pub const MOTION_BLOCK: usize = 8;

/// Per-block luma sums (milli-units) on the downsampled grid.
fn block_sums(f: &Frame) -> Vec<u64> {
    let bw = f.width().div_ceil(MOTION_BLOCK);
    let bh = f.height().div_ceil(MOTION_BLOCK);
    let mut sums = vec![0u64; bw * bh];
    for y in 0..f.height() {
        let row = (y / MOTION_BLOCK) * bw;
        for x in 0..f.width() {
            sums[row + x / MOTION_BLOCK] += f.luma_milli(x, y) as u64;
        }
    }
    sums
}

/// Mean absolute luma difference on an 8x downsampled grid, normalised to
/// [0, 1]. Each block contributes in proportion to its pixel count, so edge
/// blocks of odd-sized frames are not over-weighted.
pub fn motion_score(prev: &Frame, cur: &Frame) -> Result<f64> {
    if !prev.same_shape(cur) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            prev.width(),
            prev.height(),
            prev.channels(),
            cur.width(),
            cur.height(),
            cur.channels()
        )));
    }
    if prev.is_empty() {
        return Ok(0.0);
    }
    // |mean_a - mean_b| * area == |sum_a - sum_b| for each block.
    let diff: u64 = block_sums(prev)
        .iter()
        .zip(block_sums(cur).iter())
        .map(|(&a, &b)| a.abs_diff(b))
        .sum();
    let pixels = (prev.width() * prev.height()) as f64;
    Ok(diff as f64 / (pixels * 255_000.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    pub on_threshold: f64,
    pub off_threshold: f64,
    pub min_duration_s: f64,
    pub max_gap_s: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            on_threshold: 0.02,
            off_threshold: 0.01,
            min_duration_s: 10.0,
            max_gap_s: 2.0,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.on_threshold) || !in_unit(self.off_threshold) {
            return Err(Error::InvalidConfig("gate thresholds must lie in [0, 1]".into()));
        }
        if self.on_threshold < self.off_threshold {
            return Err(Error::InvalidConfig(format!(
                "on_threshold {} is below off_threshold {}",
                self.on_threshold, self.off_threshold
            )));
        }
        if !(self.min_duration_s >= 0.0 && self.min_duration_s.is_finite()) {
            return Err(Error::InvalidConfig("min_duration_s must be a non-negative number".into()));
        }
        if !(self.max_gap_s >= 0.0 && self.max_gap_s.is_finite()) {
            return Err(Error::InvalidConfig("max_gap_s must be a non-negative number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatePhase {
    #[default]
    Quiet,
    MotionPending,
    Recording,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GateState {
    pub phase: GatePhase,
    pub motion_start: Option<f64>,
    pub last_motion: Option<f64>,
    /// Timestamp of the last score fed to the gate.
    pub last_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpan {
    pub start: f64,
    pub end: f64,
}

impl EpisodeSpan {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateEvent {
    None,
    /// Motion has been sustained long enough; the episode began at `start`.
    EpisodeStarted { start: f64 },
    EpisodeEnded(EpisodeSpan),
}

/// Advances the gate by one score sample at time `t`.
pub fn update_gate(g: &GateState, score: f64, t: f64, params: &GateParams) -> Result<(GateState, GateEvent)> {
    if let Some(prev) = g.last_t {
        if !(t > prev) {
            return Err(Error::NonMonotoneTime { previous: prev, current: t });
        }
    }
    let mut next = GateState { last_t: Some(t), ..*g };
    let active = score >= params.off_threshold;

    let event = match g.phase {
        GatePhase::Quiet => {
            if score >= params.on_threshold {
                next.phase = GatePhase::MotionPending;
                next.motion_start = Some(t);
                next.last_motion = Some(t);
            }
            GateEvent::None
        }
        GatePhase::MotionPending => {
            let start = g.motion_start.expect("pending gate has a start");
            let last = g.last_motion.expect("pending gate has a last motion");
            if active {
                next.last_motion = Some(t);
                if t - start > params.min_duration_s {
                    next.phase = GatePhase::Recording;
                    GateEvent::EpisodeStarted { start }
                } else {
                    GateEvent::None
                }
            } else if t - last > params.max_gap_s {
                next = GateState {
                    last_t: Some(t),
                    ..GateState::default()
                };
                GateEvent::None
            } else {
                GateEvent::None
            }
        }
        GatePhase::Recording => {
            let start = g.motion_start.expect("recording gate has a start");
            let last = g.last_motion.expect("recording gate has a last motion");
            if active {
                next.last_motion = Some(t);
                GateEvent::None
            } else if t - last > params.max_gap_s {
                next = GateState {
                    last_t: Some(t),
                    ..GateState::default()
                };
                GateEvent::EpisodeEnded(EpisodeSpan { start, end: last })
            } else {
                GateEvent::None
            }
        }
    };
    Ok((next, event))
}

/// Closes an open recording at end of stream.
pub fn flush_gate(g: &GateState) -> Option<EpisodeSpan> {
    match (g.phase, g.motion_start, g.last_motion) {
        (GatePhase::Recording, Some(start), Some(end)) => Some(EpisodeSpan { start, end }),
        _ => None,
    }
}

/// Owned streaming wrapper around [`update_gate`].
#[derive(Debug, Clone, Default)]
pub struct MotionGate {
    params: GateParams,
    state: GateState,
}

impl MotionGate {
    pub fn new(params: GateParams) -> Result<Self> {
        params.validate()?;
        Ok(MotionGate {
            params,
            state: GateState::default(),
        })
    }

    pub fn params(&self) -> &GateParams {
        &self.params
    }

    /// Replaces the parameters, keeping the current state and time cursor.
    pub fn set_params(&mut self, params: GateParams) -> Result<()> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn state(&self) -> &GateState {
        &self.state
    }

    pub fn is_recording(&self) -> bool {
        self.state.phase == GatePhase::Recording
    }

    pub fn update(&mut self, score: f64, t: f64) -> Result<GateEvent> {
        let (state, event) = update_gate(&self.state, score, t, &self.params)?;
        self.state = state;
        Ok(event)
    }

    pub fn flush(&mut self) -> Option<EpisodeSpan> {
        let span = flush_gate(&self.state);
        self.state = GateState {
            last_t: self.state.last_t,
            ..GateState::default()
        };
        span
    }
}

/// Batch segmentation of a whole score timeline.
///
/// Scans for candidate motion runs directly: a run starts at a sample at or
/// above `on_threshold`, extends over samples at or above `off_threshold`,
/// and ends at the first quiet sample more than `max_gap_s` after the last
/// active one. Runs lasting longer than `min_duration_s` become episodes.
/// Produces the same spans as streaming through [`MotionGate`] and flushing.
pub fn segment_episodes(scores: &[(f64, f64)], params: &GateParams) -> Result<Vec<EpisodeSpan>> {
    if let Some(w) = scores.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::NonMonotoneTime {
            previous: w[0].0,
            current: w[1].0,
        });
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < scores.len() {
        let (start, score) = scores[i];
        if score < params.on_threshold {
            i += 1;
            continue;
        }
        let mut last = start;
        let mut j = i + 1;
        while j < scores.len() {
            let (t, s) = scores[j];
            if s >= params.off_threshold {
                last = t;
            } else if t - last > params.max_gap_s {
                break;
            }
            j += 1;
        }
        if last - start > params.min_duration_s {
            spans.push(EpisodeSpan { start, end: last });
        }
        i = j + 1;
    }
    Ok(spans)
}
