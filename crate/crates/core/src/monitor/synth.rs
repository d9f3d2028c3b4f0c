//! Synthetic episodes for tests, fixtures and demos.
//!
//! Frames are crude on purpose: a static textured background, plus a
//! high-contrast checkered patch that moves and flips phase on every washing
//! frame. Consecutive idle frames are identical, so the motion score is zero
//! outside washing and well above the gate threshold inside it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{EpisodeAnnotation, Fps};
use crate::engine::ComplianceConfig;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::movement::MovementClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub movement: MovementClass,
    pub duration_s: f64,
}

impl Segment {
    pub fn new(movement: MovementClass, duration_s: f64) -> Self {
        Segment { movement, duration_s }
    }
}

fn default_episode_id() -> String {
    "synthetic".into()
}

fn default_width() -> usize {
    160
}

fn default_height() -> usize {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEpisodeSpec {
    #[serde(default = "default_episode_id")]
    pub episode_id: String,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub fps: Fps,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub render_frames: bool,
    #[serde(default = "default_width")]
    pub frame_width: usize,
    #[serde(default = "default_height")]
    pub frame_height: usize,
}

impl SyntheticEpisodeSpec {
    pub fn new(segments: Vec<Segment>) -> Self {
        SyntheticEpisodeSpec {
            episode_id: default_episode_id(),
            segments,
            fps: Fps::default(),
            seed: 0,
            render_frames: false,
            frame_width: default_width(),
            frame_height: default_height(),
        }
    }

    pub fn from_pairs(pairs: &[(MovementClass, f64)]) -> Self {
        SyntheticEpisodeSpec::new(pairs.iter().map(|&(m, d)| Segment::new(m, d)).collect())
    }

    pub fn with_frames(mut self, width: usize, height: usize) -> Self {
        self.render_frames = true;
        self.frame_width = width;
        self.frame_height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.segments.iter().find(|s| !(s.duration_s > 0.0 && s.duration_s.is_finite())) {
            return Err(Error::Validation(format!(
                "segment durations must be positive, got {}",
                s.duration_s
            )));
        }
        if self.render_frames && (self.frame_width < 16 || self.frame_height < 16) {
            return Err(Error::Validation("synthetic frames must be at least 16x16".into()));
        }
        Ok(())
    }
}

/// Dense ground truth realising the segments. Segment boundaries are placed
/// at the nearest frame to their cumulative start time, so rounding does not
/// drift over long episodes.
pub fn synthesize_annotation(spec: &SyntheticEpisodeSpec) -> Result<EpisodeAnnotation> {
    spec.validate()?;
    let fps = spec.fps.as_f64();
    let mut labels = Vec::new();
    let mut elapsed = 0.0;
    for seg in &spec.segments {
        elapsed += seg.duration_s;
        let boundary = (elapsed * fps).round() as usize;
        let n = boundary.saturating_sub(labels.len());
        labels.extend(std::iter::repeat(seg.movement).take(n));
    }
    Ok(EpisodeAnnotation::new(spec.episode_id.clone(), "synthetic", spec.fps, labels))
}

/// Renders frames lazily, one per annotation frame.
#[derive(Debug, Clone)]
pub struct FrameRenderer {
    width: usize,
    height: usize,
    background: Vec<u8>,
    fps: Fps,
}

const CELL: usize = 16;

fn hash3(a: u64, b: u64, c: u64) -> u64 {
    // splitmix64 finaliser over a combined key
    let mut z = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(c.wrapping_mul(0x94D0_49BB_1331_11EB));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl FrameRenderer {
    pub fn new(width: usize, height: usize, fps: Fps, seed: u64) -> Self {
        let mut background = vec![0u8; width * height * 3];
        for y in 0..height {
            for x in 0..width {
                let h = hash3(seed, (x / 4) as u64, (y / 4) as u64);
                let base = 70 + (h % 60) as u8;
                let px = &mut background[(y * width + x) * 3..(y * width + x) * 3 + 3];
                px.copy_from_slice(&[base, base.saturating_add(10), base.saturating_add(20)]);
            }
        }
        FrameRenderer {
            width,
            height,
            background,
            fps,
        }
    }

    pub fn render(&self, index: usize, movement: MovementClass) -> Frame {
        let mut data = self.background.clone();
        if movement.is_washing() {
            let pw = (self.width / 3).max(CELL);
            let ph = (self.height / 3).max(CELL);
            // Patch centre travels around an ellipse; phase advances per frame.
            let angle = index as f64 * 0.35;
            let cx = (self.width as f64 / 2.0) + (self.width as f64 / 6.0) * angle.cos();
            let cy = (self.height as f64 / 2.0) + (self.height as f64 / 6.0) * angle.sin();
            let x0 = (cx - pw as f64 / 2.0).clamp(0.0, (self.width - pw) as f64) as usize;
            let y0 = (cy - ph as f64 / 2.0).clamp(0.0, (self.height - ph) as f64) as usize;
            let tone = 40 + movement.code() * 8;
            for y in y0..y0 + ph {
                for x in x0..x0 + pw {
                    let checker = ((x - x0) / CELL + (y - y0) / CELL + index) % 2 == 0;
                    let v = if checker { 235 } else { tone };
                    let px = &mut data[(y * self.width + x) * 3..(y * self.width + x) * 3 + 3];
                    px.copy_from_slice(&[v, v, v]);
                }
            }
        }
        Frame::new(self.width, self.height, 3, data, self.fps.frame_time(index)).expect("renderer dimensions are consistent")
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEpisode {
    pub annotation: EpisodeAnnotation,
    pub renderer: Option<FrameRenderer>,
}

impl SyntheticEpisode {
    /// Iterator over rendered frames, if frame synthesis was requested.
    pub fn frames(&self) -> Option<impl Iterator<Item = Frame> + '_> {
        let renderer = self.renderer.as_ref()?;
        Some(
            self.annotation
                .labels()
                .iter()
                .enumerate()
                .map(move |(i, &m)| renderer.render(i, m)),
        )
    }
}

pub fn generate_synthetic_episode(spec: &SyntheticEpisodeSpec) -> Result<SyntheticEpisode> {
    let annotation = synthesize_annotation(spec)?;
    let renderer = spec
        .render_frames
        .then(|| FrameRenderer::new(spec.frame_width, spec.frame_height, spec.fps, spec.seed));
    Ok(SyntheticEpisode { annotation, renderer })
}

/// Movement durations sit at least this far from every threshold.
pub const RANDOM_MARGIN_S: f64 = 1.0;
/// Distance of the counted total from the total threshold.
pub const RANDOM_TOTAL_MARGIN_S: f64 = 2.0;

/// A random but unambiguous episode for `cfg`: each required movement is
/// either comfortably above its minimum, clearly short, or absent; the counted
/// total stays clear of the total threshold; idle pauses are long enough to
/// survive smoothing and short enough not to close the gate. The episode ends
/// with enough idle to close it.
pub fn randomized_episode_spec(seed: u64, cfg: &ComplianceConfig) -> SyntheticEpisodeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_span = cfg.gate.min_duration_s + 2.0;
    let pause_max = (cfg.gate.max_gap_s - 0.5).max(0.6);
    loop {
        let mut segments: Vec<Segment> = Vec::new();
        // Half the episodes meet every minimum; the rest roll per movement.
        let all_met = rng.gen_bool(0.5);
        let mut order: Vec<MovementClass> = MovementClass::WASHING.to_vec();
        order.shuffle(&mut rng);
        for m in order {
            let min = if cfg.required_movements.contains(&m) { cfg.min_for(m) } else { 0.0 };
            let roll: f64 = if all_met { 0.0 } else { rng.gen() };
            let d = if roll < 0.75 {
                rng.gen_range(min + RANDOM_MARGIN_S..min + RANDOM_MARGIN_S + 5.0)
            } else if roll < 0.9 && min - RANDOM_MARGIN_S >= 0.5 {
                rng.gen_range(0.5..=min - RANDOM_MARGIN_S)
            } else {
                continue;
            };
            if !segments.is_empty() && rng.gen_bool(0.5) {
                segments.push(Segment::new(MovementClass::Idle, rng.gen_range(0.6..pause_max)));
            }
            segments.push(Segment::new(m, d));
        }
        let counted: f64 = segments
            .iter()
            .filter(|s| cfg.counted_movements.contains(&s.movement) && s.movement.is_washing())
            .map(|s| s.duration_s)
            .sum();
        let span: f64 = segments.iter().map(|s| s.duration_s).sum();
        if (counted - cfg.total_duration_s).abs() < RANDOM_TOTAL_MARGIN_S || span < min_span {
            continue;
        }
        segments.push(Segment::new(MovementClass::Idle, cfg.gate.max_gap_s + 1.0));
        let mut spec = SyntheticEpisodeSpec::new(segments);
        spec.episode_id = format!("random-{seed}");
        spec.seed = seed;
        return spec;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::movement_durations;
    use crate::motion::{motion_score, GateParams};
    use MovementClass::*;

    #[test]
    fn one_second_at_thirty_fps() {
        let ep = generate_synthetic_episode(&SyntheticEpisodeSpec::from_pairs(&[(PalmToPalm, 1.0)])).unwrap();
        assert_eq!(ep.annotation.labels(), &[PalmToPalm; 30]);
        assert!(ep.frames().is_none());
    }

    #[test]
    fn empty_segments() {
        let ep = generate_synthetic_episode(&SyntheticEpisodeSpec::new(vec![])).unwrap();
        assert_eq!(ep.annotation.frame_count(), 0);
    }

    #[test]
    fn three_segments() {
        let spec = SyntheticEpisodeSpec::from_pairs(&[(PalmToPalm, 1.0), (Idle, 0.5), (PalmOverDorsum, 1.0)]);
        let a = synthesize_annotation(&spec).unwrap();
        assert_eq!(a.frame_count(), 75);
        let d = movement_durations(&a);
        assert_eq!(d.seconds(PalmToPalm), 1.0);
        assert_eq!(d.seconds(Idle), 0.5);
        assert_eq!(d.seconds(PalmOverDorsum), 1.0);
    }

    #[test]
    fn invalid_durations() {
        assert!(synthesize_annotation(&SyntheticEpisodeSpec::from_pairs(&[(PalmToPalm, 0.0)])).is_err());
        assert!(synthesize_annotation(&SyntheticEpisodeSpec::from_pairs(&[(PalmToPalm, f64::NAN)])).is_err());
    }

    #[test]
    fn rendered_motion_follows_washing() {
        let spec = SyntheticEpisodeSpec::from_pairs(&[(Idle, 0.5), (ThumbRub, 1.0), (Idle, 0.5)]).with_frames(96, 72);
        let ep = generate_synthetic_episode(&spec).unwrap();
        let frames: Vec<Frame> = ep.frames().unwrap().collect();
        assert_eq!(frames.len(), 60);
        let on = GateParams::default().on_threshold;
        for i in 1..frames.len() {
            let s = motion_score(&frames[i - 1], &frames[i]).unwrap();
            let washing = ep.annotation.labels()[i].is_washing() || ep.annotation.labels()[i - 1].is_washing();
            if washing {
                assert!(s >= on, "frame {i}: {s}");
            } else {
                assert_eq!(s, 0.0, "frame {i}");
            }
        }
        assert!((frames[30].timestamp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn randomized_specs_keep_their_margins() {
        let cfg = ComplianceConfig::default();
        for seed in 0..50 {
            let spec = randomized_episode_spec(seed, &cfg);
            assert_eq!(spec, randomized_episode_spec(seed, &cfg));
            let last = spec.segments.last().unwrap();
            assert_eq!(last.movement, Idle);
            for s in &spec.segments[..spec.segments.len() - 1] {
                if s.movement == Idle {
                    assert!(s.duration_s < cfg.gate.max_gap_s);
                } else {
                    let min = cfg.min_for(s.movement);
                    assert!((s.duration_s - min).abs() >= RANDOM_MARGIN_S - 1e-12);
                }
            }
        }
    }
}
