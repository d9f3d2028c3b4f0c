//! Per-episode annotation files.
//!
//! On disk an annotation is a JSON document with sorted keys and a
//! run-length-encoded label track:
//!
//! ```json
//! {
//!   "annotator_id": "a1",
//!   "attributes": { "lacquered_nails": false, "ring": true, "watch": false },
//!   "episode_id": "ep-0001",
//!   "fps": 30,
//!   "frame_count": 90,
//!   "runs": [ { "code": 2, "end_frame_exclusive": 90, "start_frame": 0 } ],
//!   "version": 1
//! }
//! ```
//!
//! `fps` is either an integer or a `"num/den"` string. Runs may appear in any
//! order in input but must tile `[0, frame_count)` exactly. In memory the
//! track is dense: one [`MovementClass`] per frame.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::movement::{MovementClass, NUM_CLASSES};

pub const ANNOTATION_VERSION: u32 = 1;

/// Frames per second as a reduced positive fraction (e.g. `30000/1001`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fps {
    num: u32,
    den: u32,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Fps {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Validation(format!("fps must be positive, got {num}/{den}")));
        }
        let g = gcd(num as u64, den as u64) as u32;
        Ok(Fps {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(fps: u32) -> Result<Self> {
        Fps::new(fps, 1)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Duration of `frames` frames in seconds.
    pub fn frames_to_seconds(self, frames: u64) -> f64 {
        (frames as f64 * self.den as f64) / self.num as f64
    }

    /// Timestamp of frame `index`.
    pub fn frame_time(self, index: usize) -> f64 {
        self.frames_to_seconds(index as u64)
    }
}

impl Default for Fps {
    fn default() -> Self {
        Fps { num: 30, den: 1 }
    }
}

impl fmt::Display for Fps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Fps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("invalid fps '{s}'"));
        match s.trim().split_once('/') {
            Some((n, d)) => Fps::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => Fps::integer(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

impl Serialize for Fps {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_u32(self.num)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Fps {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct FpsVisitor;

        impl Visitor<'_> for FpsVisitor {
            type Value = Fps;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or a \"num/den\" string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Fps, E> {
                let v = u32::try_from(v).map_err(|_| E::custom("fps out of range"))?;
                Fps::integer(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Fps, E> {
                if v <= 0 {
                    return Err(E::custom(format!("fps must be positive, got {v}")));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Fps, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(FpsVisitor)
    }
}

/// Per-episode properties of the washer, not of any single gesture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attributes {
    pub lacquered_nails: bool,
    pub ring: bool,
    pub watch: bool,
}

impl Attributes {
    pub fn union(self, other: Attributes) -> Attributes {
        Attributes {
            lacquered_nails: self.lacquered_nails || other.lacquered_nails,
            ring: self.ring || other.ring,
            watch: self.watch || other.watch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLabel {
    pub frame_index: usize,
    pub movement: MovementClass,
}

/// A maximal run of identically-labelled frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelRun {
    pub start_frame: usize,
    pub end_frame_exclusive: usize,
    pub movement: MovementClass,
}

impl LabelRun {
    pub fn len(&self) -> usize {
        self.end_frame_exclusive - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ground truth for one episode from one annotator.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeAnnotation {
    pub episode_id: String,
    pub annotator_id: String,
    pub fps: Fps,
    pub attributes: Attributes,
    labels: Vec<MovementClass>,
}

impl EpisodeAnnotation {
    pub fn new(episode_id: impl Into<String>, annotator_id: impl Into<String>, fps: Fps, labels: Vec<MovementClass>) -> Self {
        EpisodeAnnotation {
            episode_id: episode_id.into(),
            annotator_id: annotator_id.into(),
            fps,
            attributes: Attributes::default(),
            labels,
        }
    }

    pub fn with_attributes(mut self, attributes: Attributes) -> Self {
        self.attributes = attributes;
        self
    }

    /// Builds a dense track from `(movement, frames)` segments.
    pub fn from_segments(
        episode_id: impl Into<String>,
        annotator_id: impl Into<String>,
        fps: Fps,
        segments: &[(MovementClass, usize)],
    ) -> Self {
        let labels = segments
            .iter()
            .flat_map(|&(m, n)| std::iter::repeat(m).take(n))
            .collect();
        EpisodeAnnotation::new(episode_id, annotator_id, fps, labels)
    }

    pub fn frame_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[MovementClass] {
        &self.labels
    }

    pub fn label(&self, frame_index: usize) -> Option<MovementClass> {
        self.labels.get(frame_index).copied()
    }

    pub fn frame_labels(&self) -> impl Iterator<Item = FrameLabel> + '_ {
        self.labels
            .iter()
            .enumerate()
            .map(|(frame_index, &movement)| FrameLabel { frame_index, movement })
    }

    pub fn duration_s(&self) -> f64 {
        self.fps.frames_to_seconds(self.labels.len() as u64)
    }

    /// Maximal runs in frame order.
    pub fn runs(&self) -> Vec<LabelRun> {
        let mut runs: Vec<LabelRun> = Vec::new();
        for (i, &m) in self.labels.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.movement == m => run.end_frame_exclusive = i + 1,
                _ => runs.push(LabelRun {
                    start_frame: i,
                    end_frame_exclusive: i + 1,
                    movement: m,
                }),
            }
        }
        runs
    }

    /// `(movement, seconds)` pairs, one per run.
    pub fn timed_labels(&self) -> Vec<(MovementClass, f64)> {
        self.runs()
            .into_iter()
            .map(|r| (r.movement, self.fps.frames_to_seconds(r.len() as u64)))
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_annotation(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serialize_annotation(self)).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    code: i64,
    end_frame_exclusive: usize,
    start_frame: usize,
}

// Field order is alphabetical so that serialization emits sorted keys.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotation {
    annotator_id: String,
    #[serde(default)]
    attributes: Attributes,
    episode_id: String,
    fps: Fps,
    frame_count: usize,
    runs: Vec<RawRun>,
    version: u32,
}

/// Parses an annotation document into a dense track.
pub fn parse_annotation(text: &str) -> Result<EpisodeAnnotation> {
    let raw: RawAnnotation = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.version != ANNOTATION_VERSION {
        return Err(Error::Validation(format!(
            "unsupported annotation version {} (expected {ANNOTATION_VERSION})",
            raw.version
        )));
    }

    let mut runs = raw
        .runs
        .iter()
        .map(|r| {
            Ok(LabelRun {
                start_frame: r.start_frame,
                end_frame_exclusive: r.end_frame_exclusive,
                movement: MovementClass::from_code(r.code)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.start_frame);

    let mut labels = Vec::with_capacity(raw.frame_count);
    for run in &runs {
        if run.end_frame_exclusive <= run.start_frame {
            return Err(Error::Validation(format!(
                "empty or inverted run [{}, {})",
                run.start_frame, run.end_frame_exclusive
            )));
        }
        let covered = labels.len();
        if run.start_frame > covered {
            return Err(Error::Validation(format!(
                "frame gap: frames [{covered}, {}) are unlabeled",
                run.start_frame
            )));
        }
        if run.start_frame < covered {
            return Err(Error::Validation(format!(
                "overlapping runs at frame {}",
                run.start_frame
            )));
        }
        labels.extend(std::iter::repeat(run.movement).take(run.len()));
    }
    if labels.len() < raw.frame_count {
        return Err(Error::Validation(format!(
            "frame gap: frames [{}, {}) are unlabeled",
            labels.len(),
            raw.frame_count
        )));
    }
    if labels.len() > raw.frame_count {
        return Err(Error::Validation(format!(
            "runs extend to frame {} beyond frame_count {}",
            labels.len(),
            raw.frame_count
        )));
    }

    Ok(EpisodeAnnotation {
        episode_id: raw.episode_id,
        annotator_id: raw.annotator_id,
        fps: raw.fps,
        attributes: raw.attributes,
        labels,
    })
}

/// Canonical form: sorted keys, maximal runs in frame order, two-space
/// indentation and a trailing newline.
pub fn serialize_annotation(a: &EpisodeAnnotation) -> String {
    let raw = RawAnnotation {
        annotator_id: a.annotator_id.clone(),
        attributes: a.attributes,
        episode_id: a.episode_id.clone(),
        fps: a.fps,
        frame_count: a.frame_count(),
        runs: a
            .runs()
            .into_iter()
            .map(|r| RawRun {
                code: r.movement.code() as i64,
                end_frame_exclusive: r.end_frame_exclusive,
                start_frame: r.start_frame,
            })
            .collect(),
        version: ANNOTATION_VERSION,
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("annotation serialization is infallible");
    text.push('\n');
    text
}

/// Frame counts per class for one episode; seconds are derived through the
/// episode's frame rate so that per-class durations always add up to the
/// episode duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MovementDurations {
    frames: [u64; NUM_CLASSES],
    fps: Fps,
}

impl MovementDurations {
    pub fn frames(&self, m: MovementClass) -> u64 {
        self.frames[m.index()]
    }

    pub fn seconds(&self, m: MovementClass) -> f64 {
        self.fps.frames_to_seconds(self.frames(m))
    }

    pub fn total_frames(&self) -> u64 {
        self.frames.iter().sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.fps.frames_to_seconds(self.total_frames())
    }

    pub fn fps(&self) -> Fps {
        self.fps
    }

    /// `(movement, seconds)` for every class, including zero entries.
    pub fn iter(&self) -> impl Iterator<Item = (MovementClass, f64)> + '_ {
        MovementClass::ALL.into_iter().map(|m| (m, self.seconds(m)))
    }

    /// Classes with at least one frame.
    pub fn present(&self) -> impl Iterator<Item = MovementClass> + '_ {
        MovementClass::ALL.into_iter().filter(|m| self.frames(*m) > 0)
    }
}

pub fn movement_durations(a: &EpisodeAnnotation) -> MovementDurations {
    let mut frames = [0u64; NUM_CLASSES];
    for m in &a.labels {
        frames[m.index()] += 1;
    }
    MovementDurations { frames, fps: a.fps }
}
