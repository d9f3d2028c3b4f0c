//! Synthetic dataset manifests with matching annotation files on disk.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Attributes, DatasetManifest, EpisodeAnnotation, Fps, ManifestEntry};
use crate::error::{Error, Result};
use crate::movement::{MovementClass, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPattern {
    /// Runs of 15 to 120 frames, movement codes drawn uniformly.
    #[default]
    Runs,
    /// Every frame drawn independently and uniformly over all 8 codes.
    Uniform,
}

impl std::str::FromStr for LabelPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "runs" => Ok(LabelPattern::Runs),
            "uniform" => Ok(LabelPattern::Uniform),
            other => Err(Error::Validation(format!("unknown label pattern '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFixtureSpec {
    pub annotated_once: usize,
    pub annotated_twice: usize,
    pub frames_per_episode: usize,
    pub fps: Fps,
    pub seed: u64,
    pub pattern: LabelPattern,
    /// Fraction of runs the second annotator relabels.
    pub disagreement: f64,
}

impl Default for ManifestFixtureSpec {
    fn default() -> Self {
        ManifestFixtureSpec {
            annotated_once: 10,
            annotated_twice: 5,
            frames_per_episode: 900,
            fps: Fps::default(),
            seed: 0,
            pattern: LabelPattern::Runs,
            disagreement: 0.1,
        }
    }
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, pattern: LabelPattern) -> Vec<MovementClass> {
    let mut labels = Vec::with_capacity(n);
    match pattern {
        LabelPattern::Uniform => {
            for _ in 0..n {
                labels.push(MovementClass::ALL[rng.gen_range(0..NUM_CLASSES)]);
            }
        }
        LabelPattern::Runs => {
            while labels.len() < n {
                let m = MovementClass::ALL[rng.gen_range(0..NUM_CLASSES)];
                let len = rng.gen_range(15..=120).min(n - labels.len());
                labels.extend(std::iter::repeat(m).take(len));
            }
        }
    }
    labels
}

fn second_opinion(rng: &mut ChaCha8Rng, first: &EpisodeAnnotation, disagreement: f64) -> Vec<MovementClass> {
    let mut labels = first.labels().to_vec();
    for run in first.runs() {
        if rng.gen_bool(disagreement) {
            let m = MovementClass::ALL[rng.gen_range(0..NUM_CLASSES)];
            labels[run.start_frame..run.end_frame_exclusive].fill(m);
        }
    }
    labels
}

/// Writes `manifest.jsonl` plus one `.ann.json` file per annotation into
/// `dir`. Single-annotated episodes come first.
pub fn write_synthetic_manifest(dir: &Path, spec: &ManifestFixtureSpec) -> Result<DatasetManifest> {
    if !(0.0..=1.0).contains(&spec.disagreement) {
        return Err(Error::Validation(format!("disagreement must be in [0, 1], got {}", spec.disagreement)));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.annotated_once + spec.annotated_twice;
    let mut entries = Vec::with_capacity(total);
    for i in 0..total {
        let id = format!("ep{i:05}");
        let attributes = Attributes {
            lacquered_nails: rng.gen_bool(0.1),
            ring: rng.gen_bool(0.2),
            watch: rng.gen_bool(0.2),
        };
        let labels = random_labels(&mut rng, spec.frames_per_episode, spec.pattern);
        let first = EpisodeAnnotation::new(id.clone(), "annotator-a", spec.fps, labels).with_attributes(attributes);
        let mut paths: Vec<PathBuf> = vec![format!("{id}.a.ann.json").into()];
        first.save(dir.join(&paths[0]))?;
        if i >= spec.annotated_once {
            let labels = second_opinion(&mut rng, &first, spec.disagreement);
            let second = EpisodeAnnotation::new(id.clone(), "annotator-b", spec.fps, labels).with_attributes(attributes);
            paths.push(format!("{id}.b.ann.json").into());
            second.save(dir.join(&paths[1]))?;
        }
        entries.push(ManifestEntry {
            annotation_paths: paths,
            episode_id: id.clone(),
            fps: spec.fps,
            frame_count: spec.frames_per_episode,
            video_path: id.into(),
        });
    }
    let path = dir.join("manifest.jsonl");
    DatasetManifest::new(entries).save(&path)?;
    DatasetManifest::load(&path)
}
