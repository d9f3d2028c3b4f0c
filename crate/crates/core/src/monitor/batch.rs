use serde::{Deserialize, Serialize};

use crate::dataset::{split_by_group, split_dataset, DatasetManifest, EpisodeAnnotation, MergePolicy, SplitRatios};
use crate::error::{Error, Result};
use crate::monitor::source::{list_frames, load_frame};
use crate::pipeline::{build_classifier, evaluate, ClassifierSpec, ClassifyContext, ConfusionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Train,
    Validation,
    #[default]
    Test,
    All,
}

impl std::str::FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(EvalSplit::Train),
            "validation" | "val" => Ok(EvalSplit::Validation),
            "test" => Ok(EvalSplit::Test),
            "all" => Ok(EvalSplit::All),
            other => Err(Error::Validation(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub split: EvalSplit,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub merge_policy: MergePolicy,
    /// Split whole episodes instead of individual frames.
    pub episode_level: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            split: EvalSplit::Test,
            ratios: SplitRatios::default(),
            seed: 0,
            merge_policy: MergePolicy::PreferFirst,
            episode_level: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEvaluation {
    pub episode_id: String,
    pub frames: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub confusion: ConfusionMatrix,
    pub episodes: Vec<EpisodeEvaluation>,
}

impl BatchResult {
    pub fn accuracy(&self) -> Option<f64> {
        self.confusion.accuracy()
    }
}

/// Classifies the selected split of every manifest frame and aggregates one
/// confusion matrix, plus per-episode accuracy. Frames are visited in
/// episode order, so seeded classifiers are reproducible.
pub fn batch_evaluate(manifest: &DatasetManifest, classifier: &ClassifierSpec, opts: &BatchOptions) -> Result<BatchResult> {
    manifest.validate()?;
    let truths = manifest
        .entries
        .iter()
        .map(|e| manifest.load_ground_truth(e, opts.merge_policy))
        .collect::<Result<Vec<EpisodeAnnotation>>>()?;
    let sizes: Vec<usize> = truths.iter().map(EpisodeAnnotation::frame_count).collect();
    let total: usize = sizes.iter().sum();

    let selected: Vec<usize> = if opts.split == EvalSplit::All {
        (0..total).collect()
    } else {
        let split = if opts.episode_level {
            split_by_group(&sizes, opts.ratios, opts.seed)?
        } else {
            split_dataset(total, opts.ratios, opts.seed)?
        };
        match opts.split {
            EvalSplit::Train => split.train,
            EvalSplit::Validation => split.validation,
            EvalSplit::Test => split.test,
            EvalSplit::All => unreachable!(),
        }
    };

    let mut clf = build_classifier(classifier)?;
    let mut confusion = ConfusionMatrix::default();
    let mut episodes = Vec::new();
    let mut cursor = 0;
    let mut offset = 0;
    for (entry, truth) in manifest.entries.iter().zip(&truths) {
        let end = offset + truth.frame_count();
        let start_cursor = cursor;
        while cursor < selected.len() && selected[cursor] < end {
            cursor += 1;
        }
        let frames: Vec<usize> = selected[start_cursor..cursor].iter().map(|g| g - offset).collect();
        offset = end;
        if frames.is_empty() {
            continue;
        }

        let pixels = if classifier.needs_frames() {
            Some(list_frames(&manifest.resolve(&entry.video_path))?)
        } else {
            None
        };
        if let Some(p) = &pixels {
            if p.len() != truth.frame_count() {
                return Err(Error::Source(format!(
                    "episode '{}' has {} frame files but {} annotated frames",
                    entry.episode_id,
                    p.len(),
                    truth.frame_count()
                )));
            }
        }

        let mut predictions = Vec::with_capacity(frames.len());
        let mut expected = Vec::with_capacity(frames.len());
        for &i in &frames {
            let frame = match &pixels {
                Some(p) => Some(load_frame(&p[i], truth.fps.frame_time(i))?),
                None => None,
            };
            let ctx = ClassifyContext {
                frame_index: i,
                truth: Some(truth),
            };
            predictions.push(clf.classify(frame.as_ref(), &ctx)?.argmax());
            expected.push(truth.labels()[i]);
        }
        let cm = evaluate(&predictions, &expected)?;
        confusion.merge(&cm);
        episodes.push(EpisodeEvaluation {
            episode_id: entry.episode_id.clone(),
            frames: frames.len(),
            correct: cm.correct() as usize,
            accuracy: cm.accuracy(),
        });
    }
    Ok(BatchResult { confusion, episodes })
}
