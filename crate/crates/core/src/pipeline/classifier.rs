//! The per-frame classifier boundary.
//!
//! Every implementation turns one frame into a normalised score vector over
//! the eight classes. Three kinds exist:
//!
//! * `replay`: emits the ground-truth label, replaced by a uniformly random
//!   wrong label with probability `noise_epsilon`. Stands in for a trained
//!   network of known accuracy.
//! * `constant`: always the same label.
//! * `external`: a serialized model with a single image input and an
//!   8-vector output, fed with the preprocessed frame.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EpisodeAnnotation;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::movement::{MovementClass, NUM_CLASSES};
use crate::pipeline::preprocess::preprocess;

/// A probability vector over classes in canonical code order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores([f64; NUM_CLASSES]);

impl ClassScores {
    pub fn one_hot(m: MovementClass) -> Self {
        let mut s = [0.0; NUM_CLASSES];
        s[m.index()] = 1.0;
        ClassScores(s)
    }

    /// Normalises raw non-negative scores so they sum to one.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        if raw.len() != NUM_CLASSES {
            return Err(Error::ClassifierLoad(format!(
                "model returned {} scores, expected {NUM_CLASSES}",
                raw.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!("scores must be finite and non-negative: {raw:?}")));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Validation("scores sum to zero".into()));
        }
        let mut s = [0.0; NUM_CLASSES];
        for (dst, v) in s.iter_mut().zip(raw) {
            *dst = v / sum;
        }
        Ok(ClassScores(s))
    }

    pub fn as_slice(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, m: MovementClass) -> f64 {
        self.0[m.index()]
    }

    /// Highest-scoring class; ties go to the lowest code.
    pub fn argmax(&self) -> MovementClass {
        let mut best = 0;
        for i in 1..NUM_CLASSES {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        MovementClass::ALL[best]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

fn default_input_size() -> usize {
    224
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Replay {
        #[serde(default)]
        noise_epsilon: f64,
        #[serde(default)]
        seed: u64,
    },
    Constant {
        movement: MovementClass,
    },
    External {
        model_path: PathBuf,
        #[serde(default = "default_input_size")]
        input_size: usize,
    },
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Replay {
            noise_epsilon: 0.0,
            seed: 0,
        }
    }
}

impl ClassifierSpec {
    pub fn replay(noise_epsilon: f64, seed: u64) -> Self {
        ClassifierSpec::Replay { noise_epsilon, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierSpec::Replay { noise_epsilon, .. } => {
                if !(0.0..=1.0).contains(noise_epsilon) {
                    return Err(Error::InvalidConfig(format!(
                        "noise_epsilon must lie in [0, 1], got {noise_epsilon}"
                    )));
                }
            }
            ClassifierSpec::Constant { .. } => {}
            ClassifierSpec::External { input_size, .. } => {
                if *input_size == 0 {
                    return Err(Error::InvalidConfig("input_size must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn needs_frames(&self) -> bool {
        matches!(self, ClassifierSpec::External { .. })
    }

    pub fn needs_ground_truth(&self) -> bool {
        matches!(self, ClassifierSpec::Replay { .. })
    }
}

/// What a classifier may know about the frame besides its pixels.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyContext<'a> {
    pub frame_index: usize,
    pub truth: Option<&'a EpisodeAnnotation>,
}

pub trait FrameClassifier: Send {
    /// `frame` may be absent on label-only sources; classifiers that need
    /// pixels fail in that case.
    fn classify(&mut self, frame: Option<&Frame>, ctx: &ClassifyContext<'_>) -> Result<ClassScores>;
}

pub struct ReplayClassifier {
    noise_epsilon: f64,
    rng: ChaCha8Rng,
}

impl ReplayClassifier {
    pub fn new(noise_epsilon: f64, seed: u64) -> Result<Self> {
        ClassifierSpec::replay(noise_epsilon, seed).validate()?;
        Ok(ReplayClassifier {
            noise_epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn predict(&mut self, truth: MovementClass) -> MovementClass {
        if self.noise_epsilon > 0.0 && self.rng.gen_bool(self.noise_epsilon) {
            let k = self.rng.gen_range(0..NUM_CLASSES - 1);
            let k = if k >= truth.index() { k + 1 } else { k };
            MovementClass::ALL[k]
        } else {
            truth
        }
    }
}

impl FrameClassifier for ReplayClassifier {
    fn classify(&mut self, _frame: Option<&Frame>, ctx: &ClassifyContext<'_>) -> Result<ClassScores> {
        let truth = ctx
            .truth
            .ok_or_else(|| Error::Source("replay classifier needs a ground-truth annotation".into()))?;
        let label = truth.label(ctx.frame_index).ok_or(Error::ReplayIndexOutOfRange {
            index: ctx.frame_index,
            frame_count: truth.frame_count(),
        })?;
        Ok(ClassScores::one_hot(self.predict(label)))
    }
}

pub struct ConstantClassifier(pub MovementClass);

impl FrameClassifier for ConstantClassifier {
    fn classify(&mut self, _frame: Option<&Frame>, _ctx: &ClassifyContext<'_>) -> Result<ClassScores> {
        Ok(ClassScores::one_hot(self.0))
    }
}

/// Single-input, single-output inference: one `input_size`x`input_size` RGB
/// image in, eight non-negative scores out in canonical code order.
pub trait InferenceModel: Send {
    fn input_size(&self) -> usize;
    fn infer(&self, image: &Frame) -> Result<Vec<f64>>;
}

pub const LINEAR_MODEL_FORMAT: &str = "linear-grid-v1";

/// A small serialized model: per-cell channel means on a `grid`x`grid`
/// partition of the image, an affine map to eight logits, and a softmax.
///
/// ```json
/// {"format":"linear-grid-v1","input_size":224,"grid":2,
///  "weights":[[...12 values...], ... 8 rows ...],"bias":[...8 values...]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGridModel {
    pub format: String,
    pub input_size: usize,
    pub grid: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearGridModel {
    pub fn feature_len(&self) -> usize {
        self.grid * self.grid * 3
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != LINEAR_MODEL_FORMAT {
            return Err(Error::ClassifierLoad(format!("unsupported model format '{}'", self.format)));
        }
        if self.grid == 0 || self.input_size == 0 || self.grid > self.input_size {
            return Err(Error::ClassifierLoad(format!(
                "grid {} incompatible with input size {}",
                self.grid, self.input_size
            )));
        }
        if self.weights.len() != NUM_CLASSES || self.bias.len() != NUM_CLASSES {
            return Err(Error::ClassifierLoad(format!(
                "model has {} weight rows and {} biases, expected {NUM_CLASSES}",
                self.weights.len(),
                self.bias.len()
            )));
        }
        if let Some(row) = self.weights.iter().find(|r| r.len() != self.feature_len()) {
            return Err(Error::ClassifierLoad(format!(
                "weight row has {} entries, expected {}",
                row.len(),
                self.feature_len()
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ClassifierLoad(format!("cannot read {}: {e}", path.display())))?;
        let model: LinearGridModel = serde_json::from_str(&text)
            .map_err(|e| Error::ClassifierLoad(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    fn features(&self, image: &Frame) -> Vec<f64> {
        let n = self.input_size;
        let mut sums = vec![0.0; self.feature_len()];
        let mut counts = vec![0usize; self.grid * self.grid];
        for y in 0..n {
            let gy = y * self.grid / n;
            for x in 0..n {
                let cell = gy * self.grid + x * self.grid / n;
                counts[cell] += 1;
                for (c, &v) in image.pixel(x, y).iter().enumerate() {
                    sums[cell * 3 + c] += v as f64;
                }
            }
        }
        for (i, s) in sums.iter_mut().enumerate() {
            *s /= counts[i / 3] as f64 * 255.0;
        }
        sums
    }
}

impl InferenceModel for LinearGridModel {
    fn input_size(&self) -> usize {
        self.input_size
    }

    fn infer(&self, image: &Frame) -> Result<Vec<f64>> {
        if image.width() != self.input_size || image.height() != self.input_size || image.channels() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "model expects {0}x{0}x3 input, got {1}x{2}x{3}",
                self.input_size,
                image.width(),
                image.height(),
                image.channels()
            )));
        }
        let f = self.features(image);
        let logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(&f).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(logits.iter().map(|l| (l - max).exp()).collect())
    }
}

pub struct ExternalClassifier {
    model: Box<dyn InferenceModel>,
}

impl ExternalClassifier {
    pub fn new(model: Box<dyn InferenceModel>, expected_input_size: usize) -> Result<Self> {
        if model.input_size() != expected_input_size {
            return Err(Error::ClassifierLoad(format!(
                "model input size {} does not match configured {expected_input_size}",
                model.input_size()
            )));
        }
        Ok(ExternalClassifier { model })
    }
}

impl FrameClassifier for ExternalClassifier {
    fn classify(&mut self, frame: Option<&Frame>, _ctx: &ClassifyContext<'_>) -> Result<ClassScores> {
        let frame = frame.ok_or_else(|| Error::Source("external classifier needs frame pixels".into()))?;
        let input = preprocess(frame, self.model.input_size())?;
        ClassScores::from_raw(&self.model.infer(&input)?)
    }
}

pub fn build_classifier(spec: &ClassifierSpec) -> Result<Box<dyn FrameClassifier>> {
    spec.validate()?;
    Ok(match spec {
        ClassifierSpec::Replay { noise_epsilon, seed } => Box::new(ReplayClassifier::new(*noise_epsilon, *seed)?),
        ClassifierSpec::Constant { movement } => Box::new(ConstantClassifier(*movement)),
        ClassifierSpec::External { model_path, input_size } => {
            let model = LinearGridModel::load(model_path)?;
            Box::new(ExternalClassifier::new(Box::new(model), *input_size)?)
        }
    })
}
