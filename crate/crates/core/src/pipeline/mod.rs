//! Frame preprocessing and augmentation, the classifier boundary, temporal
//! smoothing and evaluation metrics.

pub mod augment;
pub mod classifier;
pub mod metrics;
pub mod preprocess;
pub mod smoothing;

pub use augment::{apply_augment, augment, AugmentParams};
pub use classifier::{
    build_classifier, ClassScores, ClassifierSpec, ClassifyContext, ConstantClassifier, ExternalClassifier,
    FrameClassifier, InferenceModel, LinearGridModel, ReplayClassifier,
};
pub use metrics::{evaluate, ConfusionMatrix};
pub use preprocess::preprocess;
pub use smoothing::{smooth, MajoritySmoother, DEFAULT_SMOOTHING_WINDOW};
