//! End-to-end orchestration: sources, synthetic data, the streaming pipeline,
//! one-shot runs and batch evaluation.

pub mod batch;
pub mod fixtures;
pub mod pipeline;
pub mod run;
pub mod source;
pub mod synth;

pub use batch::{batch_evaluate, BatchOptions, BatchResult, EpisodeEvaluation, EvalSplit};
pub use fixtures::{write_synthetic_manifest, LabelPattern, ManifestFixtureSpec};
pub use pipeline::MonitorPipeline;
pub use run::{run_episode, run_source, write_episode_outputs, RunOutcome, RunSpec, EXIT_ERROR, EXIT_FAILED, EXIT_NO_EPISODE, EXIT_OK};
pub use source::{OpenedSource, SourceItem, SourceSpec};
pub use synth::{generate_synthetic_episode, randomized_episode_spec, synthesize_annotation, FrameRenderer, Segment, SyntheticEpisode, SyntheticEpisodeSpec};
