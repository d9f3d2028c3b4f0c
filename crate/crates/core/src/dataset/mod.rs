//! Annotation data model, file formats and dataset bookkeeping.

pub mod agreement;
pub mod annotation;
pub mod manifest;
pub mod split;
pub mod stats_file;

pub use agreement::{agreement, merge_annotations, Agreement, MergePolicy};
pub use annotation::{
    movement_durations, parse_annotation, serialize_annotation, Attributes, EpisodeAnnotation, FrameLabel, Fps,
    LabelRun, MovementDurations,
};
pub use manifest::{dataset_stats, DatasetManifest, DatasetStats, ManifestEntry};
pub use split::{split_by_group, split_dataset, SplitAssignment, SplitRatios};
pub use stats_file::{episode_stats_rows, read_stats_csv, save_stats_csv, stats_csv_string, StatsRow};
