//! Dataset manifests: one JSON record per line, one line per episode.
//!
//! ```text
//! {"annotation_paths":["ep-1.a.ann.json","ep-1.b.ann.json"],"episode_id":"ep-1","fps":30,"frame_count":900,"video_path":"ep-1.mp4"}
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::agreement::{merge_annotations, MergePolicy};
use crate::dataset::annotation::{EpisodeAnnotation, Fps};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub annotation_paths: Vec<PathBuf>,
    pub episode_id: String,
    pub fps: Fps,
    pub frame_count: usize,
    pub video_path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        DatasetManifest {
            entries,
            base_dir: PathBuf::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.annotation_paths.is_empty() || e.annotation_paths.len() > 2 {
                return Err(Error::Validation(format!(
                    "episode '{}' has {} annotation paths; expected 1 or 2",
                    e.episode_id,
                    e.annotation_paths.len()
                )));
            }
            if !seen.insert(e.episode_id.as_str()) {
                return Err(Error::Validation(format!("duplicate episode id '{}'", e.episode_id)));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        let manifest = DatasetManifest::new(entries);
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            text.push_str(&line.map_err(|e| Error::io(path, e))?);
            text.push('\n');
        }
        let mut manifest = DatasetManifest::parse(&text)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads the ground truth of one entry, merging dual annotations.
    pub fn load_ground_truth(&self, entry: &ManifestEntry, policy: MergePolicy) -> Result<EpisodeAnnotation> {
        let mut anns = entry
            .annotation_paths
            .iter()
            .map(|p| EpisodeAnnotation::load(self.resolve(p)))
            .collect::<Result<Vec<_>>>()?;
        let truth = match anns.len() {
            1 => anns.pop().expect("one annotation"),
            2 => merge_annotations(&anns[0], &anns[1], policy)?,
            n => {
                return Err(Error::Validation(format!(
                    "episode '{}' has {n} annotation paths; expected 1 or 2",
                    entry.episode_id
                )))
            }
        };
        if truth.frame_count() != entry.frame_count || truth.fps != entry.fps {
            return Err(Error::Validation(format!(
                "annotation for '{}' has {} frames at {} fps; manifest says {} at {}",
                entry.episode_id,
                truth.frame_count(),
                truth.fps,
                entry.frame_count,
                entry.fps
            )));
        }
        Ok(truth)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_videos: usize,
    pub total_annotations: usize,
    pub total_annotated_files: usize,
    pub annotated_once: usize,
    pub annotated_twice: usize,
}

pub fn dataset_stats(m: &DatasetManifest) -> Result<DatasetStats> {
    m.validate()?;
    let mut stats = DatasetStats {
        total_videos: m.entries.len(),
        ..DatasetStats::default()
    };
    for e in &m.entries {
        match e.annotation_paths.len() {
            1 => stats.annotated_once += 1,
            _ => stats.annotated_twice += 1,
        }
    }
    stats.total_annotated_files = stats.annotated_once + stats.annotated_twice;
    stats.total_annotations = stats.annotated_once + 2 * stats.annotated_twice;
    Ok(stats)
}
