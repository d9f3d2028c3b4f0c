//! Input sources: recorded annotations (label replay), synthetic episodes,
//! directories of still frames, and live frame streams.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{EpisodeAnnotation, Fps};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::monitor::synth::{generate_synthetic_episode, SyntheticEpisodeSpec};

/// One step of a source: a timestamp, and the frame when pixels exist.
#[derive(Debug, Clone)]
pub struct SourceItem {
    pub index: usize,
    pub t: f64,
    pub frame: Option<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Replays an annotation file; no pixels, motion is derived from labels.
    Annotation { path: PathBuf },
    Synthetic { spec: SyntheticEpisodeSpec },
    /// A directory of PNG frames in file-name order, with optional ground truth.
    FrameDirectory {
        path: PathBuf,
        fps: Fps,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
}

pub type ItemStream = Box<dyn Iterator<Item = Result<SourceItem>> + Send>;

pub struct OpenedSource {
    pub name: String,
    pub fps: Fps,
    pub truth: Option<EpisodeAnnotation>,
    pub items: ItemStream,
}

impl std::fmt::Debug for OpenedSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenedSource")
            .field("name", &self.name)
            .field("fps", &self.fps)
            .field("has_truth", &self.truth.is_some())
            .finish()
    }
}

impl OpenedSource {
    pub fn open(spec: &SourceSpec) -> Result<Self> {
        match spec {
            SourceSpec::Annotation { path } => Ok(OpenedSource::from_annotation(EpisodeAnnotation::load(path)?)),
            SourceSpec::Synthetic { spec } => OpenedSource::synthetic(spec),
            SourceSpec::FrameDirectory { path, fps, truth } => {
                let truth = truth.as_ref().map(EpisodeAnnotation::load).transpose()?;
                OpenedSource::frame_directory(path, *fps, truth)
            }
        }
    }

    /// Label-only replay of a recorded annotation.
    pub fn from_annotation(a: EpisodeAnnotation) -> Self {
        let fps = a.fps;
        let n = a.frame_count();
        OpenedSource {
            name: a.episode_id.clone(),
            fps,
            truth: Some(a),
            items: Box::new((0..n).map(move |index| {
                Ok(SourceItem {
                    index,
                    t: fps.frame_time(index),
                    frame: None,
                })
            })),
        }
    }

    pub fn synthetic(spec: &SyntheticEpisodeSpec) -> Result<Self> {
        let ep = generate_synthetic_episode(spec)?;
        let fps = spec.fps;
        let labels = ep.annotation.labels().to_vec();
        let renderer = ep.renderer.clone();
        Ok(OpenedSource {
            name: spec.episode_id.clone(),
            fps,
            truth: Some(ep.annotation),
            items: Box::new(labels.into_iter().enumerate().map(move |(index, m)| {
                Ok(SourceItem {
                    index,
                    t: fps.frame_time(index),
                    frame: renderer.as_ref().map(|r| r.render(index, m)),
                })
            })),
        })
    }

    pub fn frame_directory(dir: &Path, fps: Fps, truth: Option<EpisodeAnnotation>) -> Result<Self> {
        let paths = list_frames(dir)?;
        if let Some(t) = &truth {
            if t.frame_count() != paths.len() {
                return Err(Error::Source(format!(
                    "{} has {} frames but its annotation has {}",
                    dir.display(),
                    paths.len(),
                    t.frame_count()
                )));
            }
        }
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "frames".into());
        Ok(OpenedSource {
            name,
            fps,
            truth,
            items: Box::new(paths.into_iter().enumerate().map(move |(index, p)| {
                let t = fps.frame_time(index);
                load_frame(&p, t).map(|frame| SourceItem {
                    index,
                    t,
                    frame: Some(frame),
                })
            })),
        })
    }

    /// A live stream of timestamped frames from a named device or feed.
    pub fn live<I>(name: impl Into<String>, fps: Fps, frames: I) -> Self
    where
        I: Iterator<Item = Result<Frame>> + Send + 'static,
    {
        OpenedSource {
            name: name.into(),
            fps,
            truth: None,
            items: Box::new(frames.enumerate().map(|(index, f)| {
                f.map(|frame| SourceItem {
                    index,
                    t: frame.timestamp,
                    frame: Some(frame),
                })
            })),
        }
    }
}

pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn load_frame(path: &Path, timestamp: f64) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| Error::Source(format!("cannot decode {}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Frame::new(w as usize, h as usize, 3, img.into_raw(), timestamp)
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let rgb = if frame.channels() == 3 {
        frame.data().to_vec()
    } else {
        frame.data().iter().flat_map(|&v| [v, v, v]).collect()
    };
    let img = image::RgbImage::from_raw(frame.width() as u32, frame.height() as u32, rgb)
        .ok_or_else(|| Error::DimensionMismatch("frame buffer does not match its size".into()))?;
    img.save(path)
        .map_err(|e| Error::Source(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::movement::MovementClass::*;

    #[test]
    fn annotation_replay_has_no_pixels() {
        let a = EpisodeAnnotation::from_segments("e", "a", Fps::default(), &[(PalmToPalm, 3)]);
        let src = OpenedSource::from_annotation(a);
        let items: Vec<_> = src.items.map(|i| i.unwrap()).collect();
        assert_eq!(items.len(), 3);
        assert!(items.iter().all(|i| i.frame.is_none()));
        assert!((items[2].t - 2.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn frame_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            let f = Frame::filled(20, 10, 3, 50 * i as u8, 0.0).unwrap();
            save_frame(&f, &dir.path().join(format!("{i:05}.png"))).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let src = OpenedSource::frame_directory(dir.path(), Fps::integer(10).unwrap(), None).unwrap();
        let frames: Vec<_> = src.items.map(|i| i.unwrap().frame.unwrap()).collect();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[2].data()[0], 100);
        assert!((frames[1].timestamp - 0.1).abs() < 1e-12);
    }

    #[test]
    fn frame_count_must_match_truth() {
        let dir = tempfile::tempdir().unwrap();
        save_frame(&Frame::filled(8, 8, 1, 0, 0.0).unwrap(), &dir.path().join("0.png")).unwrap();
        let truth = EpisodeAnnotation::from_segments("e", "a", Fps::default(), &[(Idle, 2)]);
        assert!(OpenedSource::frame_directory(dir.path(), Fps::default(), Some(truth)).is_err());
    }

    #[test]
    fn missing_annotation_is_an_error() {
        let spec = SourceSpec::Annotation { path: "/nonexistent/x.ann.json".into() };
        assert!(matches!(OpenedSource::open(&spec), Err(Error::Io { .. })));
    }
}
