use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{save_stats_csv, EpisodeAnnotation, Fps};
use crate::engine::{ComplianceConfig, EngineEvent, EpisodeReport, Verdict};
use crate::error::{Error, Result};
use crate::monitor::pipeline::MonitorPipeline;
use crate::monitor::source::{OpenedSource, SourceSpec};
use crate::movement::MovementClass;
use crate::pipeline::{build_classifier, ClassifierSpec};

/// Process exit codes for a one-shot run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_NO_EPISODE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub source: SourceSpec,
    pub classifier: ClassifierSpec,
    pub config: ComplianceConfig,
    /// Where reports and statistics files go; nothing is written when unset.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    /// `None` when the gate never opened.
    pub report: Option<EpisodeReport>,
    pub frames_processed: usize,
    pub report_path: Option<PathBuf>,
    pub stats_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match &self.report {
            None => EXIT_NO_EPISODE,
            Some(r) if r.verdict == Verdict::Ok => EXIT_OK,
            Some(_) => EXIT_FAILED,
        }
    }
}

/// Runs the source through the full pipeline until the first episode closes
/// (or the source runs out), then writes `<episode>.report.json` and
/// `<episode>.stats.csv` to the output directory.
pub fn run_episode(spec: &RunSpec) -> Result<RunOutcome> {
    let source = OpenedSource::open(&spec.source)?;
    run_source(source, &spec.classifier, &spec.config, spec.output_dir.as_deref())
}

pub fn run_source(
    source: OpenedSource,
    classifier: &ClassifierSpec,
    config: &ComplianceConfig,
    output_dir: Option<&Path>,
) -> Result<RunOutcome> {
    let classifier = build_classifier(classifier)?;
    let fps = source.fps;
    let mut pipeline = MonitorPipeline::new(config.clone(), classifier, source.truth, &source.name)?;

    let mut report = None;
    for item in source.items {
        let events = pipeline.step(item?)?;
        report = first_report(events);
        if report.is_some() {
            break;
        }
    }
    if report.is_none() {
        report = first_report(pipeline.finish(None));
    }

    let mut outcome = RunOutcome {
        report,
        frames_processed: pipeline.processed(),
        report_path: None,
        stats_path: None,
    };
    if let (Some(dir), Some(report)) = (output_dir, &outcome.report) {
        let (report_path, stats_path) = write_episode_outputs(dir, report, fps, pipeline.take_episode_labels())?;
        outcome.report_path = Some(report_path);
        outcome.stats_path = Some(stats_path);
    }
    Ok(outcome)
}

/// Writes `<episode>.report.json` and `<episode>.stats.csv`, the latter
/// computed from the labels the engine saw during the episode.
pub fn write_episode_outputs(
    dir: &Path,
    report: &EpisodeReport,
    fps: Fps,
    episode_labels: Vec<MovementClass>,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report_path = dir.join(format!("{}.report.json", report.episode_id));
    std::fs::write(&report_path, report.to_json()).map_err(|e| Error::io(&report_path, e))?;

    let predicted = EpisodeAnnotation::new(report.episode_id.clone(), "pipeline", fps, episode_labels);
    let stats_path = dir.join(format!("{}.stats.csv", report.episode_id));
    save_stats_csv(&predicted, &stats_path)?;
    Ok((report_path, stats_path))
}

fn first_report(events: Vec<EngineEvent>) -> Option<EpisodeReport> {
    events.into_iter().find_map(|e| match e {
        EngineEvent::Report(r) => Some(r),
        EngineEvent::StateChanged(_) => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::synth::SyntheticEpisodeSpec;
    use crate::movement::MovementClass::{self, *};

    fn full_wash(skip: Option<MovementClass>) -> SyntheticEpisodeSpec {
        let mut pairs = vec![];
        for m in [PalmToPalm, PalmOverDorsum, FingersInterlaced, BackOfFingers, ThumbRub, FingertipsToPalm] {
            if Some(m) != skip {
                pairs.push((m, 8.0));
            }
        }
        pairs.push((FaucetWithTowel, 2.5));
        pairs.push((Idle, 5.0));
        SyntheticEpisodeSpec::from_pairs(&pairs)
    }

    fn spec(source: SyntheticEpisodeSpec, out: Option<PathBuf>) -> RunSpec {
        RunSpec {
            source: SourceSpec::Synthetic { spec: source },
            classifier: ClassifierSpec::replay(0.0, 1),
            config: ComplianceConfig::default(),
            output_dir: out,
        }
    }

    #[test]
    fn complete_wash_is_ok() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_episode(&spec(full_wash(None), Some(dir.path().into()))).unwrap();
        let report = outcome.report.as_ref().unwrap();
        assert_eq!(report.verdict, Verdict::Ok, "{report:#?}");
        assert_eq!(outcome.exit_code(), EXIT_OK);
        let stats = std::fs::read_to_string(outcome.stats_path.unwrap()).unwrap();
        assert!(stats.starts_with("episode_id,movement_code,frames,seconds\n"));
        assert!(stats.contains(",10,"));
        assert!(outcome.report_path.unwrap().exists());
    }

    #[test]
    fn missing_thumb_rub_fails() {
        let outcome = run_episode(&spec(full_wash(Some(ThumbRub)), None)).unwrap();
        let report = outcome.report.unwrap();
        assert_eq!(report.verdict, Verdict::Failed);
        assert_eq!(report.missing_codes(), vec![ThumbRub]);
    }

    #[test]
    fn all_idle_replay_has_no_episode() {
        let dir = tempfile::tempdir().unwrap();
        let a = EpisodeAnnotation::from_segments("quiet", "a", Fps::default(), &[(Idle, 900)]);
        let path = dir.path().join("quiet.ann.json");
        a.save(&path).unwrap();
        let outcome = run_episode(&RunSpec {
            source: SourceSpec::Annotation { path },
            classifier: ClassifierSpec::replay(0.0, 0),
            config: ComplianceConfig::default(),
            output_dir: Some(dir.path().join("out")),
        })
        .unwrap();
        assert!(outcome.report.is_none());
        assert_eq!(outcome.exit_code(), EXIT_NO_EPISODE);
        assert_eq!(outcome.frames_processed, 900);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn rendered_frames_drive_the_gate() {
        let source = full_wash(None).with_frames(64, 48);
        let outcome = run_episode(&spec(source, None)).unwrap();
        let report = outcome.report.unwrap();
        assert_eq!(report.verdict, Verdict::Ok);
        // Episode spans washing only: starts at the first moving frame.
        assert!(report.span.start_s <= 1.0 / 30.0 + 1e-9, "{:?}", report.span);
    }

    #[test]
    fn external_classifier_without_model_fails_to_load() {
        let mut s = spec(full_wash(None), None);
        s.classifier = ClassifierSpec::External {
            model_path: "/nonexistent/model.json".into(),
            input_size: 224,
        };
        assert!(matches!(run_episode(&s), Err(Error::ClassifierLoad(_))));
    }
}
