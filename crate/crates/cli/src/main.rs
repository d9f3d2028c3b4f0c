use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use handwash_cli::config_file::{default_config_toml, load_config, ConfigFile};
use handwash_cli::server::{self, ServeOptions};
use handwash_core::dataset::{
    agreement, dataset_stats, merge_annotations, split_by_group, split_dataset, stats_csv_string, DatasetManifest,
    EpisodeAnnotation, Fps, MergePolicy, SplitRatios,
};
use handwash_core::engine::ComplianceConfig;
use handwash_core::monitor::{
    batch_evaluate, generate_synthetic_episode, randomized_episode_spec, run_episode, source::save_frame,
    write_synthetic_manifest, BatchOptions, EvalSplit, LabelPattern, ManifestFixtureSpec, RunSpec, Segment,
    SourceSpec, SyntheticEpisodeSpec, EXIT_ERROR,
};
use handwash_core::pipeline::ClassifierSpec;
use handwash_core::MovementClass;

/// Hand-washing compliance monitoring.
#[derive(Parser)]
#[command(name = "handwash", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its report. Exit status: 0 Ok, 1 Failed, 2 no episode.
    Run(RunArgs),
    /// Run the pipeline behind the HTTP status service.
    Serve(ServeArgs),
    /// Evaluate a classifier on a dataset split.
    Eval(EvalArgs),
    /// Generate synthetic fixtures.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Dataset manifest statistics, or the statistics file of one annotation.
    Stats(StatsArgs),
    /// Train/validation/test split assignment.
    Split(SplitArgs),
    /// Inter-annotator agreement of two annotation files.
    Agree { first: PathBuf, second: PathBuf },
    /// Merge two annotations of the same episode.
    Merge {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value = "intersect")]
        policy: MergePolicy,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Print the default configuration file.
    Config,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// Replay an annotation file (no pixels).
    #[arg(long)]
    annotation: Option<PathBuf>,
    /// A synthetic episode spec (JSON).
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// A randomized synthetic episode with this seed.
    #[arg(long)]
    random_episode: Option<u64>,
    /// A directory of PNG frames, in file-name order.
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[derive(Args)]
struct SourceOptions {
    /// Frame rate of a frame directory.
    #[arg(long, default_value = "30")]
    fps: Fps,
    /// Ground-truth annotation for a frame directory (needed by the replay classifier).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Render frames for synthetic episodes instead of replaying labels only.
    #[arg(long)]
    render: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierKind {
    Replay,
    Constant,
    External,
}

#[derive(Args)]
struct ClassifierArgs {
    /// Overrides the config file's [classifier] table.
    #[arg(long, value_enum)]
    classifier: Option<ClassifierKind>,
    /// Replay noise rate.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    classifier_seed: u64,
    /// Movement code emitted by the constant classifier.
    #[arg(long, default_value = "0")]
    movement: MovementClass,
    /// Model file for the external classifier.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 224)]
    input_size: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    source_options: SourceOptions,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Configuration file (TOML); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Playback speed; 1 is real time, 0 as fast as possible.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Wait for POST /run instead of starting immediately.
    #[arg(long)]
    hold: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: EvalSplit,
    #[arg(long, default_value = "0.7,0.2,0.1")]
    ratios: SplitRatios,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "prefer_first")]
    merge: MergePolicy,
    /// Split whole episodes instead of frames.
    #[arg(long)]
    episode_level: bool,
    /// Write the confusion matrix table (CSV) here.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// One synthetic episode: annotation file and optional PNG frames.
    Episode {
        /// Segments as `code:seconds`, comma separated, e.g. `2:8,0:0.5,3:8`.
        #[arg(long, conflicts_with = "random")]
        segments: Option<String>,
        /// Randomized episode against the default configuration.
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value = "synthetic")]
        id: String,
        #[arg(long, default_value = "30")]
        fps: Fps,
        #[arg(long, short)]
        output: PathBuf,
        /// Also render frames into this directory.
        #[arg(long)]
        frames_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 160)]
        width: usize,
        #[arg(long, default_value_t = 120)]
        height: usize,
    },
    /// A manifest with single and double annotated episodes.
    Manifest {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        single: usize,
        #[arg(long, default_value_t = 5)]
        double: usize,
        #[arg(long, default_value_t = 900)]
        frames: usize,
        #[arg(long, default_value = "30")]
        fps: Fps,
        #[arg(long, default_value = "runs")]
        pattern: LabelPattern,
        #[arg(long, default_value_t = 0.1)]
        disagreement: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
#[group(id = "input", required = true, multiple = false)]
struct StatsInput {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Per-movement statistics file (CSV) of one annotation.
    #[arg(long)]
    annotation: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: StatsInput,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Number of items to split.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    n: Option<usize>,
    /// Split all frames of a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "0.7,0.2,0.1")]
    ratios: SplitRatios,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep each manifest episode within one split.
    #[arg(long, requires = "manifest")]
    episode_level: bool,
    /// Write the full index assignment (JSON) here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_config_file(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ConfigFile::default()),
    }
}

fn classifier_spec(args: &ClassifierArgs, from_file: Option<ClassifierSpec>) -> Result<ClassifierSpec> {
    let spec = match args.classifier {
        None => from_file.unwrap_or_else(|| ClassifierSpec::replay(args.noise, args.classifier_seed)),
        Some(ClassifierKind::Replay) => ClassifierSpec::replay(args.noise, args.classifier_seed),
        Some(ClassifierKind::Constant) => ClassifierSpec::Constant { movement: args.movement },
        Some(ClassifierKind::External) => ClassifierSpec::External {
            model_path: args.model.clone().context("--model is required for the external classifier")?,
            input_size: args.input_size,
        },
    };
    spec.validate()?;
    Ok(spec)
}

fn source_spec(args: &SourceArgs, opts: &SourceOptions, config: &ComplianceConfig) -> Result<SourceSpec> {
    if let Some(path) = &args.annotation {
        return Ok(SourceSpec::Annotation { path: path.clone() });
    }
    let synthetic = if let Some(path) = &args.synthetic {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Some(serde_json::from_str::<SyntheticEpisodeSpec>(&text).with_context(|| format!("in {}", path.display()))?)
    } else {
        args.random_episode.map(|seed| randomized_episode_spec(seed, config))
    };
    if let Some(mut spec) = synthetic {
        spec.render_frames |= opts.render;
        return Ok(SourceSpec::Synthetic { spec });
    }
    match &args.frames {
        Some(path) => Ok(SourceSpec::FrameDirectory {
            path: path.clone(),
            fps: opts.fps,
            truth: opts.truth.clone(),
        }),
        None => bail!("no source given"),
    }
}

fn run_spec(args: &RunArgs) -> Result<RunSpec> {
    let file = load_config_file(args.config.as_deref())?;
    let source = source_spec(&args.source, &args.source_options, &file.config)?;
    Ok(RunSpec {
        source,
        classifier: classifier_spec(&args.classifier, file.classifier)?,
        config: file.config,
        output_dir: args.output_dir.clone(),
    })
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let spec = run_spec(&args)?;
    let outcome = run_episode(&spec)?;
    match &outcome.report {
        Some(report) => {
            print!("{}", report.to_json());
            eprintln!(
                "{}: {:?} after {} frames",
                report.episode_id, report.verdict, outcome.frames_processed
            );
        }
        None => eprintln!("no episode detected in {} frames", outcome.frames_processed),
    }
    Ok(outcome.exit_code())
}

fn cmd_serve(args: ServeArgs) -> Result<i32> {
    let spec = run_spec(&args.run)?;
    let opts = ServeOptions {
        source: spec.source,
        classifier: spec.classifier,
        config: spec.config,
        output_dir: spec.output_dir,
        speed: args.speed,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.bind)
            .await
            .with_context(|| format!("binding {}", args.bind))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        server::serve(opts, listener, args.hold).await
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct EvalSummary {
    frames: u64,
    correct: u64,
    accuracy: Option<f64>,
    episodes: usize,
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let file = load_config_file(args.config.as_deref())?;
    let classifier = classifier_spec(&args.classifier, file.classifier)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let opts = BatchOptions {
        split: args.split,
        ratios: args.ratios,
        seed: args.seed,
        merge_policy: args.merge,
        episode_level: args.episode_level,
    };
    let result = batch_evaluate(&manifest, &classifier, &opts)?;
    if let Some(path) = &args.confusion {
        write_text(path, &result.confusion.to_table())?;
    }
    print_json(&EvalSummary {
        frames: result.confusion.total(),
        correct: result.confusion.correct(),
        accuracy: result.accuracy(),
        episodes: result.episodes.len(),
    })?;
    Ok(0)
}

fn parse_segments(text: &str) -> Result<Vec<Segment>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (code, secs) = item
                .split_once(':')
                .with_context(|| format!("segment '{item}' is not code:seconds"))?;
            Ok(Segment::new(code.trim().parse()?, secs.trim().parse()?))
        })
        .collect()
}

fn cmd_synth(cmd: SynthCommand) -> Result<i32> {
    match cmd {
        SynthCommand::Episode {
            segments,
            random,
            id,
            fps,
            output,
            frames_dir,
            width,
            height,
        } => {
            let mut spec = match (segments, random) {
                (Some(s), _) => SyntheticEpisodeSpec::new(parse_segments(&s)?),
                (None, Some(seed)) => randomized_episode_spec(seed, &ComplianceConfig::default()),
                (None, None) => bail!("give --segments or --random"),
            };
            spec.episode_id = id;
            spec.fps = fps;
            if frames_dir.is_some() {
                spec = spec.with_frames(width, height);
            }
            let episode = generate_synthetic_episode(&spec)?;
            episode.annotation.save(&output)?;
            if let (Some(dir), Some(frames)) = (&frames_dir, episode.frames()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for (i, frame) in frames.enumerate() {
                    save_frame(&frame, &dir.join(format!("{i:06}.png")))?;
                }
            }
            eprintln!(
                "wrote {} ({} frames)",
                output.display(),
                episode.annotation.frame_count()
            );
        }
        SynthCommand::Manifest {
            dir,
            single,
            double,
            frames,
            fps,
            pattern,
            disagreement,
            seed,
        } => {
            let spec = ManifestFixtureSpec {
                annotated_once: single,
                annotated_twice: double,
                frames_per_episode: frames,
                fps,
                seed,
                pattern,
                disagreement,
            };
            let manifest = write_synthetic_manifest(&dir, &spec)?;
            eprintln!(
                "wrote {} entries to {}",
                manifest.entries.len(),
                dir.join("manifest.jsonl").display()
            );
        }
    }
    Ok(0)
}

fn cmd_stats(args: StatsArgs) -> Result<i32> {
    let text = if let Some(path) = &args.input.manifest {
        let stats = dataset_stats(&DatasetManifest::load(path)?)?;
        let mut s = serde_json::to_string_pretty(&stats)?;
        s.push('\n');
        s
    } else {
        let path = args.input.annotation.as_ref().expect("clap requires one input");
        stats_csv_string(&EpisodeAnnotation::load(path)?)
    };
    match &args.output {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct SplitSummary {
    n: usize,
    seed: u64,
    train: usize,
    validation: usize,
    test: usize,
}

fn cmd_split(args: SplitArgs) -> Result<i32> {
    let assignment = match (&args.manifest, args.n) {
        (Some(path), _) => {
            let manifest = DatasetManifest::load(path)?;
            manifest.validate()?;
            let sizes: Vec<usize> = manifest.entries.iter().map(|e| e.frame_count).collect();
            if args.episode_level {
                split_by_group(&sizes, args.ratios, args.seed)?
            } else {
                split_dataset(sizes.iter().sum(), args.ratios, args.seed)?
            }
        }
        (None, Some(n)) => split_dataset(n, args.ratios, args.seed)?,
        (None, None) => bail!("give --n or --manifest"),
    };
    if let Some(path) = &args.output {
        let mut text = serde_json::to_string(&assignment)?;
        text.push('\n');
        write_text(path, &text)?;
    }
    let (train, validation, test) = assignment.sizes();
    print_json(&SplitSummary {
        n: assignment.len(),
        seed: assignment.seed,
        train,
        validation,
        test,
    })?;
    Ok(0)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Serve(args) => cmd_serve(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(cmd) => cmd_synth(cmd),
        Command::Stats(args) => cmd_stats(args),
        Command::Split(args) => cmd_split(args),
        Command::Agree { first, second } => {
            print_json(&agreement(&EpisodeAnnotation::load(first)?, &EpisodeAnnotation::load(second)?)?)?;
            Ok(0)
        }
        Command::Merge {
            first,
            second,
            policy,
            output,
        } => {
            let merged = merge_annotations(&EpisodeAnnotation::load(first)?, &EpisodeAnnotation::load(second)?, policy)?;
            merged.save(&output)?;
            Ok(0)
        }
        Command::Config => {
            print!("{}", default_config_toml());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors must not collide with the verdict codes 1 and 2.
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
