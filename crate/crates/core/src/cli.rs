//! Command-line front end: `gen`, `train`, `segment`, `align`, `eval`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 any other domain error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::coarse_model::{save_alignment, DEFAULT_FRAMES_PER_SUBACTION};
use crate::corpus::{
    generate_synthetic, load_dataset, load_features, load_labels, load_transcripts, save_dataset,
    save_labels, SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{jaccard_iod, jaccard_iou, label_spans, mof, MetricReport};
use crate::fine_model::{SgdConfig, DEFAULT_HIDDEN};
use crate::model::Model;
use crate::trainer::{fit, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "weakseg", version, about = "Weakly supervised temporal action segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus.
    Gen(GenArgs),
    /// Train a model from videos and their transcripts.
    Train(TrainArgs),
    /// Decode videos under the training-transcript grammar.
    Segment(SegmentArgs),
    /// Force-align videos to given transcripts.
    Align(AlignArgs),
    /// Score predictions against framewise ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub videos: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub classes: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub phases: u64,
    /// One mean length for all classes, or a comma-separated value per class.
    #[arg(long, value_delimiter = ',', default_value = "30,60,90")]
    pub mean_len: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub orderings: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Put the last N videos in OUT/test and the rest in OUT/train.
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model document to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FRAMES_PER_SUBACTION)]
    pub m: usize,
    #[arg(long, default_value_t = 0.02)]
    pub theta: f64,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Re-initialize the network every iteration.
    #[arg(long)]
    pub cold_start: bool,
    /// Keep the initial subaction counts.
    #[arg(long)]
    pub no_reestimate: bool,
    /// Iteration log; defaults to the model path with a `.log` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Per-iteration metrics; defaults to the model path with a `.csv` extension.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory with `features/<id>.ftr`.
    #[arg(long)]
    pub data: PathBuf,
    /// Transcripts to align to; defaults to DATA/transcripts.txt.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Segmentation,
    Alignment,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output directory of `segment` or `align`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Dataset directory, or a directory of `<id>.txt` label files.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = Task::Segmentation)]
    pub task: Task,
    /// Split name written in the report.
    #[arg(long, default_value = "eval")]
    pub split: String,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Io { .. } => 2,
        _ => 3,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Segment(a) => segment(a),
        Command::Align(a) => align(a),
        Command::Eval(a) => eval(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn gen(a: GenArgs) -> Result<()> {
    let config = SynthConfig {
        num_classes: a.classes as usize,
        num_videos: a.videos as usize,
        feature_dim: a.dim as usize,
        phases_per_class: a.phases as usize,
        mean_len_per_class: a.mean_len,
        len_jitter: a.jitter,
        noise_sigma: a.noise,
        num_orderings: a.orderings as usize,
        seed: a.seed,
    };
    let data = generate_synthetic(&config)?;
    if a.holdout == 0 {
        return save_dataset(&a.out, &data);
    }
    if a.holdout >= data.len() {
        return Err(Error::Config(format!(
            "holdout {} leaves no training videos out of {}",
            a.holdout,
            data.len()
        )));
    }
    let (train, test) = data.split_tail(a.holdout);
    save_dataset(a.out.join("train"), &train)?;
    save_dataset(a.out.join("test"), &test)
}

fn train(a: TrainArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    let config = TrainConfig {
        m: a.m,
        theta: a.theta,
        max_iters: a.max_iters,
        hidden: a.hidden,
        sgd: SgdConfig {
            learning_rate: a.lr,
            batch_size: a.batch_size,
        },
        epochs_per_iter: a.epochs,
        warm_start: !a.cold_start,
        reestimate: !a.no_reestimate,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let result = fit(&data, &config)?;
    result.model.save(&a.out)?;
    let mut log_text: String = result
        .records
        .iter()
        .map(|r| r.progress_line(&data.label_set) + "\n")
        .collect();
    log_text.push_str(&match result.stopped_at {
        Some(k) => format!("stopped at iteration {k}; model of iteration {}\n", result.selected),
        None => format!("reached max iterations; model of iteration {}\n", result.selected),
    });
    write_file(&a.log.unwrap_or_else(|| a.out.with_extension("log")), &log_text)?;
    write_file(
        &a.metrics.unwrap_or_else(|| a.out.with_extension("csv")),
        &result.metrics_csv(),
    )
}

fn write_summary(path: &Path, lines: &[String]) -> Result<()> {
    write_file(path, &lines.concat())
}

fn segment(a: SegmentArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let data = load_dataset(&a.data)?;
    let graph = model.graph()?;
    create_dir(&a.out)?;
    let lines = data
        .samples
        .par_iter()
        .map(|s| {
            let d = model.segment(&s.features, &graph).map_err(|e| e.for_video(&s.id))?;
            let labels = d.alignment.action_labels(&model.space);
            save_labels(a.out.join(format!("{}.txt", s.id)), &labels)?;
            save_alignment(a.out.join(format!("{}.align", s.id)), &d.alignment, &model.space)?;
            Ok(format!("{}\t{}\t{:.6}\n", s.id, d.transcript, d.score))
        })
        .collect::<Result<Vec<_>>>()?;
    write_summary(&a.out.join("summary.txt"), &lines)
}

fn align(a: AlignArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let transcripts = load_transcripts(
        a.transcripts
            .unwrap_or_else(|| a.data.join("transcripts.txt")),
    )?;
    create_dir(&a.out)?;
    let lines = transcripts
        .par_iter()
        .map(|(id, transcript)| {
            let video = load_features(a.data.join("features").join(format!("{id}.ftr")))?;
            let (al, score) = model.align(&video, transcript).map_err(|e| e.for_video(id))?;
            let labels = al.action_labels(&model.space);
            save_labels(a.out.join(format!("{id}.txt")), &labels)?;
            save_alignment(a.out.join(format!("{id}.align")), &al, &model.space)?;
            Ok(format!("{id}\t{transcript}\t{score:.6}\n"))
        })
        .collect::<Result<Vec<_>>>()?;
    write_summary(&a.out.join("summary.txt"), &lines)
}

/// Action labels of an alignment file (second column).
fn alignment_labels(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::Format(format!("{}: malformed line `{l}`", path.display())))
        })
        .collect()
}

/// Ground-truth files sorted by video id.
fn ground_truth_files(gt: &Path) -> Result<Vec<(String, PathBuf)>> {
    let dir = if gt.join("groundtruth").is_dir() {
        gt.join("groundtruth")
    } else {
        gt.to_path_buf()
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if path.extension().is_some_and(|x| x == "txt") {
            if let Some(id) = path.file_stem().and_then(|s| s.to_str()) {
                files.push((id.to_string(), path.clone()));
            }
        }
    }
    if files.is_empty() {
        return Err(Error::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no ground-truth label files"),
        ));
    }
    files.sort();
    Ok(files)
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut pairs = Vec::new();
    for (id, gt_path) in ground_truth_files(&a.gt)? {
        let gt = load_labels(&gt_path)?;
        let pred = match a.task {
            Task::Segmentation => load_labels(a.pred.join(format!("{id}.txt")))?,
            Task::Alignment => alignment_labels(&a.pred.join(format!("{id}.align")))?,
        };
        if pred.len() != gt.len() {
            return Err(Error::LengthMismatch(format!(
                "video `{id}`: {} predicted frames, {} ground-truth frames",
                pred.len(),
                gt.len()
            )));
        }
        pairs.push((pred, gt));
    }
    let mut report = MetricReport::default();
    match a.task {
        Task::Segmentation => {
            let views = || pairs.iter().map(|(p, g)| (&p[..], &g[..]));
            report.push("mof", &a.split, mof(views())?);
            report.push("iou", &a.split, jaccard_iou(views())?);
        }
        Task::Alignment => {
            let spans: Vec<_> = pairs
                .iter()
                .map(|(p, g)| (label_spans(p), label_spans(g)))
                .collect();
            report.push(
                "iod",
                &a.split,
                jaccard_iod(spans.iter().map(|(p, g)| (&p[..], &g[..])))?,
            );
        }
    }
    print!("{}", report.to_csv());
    std::io::stdout().flush().ok();
    eprint!("{report}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["weakseg", "gen", "--out", "/tmp/x", "--videos", "0"]), 1);
        assert_eq!(run(["weakseg", "frobnicate"]), 1);
        assert_eq!(run(["weakseg", "--help"]), 0);
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        let io = Error::io("p", std::io::Error::new(std::io::ErrorKind::NotFound, "x"));
        assert_eq!(exit_code(&io), 2);
        assert_eq!(exit_code(&Error::UnknownAction("a".into())), 3);
    }

    #[test]
    fn missing_model_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let code = run([
            "weakseg".as_ref(),
            "segment".as_ref(),
            "--model".as_ref(),
            dir.path().join("none.json").as_os_str(),
            "--data".as_ref(),
            dir.path().as_os_str(),
            "--out".as_ref(),
            dir.path().join("out").as_os_str(),
        ] as [&std::ffi::OsStr; 8]);
        assert_eq!(code, 2);
    }
}
