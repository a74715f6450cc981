//! The `promil` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bagdata::DatasetFile;
use crate::bernstein::{estimate_quantile_closed, SortedPredictions};
use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::heads::Head;
use crate::metrics::{evaluate, EvalResult};
use crate::model::{ModelFile, TrainingMeta};
use crate::pipeline::{build_dataset, dataset_split, train_model};
use crate::sweep::{run_sweep, save_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Config { .. } | Error::Io { .. } | Error::Format(_) => EXIT_IO,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "promil", version, about = "Percentage-based multiple instance learning")]
pub struct Cli {
    /// Experiment config file (promil-config/1, TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path of the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a bag dataset.
    Generate,
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a model on a dataset split.
    Eval(EvalArgs),
    /// Sweep one dataset axis over several values, methods and seeds.
    Sweep(SweepArgs),
    /// Evaluate the Bernstein quantile estimate of a list of numbers.
    Quantile(QuantileArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset file (bagdata/1).
    #[arg(long)]
    pub data: PathBuf,
    /// Per-epoch CSV log (default: model path with `.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Head to train with (overrides `train.head`).
    #[arg(long)]
    pub head: Option<Head>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Scoring head (default: `eval.head` from the config).
    #[arg(long)]
    pub head: Option<Head>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Comma-separated methods (promil, max, mean).
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Head>>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    /// Values in [0, 1].
    #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
    pub numbers: Vec<f64>,
    /// Quantile level in [0, 1].
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = crate::bernstein::DEFAULT_EPS)]
    pub eps: f64,
}

/// Formats like C's `%.{digits}g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", strip(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip(&format!("{:.*}", decimals, x))
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_generate(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let path = cli.out.clone().unwrap_or_else(|| cfg.output.dataset.clone());
    let data = build_dataset(&cfg, cfg.seed)?;
    data.save(&path)?;
    let n = data.bags.len();
    let pos = data.bags.iter().filter(|b| b.label).count();
    let part = data.partition.clone().unwrap_or_default();
    writeln!(
        out,
        "wrote {}: {} bags, {} positive ({:.4} positive rate), split {}/{}/{}",
        path.display(),
        n,
        pos,
        pos as f64 / n as f64,
        part.train.len(),
        part.validation.len(),
        part.test.len()
    )
    .map_err(|e| Error::io("stdout", e))
}

fn cmd_train(cli: &Cli, args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let data = DatasetFile::load(&args.data)?;
    let split = dataset_split(&data, &cfg)?;
    let head = args.head.unwrap_or(cfg.train.head);
    let trained = train_model(&cfg, &split, head, cfg.seed)?;

    let model_path = cli.out.clone().unwrap_or_else(|| cfg.output.model.clone());
    let log_path = args
        .log
        .clone()
        .or_else(|| cfg.output.log.clone())
        .unwrap_or_else(|| with_suffix(&model_path, ".log.csv"));

    let mut log = csv::Writer::from_path(&log_path).map_err(|e| Error::Format(e.to_string()))?;
    log.write_record(["epoch", "train_cost", "val_auc", "val_loss", "q", "improved"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in &trained.history {
        log.write_record([
            r.epoch.to_string(),
            r.train_cost.to_string(),
            r.val_auc.to_string(),
            r.val_loss.to_string(),
            r.q.to_string(),
            r.improved.to_string(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    log.flush().map_err(|e| Error::io(&log_path, e))?;

    let meta = TrainingMeta {
        seed: cfg.seed,
        epochs_run: trained.epochs_run,
        best_epoch: trained.best_epoch,
        best_val_metric: trained.best_val_metric,
        val_metric: cfg.train.val_metric.as_str().to_string(),
        // left empty so identical runs write identical files
        saved_at_unix: None,
    };
    let file = ModelFile::from_model(&trained.model, meta);
    file.save(&model_path)?;
    writeln!(
        out,
        "trained {} head for {} epochs (best epoch {}, best val {} {:.6}); wrote {} and {}",
        head,
        trained.epochs_run,
        trained.best_epoch,
        cfg.train.val_metric.as_str(),
        trained.best_val_metric,
        model_path.display(),
        log_path.display()
    )
    .and_then(|_| writeln!(out, "learned q = {}", file.q))
    .map_err(|e| Error::io("stdout", e))
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub schema: &'static str,
    pub head: Head,
    pub split: SplitName,
    pub q: f64,
    #[serde(flatten)]
    pub result: EvalResult,
}

fn cmd_eval(cli: &Cli, args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let model = ModelFile::load(&args.model)?.to_model()?;
    let data = DatasetFile::load(&args.data)?;
    if let Some(dim) = data.feature_dim() {
        if dim != model.input_dim() {
            return Err(Error::Format(format!(
                "dataset instances have {dim} features but the model expects {}",
                model.input_dim()
            )));
        }
    }
    let split = dataset_split(&data, &cfg)?;
    let bags = match args.split {
        SplitName::Train => split.train,
        SplitName::Validation => split.validation,
        SplitName::Test => split.test,
        SplitName::All => data.bags.clone(),
    };
    let head = args.head.unwrap_or(cfg.eval.head);
    let result = evaluate(&model, &bags, head)?;
    let report = EvalReport {
        schema: "promil-eval/1",
        head,
        split: args.split,
        q: model.q.q(),
        result,
    };
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.output.report.clone())
        .unwrap_or_else(|| with_suffix(&args.model, &format!(".{head}.eval.json")));
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let r = &report.result;
    writeln!(
        out,
        "{head} on {} split ({} bags): auc {:.4}, balanced accuracy {:.4}, accuracy {:.4}, q {:.4}; wrote {}",
        format!("{:?}", args.split).to_lowercase(),
        r.n_bags,
        r.auc,
        r.balanced_accuracy,
        r.accuracy,
        report.q,
        path.display()
    )
    .map_err(|e| Error::io("stdout", e))
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let axis = args.axis.unwrap_or(cfg.sweep.axis);
    let values = args.values.clone().unwrap_or_else(|| cfg.sweep.values.clone());
    let repeats = args.repeats.unwrap_or(cfg.sweep.repeats);
    let methods = args.methods.clone().unwrap_or_else(|| cfg.sweep.methods.clone());
    let rows = run_sweep(&cfg, axis, &values, repeats, &methods)?;
    let path = cli.out.clone().unwrap_or_else(|| cfg.output.sweep.clone());
    save_csv(&rows, &path)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    writeln!(out, "wrote {} rows to {} ({} failed)", rows.len(), path.display(), failed)
        .map_err(|e| Error::io("stdout", e))
}

fn cmd_quantile(args: &QuantileArgs, out: &mut dyn Write) -> Result<()> {
    if !(0.0..=1.0).contains(&args.q) {
        return Err(Error::domain(format!("q = {} is outside [0, 1]", args.q)));
    }
    let sorted = SortedPredictions::from_unsorted(&args.numbers)?;
    let v = estimate_quantile_closed(&sorted, args.q, args.eps)?;
    writeln!(out, "{}", format_significant(v, 9)).map_err(|e| Error::io("stdout", e))
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate => cmd_generate(cli, out),
        Command::Train(a) => cmd_train(cli, a, out),
        Command::Eval(a) => cmd_eval(cli, a, out),
        Command::Sweep(a) => cmd_sweep(cli, a, out),
        Command::Quantile(a) => cmd_quantile(a, out),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.7, 9), "0.7");
        assert_eq!(format_significant(0.58875, 9), "0.58875");
        assert_eq!(format_significant(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_significant(0.12345678951, 9), "0.12345679");
        assert_eq!(format_significant(1e-7, 9), "1e-07");
        assert_eq!(format_significant(1.0, 9), "1");
        assert_eq!(format_significant(0.0, 9), "0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::domain("x")), 1);
        assert_eq!(exit_code(&Error::Format("x".into())), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
    }
}
