//! The `rectboost` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rectboost_core::boosting::{train_with_scores, TrainRecord};
use rectboost_core::explain::{DataExplainer, ModelExplainer};
use rectboost_core::loss::sigmoid;
use rectboost_core::synthetic::{gen_friedman1_with_noise, gen_two_moons};
use rectboost_core::{Dataset, LossKind, RectKind, RegScheme, RegSpec, Task, TrainConfig};

use crate::bench;
use crate::cv::{cv_score, tune_beta, Metric, DEFAULT_BETA_GRID};
use crate::error::{Error, Result};
use crate::io::{open_output, read_table, write_dataset};
use crate::model_file;

#[derive(Debug, Parser)]
#[command(name = "rectboost", version, about = "Gradient boosting with random hyper-rectangles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a CSV file.
    Train(TrainArgs),
    /// Write raw predictions for every row.
    Predict(PredictArgs),
    /// Shapley attributions for one row.
    Explain(ExplainArgs),
    /// Score a model, or cross-validate its training configuration.
    Eval(EvalArgs),
    /// Run a benchmark suite.
    Benchmark(BenchmarkArgs),
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    L2,
    Bce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RectArg {
    Closed,
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegArg {
    None,
    L2,
    L1,
    #[value(name = "step-l2")]
    StepL2,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Target column, by name or zero-based index.
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long, value_enum, default_value = "l2")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "corner")]
    pub rect: RectArg,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long, default_value_t = 5)]
    pub attempts: usize,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Bound on box values; tuned by 5-fold CV over a grid when omitted.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum, default_value = "l2")]
    pub reg: RegArg,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Model,
    Data,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Rows to explain; also the background for the data-based method.
    #[arg(long)]
    pub data: PathBuf,
    /// Zero-based data row.
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    /// Both methods when omitted.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    R2,
    F1,
    Accuracy,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Must hold the model's features plus exactly one target column.
    #[arg(long)]
    pub data: PathBuf,
    /// `r2` for l2 models, `f1` for bce models when omitted.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Retrain with the model's configuration under k-fold CV.
    #[arg(long)]
    pub cv: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Friedman1,
    TwoMoons,
    CornersVsRects,
    ShapTiming,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Number of seeds, starting at 0.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// CSV copy of the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Friedman1,
    TwoMoons,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Defaults: 1.0 for friedman1, 0.15 for two-moons.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status: 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        // the reader went away, e.g. `rectboost predict ... | head`
        Err(Error::Io { source, .. }) if is_broken_pipe(&source) => 0,
        Err(Error::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn is_broken_pipe(e: &std::io::Error) -> bool {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        return true;
    }
    match e.get_ref().and_then(|inner| inner.downcast_ref::<csv::Error>()) {
        Some(c) => matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
        None => false,
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::GenData(a) => cmd_gen_data(&a),
    }
}

fn usage(e: rectboost_core::Error) -> Error {
    Error::Usage(e.to_string())
}

impl TrainArgs {
    /// The configuration before any `beta` tuning.
    pub fn config(&self) -> Result<TrainConfig> {
        let loss = match self.loss {
            LossArg::L2 => LossKind::SquaredError,
            LossArg::Bce => LossKind::BinaryCrossEntropy,
        };
        let scheme = match self.reg {
            RegArg::None => RegScheme::None,
            RegArg::L2 => RegScheme::StandardL2,
            RegArg::L1 => RegScheme::StandardL1,
            RegArg::StepL2 => RegScheme::StepHeightL2,
        };
        let reg = match scheme {
            RegScheme::None => RegSpec::none(),
            s => RegSpec::bounded(s, self.beta.unwrap_or(1.0)),
        };
        let cfg = TrainConfig {
            iterations: self.iters,
            candidates: self.candidates,
            attempts: self.attempts,
            learning_rate: self.gamma,
            val_fraction: self.val_frac,
            rect_kind: match self.rect {
                RectArg::Closed => RectKind::Closed,
                RectArg::Corner => RectKind::Corner,
            },
            loss,
            reg,
            seed: self.seed,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

fn task_for(loss: LossKind) -> Task {
    match loss {
        LossKind::SquaredError => Task::Regression,
        LossKind::BinaryCrossEntropy => Task::BinaryClassification,
    }
}

/// One line per outer iteration.
pub fn format_train_log(record: &TrainRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "initial_bias={}", record.initial_bias);
    for r in &record.iterations {
        let _ = write!(
            s,
            "iter={} accepted={} attempts={} val_loss_before={} val_loss_after={}",
            r.iteration, r.accepted, r.attempts, r.val_loss_before, r.val_loss_after
        );
        if r.accepted {
            let _ = write!(s, " v_in={} v_out={} inside={}", r.v_in, r.v_out, r.inside_count);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "accepted={} of {}", record.accepted(), record.iterations.len());
    s
}

fn log_path(model_out: &Path) -> PathBuf {
    model_out.with_extension("log")
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut cfg = a.config()?;
    let ds = read_table(&a.data)?.into_dataset(&a.target, task_for(cfg.loss))?;
    if a.beta.is_none() && cfg.reg.scheme != RegScheme::None {
        let metric = Metric::default_for(cfg.loss);
        let s = tune_beta(&ds, &cfg, &DEFAULT_BETA_GRID, metric, 5, cfg.seed)?;
        eprintln!("beta {} selected by 5-fold CV ({} {:.4})", s.best_beta, metric.name(), s.best_score);
        cfg.reg.beta = s.best_beta;
    }
    let (model, _) = train_with_scores(&ds, &cfg)?;
    if model.boxes().is_empty() {
        log::warn!("no rectangle passed validation; the model is constant");
    }
    model_file::save(&a.model_out, &model, Some(&cfg))?;
    if let Some(record) = model.record() {
        let path = log_path(&a.model_out);
        fs::write(&path, format_train_log(record)).map_err(|e| Error::io(&path, e))?;
        eprintln!(
            "trained {} boxes in {} iterations; model written to {}",
            model.boxes().len(),
            record.iterations.len(),
            a.model_out.display()
        );
    }
    Ok(())
}

fn load_rows(model: &rectboost_core::Ensemble, data: &Path) -> Result<(crate::io::Table, Vec<Vec<f64>>)> {
    let table = read_table(data)?;
    let rows = table.select_features(model.feature_names())?;
    Ok((table, rows))
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = model_file::load(&a.model)?.model;
    let (_, rows) = load_rows(&model, &a.data)?;
    let mut out = open_output(a.out.as_deref())?;
    let io_err = |e| Error::io(a.out.clone().unwrap_or_else(|| "<stdout>".into()), e);
    match model.loss() {
        LossKind::SquaredError => {
            let lines = rows.iter().map(|x| vec![model.predict(x).to_string()]);
            crate::io::write_rows(&mut out, &["prediction"], lines).map_err(io_err)?;
        }
        LossKind::BinaryCrossEntropy => {
            let lines = rows.iter().map(|x| {
                let z = model.predict(x);
                let label = if z >= 0.0 { "1" } else { "0" };
                vec![z.to_string(), sigmoid(z).to_string(), label.to_owned()]
            });
            crate::io::write_rows(&mut out, &["logit", "probability", "label"], lines).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_explain(a: &ExplainArgs) -> Result<()> {
    let model = model_file::load(&a.model)?.model;
    let (_, rows) = load_rows(&model, &a.data)?;
    let x = rows.get(a.row).ok_or_else(|| {
        Error::Usage(format!("row {} out of range (data has {} rows)", a.row, rows.len()))
    })?;
    let want_model = a.method != Some(MethodArg::Data);
    let want_data = a.method != Some(MethodArg::Model);
    let mut headers = vec!["feature"];
    let mut columns = Vec::new();
    if want_model {
        headers.push("phi_model");
        columns.push(ModelExplainer::new(&model).explain(x)?);
    }
    if want_data {
        headers.push("phi_data");
        let n = rows.len();
        let background =
            Dataset::from_rows(&rows, vec![0.0; n], Task::Regression)?;
        columns.push(DataExplainer::new(&model, &background)?.explain(x)?);
    }
    let mut lines: Vec<Vec<String>> = model
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            std::iter::once(name.clone()).chain(columns.iter().map(|c| c.phi[j].to_string())).collect()
        })
        .collect();
    lines.push(
        std::iter::once("base_value".to_owned())
            .chain(columns.iter().map(|c| c.base_value.to_string()))
            .collect(),
    );
    let mut out = open_output(a.out.as_deref())?;
    let io_err = |e| Error::io(a.out.clone().unwrap_or_else(|| "<stdout>".into()), e);
    crate::io::write_rows(&mut out, &headers, lines).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let file = model_file::load(&a.model)?;
    let model = &file.model;
    let table = read_table(&a.data)?;
    let extra: Vec<&String> =
        table.headers.iter().filter(|h| !model.feature_names().contains(h)).collect();
    let target = match extra.as_slice() {
        [t] => (*t).clone(),
        _ => {
            return Err(Error::Usage(format!(
                "cannot identify the target column: expected exactly one column besides [{}]",
                model.feature_names().join(", ")
            )))
        }
    };
    let metric = match a.metric {
        Some(MetricArg::R2) => Metric::R2,
        Some(MetricArg::F1) => Metric::F1,
        Some(MetricArg::Accuracy) => Metric::Accuracy,
        None => Metric::default_for(model.loss()),
    };
    let ds = table.into_dataset(&target, task_for(model.loss()))?;
    let names: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    let expected: Vec<&str> = model.feature_names().iter().map(String::as_str).collect();
    let ds = if names == expected {
        ds
    } else {
        let order: Vec<usize> = expected
            .iter()
            .map(|n| {
                names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::Format(format!("data has no column '{n}'")))
            })
            .collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> =
            (0..ds.n_rows()).map(|i| order.iter().map(|&j| ds.row(i)[j]).collect()).collect();
        let flat = rows.concat();
        Dataset::new(flat, expected.len(), ds.targets().to_vec(), model.feature_names().to_vec(), ds.task())?
    };
    match a.cv {
        None => {
            let raw = model.predict_dataset(&ds)?;
            let score = metric.score(model.loss(), ds.targets(), &raw)?;
            println!("{}: {score:.4}", metric.name());
        }
        Some(k) => {
            if k < 2 {
                return Err(Error::Usage("--cv needs at least 2 folds".into()));
            }
            let cfg = match &file.config {
                Some(c) => c.to_config(model.loss()),
                None => {
                    log::warn!("model file has no training configuration; using defaults");
                    TrainConfig { loss: model.loss(), ..TrainConfig::default() }
                }
            };
            cfg.validate().map_err(usage)?;
            let summary = cv_score(&ds, &cfg, metric, k, a.repeats, cfg.seed)?;
            println!(
                "{} ({k}-fold CV x {}): {:.4} +/- {:.4}",
                metric.name(),
                a.repeats,
                summary.mean(),
                summary.std()
            );
        }
    }
    Ok(())
}

fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(Error::Usage("--seeds must be >= 1".into()));
    }
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let report = match a.suite {
        Suite::Friedman1 => bench::friedman1_report(&seeds)?,
        Suite::TwoMoons => bench::two_moons_report(&seeds)?,
        Suite::CornersVsRects => bench::corners_vs_rects_report(&seeds)?,
        Suite::ShapTiming => bench::shap_timing_report(0)?,
    };
    let mut stdout = std::io::stdout().lock();
    report.write_text(&mut stdout).map_err(|e| Error::io("<stdout>", e))?;
    if let Some(path) = &a.out {
        let mut out = open_output(Some(path))?;
        report.write_csv(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_gen_data(a: &GenDataArgs) -> Result<()> {
    let ds = match a.kind {
        Kind::Friedman1 => gen_friedman1_with_noise(a.n, a.noise.unwrap_or(1.0), a.seed),
        Kind::TwoMoons => gen_two_moons(a.n, a.noise.unwrap_or(0.15), a.seed),
    }
    .map_err(usage)?;
    let mut out = open_output(a.out.as_deref())?;
    let io_err = |e| Error::io(a.out.clone().unwrap_or_else(|| "<stdout>".into()), e);
    write_dataset(&mut out, &ds).map_err(io_err)?;
    out.flush().map_err(io_err)
}
