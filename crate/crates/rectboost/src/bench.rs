//! Benchmark suites behind `rectboost benchmark`.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rectboost_core::boosting::{fit_independent_average, train};
use rectboost_core::explain::{ensemble_coalition_value_model, shap_brute_force, DataExplainer, ModelExplainer};
use rectboost_core::metrics::{accuracy, f1_score, r2_score, Averaging};
use rectboost_core::synthetic::{gen_friedman1, gen_two_moons};
use rectboost_core::{Dataset, Ensemble, LossKind, RectKind, RegScheme, RegSpec, Task, TrainConfig};

use crate::cv::{tune_beta, Metric, DEFAULT_BETA_GRID};
use crate::error::{Error, Result};
use crate::model_file;
use crate::stats::{paired_t_test, PairedTTest};

/// Rows in every generated Friedman1 sample.
pub const FRIEDMAN1_ROWS: usize = 100;
pub const CV_FOLDS: usize = 5;

/// Training budget shared by the Friedman1 suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub iterations: usize,
    pub candidates: usize,
    pub learning_rate: f64,
}

impl Budget {
    /// Used by the `friedman1` suite.
    pub const QUALITY: Budget = Budget { iterations: 4000, candidates: 40, learning_rate: 0.1 };
    /// Used by `corners-vs-rects`, where both kinds get the same budget.
    pub const COMPARISON: Budget = Budget { iterations: 1000, candidates: 10, learning_rate: 0.1 };

    pub fn config(self, kind: RectKind, seed: u64) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            candidates: self.candidates,
            learning_rate: self.learning_rate,
            rect_kind: kind,
            loss: LossKind::SquaredError,
            reg: RegSpec::bounded(RegScheme::StandardL2, 1.0),
            seed,
            ..TrainConfig::default()
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A printable result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn write_text(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "{}", self.title)?;
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                self.rows.iter().map(|r| r[j].len()).chain([self.headers[j].len()]).max().unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        writeln!(out, "{}", line(&self.headers))?;
        for r in &self.rows {
            writeln!(out, "{}", line(r))?;
        }
        for n in &self.notes {
            writeln!(out, "{n}")?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        crate::io::write_rows(out, &self.headers, self.rows.iter().cloned())
    }
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanRun {
    pub seed: u64,
    pub best_beta: f64,
    /// Pooled out-of-fold R² at the best `beta`.
    pub r2: f64,
}

/// Friedman1 with `beta` tuned over the default grid by 5-fold CV.
pub fn friedman1_runs(seeds: &[u64], kind: RectKind, budget: Budget) -> Result<Vec<FriedmanRun>> {
    seeds
        .iter()
        .map(|&seed| {
            let ds = gen_friedman1(FRIEDMAN1_ROWS, seed)?;
            let cfg = budget.config(kind, seed);
            let s = tune_beta(&ds, &cfg, &DEFAULT_BETA_GRID, Metric::R2, CV_FOLDS, seed)?;
            log::info!("friedman1 seed {seed} ({}): beta {} r2 {:.4}", kind.token(), s.best_beta, s.best_score);
            Ok(FriedmanRun { seed, best_beta: s.best_beta, r2: s.best_score })
        })
        .collect()
}

pub fn friedman1_report(seeds: &[u64]) -> Result<Report> {
    let runs = friedman1_runs(seeds, RectKind::Corner, Budget::QUALITY)?;
    let r2: Vec<f64> = runs.iter().map(|r| r.r2).collect();
    Ok(Report {
        title: format!(
            "friedman1: n={FRIEDMAN1_ROWS}, corners, T={}, K={}, {CV_FOLDS}-fold CV, beta tuned",
            Budget::QUALITY.iterations,
            Budget::QUALITY.candidates
        ),
        headers: vec!["seed".into(), "beta".into(), "r2".into()],
        rows: runs.iter().map(|r| vec![r.seed.to_string(), r.best_beta.to_string(), fmt4(r.r2)]).collect(),
        notes: vec![format!("median r2: {}", fmt4(median(&r2)))],
    })
}

pub const MOONS_ROWS: usize = 400;
pub const MOONS_NOISE: f64 = 0.15;
pub const MOONS_TEST_ROWS: usize = 1000;

pub fn two_moons_config(seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: 200,
        learning_rate: 0.1,
        rect_kind: RectKind::Corner,
        loss: LossKind::BinaryCrossEntropy,
        seed,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonsRun {
    pub seed: u64,
    pub train_accuracy: f64,
    pub accuracy: f64,
    pub f1: f64,
}

/// Trains on one sample and scores on a fresh sample from the same
/// distribution.
pub fn two_moons_runs(seeds: &[u64]) -> Result<Vec<MoonsRun>> {
    seeds
        .iter()
        .map(|&seed| {
            let train_ds = gen_two_moons(MOONS_ROWS, MOONS_NOISE, seed)?;
            let test_ds = gen_two_moons(MOONS_TEST_ROWS, MOONS_NOISE, seed.wrapping_add(1_000_003))?;
            let model = train(&train_ds, &two_moons_config(seed))?;
            let train_labels = model.predict_labels(&train_ds)?;
            let labels = model.predict_labels(&test_ds)?;
            Ok(MoonsRun {
                seed,
                train_accuracy: accuracy(train_ds.targets(), &train_labels)?,
                accuracy: accuracy(test_ds.targets(), &labels)?,
                f1: f1_score(test_ds.targets(), &labels, Averaging::Binary)?,
            })
        })
        .collect()
}

pub fn two_moons_report(seeds: &[u64]) -> Result<Report> {
    let runs = two_moons_runs(seeds)?;
    Ok(Report {
        title: format!(
            "two-moons: n={MOONS_ROWS}, noise={MOONS_NOISE}, corners, T=200, gamma=0.1, test n={MOONS_TEST_ROWS}"
        ),
        headers: vec!["seed".into(), "train_accuracy".into(), "accuracy".into(), "f1".into()],
        rows: runs
            .iter()
            .map(|r| vec![r.seed.to_string(), fmt4(r.train_accuracy), fmt4(r.accuracy), fmt4(r.f1)])
            .collect(),
        notes: vec![format!(
            "median accuracy: {}, median f1: {}",
            fmt4(median(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>())),
            fmt4(median(&runs.iter().map(|r| r.f1).collect::<Vec<_>>()))
        )],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub corners: Vec<f64>,
    pub closed: Vec<f64>,
    pub test: PairedTTest,
}

pub fn corners_vs_rects(seeds: &[u64], budget: Budget) -> Result<Comparison> {
    let corners: Vec<f64> =
        friedman1_runs(seeds, RectKind::Corner, budget)?.iter().map(|r| r.r2).collect();
    let closed: Vec<f64> =
        friedman1_runs(seeds, RectKind::Closed, budget)?.iter().map(|r| r.r2).collect();
    let test = paired_t_test(&corners, &closed)?;
    Ok(Comparison { seeds: seeds.to_vec(), corners, closed, test })
}

pub fn corners_vs_rects_report(seeds: &[u64]) -> Result<Report> {
    let c = corners_vs_rects(seeds, Budget::COMPARISON)?;
    Ok(Report {
        title: format!(
            "corners-vs-rects: friedman1 n={FRIEDMAN1_ROWS}, T={}, K={}, beta tuned per kind",
            Budget::COMPARISON.iterations,
            Budget::COMPARISON.candidates
        ),
        headers: vec!["seed".into(), "r2_corners".into(), "r2_closed".into()],
        rows: c
            .seeds
            .iter()
            .zip(c.corners.iter().zip(&c.closed))
            .map(|(s, (a, b))| vec![s.to_string(), fmt4(*a), fmt4(*b)])
            .collect(),
        notes: vec![
            format!("median r2 corners: {}", fmt4(median(&c.corners))),
            format!("median r2 closed: {}", fmt4(median(&c.closed))),
            format!("paired t = {:.4}, p = {:.4}", c.test.t, c.test.p_value),
        ],
    })
}

/// Boxes averaged, and boosting iterations, in the independence comparison.
pub const COLLAPSE_COUNT: usize = 200;

/// Corners with many candidates and a large step, so that 200 boosting
/// iterations make visible progress on Friedman1.
pub fn collapse_config(seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: COLLAPSE_COUNT,
        candidates: 100,
        learning_rate: 0.5,
        rect_kind: RectKind::Corner,
        loss: LossKind::SquaredError,
        reg: RegSpec::bounded(RegScheme::StandardL2, 5.0),
        seed,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collapse {
    /// Training R² of the average of independently fitted boxes.
    pub average_r2: f64,
    /// Training R² of the boosted ensemble.
    pub boosted_r2: f64,
}

/// Independent averaging against boosting with the same number of boxes,
/// both scored on the training data.
pub fn independence_collapse(seed: u64) -> Result<Collapse> {
    let ds = gen_friedman1(FRIEDMAN1_ROWS, seed)?;
    let cfg = collapse_config(seed);
    let average = fit_independent_average(&ds, &cfg, COLLAPSE_COUNT)?;
    let boosted = train(&ds, &cfg)?;
    Ok(Collapse {
        average_r2: r2_score(ds.targets(), &average.predict_dataset(&ds)?)?,
        boosted_r2: r2_score(ds.targets(), &boosted.predict_dataset(&ds)?)?,
    })
}

/// Rows of the model used for timing explanations.
pub const TIMING_ROWS: usize = 500;
pub const TIMING_MIN_BOXES: usize = 1000;
pub const TIMING_REPETITIONS: usize = 5;

/// A corners model on 10-feature Friedman1 data with at least
/// [`TIMING_MIN_BOXES`] boxes, plus its training data.
pub fn timing_model(seed: u64) -> Result<(Ensemble, Dataset)> {
    let ds = gen_friedman1(TIMING_ROWS, seed)?;
    let cfg = TrainConfig {
        iterations: 6000,
        rect_kind: RectKind::Corner,
        reg: RegSpec::bounded(RegScheme::StandardL2, 5.0),
        seed,
        ..TrainConfig::default()
    };
    let model = train(&ds, &cfg)?;
    if model.boxes().len() < TIMING_MIN_BOXES {
        return Err(Error::Format(format!(
            "timing model has only {} boxes (need {TIMING_MIN_BOXES})",
            model.boxes().len()
        )));
    }
    Ok((model, ds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimedMethod {
    BruteForce,
    DataBased,
    ModelBased,
}

impl TimedMethod {
    pub fn name(self) -> &'static str {
        match self {
            TimedMethod::BruteForce => "brute-force",
            TimedMethod::DataBased => "data-based",
            TimedMethod::ModelBased => "model-based",
        }
    }
}

/// End-to-end cost of explaining the first `n` rows of a data file, as the
/// `explain` command would: parse the model and the CSV data, prepare the
/// explainer, explain. The data-based method uses all rows as background.
pub fn time_explanations(method: TimedMethod, model_json: &str, data_csv: &str, n: usize) -> Result<Duration> {
    let start = Instant::now();
    let model = model_file::from_json(model_json)?.model;
    let table = crate::io::read_table_from(data_csv.as_bytes(), "<timing data>")?;
    let rows = table.select_features(model.feature_names())?;
    if rows.len() < n {
        return Err(Error::Format(format!("need {n} rows to explain, data has {}", rows.len())));
    }
    let mut checksum = 0.0;
    match method {
        TimedMethod::ModelBased => {
            let ex = ModelExplainer::new(&model);
            for x in &rows[..n] {
                checksum += ex.explain(x)?.phi[0];
            }
        }
        TimedMethod::DataBased => {
            let background = Dataset::from_rows(&rows, vec![0.0; rows.len()], Task::Regression)?;
            let ex = DataExplainer::new(&model, &background)?;
            for x in &rows[..n] {
                checksum += ex.explain(x)?.phi[0];
            }
        }
        TimedMethod::BruteForce => {
            for x in &rows[..n] {
                let a = shap_brute_force(x.len(), |s| ensemble_coalition_value_model(&model, x, s))?;
                checksum += a.phi[0];
            }
        }
    }
    let elapsed = start.elapsed();
    std::hint::black_box(checksum);
    Ok(elapsed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub boxes: usize,
    /// `(method, n, seconds)`; the minimum over repetitions.
    pub rows: Vec<(TimedMethod, usize, f64)>,
}

impl Timing {
    pub fn seconds(&self, method: TimedMethod, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == method && r.1 == n).map(|r| r.2)
    }
}

pub fn shap_timing(ns: &[usize], repetitions: usize, seed: u64) -> Result<Timing> {
    let (model, background) = timing_model(seed)?;
    let json = model_file::to_json(&model, None)?;
    let mut csv = Vec::new();
    crate::io::write_dataset(&mut csv, &background).map_err(|e| Error::io("<timing data>", e))?;
    let csv = String::from_utf8(csv).map_err(|e| Error::Format(e.to_string()))?;
    let mut rows = Vec::new();
    for method in [TimedMethod::BruteForce, TimedMethod::DataBased, TimedMethod::ModelBased] {
        for &n in ns {
            let mut best = f64::INFINITY;
            for _ in 0..repetitions.max(1) {
                let t = time_explanations(method, &json, &csv, n)?;
                best = best.min(t.as_secs_f64());
            }
            rows.push((method, n, best));
        }
    }
    Ok(Timing { boxes: model.boxes().len(), rows })
}

pub fn shap_timing_report(seed: u64) -> Result<Report> {
    let t = shap_timing(&[1, 10, 20], TIMING_REPETITIONS, seed)?;
    Ok(Report {
        title: format!(
            "shap-timing: corners model, d=10, {} boxes, data n={TIMING_ROWS}; load + explain first n rows, seconds (min of {TIMING_REPETITIONS})",
            t.boxes
        ),
        headers: vec!["method".into(), "n".into(), "seconds".into()],
        rows: t.rows.iter().map(|(m, n, s)| vec![m.name().into(), n.to_string(), format!("{s:.6}")]).collect(),
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn report_layout() {
        let r = Report {
            title: "t".into(),
            headers: vec!["a".into(), "bb".into()],
            rows: vec![vec!["1".into(), "2".into()]],
            notes: vec!["done".into()],
        };
        let mut text = Vec::new();
        r.write_text(&mut text).unwrap();
        assert_eq!(String::from_utf8(text).unwrap(), "t\na  bb\n1   2\ndone\n");
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "a,bb\n1,2\n");
    }
}
