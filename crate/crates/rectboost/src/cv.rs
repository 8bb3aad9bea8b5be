//! Repeated k-fold cross-validation and the `beta` grid search.

use rayon::prelude::*;
use rectboost_core::boosting::train;
use rectboost_core::dataset::kfold_indices;
use rectboost_core::metrics::{accuracy, f1_score, r2_score, Averaging};
use rectboost_core::{Dataset, LossKind, RegScheme, RegSpec, TrainConfig};

use crate::error::{Error, Result};

/// Candidate bounds searched when no `beta` is given.
pub const DEFAULT_BETA_GRID: [f64; 6] = [0.01, 0.05, 0.1, 0.5, 1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    R2,
    F1,
    Accuracy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::R2 => "r2",
            Metric::F1 => "f1",
            Metric::Accuracy => "accuracy",
        }
    }

    pub fn default_for(loss: LossKind) -> Self {
        match loss {
            LossKind::SquaredError => Metric::R2,
            LossKind::BinaryCrossEntropy => Metric::F1,
        }
    }

    /// Scores raw model outputs; classification metrics threshold the logit
    /// at zero.
    pub fn score(self, loss: LossKind, targets: &[f64], raw: &[f64]) -> Result<f64> {
        match (self, loss) {
            (Metric::R2, LossKind::SquaredError) => Ok(r2_score(targets, raw)?),
            (Metric::F1 | Metric::Accuracy, LossKind::BinaryCrossEntropy) => {
                let labels: Vec<f64> = raw.iter().map(|&z| if z >= 0.0 { 1.0 } else { 0.0 }).collect();
                if self == Metric::F1 {
                    Ok(f1_score(targets, &labels, Averaging::Binary)?)
                } else {
                    Ok(accuracy(targets, &labels)?)
                }
            }
            (metric, loss) => Err(Error::Usage(format!(
                "metric {} does not apply to a {} model",
                metric.name(),
                loss.token()
            ))),
        }
    }
}

/// Out-of-fold raw predictions for every row.
pub fn cross_val_predict(ds: &Dataset, cfg: &TrainConfig, k: usize, seed: u64) -> Result<Vec<f64>> {
    let folds = kfold_indices(ds.n_rows(), k, seed)?;
    let parts: Vec<(Vec<usize>, Vec<f64>)> = folds
        .par_iter()
        .map(|test| -> Result<_> {
            let mut in_test = vec![false; ds.n_rows()];
            for &i in test {
                in_test[i] = true;
            }
            let train_rows: Vec<usize> = (0..ds.n_rows()).filter(|&i| !in_test[i]).collect();
            let model = train(&ds.subset(&train_rows)?, cfg)?;
            Ok((test.clone(), test.iter().map(|&i| model.predict(ds.row(i))).collect()))
        })
        .collect::<Result<_>>()?;
    let mut pred = vec![0.0; ds.n_rows()];
    for (rows, values) in parts {
        for (i, v) in rows.into_iter().zip(values) {
            pred[i] = v;
        }
    }
    Ok(pred)
}

/// Metric of the pooled out-of-fold predictions, once per repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub scores: Vec<f64>,
}

impl CvSummary {
    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }

    /// Sample standard deviation; zero for a single repetition.
    pub fn std(&self) -> f64 {
        let n = self.scores.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Repetition `r` shuffles its folds with `seed + r`.
pub fn cv_score(
    ds: &Dataset,
    cfg: &TrainConfig,
    metric: Metric,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvSummary> {
    if repeats == 0 {
        return Err(Error::Usage("repeats must be >= 1".into()));
    }
    let scores = (0..repeats as u64)
        .map(|r| {
            let pred = cross_val_predict(ds, cfg, k, seed.wrapping_add(r))?;
            metric.score(cfg.loss, ds.targets(), &pred)
        })
        .collect::<Result<_>>()?;
    Ok(CvSummary { scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSearch {
    pub best_beta: f64,
    pub best_score: f64,
    /// `(beta, score)` in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Picks the grid value with the highest CV score; the earliest wins ties.
/// `cfg.reg.scheme` must not be `None`.
pub fn tune_beta(
    ds: &Dataset,
    cfg: &TrainConfig,
    grid: &[f64],
    metric: Metric,
    k: usize,
    seed: u64,
) -> Result<BetaSearch> {
    if cfg.reg.scheme == RegScheme::None {
        return Err(Error::Usage("beta tuning needs a regularization scheme".into()));
    }
    if grid.is_empty() {
        return Err(Error::Usage("empty beta grid".into()));
    }
    let scores: Vec<(f64, f64)> = grid
        .iter()
        .map(|&beta| {
            let c = TrainConfig { reg: RegSpec::bounded(cfg.reg.scheme, beta), ..*cfg };
            Ok((beta, cv_score(ds, &c, metric, k, 1, seed)?.scores[0]))
        })
        .collect::<Result<_>>()?;
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 {
            best = s;
        }
    }
    Ok(BetaSearch { best_beta: best.0, best_score: best.1, scores })
}
