//! The boosting loop, prediction, and one-vs-rest reduction.
//!
//! Each outer iteration computes first and second loss derivatives on the
//! training part of a random split, proposes up to `attempts` boxes (each the
//! best of `candidates` random rectangles) and keeps the first one that does
//! not increase the validation loss once scaled by the learning rate. An
//! accepted box contributes `gamma * v_out` to the global bias and is stored
//! with the folded value `gamma * (v_in - v_out)`, so the stored ensemble is
//! `q + sum_k 1[x in r_k] value_k`. The split is redrawn after every
//! acceptance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::base_fit::make_rectangle_with;
use crate::dataset::{split, DataView, Dataset, SplitPair, Task};
use crate::error::{Error, Result};
use crate::geometry::{RectKind, Rectangle, RectangleSampler};
use crate::loss::{sigmoid, LossKind};
use crate::regularize::{RegScheme, RegSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Outer iterations `T`; a rejected iteration still counts.
    pub iterations: usize,
    /// Random rectangles scored per attempt `K`.
    pub candidates: usize,
    /// Validation attempts per iteration `V`.
    pub attempts: usize,
    pub learning_rate: f64,
    pub val_fraction: f64,
    pub rect_kind: RectKind,
    pub loss: LossKind,
    pub reg: RegSpec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            candidates: 10,
            attempts: 5,
            learning_rate: 0.1,
            val_fraction: 0.2,
            rect_kind: RectKind::Corner,
            loss: LossKind::SquaredError,
            reg: RegSpec::bounded(RegScheme::StandardL2, 1.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidArgument("candidates must be >= 1".into()));
        }
        if self.attempts == 0 {
            return Err(Error::InvalidArgument("attempts must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        self.reg.validate()
    }
}

/// A folded box: adds `value` inside `rect` and nothing outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxTerm {
    pub rect: Rectangle,
    pub value: f64,
}

/// What happened in one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub accepted: bool,
    /// Attempts spent, including the accepted one.
    pub attempts: usize,
    /// Validation loss (mean over the validation rows) before the iteration.
    pub val_loss_before: f64,
    /// Validation loss with the accepted box, or with the last rejected one.
    pub val_loss_after: f64,
    /// Unscaled inside/outside values of the accepted box.
    pub v_in: f64,
    pub v_out: f64,
    pub inside_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub config: TrainConfig,
    pub initial_bias: f64,
    pub iterations: Vec<IterationRecord>,
}

impl TrainRecord {
    pub fn accepted(&self) -> usize {
        self.iterations.iter().filter(|r| r.accepted).count()
    }
}

/// Bias plus folded boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    bias: f64,
    boxes: Vec<BoxTerm>,
    loss: LossKind,
    n_features: usize,
    feature_names: Vec<String>,
    record: Option<TrainRecord>,
}

impl Ensemble {
    pub fn new(
        bias: f64,
        boxes: Vec<BoxTerm>,
        loss: LossKind,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(Error::InvalidArgument("model needs at least one feature".into()));
        }
        if !bias.is_finite() {
            return Err(Error::NonFinite("bias"));
        }
        for (k, b) in boxes.iter().enumerate() {
            if b.rect.dim() != n_features {
                return Err(Error::InvalidArgument(format!(
                    "box {k} has dimension {}, model has {n_features}",
                    b.rect.dim()
                )));
            }
            if !b.value.is_finite() {
                return Err(Error::NonFinite("box value"));
            }
        }
        Ok(Self { bias, boxes, loss, n_features, feature_names, record: None })
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn boxes(&self) -> &[BoxTerm] {
        &self.boxes
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Training log, present on models returned by [`train`].
    pub fn record(&self) -> Option<&TrainRecord> {
        self.record.as_ref()
    }

    /// Raw score `q + sum 1[x in r] value`, without a dimension check.
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features);
        let mut y = self.bias;
        for b in &self.boxes {
            if b.rect.contains(x) {
                y += b.value;
            }
        }
        y
    }

    pub fn try_predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.predict(x))
    }

    /// Class-1 probability of a cross-entropy model.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.loss != LossKind::BinaryCrossEntropy {
            return Err(Error::Unsupported("probabilities need a cross-entropy model".into()));
        }
        Ok(sigmoid(self.try_predict(x)?))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.n_features() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: ds.n_features() });
        }
        Ok(ds.rows().map(|x| self.predict(x)).collect())
    }

    /// Hard labels: thresholded probability for cross-entropy models, raw
    /// scores otherwise.
    pub fn predict_labels(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let raw = self.predict_dataset(ds)?;
        Ok(match self.loss {
            LossKind::BinaryCrossEntropy => {
                raw.into_iter().map(|z| if z >= 0.0 { 1.0 } else { 0.0 }).collect()
            }
            LossKind::SquaredError => raw,
        })
    }
}

fn mean_loss(loss: LossKind, ds: &Dataset, rows: &[usize], score: impl Fn(usize) -> f64) -> f64 {
    let total: f64 = rows.iter().map(|&i| loss.eval(ds.target(i), score(i))).sum();
    total / rows.len() as f64
}

fn check_task(ds: &Dataset, loss: LossKind) -> Result<()> {
    match (loss, ds.task()) {
        (LossKind::SquaredError, Task::Regression) => Ok(()),
        (LossKind::BinaryCrossEntropy, Task::BinaryClassification) => Ok(()),
        (LossKind::SquaredError, _) => {
            if ds.task() == Task::BinaryClassification {
                Ok(())
            } else {
                Err(Error::Unsupported("use one-vs-rest for multiclass targets".into()))
            }
        }
        (LossKind::BinaryCrossEntropy, _) => {
            if ds.targets().iter().all(|&y| y == 0.0 || y == 1.0) {
                Ok(())
            } else {
                Err(Error::InvalidDataset("cross-entropy needs 0/1 targets".into()))
            }
        }
    }
}

/// Seed of the first split, decorrelated from the rectangle stream.
fn split_seed(seed: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains an ensemble; see the module docs for the procedure.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<Ensemble> {
    train_with_scores(ds, cfg).map(|(model, _)| model)
}

/// Like [`train`], also returning the running raw scores maintained for every
/// row during training.
pub fn train_with_scores(ds: &Dataset, cfg: &TrainConfig) -> Result<(Ensemble, Vec<f64>)> {
    cfg.validate()?;
    check_task(ds, cfg.loss)?;
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::InvalidDataset("training needs at least two rows".into()));
    }
    let gamma = cfg.learning_rate;
    let loss = cfg.loss;
    let initial_bias = loss.optimal_constant(ds.targets())?;
    let mut bias = initial_bias;
    let mut scores = alloc::vec![initial_bias; n];
    let mut boxes = Vec::new();
    let mut log = Vec::with_capacity(cfg.iterations);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut parts: SplitPair = split(ds, cfg.val_fraction, split_seed(cfg.seed))?;
    let mut g = Vec::new();
    let mut h = Vec::new();

    for iteration in 1..=cfg.iterations {
        let train_rows = &parts.train_indices;
        let val_rows = &parts.val_indices;
        g.clear();
        h.clear();
        for &i in train_rows {
            let d = loss.grad_hess(ds.target(i), scores[i]);
            g.push(d.g);
            h.push(d.h);
        }
        let view = DataView::new(ds, train_rows);
        let sampler = RectangleSampler::new(view)?;
        let val_before = mean_loss(loss, ds, val_rows, |i| scores[i]);
        let mut record = IterationRecord {
            iteration,
            accepted: false,
            attempts: 0,
            val_loss_before: val_before,
            val_loss_after: val_before,
            v_in: 0.0,
            v_out: 0.0,
            inside_count: 0,
        };
        let mut accepted = None;
        for _ in 0..cfg.attempts {
            record.attempts += 1;
            let fitted = match make_rectangle_with(
                &sampler,
                &view,
                &g,
                &h,
                cfg.candidates,
                cfg.rect_kind,
                &cfg.reg,
                &mut rng,
            ) {
                Ok(f) => f,
                Err(Error::NoValidCandidate(_)) => continue,
                Err(e) => return Err(e),
            };
            let val_after =
                mean_loss(loss, ds, val_rows, |i| scores[i] + gamma * fitted.eval(ds.row(i)));
            record.val_loss_after = val_after;
            if val_after <= val_before {
                accepted = Some(fitted);
                break;
            }
        }
        if let Some(fitted) = accepted {
            let shift = gamma * fitted.v_out;
            let value = gamma * (fitted.v_in - fitted.v_out);
            bias += shift;
            let mut inside_count = 0;
            for (i, s) in scores.iter_mut().enumerate() {
                *s += shift;
                if fitted.rect.contains(ds.row(i)) {
                    *s += value;
                    inside_count += 1;
                }
            }
            record.accepted = true;
            record.v_in = fitted.v_in;
            record.v_out = fitted.v_out;
            record.inside_count = inside_count;
            boxes.push(BoxTerm { rect: fitted.rect, value });
            parts = split(ds, cfg.val_fraction, parts.seed_state)?;
        }
        log.push(record);
    }
    if boxes.is_empty() {
        log::debug!("no rectangle passed validation; the model is constant");
    }
    let mut model = Ensemble::new(bias, boxes, loss, ds.feature_names().to_vec())?;
    model.record = Some(TrainRecord { config: *cfg, initial_bias, iterations: log });
    Ok((model, scores))
}

/// Redraws allowed per box when every candidate leaves a side empty.
pub const INDEPENDENT_MAX_DRAWS: usize = 1000;

/// Averages `count` boxes fitted independently at the initial constant, with
/// no boosting: every box sees the same derivatives, so the average carries
/// little more than the constant. Uses the candidate count, rectangle kind,
/// loss, regularization and seed of `cfg`; the other fields are ignored.
pub fn fit_independent_average(ds: &Dataset, cfg: &TrainConfig, count: usize) -> Result<Ensemble> {
    cfg.validate()?;
    check_task(ds, cfg.loss)?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let loss = cfg.loss;
    let q = loss.optimal_constant(ds.targets())?;
    let (g, h): (Vec<f64>, Vec<f64>) = ds
        .targets()
        .iter()
        .map(|&y| {
            let d = loss.grad_hess(y, q);
            (d.g, d.h)
        })
        .unzip();
    let view = ds.full_view();
    let sampler = RectangleSampler::new(view)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weight = 1.0 / count as f64;
    let mut bias = q;
    let mut boxes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut draws = 0;
        let fitted = loop {
            draws += 1;
            match make_rectangle_with(
                &sampler,
                &view,
                &g,
                &h,
                cfg.candidates,
                cfg.rect_kind,
                &cfg.reg,
                &mut rng,
            ) {
                Err(Error::NoValidCandidate(_)) if draws < INDEPENDENT_MAX_DRAWS => continue,
                other => break other?,
            }
        };
        bias += weight * fitted.v_out;
        boxes.push(BoxTerm { rect: fitted.rect, value: weight * (fitted.v_in - fitted.v_out) });
    }
    Ensemble::new(bias, boxes, loss, ds.feature_names().to_vec())
}

/// One cross-entropy model per class.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRest {
    pub models: Vec<Ensemble>,
}

impl OneVsRest {
    pub fn classes(&self) -> usize {
        self.models.len()
    }

    /// Index of the largest raw score; the first one wins ties.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, m) in self.models.iter().enumerate() {
            let z = m.try_predict(x)?;
            if z > best.1 {
                best = (c, z);
            }
        }
        Ok(best.0)
    }
}

pub fn train_one_vs_rest(ds: &Dataset, cfg: &TrainConfig) -> Result<OneVsRest> {
    let classes = match ds.task() {
        Task::Multiclass { classes } => classes,
        Task::BinaryClassification => 2,
        Task::Regression => {
            return Err(Error::Unsupported("one-vs-rest needs class labels".into()));
        }
    };
    let cfg = TrainConfig { loss: LossKind::BinaryCrossEntropy, ..*cfg };
    let mut models = Vec::with_capacity(classes);
    for c in 0..classes {
        let label = c as f64;
        let targets: Vec<f64> =
            ds.targets().iter().map(|&y| if y == label { 1.0 } else { 0.0 }).collect();
        if !targets.contains(&1.0) {
            return Err(Error::InvalidDataset(format!("class {c} has no training rows")));
        }
        let binary = ds.with_targets(targets, Task::BinaryClassification)?;
        models.push(train(&binary, &cfg)?);
    }
    Ok(OneVsRest { models })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(xs: &[f64], ys: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Dataset::from_rows(&rows, ys.to_vec(), Task::Regression).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { iterations: 0, ..ok },
            TrainConfig { candidates: 0, ..ok },
            TrainConfig { attempts: 0, ..ok },
            TrainConfig { learning_rate: 0.0, ..ok },
            TrainConfig { learning_rate: 1.5, ..ok },
            TrainConfig { val_fraction: 1.0, ..ok },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn predict_examples() {
        let names = vec!["a".into()];
        let empty = Ensemble::new(1.5, vec![], LossKind::SquaredError, names.clone()).unwrap();
        assert_eq!(empty.predict(&[3.0]), 1.5);
        let rect = Rectangle::new(vec![0.0], vec![1.0]).unwrap();
        let one = Ensemble::new(
            1.0,
            vec![BoxTerm { rect, value: 2.0 }],
            LossKind::SquaredError,
            names,
        )
        .unwrap();
        assert_eq!(one.predict(&[0.5]), 3.0);
        assert_eq!(one.predict(&[1.5]), 1.0);
        assert!(one.try_predict(&[0.5, 0.5]).is_err());
        assert!(one.predict_proba(&[0.5]).is_err());
    }

    #[test]
    fn probabilities() {
        let rect = Rectangle::new(vec![0.0], vec![1.0]).unwrap();
        let m = Ensemble::new(
            0.0,
            vec![BoxTerm { rect, value: libm::log(3.0) }],
            LossKind::BinaryCrossEntropy,
            vec!["a".into()],
        )
        .unwrap();
        assert_eq!(m.predict_proba(&[5.0]).unwrap(), 0.5);
        assert!((m.predict_proba(&[0.5]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_wrong_dimension() {
        let rect = Rectangle::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(Ensemble::new(
            0.0,
            vec![BoxTerm { rect, value: 1.0 }],
            LossKind::SquaredError,
            vec!["a".into()]
        )
        .is_err());
    }

    #[test]
    fn constant_targets_give_exact_predictions() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0, 4.0], &[2.5; 5]);
        let cfg = TrainConfig { iterations: 20, reg: RegSpec::none(), ..Default::default() };
        let model = train(&ds, &cfg).unwrap();
        assert_eq!(model.bias(), 2.5);
        assert!(model.boxes().iter().all(|b| b.value == 0.0));
        for x in ds.rows() {
            assert_eq!(model.predict(x), 2.5);
        }
    }

    #[test]
    fn single_training_row_is_rejected() {
        let ds = line(&[0.0, 1.0], &[0.0, 2.0]);
        let cfg = TrainConfig {
            iterations: 1,
            val_fraction: 0.5,
            reg: RegSpec::none(),
            ..Default::default()
        };
        assert!(matches!(train(&ds, &cfg), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn hand_traced_step() {
        // three rows x = 0, 1, 2 with y = 0, 0, 6; q = 2. Validation holds one
        // row, training the other two. With squared error g = s - y, h = 1.
        let ds = line(&[0.0, 1.0, 2.0], &[0.0, 0.0, 6.0]);
        let cfg = TrainConfig {
            iterations: 1,
            candidates: 1,
            attempts: 50,
            learning_rate: 0.5,
            val_fraction: 0.34,
            rect_kind: RectKind::Corner,
            reg: RegSpec::none(),
            ..Default::default()
        };
        let (model, scores) = train_with_scores(&ds, &cfg).unwrap();
        let rec = &model.record().unwrap().iterations[0];
        assert_eq!(model.record().unwrap().initial_bias, 2.0);
        if rec.accepted {
            let b = &model.boxes()[0];
            // each side holds one training row, so its value is that row's
            // residual y - 2
            assert_eq!(b.value, 0.5 * (rec.v_in - rec.v_out));
            assert_eq!(model.bias(), 2.0 + 0.5 * rec.v_out);
            for v in [rec.v_in, rec.v_out] {
                assert!(v == -2.0 || v == 4.0, "{v}");
            }
            assert!(rec.val_loss_after <= rec.val_loss_before);
            for (i, x) in ds.rows().enumerate() {
                assert!((model.predict(x) - scores[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_vs_rest_requires_every_class() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(
            &rows,
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            Task::Multiclass { classes: 3 },
        )
        .unwrap();
        let cfg = TrainConfig { iterations: 5, ..Default::default() };
        assert!(train_one_vs_rest(&ds, &cfg).is_err());
        let reg = line(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(train_one_vs_rest(&reg, &cfg).is_err());
    }

    #[test]
    fn multiclass_needs_one_vs_rest() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(
            &rows,
            vec![0.0, 2.0, 1.0, 1.0, 0.0, 1.0],
            Task::Multiclass { classes: 3 },
        )
        .unwrap();
        assert!(train(&ds, &TrainConfig::default()).is_err());
    }
}
