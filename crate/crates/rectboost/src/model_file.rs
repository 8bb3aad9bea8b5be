//! JSON model files.
//!
//! ```json
//! {"version": 1, "loss": "l2", "bias": 0.5, "d": 2, "feature_names": ["a", "b"],
//!  "boxes": [{"lower": [0.1, null], "upper": [null, 2.0], "value": -0.3}]}
//! ```
//!
//! `null` stands for an unbounded side: `-inf` in `lower`, `+inf` in `upper`.
//! Numbers are written in their shortest round-trip form, so a loaded model
//! predicts bit-identically to the saved one. Files written by `train` also
//! carry an optional `train_config` object that `eval --cv` reuses.

use std::fs;
use std::path::Path;

use rectboost_core::{BoxTerm, Ensemble, LossKind, RectKind, Rectangle, RegScheme, RegSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxJson {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    value: f64,
}

/// The command-line training surface, as recorded in a model file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigJson {
    pub rect: RectToken,
    pub iters: usize,
    pub candidates: usize,
    pub attempts: usize,
    pub gamma: f64,
    pub reg: RegToken,
    pub beta: Option<f64>,
    pub val_frac: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RectToken {
    Closed,
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegToken {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "step-l2")]
    StepL2,
}

impl From<RectKind> for RectToken {
    fn from(k: RectKind) -> Self {
        match k {
            RectKind::Closed => RectToken::Closed,
            RectKind::Corner => RectToken::Corner,
        }
    }
}

impl From<RectToken> for RectKind {
    fn from(k: RectToken) -> Self {
        match k {
            RectToken::Closed => RectKind::Closed,
            RectToken::Corner => RectKind::Corner,
        }
    }
}

impl From<RegScheme> for RegToken {
    fn from(s: RegScheme) -> Self {
        match s {
            RegScheme::None => RegToken::None,
            RegScheme::StandardL2 => RegToken::L2,
            RegScheme::StandardL1 => RegToken::L1,
            RegScheme::StepHeightL2 => RegToken::StepL2,
        }
    }
}

impl From<RegToken> for RegScheme {
    fn from(s: RegToken) -> Self {
        match s {
            RegToken::None => RegScheme::None,
            RegToken::L2 => RegScheme::StandardL2,
            RegToken::L1 => RegScheme::StandardL1,
            RegToken::StepL2 => RegScheme::StepHeightL2,
        }
    }
}

impl ConfigJson {
    pub fn from_config(cfg: &TrainConfig) -> Self {
        let beta = (cfg.reg.scheme != RegScheme::None).then_some(cfg.reg.beta);
        Self {
            rect: cfg.rect_kind.into(),
            iters: cfg.iterations,
            candidates: cfg.candidates,
            attempts: cfg.attempts,
            gamma: cfg.learning_rate,
            reg: cfg.reg.scheme.into(),
            beta,
            val_frac: cfg.val_fraction,
            seed: cfg.seed,
        }
    }

    pub fn to_config(&self, loss: LossKind) -> TrainConfig {
        let reg = match (self.reg, self.beta) {
            (RegToken::None, _) | (_, None) => RegSpec::none(),
            (scheme, Some(beta)) => RegSpec::bounded(scheme.into(), beta),
        };
        TrainConfig {
            iterations: self.iters,
            candidates: self.candidates,
            attempts: self.attempts,
            learning_rate: self.gamma,
            val_fraction: self.val_frac,
            rect_kind: self.rect.into(),
            loss,
            reg,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    version: u32,
    loss: String,
    bias: f64,
    d: usize,
    feature_names: Vec<String>,
    boxes: Vec<BoxJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_config: Option<ConfigJson>,
}

/// A model as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Ensemble,
    pub config: Option<ConfigJson>,
}

fn encode_bound(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn to_json(model: &Ensemble, config: Option<&TrainConfig>) -> Result<String> {
    let boxes = model
        .boxes()
        .iter()
        .map(|b| BoxJson {
            lower: b.rect.lower().iter().copied().map(encode_bound).collect(),
            upper: b.rect.upper().iter().copied().map(encode_bound).collect(),
            value: b.value,
        })
        .collect();
    let doc = ModelJson {
        version: FORMAT_VERSION,
        loss: model.loss().token().to_owned(),
        bias: model.bias(),
        d: model.n_features(),
        feature_names: model.feature_names().to_vec(),
        boxes,
        train_config: config.map(ConfigJson::from_config),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> Result<ModelFile> {
    let doc: ModelJson = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {} (expected {FORMAT_VERSION})",
            doc.version
        )));
    }
    let loss = LossKind::from_token(&doc.loss)?;
    if doc.feature_names.len() != doc.d {
        return Err(Error::Format(format!(
            "model declares d = {} but lists {} feature names",
            doc.d,
            doc.feature_names.len()
        )));
    }
    let mut boxes = Vec::with_capacity(doc.boxes.len());
    for (k, b) in doc.boxes.into_iter().enumerate() {
        if b.lower.len() != doc.d || b.upper.len() != doc.d {
            return Err(Error::Format(format!(
                "box {k} has {}/{} bounds, model has d = {}",
                b.lower.len(),
                b.upper.len(),
                doc.d
            )));
        }
        let lower = b.lower.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let upper = b.upper.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        let rect = Rectangle::new(lower, upper)
            .map_err(|e| Error::Format(format!("box {k}: {e}")))?;
        boxes.push(BoxTerm { rect, value: b.value });
    }
    let model = Ensemble::new(doc.bias, boxes, loss, doc.feature_names)?;
    Ok(ModelFile { model, config: doc.train_config })
}

pub fn save(path: impl AsRef<Path>, model: &Ensemble, config: Option<&TrainConfig>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(model, config)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::Format(format!("{}: {j}", path.display())),
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
