//! Twice-differentiable losses used by the booster.

use alloc::format;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Lower bound applied to cross-entropy hessians so Newton steps stay finite
/// at saturated sigmoids.
pub const HESSIAN_FLOOR: f64 = 1e-12;

/// Positive-rate clamp used when a binary dataset has a single class.
pub const RATE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(y - z)^2 / 2`.
    SquaredError,
    /// Negative log-likelihood of `y` under `sigmoid(z)`.
    BinaryCrossEntropy,
}

/// First and second derivative of a loss with respect to the raw score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivPair {
    pub g: f64,
    pub h: f64,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

impl LossKind {
    /// Token used in model files and on the command line.
    pub fn token(self) -> &'static str {
        match self {
            LossKind::SquaredError => "l2",
            LossKind::BinaryCrossEntropy => "bce",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "l2" => Ok(LossKind::SquaredError),
            "bce" => Ok(LossKind::BinaryCrossEntropy),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }

    /// Loss value without input validation; see [`loss_value`].
    #[inline]
    pub fn eval(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::SquaredError => 0.5 * (y - z) * (y - z),
            LossKind::BinaryCrossEntropy => (1.0 - y) * softplus(z) + y * softplus(-z),
        }
    }

    /// Derivatives without input validation; see [`derivatives`].
    #[inline]
    pub fn grad_hess(self, y: f64, z: f64) -> DerivPair {
        match self {
            LossKind::SquaredError => DerivPair { g: z - y, h: 1.0 },
            LossKind::BinaryCrossEntropy => {
                let p = sigmoid(z);
                DerivPair { g: p - y, h: (p * (1.0 - p)).max(HESSIAN_FLOOR) }
            }
        }
    }

    /// Constant minimizing the summed loss over `targets`.
    pub fn optimal_constant(self, targets: &[f64]) -> Result<f64> {
        if targets.is_empty() {
            return Err(Error::InvalidDataset("cannot initialize the bias from no targets".into()));
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        match self {
            LossKind::SquaredError => Ok(mean),
            LossKind::BinaryCrossEntropy => {
                if targets.iter().any(|&y| y != 0.0 && y != 1.0) {
                    return Err(Error::InvalidArgument(
                        "cross-entropy targets must be 0 or 1".into(),
                    ));
                }
                let rate = if mean <= 0.0 || mean >= 1.0 {
                    log::warn!("all targets belong to one class; clamping the positive rate");
                    mean.clamp(RATE_CLAMP, 1.0 - RATE_CLAMP)
                } else {
                    mean
                };
                Ok(libm::log(rate / (1.0 - rate)))
            }
        }
    }
}

fn check_inputs(kind: LossKind, y: f64, z: f64) -> Result<()> {
    if !y.is_finite() {
        return Err(Error::NonFinite("target"));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("raw prediction"));
    }
    if kind == LossKind::BinaryCrossEntropy && y != 0.0 && y != 1.0 {
        return Err(Error::InvalidArgument(format!("cross-entropy target must be 0 or 1, got {y}")));
    }
    Ok(())
}

pub fn loss_value(kind: LossKind, y: f64, z: f64) -> Result<f64> {
    check_inputs(kind, y, z)?;
    Ok(kind.eval(y, z))
}

pub fn derivatives(kind: LossKind, y: f64, z: f64) -> Result<DerivPair> {
    check_inputs(kind, y, z)?;
    Ok(kind.grad_hess(y, z))
}

/// Initial bias: mean target for squared error, logit of the positive rate
/// for cross-entropy.
pub fn init_bias(kind: LossKind, ds: &Dataset) -> Result<f64> {
    kind.optimal_constant(ds.targets())
}
