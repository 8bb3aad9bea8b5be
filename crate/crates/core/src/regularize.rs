//! Regularized inside/outside values and regularization strengths derived
//! from a bound `beta` on the absolute value of every base learner.
//!
//! Two penalties are supported on top of the quadratic surrogate
//! `(G_in v_in + H_in v_in^2 / 2 + G_out v_out + H_out v_out^2 / 2) / N`:
//!
//! * standard: `lambda1 (|v_in| + |v_out|) + lambda2 / 2 (v_in^2 + v_out^2)`,
//!   which decouples per side and gives a soft-thresholded Newton step;
//! * step height: `eta2 / 2 (v_in - v_out)^2`, which pulls both values
//!   towards the common Newton step `-G / H` as `eta2` grows. A linear
//!   `|v_in - v_out|` term adds nothing the quadratic one cannot express, so
//!   it is not offered.
//!
//! For each penalty, the strength is chosen per iteration as the smallest one
//! that keeps `max(|v_in|, |v_out|) <= beta`.

use alloc::format;

use crate::base_fit::GradHessStats;
use crate::boosting::Ensemble;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Upper end of the search interval used by [`bisect_eta2`].
pub const ETA2_SEARCH_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegScheme {
    None,
    /// Standard L2, `lambda2` derived from `beta`.
    StandardL2,
    /// Standard L1, `lambda1` derived from `beta` with `lambda2 = 0`.
    StandardL1,
    /// Quadratic step-height penalty, `eta2` derived from `beta`.
    StepHeightL2,
}

impl RegScheme {
    pub fn token(self) -> &'static str {
        match self {
            RegScheme::None => "none",
            RegScheme::StandardL2 => "l2",
            RegScheme::StandardL1 => "l1",
            RegScheme::StepHeightL2 => "step-l2",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "none" => Ok(RegScheme::None),
            "l2" => Ok(RegScheme::StandardL2),
            "l1" => Ok(RegScheme::StandardL1),
            "step-l2" => Ok(RegScheme::StepHeightL2),
            other => Err(Error::InvalidArgument(format!("unknown regularization '{other}'"))),
        }
    }
}

/// Explicit strengths that bypass `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedParams {
    Standard { lambda1: f64, lambda2: f64 },
    StepHeight { eta2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegSpec {
    pub scheme: RegScheme,
    pub beta: f64,
    pub fixed: Option<FixedParams>,
}

impl Default for RegSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl RegSpec {
    pub fn none() -> Self {
        Self { scheme: RegScheme::None, beta: f64::INFINITY, fixed: None }
    }

    pub fn bounded(scheme: RegScheme, beta: f64) -> Self {
        Self { scheme, beta, fixed: None }
    }

    pub fn fixed(params: FixedParams) -> Self {
        let scheme = match params {
            FixedParams::Standard { lambda1, .. } if lambda1 > 0.0 => RegScheme::StandardL1,
            FixedParams::Standard { .. } => RegScheme::StandardL2,
            FixedParams::StepHeight { .. } => RegScheme::StepHeightL2,
        };
        Self { scheme, beta: f64::INFINITY, fixed: Some(params) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.fixed {
            Some(FixedParams::Standard { lambda1, lambda2 }) => {
                if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite()
                {
                    return Err(Error::InvalidArgument(format!(
                        "lambda1 and lambda2 must be finite and >= 0 (got {lambda1}, {lambda2})"
                    )));
                }
            }
            Some(FixedParams::StepHeight { eta2 }) => {
                if !(eta2 >= 0.0) || !eta2.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "eta2 must be finite and >= 0 (got {eta2})"
                    )));
                }
            }
            None => {
                if self.scheme != RegScheme::None && !(self.beta > 0.0 && self.beta.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "beta must be a positive finite number (got {})",
                        self.beta
                    )));
                }
            }
        }
        Ok(())
    }

    /// Inside and outside values for one candidate under this scheme.
    pub fn values(&self, stats: &GradHessStats) -> Result<(f64, f64)> {
        match self.fixed {
            Some(FixedParams::Standard { lambda1, lambda2 }) => {
                values_standard(stats, lambda1, lambda2)
            }
            Some(FixedParams::StepHeight { eta2 }) => values_step_height(stats, eta2),
            None => match self.scheme {
                RegScheme::None => values_standard(stats, 0.0, 0.0),
                RegScheme::StandardL2 => {
                    values_standard(stats, 0.0, lambda2_from_beta(stats, self.beta))
                }
                RegScheme::StandardL1 => {
                    values_standard(stats, lambda1_from_beta(stats, self.beta), 0.0)
                }
                RegScheme::StepHeightL2 => {
                    values_step_height(stats, eta2_from_beta(stats, self.beta)?)
                }
            },
        }
    }
}

fn standard_side(g: f64, h: f64, n: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    let den = n * lambda2 + h;
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("standard regularized value"));
    }
    let shrink = n * lambda1;
    Ok(if g < -shrink {
        -(g + shrink) / den
    } else if g > shrink {
        -(g - shrink) / den
    } else {
        0.0
    })
}

/// Minimizer of the surrogate plus `lambda1 |v|_1 + lambda2 / 2 |v|^2`.
/// With both strengths zero this is the plain Newton step `-G / H` per side.
pub fn values_standard(stats: &GradHessStats, lambda1: f64, lambda2: f64) -> Result<(f64, f64)> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regularization strengths must be >= 0 (got {lambda1}, {lambda2})"
        )));
    }
    let n = stats.n() as f64;
    Ok((
        standard_side(stats.g_in, stats.h_in, n, lambda1, lambda2)?,
        standard_side(stats.g_out, stats.h_out, n, lambda1, lambda2)?,
    ))
}

/// Minimizer of the surrogate plus `eta2 / 2 (v_in - v_out)^2`:
///
/// `v_in = -(G_in + N eta2 G / H_out) / (H_in + N eta2 H / H_out)`, and the
/// same with in and out exchanged. Both expressions are evaluated after
/// multiplying through by the opposite hessian sum.
pub fn values_step_height(stats: &GradHessStats, eta2: f64) -> Result<(f64, f64)> {
    if !(eta2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta2 must be >= 0 (got {eta2})")));
    }
    let t = stats.n() as f64 * eta2;
    let (g, h) = (stats.g(), stats.h());
    let side = |g_self: f64, h_self: f64, h_other: f64| -> Result<f64> {
        let den = h_self * h_other + t * h;
        if !(den > 0.0) {
            return Err(Error::ZeroDenominator("step-height regularized value"));
        }
        Ok(-(g_self * h_other + t * g) / den)
    };
    Ok((side(stats.g_in, stats.h_in, stats.h_out)?, side(stats.g_out, stats.h_out, stats.h_in)?))
}

/// Smallest `lambda2 >= 0` such that the L2-regularized values satisfy
/// `|v| <= beta`: `max((|G_in| / beta - H_in) / N, (|G_out| / beta - H_out) / N, 0)`.
pub fn lambda2_from_beta(stats: &GradHessStats, beta: f64) -> f64 {
    let n = stats.n() as f64;
    let side = |g: f64, h: f64| (libm::fabs(g) / beta - h) / n;
    side(stats.g_in, stats.h_in).max(side(stats.g_out, stats.h_out)).max(0.0)
}

/// Smallest `lambda1 >= 0` such that the soft-thresholded values (with
/// `lambda2 = 0`) satisfy `|v| <= beta`:
/// `max((|G_in| - beta H_in) / N, (|G_out| - beta H_out) / N, 0)`.
pub fn lambda1_from_beta(stats: &GradHessStats, beta: f64) -> f64 {
    let n = stats.n() as f64;
    let side = |g: f64, h: f64| (libm::fabs(g) - beta * h) / n;
    side(stats.g_in, stats.h_in).max(side(stats.g_out, stats.h_out)).max(0.0)
}

fn check_step_feasible(stats: &GradHessStats, beta: f64) -> Result<()> {
    let (g, h) = (stats.g(), stats.h());
    if !(h > 0.0) {
        return Err(Error::ZeroDenominator("total hessian"));
    }
    if libm::fabs(g) > beta * h {
        return Err(Error::InfeasibleBeta { beta, limit: libm::fabs(g) / h });
    }
    Ok(())
}

/// Smallest `eta2 >= 0` keeping both step-height values within `[-beta, beta]`.
///
/// Writing `t = N eta2`, each value has the form `-(a + t G) / (b + t H)` with
/// `b > 0`, which is monotone in `t` and tends to `-G / H`. The two sides of
/// `|v| <= beta` are then linear inequalities in `t`:
/// `t (G + beta H) >= -(a + beta b)` and `t (beta H - G) >= a - beta b`,
/// whose solution sets are rays. The answer is the largest lower end over
/// both values. Requires `|G| <= beta H`, otherwise no finite `eta2` works.
pub fn eta2_from_beta(stats: &GradHessStats, beta: f64) -> Result<f64> {
    check_step_feasible(stats, beta)?;
    let (g, h) = (stats.g(), stats.h());
    let infeasible = || Error::InfeasibleBeta { beta, limit: libm::fabs(g) / h };
    let ray = |coef: f64, rhs: f64| -> Result<f64> {
        if rhs <= 0.0 {
            Ok(0.0)
        } else if coef > 0.0 {
            Ok(rhs / coef)
        } else {
            Err(infeasible())
        }
    };
    let mut t: f64 = 0.0;
    for (g_self, h_self, h_other) in
        [(stats.g_in, stats.h_in, stats.h_out), (stats.g_out, stats.h_out, stats.h_in)]
    {
        let a = g_self * h_other;
        let b = h_self * h_other;
        t = t.max(ray(g + beta * h, -(a + beta * b))?);
        t = t.max(ray(beta * h - g, a - beta * b)?);
    }
    Ok(t / stats.n() as f64)
}

fn step_height_envelope(stats: &GradHessStats, eta2: f64) -> Result<f64> {
    let (v_in, v_out) = values_step_height(stats, eta2)?;
    Ok(libm::fabs(v_in).max(libm::fabs(v_out)))
}

/// Bisection for the smallest `eta2` in `[0, ETA2_SEARCH_MAX]` with
/// `max(|v_in|, |v_out|) <= beta`, stopping when the bracket is narrower than
/// `tol * max(1, eta2)`. Independent of [`eta2_from_beta`].
pub fn bisect_eta2(stats: &GradHessStats, beta: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0 (got {tol})")));
    }
    check_step_feasible(stats, beta)?;
    if step_height_envelope(stats, 0.0)? <= beta {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, ETA2_SEARCH_MAX);
    if step_height_envelope(stats, hi)? > beta {
        return Err(Error::InfeasibleBeta { beta, limit: libm::fabs(stats.g()) / stats.h() });
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if step_height_envelope(stats, mid)? <= beta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Diagnostic lower bound on `beta`: `max_x |F(x)| / T` over the rows of
/// `ds`, with `T = max(1, number of boxes)`.
pub fn beta_lower_bound(model: &Ensemble, ds: &Dataset) -> Result<f64> {
    let t = model.boxes().len().max(1) as f64;
    let mut worst: f64 = 0.0;
    for x in ds.rows() {
        worst = worst.max(libm::fabs(model.try_predict(x)?));
    }
    Ok(worst / t)
}
