//! Fitting a single box learner from per-row first and second derivatives.

use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::DataView;
use crate::error::{Error, Result};
use crate::geometry::{RectKind, Rectangle, RectangleSampler};
use crate::regularize::RegSpec;

/// Gradient and hessian sums split by membership in one rectangle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradHessStats {
    pub g_in: f64,
    pub g_out: f64,
    pub h_in: f64,
    pub h_out: f64,
    pub n_in: usize,
    pub n_out: usize,
}

impl GradHessStats {
    #[inline]
    pub fn g(&self) -> f64 {
        self.g_in + self.g_out
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h_in + self.h_out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n_in + self.n_out
    }

    #[inline]
    pub fn push(&mut self, inside: bool, g: f64, h: f64) {
        if inside {
            self.g_in += g;
            self.h_in += h;
            self.n_in += 1;
        } else {
            self.g_out += g;
            self.h_out += h;
            self.n_out += 1;
        }
    }

    /// Fieldwise sum, for stats accumulated over disjoint row sets.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            g_in: self.g_in + other.g_in,
            g_out: self.g_out + other.g_out,
            h_in: self.h_in + other.h_in,
            h_out: self.h_out + other.h_out,
            n_in: self.n_in + other.n_in,
            n_out: self.n_out + other.n_out,
        }
    }
}

/// One box learner: `v_in` inside `rect`, `v_out` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBox {
    pub rect: Rectangle,
    pub v_in: f64,
    pub v_out: f64,
    pub surrogate_cost: f64,
}

impl FittedBox {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.rect.contains(x) {
            self.v_in
        } else {
            self.v_out
        }
    }
}

fn check_lengths(view: &DataView<'_>, g: &[f64], h: &[f64]) -> Result<()> {
    if g.len() != view.len() {
        return Err(Error::LengthMismatch { expected: view.len(), got: g.len() });
    }
    if h.len() != view.len() {
        return Err(Error::LengthMismatch { expected: view.len(), got: h.len() });
    }
    Ok(())
}

/// `g[k]`, `h[k]` belong to the `k`-th row of `view`.
pub fn accumulate_stats(
    rect: &Rectangle,
    view: &DataView<'_>,
    g: &[f64],
    h: &[f64],
) -> Result<GradHessStats> {
    check_lengths(view, g, h)?;
    if rect.dim() != view.n_features() {
        return Err(Error::DimensionMismatch { expected: view.n_features(), got: rect.dim() });
    }
    Ok(stats_unchecked(rect, view, g, h))
}

fn stats_unchecked(rect: &Rectangle, view: &DataView<'_>, g: &[f64], h: &[f64]) -> GradHessStats {
    let mut stats = GradHessStats::default();
    for k in 0..view.len() {
        stats.push(rect.contains(view.row(k)), g[k], h[k]);
    }
    stats
}

/// Newton-step values, regularized according to `reg`.
pub fn optimal_values(stats: &GradHessStats, reg: &RegSpec) -> Result<(f64, f64)> {
    reg.values(stats)
}

/// Mean of the pseudo-residuals `-g / h` on each side. Equal to
/// [`optimal_values`] without regularization whenever `h` is constant.
pub fn model_agnostic_values(
    rect: &Rectangle,
    view: &DataView<'_>,
    g: &[f64],
    h: &[f64],
) -> Result<(f64, f64)> {
    check_lengths(view, g, h)?;
    let (mut sum_in, mut sum_out, mut n_in, mut n_out) = (0.0, 0.0, 0usize, 0usize);
    for k in 0..view.len() {
        if !(h[k] > 0.0) {
            return Err(Error::ZeroDenominator("pseudo-residual"));
        }
        let rho = -g[k] / h[k];
        if rect.try_contains(view.row(k))? {
            sum_in += rho;
            n_in += 1;
        } else {
            sum_out += rho;
            n_out += 1;
        }
    }
    if n_in == 0 || n_out == 0 {
        return Err(Error::Degenerate("rectangle leaves one side empty".into()));
    }
    Ok((sum_in / n_in as f64, sum_out / n_out as f64))
}

/// Quadratic surrogate of the loss change:
/// `(G_in v_in + H_in v_in^2 / 2 + G_out v_out + H_out v_out^2 / 2) / N`.
pub fn surrogate_cost(stats: &GradHessStats, v_in: f64, v_out: f64) -> f64 {
    let n = stats.n().max(1) as f64;
    (stats.g_in * v_in
        + 0.5 * stats.h_in * v_in * v_in
        + stats.g_out * v_out
        + 0.5 * stats.h_out * v_out * v_out)
        / n
}

/// Scores already generated rectangles and returns the cheapest valid one.
/// Candidates leaving either side empty are skipped; ties go to the lowest
/// index.
pub fn select_best(
    candidates: Vec<Rectangle>,
    view: &DataView<'_>,
    g: &[f64],
    h: &[f64],
    reg: &RegSpec,
) -> Result<FittedBox> {
    check_lengths(view, g, h)?;
    let k = candidates.len();
    let mut best: Option<FittedBox> = None;
    for rect in candidates {
        if rect.dim() != view.n_features() {
            return Err(Error::DimensionMismatch { expected: view.n_features(), got: rect.dim() });
        }
        let stats = stats_unchecked(&rect, view, g, h);
        if stats.n_in == 0 || stats.n_out == 0 {
            continue;
        }
        let (v_in, v_out) = optimal_values(&stats, reg)?;
        let cost = surrogate_cost(&stats, v_in, v_out);
        if best.as_ref().is_none_or(|b| cost < b.surrogate_cost) {
            best = Some(FittedBox { rect, v_in, v_out, surrogate_cost: cost });
        }
    }
    best.ok_or(Error::NoValidCandidate(k))
}

/// Draws `k` random rectangles of the given kind on the training rows and
/// keeps the one with the lowest surrogate cost.
pub fn make_rectangle(
    view: &DataView<'_>,
    g: &[f64],
    h: &[f64],
    k: usize,
    kind: RectKind,
    reg: &RegSpec,
    rng: &mut impl Rng,
) -> Result<FittedBox> {
    let sampler = RectangleSampler::new(*view)?;
    make_rectangle_with(&sampler, view, g, h, k, kind, reg, rng)
}

/// [`make_rectangle`] reusing a sampler built for `view`.
#[allow(clippy::too_many_arguments)]
pub fn make_rectangle_with(
    sampler: &RectangleSampler<'_>,
    view: &DataView<'_>,
    g: &[f64],
    h: &[f64],
    k: usize,
    kind: RectKind,
    reg: &RegSpec,
    rng: &mut impl Rng,
) -> Result<FittedBox> {
    if k == 0 {
        return Err(Error::InvalidArgument("candidate count must be >= 1".into()));
    }
    if view.len() < 2 {
        return Err(Error::InvalidDataset("need at least two training rows".into()));
    }
    let candidates = (0..k).map(|_| sampler.sample(kind, rng)).collect();
    select_best(candidates, view, g, h, reg)
}
