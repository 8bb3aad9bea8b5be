//! Exact Shapley attributions for box models.
//!
//! Feature subsets are `u64` bit masks (bit `j` is feature `j`), so the
//! mask-based routines handle at most 64 features; the model-based explainer
//! has no such limit.
//!
//! Two coalition games are supported. The structural game of a box is
//! `Psi(S) = v_out + (v_in - v_out) * 1[x_S in r_S]`. The data game replaces
//! the missing coordinates by the rows of a background dataset, assumed
//! independent of the present ones:
//! `Psi~(S) = v_out + (v_in - v_out) * 1[x_S in r_S] * mean_t 1[z_t,~S in r_~S]`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::base_fit::FittedBox;
use crate::boosting::{BoxTerm, Ensemble};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::Rectangle;

/// Largest dimension accepted by [`shap_brute_force`], and largest inside
/// set accepted by [`shap_data_based_enumerated`].
pub const ENUMERATION_LIMIT: usize = 20;

const MASK_BITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapMethod {
    BruteForceModel,
    BruteForceData,
    ModelBased,
    DataBased,
}

impl ShapMethod {
    pub fn token(self) -> &'static str {
        match self {
            ShapMethod::BruteForceModel => "brute-force-model",
            ShapMethod::BruteForceData => "brute-force-data",
            ShapMethod::ModelBased => "model",
            ShapMethod::DataBased => "data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub method: ShapMethod,
}

impl Attribution {
    /// `base_value + sum(phi)`, the value of the full coalition.
    pub fn total(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

/// A single box seen as a game: `v_in` inside `rect`, `v_out` outside.
#[derive(Debug, Clone, Copy)]
pub struct BoxGame<'a> {
    pub rect: &'a Rectangle,
    pub v_in: f64,
    pub v_out: f64,
}

impl<'a> From<&'a FittedBox> for BoxGame<'a> {
    fn from(b: &'a FittedBox) -> Self {
        Self { rect: &b.rect, v_in: b.v_in, v_out: b.v_out }
    }
}

impl<'a> From<&'a BoxTerm> for BoxGame<'a> {
    fn from(b: &'a BoxTerm) -> Self {
        Self { rect: &b.rect, v_in: b.value, v_out: 0.0 }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_mask_dim(d: usize) -> Result<()> {
    if d > MASK_BITS {
        return Err(Error::Unsupported(format!(
            "subset masks hold at most {MASK_BITS} features, got {d}"
        )));
    }
    Ok(())
}

/// Bit mask of the features on which `x` lies outside `rect`.
fn outside_mask(rect: &Rectangle, x: &[f64]) -> u64 {
    let mut mask = 0;
    for (j, ((&a, &b), &v)) in rect.lower().iter().zip(rect.upper()).zip(x).enumerate() {
        mask |= u64::from(!((a <= v) & (v <= b))) << j;
    }
    mask
}

fn full_mask(d: usize) -> u64 {
    if d == MASK_BITS {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

/// `Psi(S)`: `v_in` when `x` is inside on every feature of `s`, else `v_out`.
pub fn coalition_value_model(game: BoxGame<'_>, x: &[f64], s: u64) -> f64 {
    let mut inside = true;
    for (j, &v) in x.iter().enumerate() {
        if s >> j & 1 == 1 && !game.rect.contains_coord(j, v) {
            inside = false;
            break;
        }
    }
    if inside {
        game.v_in
    } else {
        game.v_out
    }
}

/// `Psi~(S)` with `background` standing in for the absent features.
pub fn data_coalition_value(game: BoxGame<'_>, x: &[f64], s: u64, background: &Dataset) -> f64 {
    if coalition_value_model(BoxGame { v_in: 1.0, v_out: 0.0, ..game }, x, s) == 0.0 {
        return game.v_out;
    }
    let absent = full_mask(x.len()) & !s;
    let hits = background
        .rows()
        .filter(|z| outside_mask(game.rect, z) & absent == 0)
        .count();
    let n = background.n_rows() as f64;
    game.v_out + (game.v_in - game.v_out) * hits as f64 / n
}

/// `s! (d - s - 1)! / d!`, written as `1 / (d * C(d-1, s))`.
fn shapley_weights(d: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(d);
    let mut binom = 1.0; // C(d-1, s)
    for s in 0..d {
        weights.push(1.0 / (d as f64 * binom));
        binom = binom * (d - 1 - s) as f64 / (s + 1) as f64;
    }
    weights
}

/// Pascal's triangle up to row `n`.
fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = rows[i - 1][k - 1] + rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Exact Shapley values of an arbitrary game on `d` players by full
/// enumeration. `value` is called once per subset.
pub fn shap_brute_force(d: usize, mut value: impl FnMut(u64) -> f64) -> Result<Attribution> {
    if d == 0 {
        return Err(Error::InvalidArgument("need at least one feature".into()));
    }
    if d > ENUMERATION_LIMIT {
        return Err(Error::TooManyFeatures(d));
    }
    let weights = shapley_weights(d);
    let values: Vec<f64> = (0..1u64 << d).map(&mut value).collect();
    let mut phi = vec![0.0; d];
    for (s, &v) in values.iter().enumerate() {
        let size = s.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if s >> i & 1 == 0 {
                *p += weights[size] * (values[s | 1 << i] - v);
            }
        }
    }
    Ok(Attribution { phi, base_value: values[0], method: ShapMethod::BruteForceModel })
}

/// Closed-form attribution of the structural game: the `u` features where
/// `x` leaves the box share `v_out - v_in` equally, the others get zero.
pub fn shap_model_based(game: BoxGame<'_>, x: &[f64]) -> Result<Attribution> {
    check_dim(game.rect.dim(), x.len())?;
    let mut phi = vec![0.0; x.len()];
    add_model_based(game, x, &mut phi);
    Ok(Attribution { phi, base_value: game.v_in, method: ShapMethod::ModelBased })
}

fn add_model_based(game: BoxGame<'_>, x: &[f64], phi: &mut [f64]) {
    if x.len() <= MASK_BITS {
        let out = outside_mask(game.rect, x);
        if out == 0 {
            return;
        }
        let share = (game.v_out - game.v_in) / f64::from(out.count_ones());
        // branch-free: the outside pattern is unpredictable across boxes
        for (j, p) in phi.iter_mut().enumerate() {
            *p += share * (out >> j & 1) as f64;
        }
        return;
    }
    let u = x.iter().enumerate().filter(|&(j, &v)| !game.rect.contains_coord(j, v)).count();
    if u == 0 {
        return;
    }
    let share = (game.v_out - game.v_in) / u as f64;
    for (j, &v) in x.iter().enumerate() {
        if !game.rect.contains_coord(j, v) {
            phi[j] += share;
        }
    }
}

/// Background rows of one box grouped by the set of features on which they
/// leave it.
#[derive(Debug, Clone, PartialEq)]
struct OutsideProfile {
    /// Distinct outside masks with their multiplicities.
    masks: Vec<(u64, f64)>,
    /// Rows with an empty outside mask, i.e. inside the box.
    inside: f64,
    n: f64,
}

impl OutsideProfile {
    fn new(rect: &Rectangle, background: &Dataset) -> Self {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for z in background.rows() {
            *counts.entry(outside_mask(rect, z)).or_default() += 1;
        }
        let inside = counts.get(&0).copied().unwrap_or(0) as f64;
        Self {
            masks: counts.into_iter().map(|(m, c)| (m, c as f64)).collect(),
            inside,
            n: background.n_rows() as f64,
        }
    }
}

/// Subset sums of Shapley weights for one dimension `d`.
///
/// For a row leaving the box on `k` features, all inside `x`'s inside set of
/// size `m`, `inner[m][k]` sums the weights of the coalitions `S` with
/// `O \ {i} <= S <= In \ {i}` (the marginal gain of an inside feature `i`
/// of `O`), and `outer[m][k]` sums those with `O <= S <= In` (the loss
/// shared by each outside feature).
#[derive(Debug, Clone, PartialEq)]
struct WeightTables {
    inner: Vec<Vec<f64>>,
    outer: Vec<Vec<f64>>,
}

impl WeightTables {
    fn new(d: usize) -> Self {
        let w = shapley_weights(d);
        let c = binomials(d);
        let mut inner = vec![Vec::new(); d + 1];
        let mut outer = vec![Vec::new(); d + 1];
        for m in 0..=d {
            inner[m] = (0..=m)
                .map(|k| {
                    if k == 0 {
                        return 0.0;
                    }
                    (k - 1..m).map(|j| c[m - k][j + 1 - k] * w[j]).sum()
                })
                .collect();
            if m < d {
                outer[m] = (0..=m).map(|k| (k..=m).map(|j| c[m - k][j - k] * w[j]).sum()).collect();
            }
        }
        Self { inner, outer }
    }
}

fn add_data_based(
    game: BoxGame<'_>,
    x: &[f64],
    profile: &OutsideProfile,
    tables: &WeightTables,
    phi: &mut [f64],
) -> f64 {
    let d = x.len();
    let delta = game.v_in - game.v_out;
    let out_x = outside_mask(game.rect, x);
    let u = out_x.count_ones() as usize;
    let m = d - u;
    let scale = delta / profile.n;
    let mut shared = 0.0;
    for &(mask, count) in &profile.masks {
        if mask & out_x != 0 {
            continue;
        }
        let k = mask.count_ones() as usize;
        let gain = scale * count * tables.inner[m][k];
        let mut bits = mask;
        while bits != 0 {
            phi[bits.trailing_zeros() as usize] += gain;
            bits &= bits - 1;
        }
        if u > 0 {
            shared -= scale * count * tables.outer[m][k];
        }
    }
    let mut bits = out_x;
    while bits != 0 {
        phi[bits.trailing_zeros() as usize] += shared;
        bits &= bits - 1;
    }
    game.v_out + delta * profile.inside / profile.n
}

fn check_background(background: &Dataset, d: usize) -> Result<()> {
    check_dim(d, background.n_features())?;
    if background.n_rows() == 0 {
        return Err(Error::InvalidDataset("background dataset is empty".into()));
    }
    check_mask_dim(d)
}

/// Exact attribution of the data game in `O(N d)`.
///
/// Only background rows whose outside set lies within `x`'s inside set
/// contribute, and each contributes a weight depending only on the two set
/// sizes, so no subset enumeration is needed.
pub fn shap_data_based(game: BoxGame<'_>, x: &[f64], background: &Dataset) -> Result<Attribution> {
    let d = game.rect.dim();
    check_dim(d, x.len())?;
    check_background(background, d)?;
    let profile = OutsideProfile::new(game.rect, background);
    let tables = WeightTables::new(d);
    let mut phi = vec![0.0; d];
    let base_value = add_data_based(game, x, &profile, &tables, &mut phi);
    Ok(Attribution { phi, base_value, method: ShapMethod::DataBased })
}

/// The same attribution by enumerating subsets of the inside set for every
/// inside feature, with the outside features sharing the remainder of
/// `Psi~(M) - Psi~(empty)`. Exponential in the inside-set size, which must
/// not exceed [`ENUMERATION_LIMIT`].
pub fn shap_data_based_enumerated(
    game: BoxGame<'_>,
    x: &[f64],
    background: &Dataset,
) -> Result<Attribution> {
    let d = game.rect.dim();
    check_dim(d, x.len())?;
    check_background(background, d)?;
    let profile = OutsideProfile::new(game.rect, background);
    let weights = shapley_weights(d);
    let out_x = outside_mask(game.rect, x);
    let in_x = full_mask(d) & !out_x;
    let m = in_x.count_ones() as usize;
    if m > ENUMERATION_LIMIT {
        return Err(Error::TooManyFeatures(m));
    }
    let delta = game.v_in - game.v_out;
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        if in_x & bit == 0 {
            continue;
        }
        let rest = in_x & !bit;
        // walk all subsets of `rest`
        let mut s = rest;
        loop {
            let covered = s | bit;
            let hits: f64 = profile
                .masks
                .iter()
                .filter(|&&(mask, _)| mask & bit != 0 && mask & !covered == 0)
                .map(|&(_, c)| c)
                .sum();
            *p += weights[s.count_ones() as usize] * delta * hits / profile.n;
            if s == 0 {
                break;
            }
            s = (s - 1) & rest;
        }
    }
    let base_value = game.v_out + delta * profile.inside / profile.n;
    let full = if out_x == 0 { game.v_in } else { game.v_out };
    let inside_sum: f64 = phi.iter().sum();
    let u = out_x.count_ones();
    if u == 0 {
        debug_assert!((full - base_value - inside_sum).abs() <= 1e-9 * (1.0 + delta.abs()));
    } else {
        let share = (full - base_value - inside_sum) / f64::from(u);
        for (j, p) in phi.iter_mut().enumerate() {
            if out_x >> j & 1 == 1 {
                *p = share;
            }
        }
    }
    Ok(Attribution { phi, base_value, method: ShapMethod::DataBased })
}

/// Structural game of a whole ensemble: `q + sum_k Psi_k(S)`.
pub fn ensemble_coalition_value_model(model: &Ensemble, x: &[f64], s: u64) -> f64 {
    model
        .boxes()
        .iter()
        .fold(model.bias(), |acc, b| acc + coalition_value_model(b.into(), x, s))
}

/// Data game of a whole ensemble: `q + sum_k Psi~_k(S)`.
pub fn ensemble_data_coalition_value(
    model: &Ensemble,
    x: &[f64],
    s: u64,
    background: &Dataset,
) -> f64 {
    model
        .boxes()
        .iter()
        .fold(model.bias(), |acc, b| acc + data_coalition_value(b.into(), x, s, background))
}

/// Model-based attributions for an ensemble.
///
/// Construction copies all box bounds into one contiguous array so that an
/// explanation is a single linear pass.
#[derive(Debug, Clone)]
pub struct ModelExplainer<'a> {
    model: &'a Ensemble,
    /// Per box, `d` interleaved `(lower, upper)` pairs.
    bounds: Vec<f64>,
    base_value: f64,
}

impl<'a> ModelExplainer<'a> {
    pub fn new(model: &'a Ensemble) -> Self {
        let d = model.n_features();
        let mut bounds = Vec::with_capacity(2 * d * model.boxes().len());
        let mut base_value = model.bias();
        for b in model.boxes() {
            for (&lo, &hi) in b.rect.lower().iter().zip(b.rect.upper()) {
                bounds.extend([lo, hi]);
            }
            base_value += b.value;
        }
        Self { model, bounds, base_value }
    }

    /// Sum of the per-box attributions; the bias only enters the base value.
    pub fn explain(&self, x: &[f64]) -> Result<Attribution> {
        let d = self.model.n_features();
        check_dim(d, x.len())?;
        let mut phi = vec![0.0; d];
        if d > MASK_BITS {
            for b in self.model.boxes() {
                add_model_based(b.into(), x, &mut phi);
            }
        } else if d > 0 {
            for (pairs, b) in self.bounds.chunks_exact(2 * d).zip(self.model.boxes()) {
                let mut out = 0u64;
                for (j, (ab, &v)) in pairs.chunks_exact(2).zip(x).enumerate() {
                    out |= u64::from(!((ab[0] <= v) & (v <= ab[1]))) << j;
                }
                if out != 0 {
                    let share = -b.value / f64::from(out.count_ones());
                    for (j, p) in phi.iter_mut().enumerate() {
                        *p += share * (out >> j & 1) as f64;
                    }
                }
            }
        }
        Ok(Attribution { phi, base_value: self.base_value, method: ShapMethod::ModelBased })
    }
}

/// Data-based attributions for an ensemble against a fixed background.
///
/// Construction groups the background rows of every box once (`O(B N d)`);
/// each explanation then costs `O(d)` per distinct group.
#[derive(Debug, Clone)]
pub struct DataExplainer<'a> {
    model: &'a Ensemble,
    profiles: Vec<OutsideProfile>,
    tables: WeightTables,
}

impl<'a> DataExplainer<'a> {
    pub fn new(model: &'a Ensemble, background: &Dataset) -> Result<Self> {
        let d = model.n_features();
        check_background(background, d)?;
        let profiles = model.boxes().iter().map(|b| OutsideProfile::new(&b.rect, background)).collect();
        Ok(Self { model, profiles, tables: WeightTables::new(d) })
    }

    pub fn explain(&self, x: &[f64]) -> Result<Attribution> {
        check_dim(self.model.n_features(), x.len())?;
        let mut phi = vec![0.0; x.len()];
        let mut base_value = self.model.bias();
        for (b, profile) in self.model.boxes().iter().zip(&self.profiles) {
            base_value += add_data_based(b.into(), x, profile, &self.tables, &mut phi);
        }
        Ok(Attribution { phi, base_value, method: ShapMethod::DataBased })
    }
}

/// One-off ensemble attribution. `background` is required by the data-based
/// method; for several rows build a [`DataExplainer`] instead.
pub fn explain_ensemble(
    model: &Ensemble,
    x: &[f64],
    method: ShapMethod,
    background: Option<&Dataset>,
) -> Result<Attribution> {
    match method {
        ShapMethod::ModelBased => ModelExplainer::new(model).explain(x),
        ShapMethod::DataBased => {
            let ds = background.ok_or_else(|| {
                Error::InvalidArgument("the data-based method needs a background dataset".into())
            })?;
            DataExplainer::new(model, ds)?.explain(x)
        }
        ShapMethod::BruteForceModel => {
            check_dim(model.n_features(), x.len())?;
            shap_brute_force(x.len(), |s| ensemble_coalition_value_model(model, x, s))
        }
        ShapMethod::BruteForceData => {
            let ds = background.ok_or_else(|| {
                Error::InvalidArgument("the data-based method needs a background dataset".into())
            })?;
            check_dim(model.n_features(), x.len())?;
            check_background(ds, x.len())?;
            let mut a =
                shap_brute_force(x.len(), |s| ensemble_data_coalition_value(model, x, s, ds))?;
            a.method = ShapMethod::BruteForceData;
            Ok(a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Task;
    use crate::loss::LossKind;
    use alloc::string::String;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> Rectangle {
        Rectangle::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    fn game(rect: &Rectangle, v_in: f64, v_out: f64) -> BoxGame<'_> {
        BoxGame { rect, v_in, v_out }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn structural_game_examples() {
        let r = unit_square();
        let g = game(&r, 5.0, 1.0);
        let x = [0.5, 2.0];
        assert_eq!(coalition_value_model(g, &x, 0b00), 5.0);
        assert_eq!(coalition_value_model(g, &x, 0b01), 5.0);
        assert_eq!(coalition_value_model(g, &x, 0b10), 1.0);
        assert_eq!(coalition_value_model(g, &[0.5, 0.5], 0b11), 5.0);
    }

    #[test]
    fn brute_force_hand_example() {
        let r = unit_square();
        let g = game(&r, 5.0, 1.0);
        let x = [0.5, 2.0];
        let a = shap_brute_force(2, |s| coalition_value_model(g, &x, s)).unwrap();
        assert_eq!(a.phi, vec![0.0, -4.0]);
        assert_eq!(a.base_value, 5.0);
        let inside = shap_brute_force(2, |s| coalition_value_model(g, &[0.2, 0.3], s)).unwrap();
        assert_eq!(inside.phi, vec![0.0, 0.0]);
        let both = shap_brute_force(2, |s| coalition_value_model(g, &[3.0, -1.0], s)).unwrap();
        assert_eq!(both.phi[0], both.phi[1]);
        assert!(shap_brute_force(21, |_| 0.0).is_err());
        assert!(shap_brute_force(0, |_| 0.0).is_err());
    }

    #[test]
    fn brute_force_on_a_known_game() {
        // glove game: players 0 and 1 hold left gloves, 2 a right glove
        let v = |s: u64| if s & 0b100 != 0 && s & 0b011 != 0 { 1.0 } else { 0.0 };
        let a = shap_brute_force(3, v).unwrap();
        assert!(close(&a.phi, &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1e-15));
    }

    #[test]
    fn model_based_examples() {
        let r = unit_square();
        let a = shap_model_based(game(&r, 5.0, 1.0), &[0.5, 2.0]).unwrap();
        assert_eq!(a.phi, vec![0.0, -4.0]);
        assert_eq!(a.base_value, 5.0);
        let a = shap_model_based(game(&r, 5.0, 1.0), &[0.5, 0.5]).unwrap();
        assert_eq!(a.phi, vec![0.0, 0.0]);
        let cube = Rectangle::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let g = game(&cube, 7.0, 1.0);
        let x = [2.0, 0.5, -1.0];
        let a = shap_model_based(g, &x).unwrap();
        assert_eq!(a.phi, vec![-3.0, 0.0, -3.0]);
        let b = shap_brute_force(3, |s| coalition_value_model(g, &x, s)).unwrap();
        assert!(close(&a.phi, &b.phi, 1e-15));
        assert!(shap_model_based(g, &[0.0, 0.0]).is_err());
    }

    fn background(rows: &[[f64; 2]]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        let n = rows.len();
        Dataset::from_rows(&rows, vec![0.0; n], Task::Regression).unwrap()
    }

    #[test]
    fn data_game_examples() {
        let r = unit_square();
        let g = game(&r, 5.0, 1.0);
        let ds = background(&[[0.5, 0.5], [2.0, 0.5]]);
        let x = [3.0, 3.0];
        assert_eq!(data_coalition_value(g, &x, 0, &ds), 3.0);
        assert_eq!(data_coalition_value(g, &x, 0b11, &ds), 1.0);
        assert_eq!(data_coalition_value(g, &[0.5, 0.5], 0b11, &ds), 5.0);
        // feature 0 present and inside; only the first row is inside on feature 1
        // and both are, so coverage is 1
        assert_eq!(data_coalition_value(g, &[0.5, 3.0], 0b01, &ds), 5.0);
    }

    #[test]
    fn data_based_fully_outside_splits_evenly() {
        let r = unit_square();
        let g = game(&r, 5.0, 1.0);
        let ds = background(&[[0.5, 0.5], [2.0, 0.5], [0.1, 0.9]]);
        let a = shap_data_based(g, &[3.0, 3.0], &ds).unwrap();
        let expected = (1.0 - (1.0 + 4.0 * 2.0 / 3.0)) / 2.0;
        assert!(close(&a.phi, &[expected, expected], 1e-15));
        assert!((a.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn data_based_with_empty_coverage() {
        let r = unit_square();
        let g = game(&r, 5.0, 1.0);
        let ds = background(&[[2.0, 2.0], [3.0, 5.0]]);
        for route in [shap_data_based, shap_data_based_enumerated] {
            let a = route(g, &[0.5, 3.0], &ds).unwrap();
            assert_eq!(a.base_value, 1.0);
            assert_eq!(a.phi[0], 0.0);
        }
    }

    fn random_instance(rng: &mut ChaCha8Rng, d: usize, n: usize) -> (Rectangle, Vec<f64>, Dataset) {
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        let corner = rng.gen_bool(0.5);
        for _ in 0..d {
            let a: f64 = rng.gen_range(0.0..1.0);
            if !corner {
                lower.push(a);
                upper.push(a + rng.gen_range(0.0..1.0));
            } else if rng.gen_bool(0.5) {
                lower.push(f64::NEG_INFINITY);
                upper.push(a);
            } else {
                lower.push(a);
                upper.push(f64::INFINITY);
            }
        }
        let rect = Rectangle::new(lower, upper).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let ds = Dataset::from_rows(&rows, vec![0.0; n], Task::Regression).unwrap();
        (rect, x, ds)
    }

    #[test]
    fn data_based_routes_agree_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let d = rng.gen_range(1..=6);
            let n = rng.gen_range(1..=20);
            let (rect, x, ds) = random_instance(&mut rng, d, n);
            let g = game(&rect, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let brute = shap_brute_force(d, |s| data_coalition_value(g, &x, s, &ds)).unwrap();
            let fast = shap_data_based(g, &x, &ds).unwrap();
            let enumerated = shap_data_based_enumerated(g, &x, &ds).unwrap();
            assert!(close(&fast.phi, &brute.phi, 1e-12), "{:?} vs {:?}", fast.phi, brute.phi);
            assert!(close(&enumerated.phi, &brute.phi, 1e-12));
            assert!((fast.base_value - brute.base_value).abs() < 1e-12);
            assert!((enumerated.base_value - brute.base_value).abs() < 1e-12);
            assert!((fast.total() - g_value(g, &x)).abs() < 1e-12);
        }
    }

    fn g_value(g: BoxGame<'_>, x: &[f64]) -> f64 {
        if g.rect.contains(x) {
            g.v_in
        } else {
            g.v_out
        }
    }

    fn small_model(rng: &mut ChaCha8Rng, d: usize, boxes: usize) -> (Ensemble, Dataset) {
        let (_, _, ds) = random_instance(rng, d, 15);
        let terms = (0..boxes)
            .map(|_| {
                let (rect, _, _) = random_instance(rng, d, 1);
                BoxTerm { rect, value: rng.gen_range(-2.0..2.0) }
            })
            .collect();
        let names = (0..d).map(|j| format!("x{j}")).collect::<Vec<String>>();
        (Ensemble::new(0.7, terms, LossKind::SquaredError, names).unwrap(), ds)
    }

    #[test]
    fn ensemble_explainers_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let d = rng.gen_range(1..=5);
            let (model, ds) = small_model(&mut rng, d, 6);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let m = explain_ensemble(&model, &x, ShapMethod::ModelBased, None).unwrap();
            let bm = explain_ensemble(&model, &x, ShapMethod::BruteForceModel, None).unwrap();
            assert!(close(&m.phi, &bm.phi, 1e-12));
            assert!((m.base_value - bm.base_value).abs() < 1e-12);
            let dta = explain_ensemble(&model, &x, ShapMethod::DataBased, Some(&ds)).unwrap();
            let bd = explain_ensemble(&model, &x, ShapMethod::BruteForceData, Some(&ds)).unwrap();
            assert!(close(&dta.phi, &bd.phi, 1e-12));
            assert!((dta.total() - model.predict(&x)).abs() < 1e-12);
            assert!((m.total() - model.predict(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_linearity() {
        let rect = unit_square();
        let one = BoxTerm { rect: rect.clone(), value: 3.0 };
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let single =
            Ensemble::new(1.0, vec![one.clone()], LossKind::SquaredError, names.clone()).unwrap();
        let double =
            Ensemble::new(1.0, vec![one.clone(), one], LossKind::SquaredError, names).unwrap();
        let x = [0.5, 4.0];
        let a1 = explain_ensemble(&single, &x, ShapMethod::ModelBased, None).unwrap();
        let a2 = explain_ensemble(&double, &x, ShapMethod::ModelBased, None).unwrap();
        assert_eq!(a1.phi, vec![0.0, -3.0]);
        assert_eq!(a1.base_value, 4.0);
        assert_eq!(a2.phi, vec![0.0, -6.0]);
        assert!(explain_ensemble(&single, &x, ShapMethod::DataBased, None).is_err());
    }
}
