//! Tabular data held in memory, row-major, plus index-based train/validation
//! splits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    BinaryClassification,
    /// Integer labels `0..classes`.
    Multiclass { classes: usize },
}

/// `N` rows by `d` columns of finite reals plus one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    feature_names: Vec<String>,
    n_features: usize,
    task: Task,
}

impl Dataset {
    /// Builds a dataset from a row-major feature buffer.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        targets: Vec<f64>,
        feature_names: Vec<String>,
        task: Task,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidDataset("dataset needs at least one feature".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidDataset("dataset needs at least one row".into()));
        }
        if features.len() != targets.len() * n_features {
            return Err(Error::LengthMismatch {
                expected: targets.len() * n_features,
                got: features.len(),
            });
        }
        if feature_names.len() != n_features {
            return Err(Error::LengthMismatch { expected: n_features, got: feature_names.len() });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite target at row {row}")));
        }
        check_targets(&targets, task)?;
        Ok(Self { features, targets, feature_names, n_features, task })
    }

    /// Same as [`Dataset::new`] with names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>, task: Task) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::new(flat, d, targets, default_names(d), task)
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features;
        &self.features[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    /// Reinterprets the targets for another task, validating them.
    pub fn with_task(mut self, task: Task) -> Result<Self> {
        check_targets(&self.targets, task)?;
        self.task = task;
        Ok(self)
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Self::new(features, self.n_features, targets, self.feature_names.clone(), self.task)
    }

    /// Copy with targets replaced, e.g. for one-vs-rest relabelling.
    pub fn with_targets(&self, targets: Vec<f64>, task: Task) -> Result<Self> {
        Self::new(self.features.clone(), self.n_features, targets, self.feature_names.clone(), task)
    }

    /// A view over every row.
    pub fn full_view(&self) -> DataView<'_> {
        DataView::all(self)
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

fn check_targets(targets: &[f64], task: Task) -> Result<()> {
    match task {
        Task::Regression => Ok(()),
        Task::BinaryClassification => match targets.iter().position(|&y| y != 0.0 && y != 1.0) {
            Some(row) => Err(Error::InvalidDataset(format!(
                "binary target at row {row} is {}, expected 0 or 1",
                targets[row]
            ))),
            None => Ok(()),
        },
        Task::Multiclass { classes } => {
            if classes < 2 {
                return Err(Error::InvalidDataset("multiclass task needs at least 2 classes".into()));
            }
            match targets
                .iter()
                .position(|&y| y < 0.0 || libm::trunc(y) != y || y >= classes as f64)
            {
                Some(row) => Err(Error::InvalidDataset(format!(
                    "class label at row {row} is {}, expected an integer in 0..{classes}",
                    targets[row]
                ))),
                None => Ok(()),
            }
        }
    }
}

/// A subset of rows of a dataset, addressed by index.
#[derive(Debug, Clone, Copy)]
pub struct DataView<'a> {
    data: &'a Dataset,
    rows: Option<&'a [usize]>,
}

impl<'a> DataView<'a> {
    pub fn all(data: &'a Dataset) -> Self {
        Self { data, rows: None }
    }

    pub fn new(data: &'a Dataset, rows: &'a [usize]) -> Self {
        Self { data, rows: Some(rows) }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    pub fn len(&self) -> usize {
        self.rows.map_or(self.data.n_rows(), <[usize]>::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    /// Index into the underlying dataset of the `k`-th row of the view.
    #[inline]
    pub fn index(&self, k: usize) -> usize {
        match self.rows {
            Some(rows) => rows[k],
            None => k,
        }
    }

    #[inline]
    pub fn row(&self, k: usize) -> &'a [f64] {
        self.data.row(self.index(k))
    }

    #[inline]
    pub fn target(&self, k: usize) -> f64 {
        self.data.target(self.index(k))
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        (0..self.len()).map(move |k| self.row(k))
    }
}

/// Disjoint train/validation index sets covering `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPair {
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Seed for the next split; feeding it back to [`split`] yields a fresh
    /// partition.
    pub seed_state: u64,
}

/// Shuffles `0..N` with a seeded RNG and holds out
/// `max(1, round(val_fraction * N))` rows for validation.
pub fn split(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<SplitPair> {
    split_indices(ds.n_rows(), val_fraction, seed)
}

pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> Result<SplitPair> {
    if n < 2 {
        return Err(Error::InvalidDataset(format!("cannot split {n} rows, need at least 2")));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let n_val = (libm::round(val_fraction * n as f64) as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let val_indices = order.split_off(n - n_val);
    Ok(SplitPair { train_indices: order, val_indices, seed_state: rng.next_u64() })
}

/// Partitions `0..n` into `k` shuffled folds of near-equal size.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("cannot make {k} folds from {n} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut folds = alloc::vec![Vec::new(); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        Dataset::from_rows(&rows, (0..n).map(|i| i as f64).collect(), Task::Regression).unwrap()
    }

    #[test]
    fn split_counts() {
        let s = split(&tiny(10), 0.2, 3).unwrap();
        assert_eq!(s.train_indices.len(), 8);
        assert_eq!(s.val_indices.len(), 2);
        let s = split(&tiny(2), 0.5, 0).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len()), (1, 1));
    }

    #[test]
    fn split_is_deterministic_and_reseedable() {
        let ds = tiny(50);
        let a = split(&ds, 0.3, 11).unwrap();
        let b = split(&ds, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let c = split(&ds, 0.3, a.seed_state).unwrap();
        assert_ne!(a.val_indices, c.val_indices);
    }

    #[test]
    fn split_rejects_bad_input() {
        assert!(split(&tiny(1), 0.5, 0).is_err());
        assert!(split(&tiny(5), 0.0, 0).is_err());
        assert!(split(&tiny(5), 1.0, 0).is_err());
    }

    #[test]
    fn invalid_datasets() {
        assert!(Dataset::from_rows(&[vec![f64::NAN]], vec![0.0], Task::Regression).is_err());
        assert!(Dataset::from_rows(&[vec![1.0]], vec![0.5], Task::BinaryClassification).is_err());
        assert!(Dataset::from_rows(&[], vec![], Task::Regression).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![1.0, 2.0]], vec![0.0, 1.0], Task::Regression)
            .is_err());
        assert!(Dataset::from_rows(&[vec![1.0]], vec![2.0], Task::Multiclass { classes: 2 })
            .is_err());
    }

    #[test]
    fn kfold_partitions() {
        let folds = kfold_indices(23, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
    }

    proptest::proptest! {
        #[test]
        fn split_partitions_rows(n in 2usize..200, frac in 0.01f64..0.99, seed: u64) {
            let s = split_indices(n, frac, seed).unwrap();
            proptest::prop_assert!(!s.train_indices.is_empty() && !s.val_indices.is_empty());
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.val_indices).copied().collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let expected = (libm::round(frac * n as f64) as usize).clamp(1, n - 1);
            proptest::prop_assert_eq!(s.val_indices.len(), expected);
        }
    }
}
