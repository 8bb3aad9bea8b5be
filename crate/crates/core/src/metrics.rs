//! Evaluation metrics: coefficient of determination, F1 and accuracy.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// F1 of the positive class (label 1).
    Binary,
    /// Unweighted mean of per-class F1 over every label seen in either vector.
    Macro,
}

/// `1 - SS_res / SS_tot`. Negative when the predictions are worse than the
/// mean.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidArgument("r2 needs at least two values".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("r2 is undefined for constant targets".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn class_f1(y_true: &[f64], y_pred: &[f64], class: f64) -> f64 {
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fne += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fne == 0 {
        log::warn!("class {class} has neither true nor predicted members; its F1 is set to 0");
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fne) as f64
}

pub fn f1_score(y_true: &[f64], y_pred: &[f64], averaging: Averaging) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    match averaging {
        Averaging::Binary => {
            if let Some(v) = y_true.iter().chain(y_pred).find(|&&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidArgument(format!("binary F1 got label {v}")));
            }
            Ok(class_f1(y_true, y_pred, 1.0))
        }
        Averaging::Macro => {
            let mut classes: Vec<f64> = y_true.iter().chain(y_pred).copied().collect();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            if classes.is_empty() {
                return Err(Error::InvalidArgument("F1 of empty vectors".into()));
            }
            let total: f64 = classes.iter().map(|&c| class_f1(y_true, y_pred, c)).sum();
            Ok(total / classes.len() as f64)
        }
    }
}

pub fn accuracy(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("accuracy of empty vectors".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        let mean = [3.5; 4];
        assert!(r2_score(&y, &mean).unwrap().abs() < 1e-15);
        // SS_res = 4, SS_tot = 2
        assert_eq!(r2_score(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(r2_score(&[2.0, 2.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(r2_score(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn f1_examples() {
        let y = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(f1_score(&y, &y, Averaging::Binary).unwrap(), 1.0);
        let wrong = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(f1_score(&y, &wrong, Averaging::Binary).unwrap(), 0.0);
        // TP=2, FP=1, FN=1
        let t = [1.0, 1.0, 1.0, 0.0, 0.0];
        let p = [1.0, 1.0, 0.0, 1.0, 0.0];
        assert!((f1_score(&t, &p, Averaging::Binary).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // no positives anywhere: defined as 0
        assert_eq!(f1_score(&[0.0, 0.0], &[0.0, 0.0], Averaging::Binary).unwrap(), 0.0);
        assert!(f1_score(&[2.0], &[1.0], Averaging::Binary).is_err());
    }

    #[test]
    fn macro_f1_averages_classes() {
        let t = [0.0, 0.0, 1.0, 2.0];
        let p = [0.0, 1.0, 1.0, 2.0];
        // class 0: 2/3, class 1: 2/3, class 2: 1
        let expected = (2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 3.0;
        assert!((f1_score(&t, &p, Averaging::Macro).unwrap() - expected).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn r2_perfect_and_mean(y in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            proptest::prop_assume!(y.iter().any(|v| (v - mean).abs() > 1e-6));
            proptest::prop_assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
            let m = vec![mean; y.len()];
            proptest::prop_assert!(r2_score(&y, &m).unwrap().abs() < 1e-9);
        }

        #[test]
        fn f1_permutation_invariant(
            pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..40),
            seed: u64,
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let t: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let t2: Vec<f64> = shuffled.iter().map(|p| p.0 as f64).collect();
            let p2: Vec<f64> = shuffled.iter().map(|p| p.1 as f64).collect();
            for avg in [Averaging::Binary, Averaging::Macro] {
                proptest::prop_assert_eq!(f1_score(&t, &p, avg).unwrap(), f1_score(&t2, &p2, avg).unwrap());
            }
        }
    }
}
