//! Axis-parallel rectangles and their random generation.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::DataView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RectKind {
    /// Finite bounds on every feature.
    Closed,
    /// Exactly one unbounded side on every feature.
    Corner,
}

impl RectKind {
    pub fn token(self) -> &'static str {
        match self {
            RectKind::Closed => "closed",
            RectKind::Corner => "corner",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "closed" => Ok(RectKind::Closed),
            "corner" => Ok(RectKind::Corner),
            other => Err(Error::InvalidArgument(format!("unknown rectangle kind '{other}'"))),
        }
    }
}

/// Product of closed intervals `[lower[j], upper[j]]`; corners use `-inf` or
/// `+inf` for their open side.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: RectKind,
}

impl Rectangle {
    /// Validates the bounds and infers the kind.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("rectangle needs at least one feature".into()));
        }
        let mut closed = true;
        let mut corner = true;
        for (j, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::InvalidArgument(format!(
                    "invalid interval [{a}, {b}] on feature {j}"
                )));
            }
            if a == f64::INFINITY || b == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("empty interval on feature {j}")));
            }
            let open_low = a == f64::NEG_INFINITY;
            let open_high = b == f64::INFINITY;
            closed &= !open_low && !open_high;
            corner &= open_low != open_high;
        }
        let kind = match (closed, corner) {
            (true, _) => RectKind::Closed,
            (_, true) => RectKind::Corner,
            _ => {
                return Err(Error::InvalidArgument(
                    "rectangle must be closed or have exactly one open side per feature".into(),
                ))
            }
        };
        Ok(Self { lower, upper, kind })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kind(&self) -> RectKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Whether `x[j]` lies in the `j`-th interval.
    #[inline]
    pub fn contains_coord(&self, j: usize, v: f64) -> bool {
        self.lower[j] <= v && v <= self.upper[j]
    }

    /// Membership without a dimension check. Boundary points are inside.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        self.lower.iter().zip(&self.upper).zip(x).all(|((&a, &b), &v)| a <= v && v <= b)
    }

    pub fn try_contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.contains(x))
    }
}

/// Per-feature minimum and maximum over a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanges {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureRanges {
    pub fn of(view: &DataView<'_>) -> Result<Self> {
        if view.is_empty() {
            return Err(Error::InvalidDataset("cannot generate a rectangle from no rows".into()));
        }
        let d = view.n_features();
        let mut min = alloc::vec![f64::INFINITY; d];
        let mut max = alloc::vec![f64::NEG_INFINITY; d];
        for row in view.iter_rows() {
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(Self { min, max })
    }
}

/// Draws closed rectangles or corners for one set of rows.
#[derive(Debug, Clone)]
pub struct RectangleSampler<'a> {
    view: DataView<'a>,
    ranges: FeatureRanges,
}

impl<'a> RectangleSampler<'a> {
    pub fn new(view: DataView<'a>) -> Result<Self> {
        let ranges = FeatureRanges::of(&view)?;
        Ok(Self { view, ranges })
    }

    pub fn ranges(&self) -> &FeatureRanges {
        &self.ranges
    }

    pub fn sample(&self, kind: RectKind, rng: &mut impl Rng) -> Rectangle {
        match kind {
            RectKind::Closed => self.closed(rng),
            RectKind::Corner => self.corner(rng),
        }
    }

    /// Per feature: center uniform over the feature range, width uniform
    /// between the nearest and farthest distance from the center to a row.
    pub fn closed(&self, rng: &mut impl Rng) -> Rectangle {
        let d = self.view.n_features();
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for j in 0..d {
            let c = rng.gen_range(self.ranges.min[j]..=self.ranges.max[j]);
            let (mut near, mut far) = (f64::INFINITY, 0.0f64);
            for row in self.view.iter_rows() {
                let dist = libm::fabs(row[j] - c);
                near = near.min(dist);
                far = far.max(dist);
            }
            let w = rng.gen_range(near..=far);
            lower.push(c - 0.5 * w);
            upper.push(c + 0.5 * w);
        }
        Rectangle { lower, upper, kind: RectKind::Closed }
    }

    /// Per feature: threshold uniform over the feature range and a fair coin
    /// choosing `(-inf, c]` or `[c, +inf)`.
    pub fn corner(&self, rng: &mut impl Rng) -> Rectangle {
        let d = self.view.n_features();
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for j in 0..d {
            let c = rng.gen_range(self.ranges.min[j]..=self.ranges.max[j]);
            if rng.gen_bool(0.5) {
                lower.push(c);
                upper.push(f64::INFINITY);
            } else {
                lower.push(f64::NEG_INFINITY);
                upper.push(c);
            }
        }
        Rectangle { lower, upper, kind: RectKind::Corner }
    }
}

pub fn generate_random_rectangle(view: DataView<'_>, rng: &mut impl Rng) -> Result<Rectangle> {
    Ok(RectangleSampler::new(view)?.closed(rng))
}

pub fn generate_random_corner(view: DataView<'_>, rng: &mut impl Rng) -> Result<Rectangle> {
    Ok(RectangleSampler::new(view)?.corner(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Task};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rect(lower: &[f64], upper: &[f64]) -> Rectangle {
        Rectangle::new(lower.to_vec(), upper.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(rect(&[0.0], &[1.0]).contains(&[0.5]));
        assert!(!rect(&[0.0, 0.0], &[1.0, 1.0]).contains(&[0.5, 2.0]));
        let corner = rect(&[f64::NEG_INFINITY, 0.7], &[0.3, f64::INFINITY]);
        assert_eq!(corner.kind(), RectKind::Corner);
        assert!(corner.contains(&[0.2, 0.9]));
        assert!(rect(&[0.0], &[1.0]).contains(&[1.0]));
        assert!(rect(&[0.0], &[1.0]).try_contains(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_malformed_bounds() {
        assert!(Rectangle::new(vec![1.0], vec![0.0]).is_err());
        assert!(Rectangle::new(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).is_err());
        assert!(Rectangle::new(vec![0.0, f64::NEG_INFINITY], vec![1.0, 0.0]).is_err());
        assert!(Rectangle::new(vec![], vec![]).is_err());
        assert!(Rectangle::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    fn dataset(rows: &[Vec<f64>]) -> Dataset {
        Dataset::from_rows(rows, vec![0.0; rows.len()], Task::Regression).unwrap()
    }

    #[test]
    fn single_point_gives_degenerate_box() {
        let ds = dataset(&[vec![0.25, -3.0]]);
        let r = generate_random_rectangle(ds.full_view(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(r.lower(), &[0.25, -3.0]);
        assert_eq!(r.upper(), &[0.25, -3.0]);
        assert!(r.contains(ds.row(0)));
    }

    #[test]
    fn generation_is_deterministic() {
        let ds = dataset(&[vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]]);
        for kind in [RectKind::Closed, RectKind::Corner] {
            let s = RectangleSampler::new(ds.full_view()).unwrap();
            let a = s.sample(kind, &mut ChaCha8Rng::seed_from_u64(5));
            let b = s.sample(kind, &mut ChaCha8Rng::seed_from_u64(5));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn closed_ranges_on_two_points() {
        let ds = dataset(&[vec![0.0], vec![1.0]]);
        let s = RectangleSampler::new(ds.full_view()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let r = s.closed(&mut rng);
            let (a, b) = (r.lower()[0], r.upper()[0]);
            let c = 0.5 * (a + b);
            let w = b - a;
            assert!((0.0..=1.0).contains(&c));
            let near = c.min(1.0 - c);
            let far = c.max(1.0 - c);
            assert!(w >= near - 1e-12 && w <= far + 1e-12);
            assert!(a <= b);
        }
    }

    #[test]
    fn corner_direction_is_fair() {
        let ds = dataset(&[vec![0.0, 0.0, 5.0], vec![1.0, 3.0, 6.0]]);
        let s = RectangleSampler::new(ds.full_view()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut upper_open = [0usize; 3];
        for _ in 0..1000 {
            let r = s.corner(&mut rng);
            assert_eq!(r.kind(), RectKind::Corner);
            for j in 0..3 {
                let lo_inf = r.lower()[j] == f64::NEG_INFINITY;
                let hi_inf = r.upper()[j] == f64::INFINITY;
                assert!(lo_inf ^ hi_inf);
                if hi_inf {
                    upper_open[j] += 1;
                }
            }
        }
        for count in upper_open {
            let freq = count as f64 / 1000.0;
            assert!((0.45..=0.55).contains(&freq), "{freq}");
        }
    }

    proptest::proptest! {
        #[test]
        fn enlarging_never_removes_points(
            bounds in proptest::collection::vec((-5.0f64..5.0, 0.0f64..5.0, 0.0f64..2.0, 0.0f64..2.0), 1..6),
            x in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
            let upper: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
            let big_lower: Vec<f64> = bounds.iter().map(|b| b.0 - b.2).collect();
            let big_upper: Vec<f64> = bounds.iter().map(|b| b.0 + b.1 + b.3).collect();
            let small = Rectangle::new(lower, upper).unwrap();
            let big = Rectangle::new(big_lower, big_upper).unwrap();
            let x = &x[..small.dim()];
            proptest::prop_assert!(!small.contains(x) || big.contains(x));
        }

        #[test]
        fn corner_is_threshold_test(
            spec in proptest::collection::vec((-5.0f64..5.0, proptest::bool::ANY), 1..6),
            x in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let lower: Vec<f64> = spec.iter().map(|&(c, up)| if up { c } else { f64::NEG_INFINITY }).collect();
            let upper: Vec<f64> = spec.iter().map(|&(c, up)| if up { f64::INFINITY } else { c }).collect();
            let r = Rectangle::new(lower, upper).unwrap();
            let x = &x[..r.dim()];
            let thresholds = spec.iter().zip(x).all(|(&(c, up), &v)| if up { v >= c } else { v <= c });
            proptest::prop_assert_eq!(r.contains(x), thresholds);
        }

        #[test]
        fn generated_rectangles_are_ordered(
            rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 1..20),
            seed: u64,
        ) {
            let ds = dataset(&rows);
            let s = RectangleSampler::new(ds.full_view()).unwrap();
            let r = s.closed(&mut ChaCha8Rng::seed_from_u64(seed));
            proptest::prop_assert!(r.lower().iter().zip(r.upper()).all(|(a, b)| a <= b));
            proptest::prop_assert_eq!(r.kind(), RectKind::Closed);
        }
    }
}
