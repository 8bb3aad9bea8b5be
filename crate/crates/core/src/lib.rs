//! Gradient boosting with random hyper-rectangle base learners.
//!
//! Every base learner is an axis-parallel box (closed, or a "corner" that is
//! unbounded on one side per feature) taking one value inside and another
//! outside. Boxes are drawn at random, filled in closed form from a
//! second-order expansion of the loss, optionally bounded through analytic
//! regularization, and gated on a validation subset before they join the
//! ensemble. Two exact Shapley explainers work directly on the boxes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `rectboost` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod base_fit;
pub mod boosting;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod geometry;
pub mod loss;
pub mod metrics;
pub mod regularize;
pub mod synthetic;

pub use base_fit::{FittedBox, GradHessStats};
pub use boosting::{BoxTerm, Ensemble, OneVsRest, TrainConfig, TrainRecord};
pub use dataset::{DataView, Dataset, SplitPair, Task};
pub use error::{Error, Result};
pub use explain::{Attribution, ShapMethod};
pub use geometry::{RectKind, Rectangle};
pub use loss::{DerivPair, LossKind};
pub use regularize::{FixedParams, RegScheme, RegSpec};
