//! Margin-of-victory prediction from the two teams' rankings.
//!
//! Five regression families share one data model: a quadratic surface fitted
//! by least squares, an additive model of two smoothing splines fitted by
//! backfitting, local-linear LOESS, and isotropic or rotated-axis anisotropic
//! Gaussian kernel smoothing. The [`eval`] module supplies pure-error and
//! lack-of-fit analysis, cross-validation and the train/validation benchmark.
//!
//! Models are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the common double-precision instantiation.
//!
//! MOV is road points minus home points: positive values favour the road team.

pub mod additive;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod loess;
pub mod model;
pub mod numerics;
pub mod quadratic;
pub mod scalar;
pub mod synth;

pub use additive::{AdditiveFit, AdditiveOptions, Component};
pub use data::{Dataset, GameRecord, RotatedPoint, SplitMode, SplitSpec};
pub use error::{Error, Result};
pub use eval::{BenchmarkReport, LackOfFitResult, PureErrorSummary};
pub use kernel::{KernelMode, KernelSmootherSpec};
pub use loess::{LoessFit, LoessOptions};
pub use model::{FittedModel, ModelFamily, ModelSpec};
pub use quadratic::{QuadraticFit, QuadraticOptions};
pub use scalar::Scalar;

pub type QuadraticFit64 = QuadraticFit<f64>;
pub type AdditiveFit64 = AdditiveFit<f64>;
pub type LoessFit64 = LoessFit<f64>;
pub type KernelSmoother64 = KernelSmootherSpec<f64>;
pub type FittedModel64 = FittedModel<f64>;
pub type ModelSpec64 = ModelSpec<f64>;
