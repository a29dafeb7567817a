//! Shared numerical kernels.

pub mod fdist;
pub mod spline;
pub mod wls;

pub use fdist::{f_cdf, f_sf, ln_gamma, regularized_beta};
pub use spline::{fit_smoothing_spline, SmoothFunction, SplineSmoother};
pub use wls::{
    weighted_least_squares, weighted_plane_at_origin, DenseMatrix, WlsSolution, PLANE_RANK_TOLERANCE, RANK_TOLERANCE,
};
