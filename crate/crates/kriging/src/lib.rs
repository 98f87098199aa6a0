//! Gaussian-process (kriging) regression with singular covariance matrices as
//! first-class citizens.
//!
//! Classical kriging assumes the covariance matrix `C` of the observations is
//! invertible. Real designs break that assumption routinely: repeated points,
//! additive kernels over rectangular patterns, periodic kernels sampled a
//! period apart, or dot-product kernels with more points than dimensions all
//! make `C` exactly singular, and near-duplicates make it numerically so.
//! This crate keeps working in those regimes instead of failing on a Cholesky
//! error:
//!
//! * [`spectral`] — eigendecomposition of `C` split into image/null spaces by
//!   a rank tolerance η, Moore–Penrose pseudoinverse, projectors, condition
//!   diagnostics.
//! * [`model`] — kriging models under three regularization policies:
//!   pseudoinverse (projects onto the image space; averages outputs at
//!   redundant points and keeps zero variance there), nugget (adds τ² to the
//!   diagonal; smooths instead of interpolating), and exact inversion (which
//!   refuses ill-conditioned matrices rather than degrade silently).
//! * [`redundancy`] — detection of redundant point pairs/groups from the
//!   image-space projector, their degree of redundancy, and the model–data
//!   discrepancy carried by the null-space component of `y`.
//! * [`likelihood`] — spectral-form log-likelihood, concentrated likelihood,
//!   maximum-likelihood and leave-one-out nugget estimation, length-scale
//!   search, and rules that pick the smallest nugget or pseudoinverse
//!   tolerance achieving a target condition number.
//! * [`distwise`] — a distribution-wise GP over site summaries
//!   (location, count, mean, variance) that interpolates per-site means and
//!   variances and whose cost scales with the number of distinct sites, not
//!   the number of raw observations.
//! * [`kernels`] — squared-exponential, additive, periodic and dot-product
//!   covariance functions with serde-backed JSON descriptions.
//! * [`datasets`] — small built-in worked examples with their published
//!   reference values, shared by tests and the companion CLI.

pub mod datasets;
pub mod distwise;
pub mod kernels;
pub mod likelihood;
pub mod model;
pub mod redundancy;
pub mod spectral;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use distwise::{group_repeated_points, DistWiseModel, SiteSummary, VarianceConvention};
pub use kernels::{Design, KernelSpec};
pub use likelihood::{
    concentrated_neg2ll, estimate_lengthscales, estimate_nugget_cv, estimate_nugget_ml,
    log_likelihood, pi_tolerance_for_condition, smallest_nugget_for_condition, HyperParams,
};
pub use model::{KrigingModel, RegularizationPolicy};
pub use redundancy::{discrepancy, redundancy_groups, redundant_pairs, RedundancyReport};
pub use spectral::SpectralDecomposition;
