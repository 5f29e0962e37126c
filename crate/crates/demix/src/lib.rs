//! Nonparametric estimation of mixing densities for discrete mixture
//! distributions.
//!
//! A mixture density has the form `π_f(x) = ∫ π_θ(x) f(θ) ν(dθ)` where the
//! mixands `π_θ` are known discrete distributions and the mixing density `f`
//! is the estimation target. This crate implements
//!
//! - orthonormal polynomial machinery (three-term recurrences, a moment-based
//!   Gram-Schmidt oracle and growth diagnostics) in [`orthopoly`],
//! - mixand families (power series such as Poisson and negative binomial,
//!   discrete uniforms, translation families) in [`mixands`],
//! - the projection estimator for power-series mixtures together with its
//!   Gram-matrix dual route, exact bias/variance/MISE decomposition and
//!   variance bounds in [`projector`],
//! - smoothness classes, the minimax lower-bound evaluator and constructive
//!   test fixtures in [`smoothness`],
//! - discrete deconvolution on the integers in [`deconv`],
//! - the estimator for mixtures of discrete uniforms in [`uniformmix`],
//! - bandwidth (model order) rules in [`bandwidth`],
//! - a reproducible Monte Carlo benchmark harness in [`simlab`].
//!
//! All estimators consume an [`mixands::EmpiricalCounts`] histogram of
//! observed nonnegative integers and return estimates that can be evaluated
//! pointwise and compared in the L²(ν) norm.
//!
//! ```
//! use demix::mixands::{EmpiricalCounts, PowerSeriesFamily};
//! use demix::orthopoly::MeasureSpec;
//! use demix::projector::estimate_projection;
//!
//! let counts = EmpiricalCounts::from_observations([0, 0, 0, 1, 1, 2, 4]).unwrap();
//! let family = PowerSeriesFamily::poisson();
//! let measure = MeasureSpec::lebesgue(0.0, 1.0).unwrap();
//! let f_hat = estimate_projection(&counts, &family, measure, 3).unwrap();
//!
//! assert_eq!(f_hat.coeffs().len(), 3);
//! assert!(f_hat.eval(0.5).unwrap().is_finite());
//! ```

// Numeric validation writes `!(x > 0.0)` on purpose: the negation also
// rejects NaN. Index loops mirror the matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bandwidth;
mod dd;
pub mod deconv;
pub mod error;
pub mod mixands;
pub mod orthopoly;
pub mod projector;
pub mod quadrature;
pub mod simlab;
pub mod smoothness;
pub mod uniformmix;

pub use error::{DemixError, Result};
