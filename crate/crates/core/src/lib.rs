//! Relative belief inference for binary-response regression models.
//!
//! The crate covers the full workflow:
//!
//! - [`special`]: normal, logistic and Student-t cdfs/quantiles and the
//!   minimax normal-scale approximation of a link cdf.
//! - [`evidence`]: relative belief ratios, Bayes factors, plausibility sets
//!   and the strength of evidence over a finite set of values.
//! - [`prediction`]: closed-form relative belief prediction of future
//!   Bernoulli outcomes under a uniform prior.
//! - [`elicitation`]: turning probability bounds at chosen predictor
//!   vectors into a multivariate normal prior on the coefficients.
//! - [`regression`]: prior predictive tables, bias against/in favor of a
//!   hypothesis, prior-data conflict, grid-based marginal inference and the
//!   joint estimate.
//!
//! All Monte Carlo work is driven by an explicit [`seeding::MonteCarlo`]
//! setting, so results are reproducible for a fixed seed and chunk count.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elicitation;
pub mod error;
pub mod evidence;
pub mod normal;
pub mod prediction;
pub mod regression;
pub mod seeding;
pub mod solve;
pub mod special;

pub use error::{Error, Result};
