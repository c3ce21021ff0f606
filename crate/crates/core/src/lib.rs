//! Tail-index estimation for multivariate heavy-tailed data by optimal
//! aggregation of per-location Hill estimators.
//!
//! Every location of a random field is assumed to share a single tail index
//! `alpha`. Local Hill estimators are combined as a convex sum whose weights
//! minimize the asymptotic mean squared error `λᵀΓλ`, where `Γ` is the
//! asymptotic covariance of the local estimators. `Γ` depends on the pairwise
//! exponent measures of the field and is estimated from the data.
//!
//! The crate is organised as follows:
//!
//! - [`models`]: heavy-tailed marginals, the Gumbel copula and field sampling.
//! - [`tail`]: univariate estimators (Hill, second log-moment, Moment, Ratio).
//! - [`dependence`]: exponent measures, the `Γ` matrix and cross-covariances.
//! - [`aggregation`]: the simplex-constrained QP, the aggregated estimator and
//!   the Average baseline.
//! - [`harness`]: Monte-Carlo experiments (k oracle, AMSE comparison, CLT
//!   validation).
//!
//! ```
//! use bear_core::models::{CopulaModel, FieldModel, MarginalModel};
//! use bear_core::dependence::KVector;
//! use bear_core::aggregation::bear;
//! use rand::SeedableRng;
//!
//! let field = FieldModel::homogeneous(MarginalModel::frechet(2.0).unwrap(), 4,
//!     CopulaModel::gumbel(3.0).unwrap()).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let samples = field.sample(2000, &mut rng).unwrap();
//! let kv = KVector::new(vec![100; 4]).unwrap();
//! let result = bear(&samples, &kv).unwrap();
//! assert!((result.estimate_alpha() - 2.0).abs() < 0.5);
//! ```

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod dependence;
mod error;
pub mod harness;
pub mod models;
mod roots;
mod sample;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
pub use sample::SampleMatrix;
