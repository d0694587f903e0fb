//! Unbiased prevalence estimation for group testing under sequential
//! binomial and multinomial sampling plans.
//!
//! The crate is organised around five pieces:
//!
//! - [`model`]: prevalence parameters for one and two traits, the maps from
//!   prevalence to the probabilities that pooled tests actually observe, their
//!   inverses, misclassification matrices and identifiability.
//! - [`series`]: truncated multivariate power series over exact rationals (or
//!   `f64`) and the generic Taylor-coefficient construction of unbiased
//!   estimators under inverse multinomial sampling.
//! - [`estimators`]: closed-form unbiased estimators, plug-in MLE baselines
//!   and a scanner that enumerates sample points looking for values outside
//!   the parameter space.
//! - [`plans`]: sampling plans as lattice stopping sets, the inverse
//!   multinomial pmf, random-walk simulation, path counting, truncated
//!   expectations and existence diagnostics.
//! - [`exact`]: rational helpers shared by everything above.
//!
//! ```
//! use gtseq_core::estimators::ub_one_perfect;
//!
//! // One positive pool (k = 2) before the first negative one.
//! assert_eq!(ub_one_perfect(1, 1, 2), 0.5);
//! ```

pub mod error;
pub mod estimators;
pub mod exact;
pub mod lattice;
pub mod model;
pub mod plans;
pub mod series;

pub use error::{Error, Result};
