//! Efficiency/confidence trade-off bounds for transductive conformal
//! prediction, and type-based confidence tests with empirically observed
//! statistics.
//!
//! All information quantities are in nats. The crate is organised as
//!
//! - [`prob`]: finite-alphabet distributions, empirical types, entropies,
//!   divergences, the generalized Jensen-Shannon divergence, log-conditional
//!   moments and the Gaussian tail function.
//! - [`bounds`]: finite-n converse and achievability bounds on the growth
//!   exponent of the prediction set, plus a brute-force audit of the
//!   underlying one-shot inequality.
//! - [`predictors`]: the idealized product-threshold predictor (exact and
//!   dynamic-programming evaluators), split-conformal p-values and the
//!   Bonferroni transductive predictor.
//! - [`gutman`]: Gutman's test with and without confidence, simulation and
//!   exact type enumeration of its set-size law, exponent fitting.
//! - [`exponents`]: large-deviation exponent optimisation on products of
//!   simplices, grid oracles, dispersion and the second-order threshold.
//! - [`harness`]: experiment configuration, score-CSV ingestion,
//!   experiment runners and CSV/JSON emission used by the `tlab` binary.

pub mod bounds;
pub mod error;
pub mod exponents;
pub mod gutman;
pub mod harness;
pub mod predictors;
pub mod prob;

pub use error::{Error, Result};
