//! Exact finite-alphabet probability primitives.

mod dist;
mod gaussian;
mod info;
mod rng;
pub mod special;
mod types;

pub use dist::{CategoricalDist, ChannelModel, NORMALIZATION_TOLERANCE};
pub use gaussian::{gaussian_q, gaussian_q_inv, normal_quantile};
pub use info::{cond_stats, entropy, gjs, gjs_types, kl_divergence, LogCondStats};
pub(crate) use info::{gjs_counts, gjs_of, kl_of};
pub use rng::{derive_seed, rng_from_seed, sample_iid, sample_iid_with, sample_symbol, sample_type, SimRng};
pub use types::{
    count_types, empirical_type, enumerate_type_counts, training_len, type_bounds, EmpiricalType, TypeBounds,
};
