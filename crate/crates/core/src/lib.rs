//! Cantor-Kantorovich distance between labeled Markov chains.
//!
//! The CK distance is the limit of the Kantorovich distances between the
//! finite-horizon trace distributions of two chains, with the Cantor
//! ultrametric on words as ground cost. It equals the discounted series
//! `sum_i ((m-1)/m^i) TV_i` of finite-horizon total variation distances, and
//! truncating that series at horizon `k` leaves an error of at most `m^{-k}`.
//!
//! - [`model`]: chains, validation, the JSON chain format.
//! - [`trace`]: joint prefix-tree enumeration of trace distributions.
//! - [`distances`]: Cantor metric, Kantorovich closed form, truncated CK sums.
//! - [`transport`]: exact min-cost transport, an independent Kantorovich oracle.
//! - [`bounds`]: continuity bounds between bisimilarity, CK distance and TV.
//! - [`bisim`]: verification of epsilon-approximate bisimulation relations.
//! - [`product`]: product-distribution encoders and TV recovery identities.
//! - [`figures`]: CSV series for the bound and truncation plots.

pub mod bisim;
pub mod bounds;
pub mod cli;
pub mod distances;
pub mod figures;
pub mod format;
pub mod model;
pub mod product;
pub mod trace;
pub mod transport;

pub use bisim::{check_bisim, enumerate_closed_sets, minimal_epsilon, BisimRelation};
pub use bounds::{
    bisim_impossibility_threshold, ck_upper_bound, max_safe_horizon, tv_bisim_bound,
    tv_from_ck_bound,
};
pub use distances::{
    cantor_distance, ck_truncated, ck_truncated_with, horizon_for_precision,
    kantorovich_closed_form, CkReport,
};
pub use model::{bias_onegin, load_chain, onegin, LabeledMarkovChain};
pub use product::{encode_product, ProductSpec};
pub use trace::{extend, initial_level, tv_direct, EngineConfig, PrefixLevel, TraceEngine};
pub use transport::kantorovich_oracle;
