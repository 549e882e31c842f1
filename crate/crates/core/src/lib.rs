//! Valuation of path-dependent payoffs on recombinant binomial trees.
//!
//! The expected payoff `E[V(X)] = sum_x V(x) p(x)` over all `2^N` Bernoulli
//! paths is computed exactly by splitting path space into prefix blocks, one
//! per worker rank, or estimated by basic, partitioned (stratified) and
//! shared-sample Monte Carlo.
//!
//! ```
//! use binpath::{derive_crr, value_exact_parallel, MarketInputs, PayoffKind, ValuationRequest};
//!
//! let inputs = MarketInputs::new(5.0, 10.0, 0.06, 0.30, 1.0, 12).unwrap();
//! let params = derive_crr(&inputs).unwrap();
//! let req = ValuationRequest::new(inputs, params, PayoffKind::AsianPut).with_workers(4);
//! let out = value_exact_parallel(&req).unwrap();
//! assert_eq!(out.paths_visited, 1 << 12);
//! ```

pub mod bench;
pub mod error;
pub mod exact;
pub mod mc;
pub mod model;
pub mod paths;
pub mod payoffs;
pub mod sum;

pub use error::{Error, Result};
pub use exact::{value_exact_parallel, value_exact_serial, value_leaf_formula, ExactValuation, ValuationRequest};
pub use mc::{
    allocate_strata, estimate_basic, estimate_partitioned, estimate_partitioned_equal, estimate_shared, repeat,
    sample_path, Estimate, McConfig, Method, StudySummary,
};
pub use model::{asset_path, derive_crr, leaf_prices, with_custom_probs, MarketInputs, TreeParams};
pub use paths::{block_probability, iter_block, make_partition, path_probability, BernoulliPath, PathPartition};
pub use payoffs::{payoff, PathPayoff, PayoffKind};
