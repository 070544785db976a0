//! Provider-fair online re-ranking.
//!
//! Each arriving user gets a size-`K` list that trades user preference
//! against the exposure of the worst-off provider. Fairness is
//! max-min over provider exposures, normalized by per-provider weights
//! `gamma`. The online policy keeps one price per provider. A price is
//! updated by momentum dual descent and projected onto the region where
//! the max-min conjugate is finite. Each step costs one scan over the
//! items plus `O(|P| log |P|)` in the dual.
//!
//! Modules:
//!
//! * [`types`]: catalog, scores, horizon settings, weights, per-horizon state
//! * [`dataset`]: CSV ingestion, horizon splitting, synthetic instances
//! * [`regularizer`]: max-min / proportion fairness and the dual region
//! * [`dual`]: subgradient, momentum, proximal step, projection
//! * [`policy`]: the dual policy and the greedy, k-neighbor and min-regularizer baselines
//! * [`oracle`]: exhaustive offline optimum and empirical regret
//! * [`metrics`]: NDCG@K, MMF@K, W_lambda@K, Lorenz curve and Gini
//! * [`experiment`]: config-driven runs behind the `fairmmf` binary

pub mod error;
pub mod regularizer;
pub mod types;
pub mod dual;
pub mod policy;
pub mod oracle;
pub mod metrics;
pub mod dataset;
pub mod experiment;

pub use error::{Error, Result};
