//! Differentially private partition selection.
//!
//! Given users that each hold a list of items, release as many of the items
//! as possible while never releasing one no user holds, under
//! δ-approximate ρ-zCDP (or (ε, δ)-DP for the Laplace-based greedy
//! mechanism).
//!
//! ```
//! use partsel_core::{weighted_gaussian, Dataset, Item, MechanismConfig, PrivacyBudget};
//!
//! let d = Dataset::from_lists((0..5000u64).map(|i| vec![Item::Id(i % 4)]));
//! let budget = PrivacyBudget::new(0.1, 1e-5)?;
//! let out = weighted_gaussian(&d, budget, &MechanismConfig::default())?;
//! assert_eq!(d.resolve(&out.released), (0..4).map(Item::Id).collect::<Vec<_>>());
//! # Ok::<(), partsel_core::Error>(())
//! ```

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod data;
pub mod engine;
mod error;
pub mod mechanisms;
pub mod rng;
mod types;

pub use error::{Error, Result};
pub use mechanisms::{dp_sips, dpsu_policy_gaussian, gw_greedy, weighted_gaussian};
pub use types::{
    dataset_support, ApproxDpParams, Dataset, DatasetBuilder, GwTruncation, Item, ItemId, MechanismConfig,
    PrivacyBudget, ReleaseResult, UserId, UserRecord, Vocabulary, WeightedHistogram, DEFAULT_SEED, MAX_DELTA0,
};
