//! Partition-selection mechanisms.
//!
//! All four follow the same skeleton: build a weighted histogram, add
//! independent noise to every supported item, release what clears a
//! threshold. They differ in how the histogram is built.
//!
//! * [`weighted_gaussian`] and [`dp_sips`] build histograms on the parallel
//!   [`engine`](crate::engine).
//! * [`dpsu_policy_gaussian`] and [`gw_greedy`] update the histogram one user
//!   at a time, each update depending on all earlier ones. They are
//!   single-threaded by construction and ignore `MechanismConfig::workers`.
//!
//! Every mechanism is reentrant: no state is shared between invocations.

mod dpsu;
#[doc(hidden)]
pub mod experimental;
mod gaussian;
mod gw;
mod noise;
mod preprocess;

pub use dpsu::{dpsu_policy_gaussian, policy_update};
pub use gaussian::{dp_sips, weighted_gaussian, IterationRecord, IterationTrace};
pub use gw::{gw_candidates, gw_greedy, gw_user_update};
pub use noise::{sample_noise, BufferedThreshold, NoiseKind};
pub use preprocess::preprocess_user;
