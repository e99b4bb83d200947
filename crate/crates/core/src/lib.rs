//! Causal bandits on causal Bayesian networks with binary variables.
//!
//! The crate is organised bottom-up:
//!
//! * [`admg`]: mixed graphs and the structural operations on them.
//! * [`cbn`]: ground-truth networks, sampling, exact inference, generators.
//! * [`estimation`]: interventional reward estimates from observational data.
//! * [`bandits`]: the simple- and cumulative-regret algorithms and baselines.
//! * [`harness`]: seeded multi-run experiments and their reports.

pub mod admg;
pub mod bandits;
pub mod cbn;
pub mod error;
pub mod estimation;
pub mod harness;

pub use admg::{Admg, NodeId};
pub use cbn::{Arm, Cbn, Cpt, ObsRecord};
pub use error::{ModelError, Result};
