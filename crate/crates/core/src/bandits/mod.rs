//! Bandit algorithms over the `2N + 1` arms of a causal network.
//!
//! Every algorithm drives a [`Session`], which exposes the visible graph and
//! the pull interface only. Arms are indexed in canonical order: `do()` first,
//! then `do(X_i = 0)`, `do(X_i = 1)` for each intervenable node.

mod baselines;
mod bounds;
mod crm;
mod env;
mod srm;

pub use baselines::{run_successive_rejects, run_ucb1, run_uniform_exploration};
pub use bounds::{crm_bound, srm_bound, theorem_bounds, BoundKind, BoundParams, CrmArmStats};
pub use crm::{run_crm, CrmState};
pub use env::{BanditEnv, RegretTrace, Session};
pub use srm::{run_srm, run_srm_with, SrmOutput};

/// Index of the largest value; ties go to the lowest index and NaN never wins.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() {
            best = k;
        }
    }
    best
}
