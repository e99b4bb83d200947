//! Regret bound formulas, used as shape-only overlays.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// `√((m/T) ln(NT/m))` with unit constant.
pub fn srm_bound(m: usize, n: usize, horizon: u64) -> f64 {
    let m = m as f64;
    let t = horizon as f64;
    ((m / t) * (n as f64 * t / m).ln()).max(0.0).sqrt()
}

/// Gap and observational statistics of one interventional arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrmArmStats {
    pub gap: f64,
    /// `p_{i,x} = min_z P(X_i = x, Pa(X_i) = z)`.
    pub p: f64,
    /// Number of parent assignments of `X_i`.
    pub z: usize,
}

/// Cumulative-regret bound when an interventional arm is optimal:
///
/// ```text
/// 58 ln T/Δ₀ + Δ₀ + Σ_{Δ>0} Δ max(0, 1 + 8 ln T (1/Δ² − p η/(36 Δ₀²))) + Σ_{Δ>0} Δ π²/3
/// ```
///
/// with `η = max(0, 1 − Z T^{−p²/4})`. The last sum includes `Δ₀`. When
/// `Δ₀ = 0` the observational arm is optimal and only the constant term
/// remains.
pub fn crm_bound(delta0: f64, arms: &[CrmArmStats], horizon: u64) -> f64 {
    let t = horizon as f64;
    let ln_t = t.ln();
    let constant: f64 = arms
        .iter()
        .map(|a| a.gap)
        .chain(std::iter::once(delta0))
        .filter(|&g| g > 0.0)
        .map(|g| g * PI * PI / 3.0)
        .sum();
    if delta0 <= 0.0 {
        return constant;
    }
    let mut total = 58.0 * ln_t / delta0 + delta0 + constant;
    for a in arms.iter().filter(|a| a.gap > 0.0) {
        let eta = (1.0 - a.z as f64 * t.powf(-a.p * a.p / 4.0)).max(0.0);
        let inner = 1.0 / (a.gap * a.gap) - a.p * eta / (36.0 * delta0 * delta0);
        total += a.gap * (1.0 + 8.0 * ln_t * inner).max(0.0);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Srm,
    Crm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundParams {
    Srm {
        m: usize,
        n: usize,
        horizon: u64,
    },
    Crm {
        delta0: f64,
        arms: Vec<CrmArmStats>,
        horizon: u64,
    },
}

impl BoundParams {
    pub fn kind(&self) -> BoundKind {
        match self {
            BoundParams::Srm { .. } => BoundKind::Srm,
            BoundParams::Crm { .. } => BoundKind::Crm,
        }
    }
}

pub fn theorem_bounds(params: &BoundParams) -> f64 {
    match params {
        BoundParams::Srm { m, n, horizon } => srm_bound(*m, *n, *horizon),
        BoundParams::Crm {
            delta0,
            arms,
            horizon,
        } => crm_bound(*delta0, arms, *horizon),
    }
}
