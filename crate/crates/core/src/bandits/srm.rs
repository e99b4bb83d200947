use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, BanditEnv, RegretTrace};
use crate::cbn::{m_from_q, Arm, ObsRecord};
use crate::error::Result;
use crate::estimation::{empirical_reward, EstimationConfig};

/// What the simple-regret algorithm decided and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmOutput {
    pub chosen_arm: Arm,
    /// Final estimates in arm order.
    pub estimates: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub m_hat: usize,
    /// Arms re-estimated by direct pulls.
    pub q_set: Vec<Arm>,
    pub pulls_used: usize,
}

pub fn run_srm<R: Rng + ?Sized>(
    env: &BanditEnv,
    horizon: usize,
    rng: &mut R,
) -> Result<(SrmOutput, RegretTrace)> {
    run_srm_with(env, horizon, &EstimationConfig::default(), rng)
}

/// Half the budget observes, the other half re-estimates the arms whose
/// observational estimates are unreliable. `cfg.sample_budget` is replaced
/// by the horizon.
pub fn run_srm_with<R: Rng + ?Sized>(
    env: &BanditEnv,
    horizon: usize,
    cfg: &EstimationConfig,
    rng: &mut R,
) -> Result<(SrmOutput, RegretTrace)> {
    let mut s = env.session(rng);
    let arms = s.arms().to_vec();
    let n = s.graph().intervenable().len();

    let phase1 = horizon / 2;
    let observed: Vec<ObsRecord> = (0..phase1).map(|_| s.pull(0)).collect();

    let cfg = EstimationConfig {
        sample_budget: horizon,
        ..*cfg
    };
    let plan = s.plan()?;
    let by_arm = plan.estimate(&observed, &cfg, s.rng())?;
    let mut estimates: Vec<f64> = arms.iter().map(|a| by_arm[a]).collect();

    let mut q_hat = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    let graph = s.graph();
    for (ctx, &xi) in s.contexts()?.iter().zip(graph.intervenable()) {
        let cols: Vec<usize> = std::iter::once(xi)
            .chain(ctx.pa_c.iter().copied())
            .map(|v| v.0)
            .collect();
        let mut cells = vec![0usize; 1 << cols.len()];
        for r in &observed {
            let j = cols
                .iter()
                .enumerate()
                .fold(0, |acc, (b, &c)| acc | ((r.values[c] as usize) << b));
            cells[j] += 1;
        }
        let min = cells.iter().copied().min().unwrap_or(0);
        q_hat.push(2.0 * min as f64 / horizon as f64);
        k.push(ctx.k);
    }
    let m_hat = m_from_q(&q_hat, &k, n);

    let q_set: Vec<usize> = (1..arms.len())
        .filter(|&a| {
            let i = (a - 1) / 2;
            q_hat[i].powi(k[i] as i32) < 1.0 / m_hat as f64
        })
        .collect();

    let explore: Vec<usize> = if q_set.is_empty() {
        (0..arms.len()).collect()
    } else {
        q_set.clone()
    };
    let remaining = horizon - phase1;
    let mut hits = vec![0usize; arms.len()];
    let mut pulls = vec![0usize; arms.len()];
    for r in 0..remaining {
        let a = explore[r % explore.len()];
        let rec = s.pull(a);
        hits[a] += rec.reward as usize;
        pulls[a] += 1;
    }
    for &a in &explore {
        if a == 0 {
            let total = phase1 + pulls[0];
            let ones = observed.iter().filter(|o| o.reward).count() + hits[0];
            estimates[0] = if total == 0 {
                empirical_reward(&[])
            } else {
                ones as f64 / total as f64
            };
        } else if pulls[a] > 0 {
            estimates[a] = hits[a] as f64 / pulls[a] as f64;
        }
    }

    let best = argmax(&estimates);
    let trace = s.finish(Some(best));
    Ok((
        SrmOutput {
            chosen_arm: arms[best],
            estimates,
            q_hat,
            m_hat,
            q_set: q_set.iter().map(|&a| arms[a]).collect(),
            pulls_used: trace.rounds(),
        },
        trace,
    ))
}
