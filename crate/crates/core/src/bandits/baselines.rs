use rand::Rng;

use super::{argmax, BanditEnv, RegretTrace};
use crate::error::{ModelError, Result};

/// Means of arms with at least one pull; unpulled arms never win.
fn empirical(hits: &[u64], pulls: &[u64]) -> Vec<f64> {
    hits.iter()
        .zip(pulls)
        .map(|(&h, &n)| {
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                h as f64 / n as f64
            }
        })
        .collect()
}

/// Round-robin over all arms, then the empirical best.
pub fn run_uniform_exploration<R: Rng + ?Sized>(
    env: &BanditEnv,
    horizon: usize,
    rng: &mut R,
) -> RegretTrace {
    let mut s = env.session(rng);
    let k = s.num_arms();
    let mut hits = vec![0u64; k];
    let mut pulls = vec![0u64; k];
    for t in 0..horizon {
        let a = t % k;
        hits[a] += s.pull(a).reward as u64;
        pulls[a] += 1;
    }
    let best = argmax(&empirical(&hits, &pulls));
    s.finish(Some(best))
}

/// Successive rejects: `K − 1` phases, each dropping the empirically worst
/// surviving arm. Phase `k` brings every survivor to
/// `n_k = ⌈(T − K) / (loḡ(K) (K + 1 − k))⌉` pulls with
/// `loḡ(K) = 1/2 + Σ_{i=2}^{K} 1/i`. Pulls left over after the last phase go
/// to the survivor.
pub fn run_successive_rejects<R: Rng + ?Sized>(
    env: &BanditEnv,
    horizon: usize,
    rng: &mut R,
) -> Result<RegretTrace> {
    let k = env.num_arms();
    if horizon < k {
        return Err(ModelError::InvalidParameter(format!(
            "successive rejects needs T ≥ {k} (number of arms), got {horizon}"
        )));
    }
    let mut s = env.session(rng);
    let log_bar = 0.5 + (2..=k).map(|i| 1.0 / i as f64).sum::<f64>();
    let budget = (horizon - k) as f64;
    let mut alive: Vec<usize> = (0..k).collect();
    let mut hits = vec![0u64; k];
    let mut pulls = vec![0u64; k];
    let mut used = 0usize;
    for phase in 1..k {
        let target = (budget / (log_bar * (k + 1 - phase) as f64)).ceil() as u64;
        for &a in &alive {
            while pulls[a] < target && used < horizon {
                hits[a] += s.pull(a).reward as u64;
                pulls[a] += 1;
                used += 1;
            }
        }
        let means = empirical(&hits, &pulls);
        // Worst survivor; among ties the highest index goes.
        let (pos, _) = alive
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bp, bv), (p, &a)| {
                if means[a] <= bv {
                    (p, means[a])
                } else {
                    (bp, bv)
                }
            });
        alive.remove(pos);
    }
    let survivor = alive[0];
    while used < horizon {
        s.pull(survivor);
        used += 1;
    }
    Ok(s.finish(Some(survivor)))
}

/// UCB1 with radius `√(2 ln t / N)`: each arm once, then the largest index.
pub fn run_ucb1<R: Rng + ?Sized>(env: &BanditEnv, horizon: usize, rng: &mut R) -> RegretTrace {
    let mut s = env.session(rng);
    let k = s.num_arms();
    let mut hits = vec![0u64; k];
    let mut pulls = vec![0u64; k];
    let mut index = vec![f64::INFINITY; k];
    for t in 1..=horizon {
        let a = if t <= k { t - 1 } else { argmax(&index) };
        hits[a] += s.pull(a).reward as u64;
        pulls[a] += 1;
        let ln_t = (t as f64).ln();
        for b in 0..k {
            if pulls[b] > 0 {
                let n = pulls[b] as f64;
                index[b] = hits[b] as f64 / n + (2.0 * ln_t / n).sqrt();
            }
        }
    }
    s.finish(None)
}
