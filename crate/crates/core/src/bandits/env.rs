use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admg::{Admg, ComponentContext};
use crate::cbn::{arms_of, Arm, Cbn, Enumerator, ObsRecord};
use crate::error::Result;
use crate::estimation::EstimationPlan;

/// A bandit problem over a causal network. Algorithms see the visible graph
/// and pull outcomes through a [`Session`]; the network itself stays private.
#[derive(Debug)]
pub struct BanditEnv {
    cbn: Cbn,
    arms: Vec<Arm>,
    full_arms: Vec<Arm>,
    means: Vec<f64>,
    best: f64,
    plan: OnceLock<std::result::Result<EstimationPlan, crate::error::ModelError>>,
    contexts: OnceLock<std::result::Result<Vec<ComponentContext>, crate::error::ModelError>>,
}

impl BanditEnv {
    /// Oracle means by exact (pruned) enumeration.
    pub fn new(cbn: Cbn) -> Result<Self> {
        Self::with_enumerator(cbn, &Enumerator::default())
    }

    pub fn with_enumerator(cbn: Cbn, enumerator: &Enumerator) -> Result<Self> {
        let arms = arms_of(cbn.visible_graph());
        let means = arms
            .iter()
            .map(|&a| enumerator.reward(&cbn, cbn.arm_to_full(a)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::with_means(cbn, means))
    }

    /// Uses caller-supplied arm means, in canonical arm order.
    pub fn with_means(cbn: Cbn, means: Vec<f64>) -> Self {
        let arms = arms_of(cbn.visible_graph());
        assert_eq!(arms.len(), means.len(), "one mean per arm");
        let full_arms = arms.iter().map(|&a| cbn.arm_to_full(a)).collect();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        BanditEnv {
            cbn,
            arms,
            full_arms,
            means,
            best,
            plan: OnceLock::new(),
            contexts: OnceLock::new(),
        }
    }

    /// Arm means from `draws` samples per arm, for networks too large to
    /// enumerate.
    pub fn monte_carlo_means<R: Rng + ?Sized>(cbn: &Cbn, draws: usize, rng: &mut R) -> Vec<f64> {
        let mut values = vec![false; cbn.graph().len()];
        let y = cbn.reward().0;
        arms_of(cbn.visible_graph())
            .into_iter()
            .map(|a| {
                let full = cbn.arm_to_full(a);
                let mut hits = 0usize;
                for _ in 0..draws {
                    cbn.sample_into(full, rng, &mut values);
                    hits += values[y] as usize;
                }
                hits as f64 / draws.max(1) as f64
            })
            .collect()
    }

    pub fn visible_graph(&self) -> &Admg {
        self.cbn.visible_graph()
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Oracle means in arm order. For reporting only.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn best_mean(&self) -> f64 {
        self.best
    }

    pub fn gap(&self, arm: usize) -> f64 {
        self.best - self.means[arm]
    }

    /// True when the network has no hidden nodes.
    pub fn is_fully_observable(&self) -> bool {
        self.cbn.is_fully_observable()
    }

    /// Structural estimation plan for the visible graph, built on first use.
    pub fn plan(&self) -> Result<&EstimationPlan> {
        self.plan
            .get_or_init(|| EstimationPlan::new(self.visible_graph()))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `S_i`, `Paᶜ(X_i)` and `k_i` for every intervenable node, in order.
    pub fn contexts(&self) -> Result<&[ComponentContext]> {
        self.contexts
            .get_or_init(|| {
                let g = self.visible_graph();
                g.intervenable()
                    .iter()
                    .map(|&x| g.pa_plus_and_pa_c(x))
                    .collect()
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    pub fn session<'a, R: Rng + ?Sized>(&'a self, rng: &'a mut R) -> Session<'a, R> {
        Session {
            env: self,
            rng,
            chosen: Vec::new(),
            scratch: vec![false; self.cbn.graph().len()],
        }
    }
}

/// One run's interaction with an environment.
pub struct Session<'a, R: Rng + ?Sized> {
    env: &'a BanditEnv,
    rng: &'a mut R,
    chosen: Vec<u32>,
    scratch: Vec<bool>,
}

impl<'a, R: Rng + ?Sized> Session<'a, R> {
    pub fn graph(&self) -> &'a Admg {
        self.env.visible_graph()
    }

    pub fn arms(&self) -> &'a [Arm] {
        &self.env.arms[..]
    }

    pub fn num_arms(&self) -> usize {
        self.env.arms.len()
    }

    pub fn rounds(&self) -> usize {
        self.chosen.len()
    }

    pub fn plan(&self) -> Result<&'a EstimationPlan> {
        self.env.plan()
    }

    pub fn contexts(&self) -> Result<&'a [ComponentContext]> {
        self.env.contexts()
    }

    pub fn is_fully_observable(&self) -> bool {
        self.env.is_fully_observable()
    }

    /// The run's random source, for algorithm-side randomness.
    pub fn rng(&mut self) -> &mut R {
        self.rng
    }

    /// Pulls arm `arm` (index into [`Self::arms`]) and returns what is observed.
    pub fn pull(&mut self, arm: usize) -> ObsRecord {
        let cbn = &self.env.cbn;
        cbn.sample_into(self.env.full_arms[arm], self.rng, &mut self.scratch);
        self.chosen.push(arm as u32);
        let visible = cbn.visible_graph().len();
        ObsRecord {
            values: (0..visible)
                .map(|k| self.scratch[cbn.to_full(crate::admg::NodeId(k)).0])
                .collect(),
            reward: self.scratch[cbn.reward().0],
        }
    }

    /// Closes the run. `recommended` is the arm returned by a simple-regret
    /// algorithm.
    pub fn finish(self, recommended: Option<usize>) -> RegretTrace {
        RegretTrace::new(self.env, self.chosen, recommended)
    }
}

/// Per-round record of a run and the regret it incurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    /// Arm index pulled at each round.
    pub chosen: Vec<u32>,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub recommended: Option<usize>,
    /// Gap of the recommended arm, or of the last pulled arm when there is
    /// no recommendation.
    pub simple_regret: f64,
}

impl RegretTrace {
    fn new(env: &BanditEnv, chosen: Vec<u32>, recommended: Option<usize>) -> Self {
        let instantaneous: Vec<f64> = chosen.iter().map(|&a| env.gap(a as usize)).collect();
        let mut total = 0.0;
        let cumulative = instantaneous
            .iter()
            .map(|r| {
                total += r;
                total
            })
            .collect();
        let simple_regret = match recommended.or(chosen.last().map(|&a| a as usize)) {
            Some(a) => env.gap(a),
            None => 0.0,
        };
        RegretTrace {
            chosen,
            instantaneous,
            cumulative,
            recommended,
            simple_regret,
        }
    }

    pub fn rounds(&self) -> usize {
        self.chosen.len()
    }

    /// Cumulative regret after `t` rounds (0 for `t = 0`).
    pub fn cumulative_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cumulative[t - 1]
        }
    }

    pub fn pull_counts(&self, arms: usize) -> Vec<usize> {
        let mut counts = vec![0; arms];
        for &a in &self.chosen {
            counts[a as usize] += 1;
        }
        counts
    }
}
