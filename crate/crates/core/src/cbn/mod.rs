//! Causal Bayesian networks over binary variables.
//!
//! A [`Cbn`] is a graph (possibly with explicit hidden nodes) plus one
//! conditional probability table per node. Tables may condition on a subset
//! of a node's graph parents: a graph edge without table dependence is a
//! legitimate context-specific independence, and it keeps nodes with many
//! parents (the reward node of the large generated instances) tractable.

mod format;
pub mod generators;
mod inference;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admg::{Admg, NodeId};
use crate::error::{ModelError, Result};

pub use format::{load_instance, save_instance, InstanceFile};
pub use inference::{
    backdoor_reward, exact_marginal, exact_q_and_m, exact_reward, m_from_q, Enumerator, QmReport,
    DEFAULT_ENUMERATION_LIMIT,
};

/// `P(owner = 1 | parents)` indexed by a little-endian bitmask: bit `j` is the
/// value of `parent_order[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub owner: NodeId,
    pub parent_order: Vec<NodeId>,
    pub table: Vec<f64>,
}

impl Cpt {
    pub fn new(owner: NodeId, parent_order: Vec<NodeId>, table: Vec<f64>) -> Result<Self> {
        let cpt = Cpt {
            owner,
            parent_order,
            table,
        };
        cpt.validate()?;
        Ok(cpt)
    }

    /// A table that ignores all parents.
    pub fn constant(owner: NodeId, p: f64) -> Self {
        Cpt {
            owner,
            parent_order: Vec::new(),
            table: vec![p],
        }
    }

    fn validate(&self) -> Result<()> {
        let invalid = |reason: String| ModelError::InvalidCpt {
            node: self.owner.0,
            reason,
        };
        if self.parent_order.len() > 30 {
            return Err(invalid("more than 30 conditioning parents".into()));
        }
        if self.table.len() != 1usize << self.parent_order.len() {
            return Err(invalid(format!(
                "table has {} entries, expected {}",
                self.table.len(),
                1usize << self.parent_order.len()
            )));
        }
        if let Some(p) = self.table.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("entry {p} outside [0, 1]")));
        }
        Ok(())
    }

    /// Table index for a full assignment given as one bool per node.
    #[inline]
    pub fn index(&self, values: &[bool]) -> usize {
        self.parent_order
            .iter()
            .enumerate()
            .fold(0, |acc, (j, p)| acc | ((values[p.0] as usize) << j))
    }

    #[inline]
    pub fn p_one(&self, values: &[bool]) -> f64 {
        self.table[self.index(values)]
    }
}

/// An arm of the bandit: the empty intervention or `do(target = value)`.
///
/// The derived order puts `Observe` first, then `Do` arms by target and value,
/// which is the canonical arm order used everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arm {
    Observe,
    Do { target: NodeId, value: bool },
}

impl Arm {
    pub fn intervention(&self) -> Option<(NodeId, bool)> {
        match *self {
            Arm::Observe => None,
            Arm::Do { target, value } => Some((target, value)),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::Observe => write!(f, "do()"),
            Arm::Do { target, value } => write!(f, "do({}={})", target.0, *value as u8),
        }
    }
}

/// The `2N + 1` arms of a graph in canonical order.
pub fn arms_of(graph: &Admg) -> Vec<Arm> {
    let mut arms = vec![Arm::Observe];
    for &x in graph.intervenable() {
        arms.push(Arm::Do {
            target: x,
            value: false,
        });
        arms.push(Arm::Do {
            target: x,
            value: true,
        });
    }
    arms
}

/// One round's observable values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsRecord {
    /// Values of the observable nodes, in the index order of the projected graph.
    pub values: Vec<bool>,
    pub reward: bool,
}

impl ObsRecord {
    pub fn get(&self, v: NodeId) -> bool {
        self.values[v.0]
    }
}

/// Ground-truth causal Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbn {
    graph: Admg,
    cpts: Vec<Cpt>,
    observable: Vec<NodeId>,
    visible: Admg,
}

impl Cbn {
    /// Validates the tables against the graph. The graph must carry its
    /// confounding as explicit hidden nodes (no bidirected edges) and be
    /// semi-Markov.
    pub fn new(graph: Admg, mut cpts: Vec<Cpt>) -> Result<Self> {
        if !graph.bidirected_edges().is_empty() {
            return Err(ModelError::InvalidGraph(
                "a causal network needs explicit hidden nodes instead of bidirected edges".into(),
            ));
        }
        if cpts.len() != graph.len() {
            return Err(ModelError::InvalidGraph(format!(
                "{} tables for {} nodes",
                cpts.len(),
                graph.len()
            )));
        }
        cpts.sort_by_key(|c| c.owner);
        for (k, cpt) in cpts.iter().enumerate() {
            if cpt.owner.0 != k {
                return Err(ModelError::InvalidCpt {
                    node: k,
                    reason: "missing or duplicated table".into(),
                });
            }
            cpt.validate()?;
            let parents = graph.parents(cpt.owner);
            let mut last = None;
            for &p in &cpt.parent_order {
                if parents.binary_search(&p).is_err() {
                    return Err(ModelError::InvalidCpt {
                        node: k,
                        reason: format!("conditions on {p}, which is not a graph parent"),
                    });
                }
                if last.is_some_and(|l| l >= p) {
                    return Err(ModelError::InvalidCpt {
                        node: k,
                        reason: "parent order must be strictly increasing".into(),
                    });
                }
                last = Some(p);
            }
        }
        let visible = graph.latent_projection()?;
        let observable = graph.observable_nodes();
        Ok(Cbn {
            graph,
            cpts,
            observable,
            visible,
        })
    }

    pub fn graph(&self) -> &Admg {
        &self.graph
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, v: NodeId) -> &Cpt {
        &self.cpts[v.0]
    }

    pub fn reward(&self) -> NodeId {
        self.graph.reward()
    }

    /// The latent projection: what a bandit algorithm is allowed to see.
    pub fn visible_graph(&self) -> &Admg {
        &self.visible
    }

    /// Maps a node of the visible graph back to this network's indexing.
    pub fn to_full(&self, visible: NodeId) -> NodeId {
        self.observable[visible.0]
    }

    /// Maps an arm expressed on the visible graph to this network's indexing.
    pub fn arm_to_full(&self, arm: Arm) -> Arm {
        match arm {
            Arm::Observe => Arm::Observe,
            Arm::Do { target, value } => Arm::Do {
                target: self.to_full(target),
                value,
            },
        }
    }

    pub fn is_fully_observable(&self) -> bool {
        !self.graph.has_hidden()
    }

    /// Ancestral sampling under `arm`, which is expressed in this network's
    /// (full) indexing. Hidden values are drawn but not reported.
    pub fn sample<R: Rng + ?Sized>(&self, arm: Arm, rng: &mut R) -> ObsRecord {
        let mut values = vec![false; self.graph.len()];
        self.sample_into(arm, rng, &mut values);
        ObsRecord {
            reward: values[self.reward().0],
            values: self.observable.iter().map(|v| values[v.0]).collect(),
        }
    }

    /// Samples a full assignment (hidden nodes included) into `values`.
    pub fn sample_into<R: Rng + ?Sized>(&self, arm: Arm, rng: &mut R, values: &mut [bool]) {
        let forced = arm.intervention();
        for &v in self.graph.topological_order() {
            values[v.0] = match forced {
                Some((t, x)) if t == v => x,
                _ => rng.gen::<f64>() < self.cpts[v.0].p_one(values),
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cpt_index_is_little_endian() {
        let cpt = Cpt::new(
            NodeId(2),
            vec![NodeId(0), NodeId(1)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        assert_eq!(cpt.p_one(&[false, false, false]), 0.1);
        assert_eq!(cpt.p_one(&[true, false, false]), 0.2);
        assert_eq!(cpt.p_one(&[false, true, false]), 0.3);
        assert_eq!(cpt.p_one(&[true, true, false]), 0.4);
    }

    #[test]
    fn cpt_validation() {
        assert!(Cpt::new(NodeId(0), vec![], vec![1.5]).is_err());
        assert!(Cpt::new(NodeId(0), vec![NodeId(1)], vec![0.5]).is_err());
    }

    #[test]
    fn arm_order_is_canonical() {
        let g = generators::gen_experiment3();
        let arms = arms_of(g.visible_graph());
        assert_eq!(arms.len(), 7);
        let mut sorted = arms.clone();
        sorted.sort();
        assert_eq!(arms, sorted);
        assert_eq!(arms[0], Arm::Observe);
    }

    #[test]
    fn deterministic_cpts_give_unique_evaluation() {
        let mut b = Admg::builder();
        let a = b.node("A");
        let c = b.node("C");
        let y = b.node("Y");
        b.edge(a, c).edge(c, y).intervenable(a).reward(y);
        let cpts = vec![
            Cpt::constant(a, 1.0),
            Cpt::new(c, vec![a], vec![1.0, 0.0]).unwrap(),
            Cpt::new(y, vec![c], vec![1.0, 0.0]).unwrap(),
        ];
        let cbn = Cbn::new(b.build().unwrap(), cpts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = cbn.sample(Arm::Observe, &mut rng);
            assert_eq!(r.values, vec![true, false, true]);
            assert!(r.reward);
        }
    }

    #[test]
    fn intervention_forces_value() {
        let cbn = generators::gen_experiment3();
        let x2 = cbn.graph().find("X2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let r = cbn.sample(
                Arm::Do {
                    target: x2,
                    value: true,
                },
                &mut rng,
            );
            assert!(r.get(x2));
        }
    }

    #[test]
    fn observational_reward_frequency_matches_five_eighths() {
        let cbn = generators::gen_experiment3();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| cbn.sample(Arm::Observe, &mut rng).reward)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.625).abs() < 0.01, "{freq}");
    }

    #[test]
    fn hidden_values_are_not_reported() {
        let mut b = Admg::builder();
        let u = b.hidden_node("U");
        let a = b.node("A");
        let y = b.node("Y");
        b.edge(u, a).edge(u, y).edge(a, y).intervenable(a).reward(y);
        let cpts = vec![
            Cpt::constant(u, 1.0),
            Cpt::new(a, vec![u], vec![0.0, 1.0]).unwrap(),
            Cpt::new(y, vec![u, a], vec![0.0, 0.0, 0.0, 1.0]).unwrap(),
        ];
        let cbn = Cbn::new(b.build().unwrap(), cpts).unwrap();
        let r = cbn.sample(Arm::Observe, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(r.values, vec![true, true]);
        assert_eq!(cbn.visible_graph().len(), 2);
        assert_eq!(cbn.to_full(NodeId(0)), a);
    }

    #[test]
    fn table_must_use_graph_parents() {
        let mut b = Admg::builder();
        let a = b.node("A");
        let y = b.node("Y");
        b.reward(y);
        let g = b.build().unwrap();
        let cpts = vec![
            Cpt::constant(a, 0.5),
            Cpt::new(y, vec![a], vec![0.2, 0.8]).unwrap(),
        ];
        assert!(matches!(
            Cbn::new(g, cpts),
            Err(ModelError::InvalidCpt { node: 1, .. })
        ));
    }
}
