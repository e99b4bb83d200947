//! Exact inference by enumeration.
//!
//! Only the nodes the query actually depends on are enumerated: the query
//! nodes plus everything reachable backwards along table dependencies in the
//! (possibly mutilated) model. Every other node sums out to one, so the result
//! is the full-joint sum restricted to that ancestral set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Arm, Cbn};
use crate::admg::NodeId;
use crate::error::{ModelError, Result};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 22;

/// Brute-force enumerator with a cap on the number of summed-over variables.
#[derive(Debug, Clone, Copy)]
pub struct Enumerator {
    pub limit: usize,
}

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator {
            limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

impl Enumerator {
    pub fn new(limit: usize) -> Self {
        Enumerator { limit }
    }

    /// Nodes whose tables the query depends on under `arm`, in topological order.
    pub fn relevant_nodes(&self, cbn: &Cbn, arm: Arm, query: &[NodeId]) -> Vec<NodeId> {
        let forced = arm.intervention().map(|(t, _)| t);
        let mut seen: BTreeSet<NodeId> = query.iter().copied().collect();
        let mut stack: Vec<NodeId> = query.to_vec();
        while let Some(v) = stack.pop() {
            if Some(v) == forced {
                continue;
            }
            for &p in &cbn.cpt(v).parent_order {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        cbn.graph()
            .topological_order()
            .iter()
            .copied()
            .filter(|v| seen.contains(v))
            .collect()
    }

    /// Joint distribution of `query` under `arm`. Entry `k` is the probability
    /// that `query[j]` takes bit `j` of `k`.
    pub fn marginal(&self, cbn: &Cbn, arm: Arm, query: &[NodeId]) -> Result<Vec<f64>> {
        let order = self.relevant_nodes(cbn, arm, query);
        let forced = arm.intervention();
        let free = order
            .iter()
            .filter(|&&v| forced.map(|(t, _)| t) != Some(v))
            .count();
        if free > self.limit {
            return Err(ModelError::EnumerationInfeasible {
                needed: free,
                limit: self.limit,
            });
        }
        let mut out = vec![0.0; 1usize << query.len()];
        let mut values = vec![false; cbn.graph().len()];
        let walk = Walk {
            cbn,
            order: &order,
            forced,
            query,
        };
        walk.visit(0, 1.0, &mut values, &mut out);
        Ok(out)
    }

    /// `P(Y = 1 | arm)`.
    pub fn reward(&self, cbn: &Cbn, arm: Arm) -> Result<f64> {
        Ok(self.marginal(cbn, arm, &[cbn.reward()])?[1])
    }
}

struct Walk<'a> {
    cbn: &'a Cbn,
    order: &'a [NodeId],
    forced: Option<(NodeId, bool)>,
    query: &'a [NodeId],
}

impl Walk<'_> {
    fn visit(&self, depth: usize, weight: f64, values: &mut [bool], out: &mut [f64]) {
        if weight == 0.0 {
            return;
        }
        let Some(&v) = self.order.get(depth) else {
            let idx = self
                .query
                .iter()
                .enumerate()
                .fold(0, |acc, (j, q)| acc | ((values[q.0] as usize) << j));
            out[idx] += weight;
            return;
        };
        if let Some((t, x)) = self.forced {
            if t == v {
                values[v.0] = x;
                self.visit(depth + 1, weight, values, out);
                return;
            }
        }
        let p = self.cbn.cpt(v).p_one(values);
        values[v.0] = true;
        self.visit(depth + 1, weight * p, values, out);
        values[v.0] = false;
        self.visit(depth + 1, weight * (1.0 - p), values, out);
    }
}

pub fn exact_marginal(cbn: &Cbn, arm: Arm, query: &[NodeId]) -> Result<Vec<f64>> {
    Enumerator::default().marginal(cbn, arm, query)
}

/// Exact `P(Y = 1 | arm)` with the default enumeration limit. `arm` uses the
/// network's full indexing.
pub fn exact_reward(cbn: &Cbn, arm: Arm) -> Result<f64> {
    Enumerator::default().reward(cbn, arm)
}

/// Per-intervenable-node `q_i`, `k_i` and the resulting `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmReport {
    /// Intervenable nodes of the visible graph, in order.
    pub nodes: Vec<NodeId>,
    pub q: Vec<f64>,
    pub k: Vec<usize>,
    pub m: usize,
}

/// `m = min { τ ∈ [2, 2N] : |{i : q_i^{k_i} < 1/τ}| ≤ τ }`, falling back to `2N`.
pub fn m_from_q(q: &[f64], k: &[usize], n: usize) -> usize {
    let upper = (2 * n).max(2);
    for tau in 2..=upper {
        let threshold = 1.0 / tau as f64;
        let count = q
            .iter()
            .zip(k)
            .filter(|(&qi, &ki)| qi.powi(ki as i32) < threshold)
            .count();
        if count <= tau {
            return tau;
        }
    }
    upper
}

/// Exact `q`, `k` and `m` for a network, computed on its visible graph.
pub fn exact_q_and_m(cbn: &Cbn, enumerator: &Enumerator) -> Result<QmReport> {
    let g = cbn.visible_graph();
    let mut q = Vec::new();
    let mut k = Vec::new();
    for &x in g.intervenable() {
        let ctx = g.pa_plus_and_pa_c(x)?;
        let mut query = vec![cbn.to_full(x)];
        query.extend(ctx.pa_c.iter().map(|&v| cbn.to_full(v)));
        let joint = enumerator.marginal(cbn, Arm::Observe, &query)?;
        q.push(joint.iter().copied().fold(f64::INFINITY, f64::min));
        k.push(ctx.k);
    }
    let n = g.intervenable().len();
    Ok(QmReport {
        nodes: g.intervenable().to_vec(),
        m: m_from_q(&q, &k, n),
        q,
        k,
    })
}

/// `Σ_z P(Y=1 | X_i=x, Pa(X_i)=z) P(Pa(X_i)=z)` evaluated exactly on a fully
/// observable network.
pub fn backdoor_reward(cbn: &Cbn, xi: NodeId, x: bool, enumerator: &Enumerator) -> Result<f64> {
    if !cbn.is_fully_observable() {
        return Err(ModelError::NotProjected);
    }
    let g = cbn.graph();
    if !g.is_intervenable(xi) {
        return Err(ModelError::NotIntervenable(xi.0));
    }
    let pa = g.pa(xi);
    let mut query = vec![g.reward(), xi];
    query.extend(&pa);
    let joint = enumerator.marginal(cbn, Arm::Observe, &query)?;
    let mut total = 0.0;
    for z in 0..(1usize << pa.len()) {
        let at = |y: usize, xv: usize| joint[y | (xv << 1) | (z << 2)];
        let p_xz = at(0, x as usize) + at(1, x as usize);
        if p_xz <= 0.0 {
            return Err(ModelError::Positivity {
                node: xi.0,
                value: x as u8,
                cell: z,
            });
        }
        let p_z = at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1);
        total += at(1, x as usize) / p_xz * p_z;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::generators::gen_experiment3;
    use super::*;
    use crate::admg::Admg;
    use crate::cbn::Cpt;

    #[test]
    fn experiment3_rewards() {
        let cbn = gen_experiment3();
        let g = cbn.graph();
        assert!((exact_reward(&cbn, Arm::Observe).unwrap() - 0.625).abs() < 1e-12);
        for name in ["X2", "X3"] {
            let t = g.find(name).unwrap();
            for value in [false, true] {
                let r = exact_reward(&cbn, Arm::Do { target: t, value }).unwrap();
                assert!((r - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_reward_is_returned_for_every_arm() {
        let mut b = Admg::builder();
        let a = b.node("A");
        let c = b.node("C");
        let y = b.node("Y");
        b.edge(a, c)
            .edge(c, y)
            .intervenable(a)
            .intervenable(c)
            .reward(y);
        let cbn = Cbn::new(
            b.build().unwrap(),
            vec![
                Cpt::constant(a, 0.3),
                Cpt::new(c, vec![a], vec![0.1, 0.9]).unwrap(),
                Cpt::new(y, vec![c], vec![0.35, 0.35]).unwrap(),
            ],
        )
        .unwrap();
        for arm in super::super::arms_of(cbn.graph()) {
            assert!((exact_reward(&cbn, arm).unwrap() - 0.35).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_is_enforced_on_relevant_nodes() {
        let cbn = gen_experiment3();
        let err = Enumerator::new(2).reward(&cbn, Arm::Observe).unwrap_err();
        assert_eq!(
            err,
            ModelError::EnumerationInfeasible {
                needed: 4,
                limit: 2
            }
        );
        // do(X2) leaves X1, X3, Y free.
        let x2 = cbn.graph().find("X2").unwrap();
        assert!(Enumerator::new(3)
            .reward(
                &cbn,
                Arm::Do {
                    target: x2,
                    value: true
                }
            )
            .is_ok());
    }

    #[test]
    fn m_on_parallel_half_probabilities() {
        assert_eq!(m_from_q(&[0.5; 4], &[1; 4], 4), 2);
    }

    #[test]
    fn m_falls_back_to_two_n() {
        // Five entries below every threshold but only τ ≤ 4 allowed.
        assert_eq!(m_from_q(&[0.0; 5], &[1; 5], 2), 4);
        assert_eq!(m_from_q(&[], &[], 0), 2);
    }

    #[test]
    fn backdoor_matches_on_experiment3() {
        let cbn = gen_experiment3();
        let x2 = cbn.graph().find("X2").unwrap();
        let e = Enumerator::default();
        let b = backdoor_reward(&cbn, x2, true, &e).unwrap();
        assert!((b - 0.5).abs() < 1e-12);
        let x1 = cbn.graph().find("X1").unwrap();
        let direct = e.marginal(&cbn, Arm::Observe, &[cbn.reward(), x1]).unwrap();
        let conditional = direct[0b11] / (direct[0b10] + direct[0b11]);
        assert!((backdoor_reward(&cbn, x1, true, &e).unwrap() - conditional).abs() < 1e-12);
    }

    #[test]
    fn backdoor_positivity_violation() {
        let mut b = Admg::builder();
        let z = b.node("Z");
        let x = b.node("X");
        let y = b.node("Y");
        b.edge(z, x).edge(x, y).intervenable(x).reward(y);
        let cbn = Cbn::new(
            b.build().unwrap(),
            vec![
                Cpt::constant(z, 0.5),
                Cpt::new(x, vec![z], vec![0.0, 1.0]).unwrap(),
                Cpt::new(y, vec![x], vec![0.2, 0.7]).unwrap(),
            ],
        )
        .unwrap();
        assert!(matches!(
            backdoor_reward(&cbn, x, true, &Enumerator::default()),
            Err(ModelError::Positivity { .. })
        ));
    }
}
