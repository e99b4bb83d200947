//! Interventional reward estimates from observational samples.
//!
//! For each intervenable `X_i` the visible graph is reduced to
//! `W = {Y, X_i} ∪ Paᶜ(X_i)`, and a network `D_{i,x}` over `W` (plus a clone
//! of `X_i` fixed to `x`) is built from the c-component factorization of the
//! reduced graph:
//!
//! ```text
//! P(w | do(X_i = x)) = Σ_{X_i} Π_{v ∈ S_i} P(v | Z_v) · Π_{v ∉ S_i} P(v | Z_v)[X_i := x]
//! ```
//!
//! where `Z_v` are the effective parents of `v`. The factors are learned with
//! add-one smoothing and the marginal of `Y` under `D_{i,x}` is the estimate.

use std::collections::BTreeMap;

use rand::Rng;

use crate::admg::{Admg, NodeId, ReducedGraph};
use crate::cbn::{Arm, Cbn, Cpt, Enumerator, ObsRecord, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{ModelError, Result};

/// Conditioning set of `node` in the c-component factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveParents {
    pub node: NodeId,
    pub set: Vec<NodeId>,
}

/// `Z_v = (S_v^≤ ∪ Pa(S_v^≤)) ∖ {v}`, where `S_v^≤` holds the members of
/// `v`'s c-component at or before `v` in `order`.
pub fn effective_parents(h: &Admg, v: NodeId, order: &[NodeId]) -> EffectiveParents {
    let pos = |u: NodeId| order.iter().position(|&o| o == u).unwrap_or(usize::MAX);
    let at = pos(v);
    let mut set = std::collections::BTreeSet::new();
    for u in h.component_of(v) {
        if pos(u) <= at {
            set.insert(u);
            set.extend(h.pa(u));
        }
    }
    set.remove(&v);
    EffectiveParents {
        node: v,
        set: set.into_iter().collect(),
    }
}

/// One factor `P(node | parents)` of a [`DNetwork`]; `parents` are network
/// nodes, so the clone appears in place of `X_i` where it was substituted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub node: NodeId,
    pub parents: Vec<NodeId>,
}

/// The network `D_{i,x}` simulating `do(X_i = x)` on a reduced graph.
///
/// Nodes `0..|W|` are the reduced-graph nodes with the same indices; the
/// clone of `X_i`, when needed, is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct DNetwork {
    /// Reduced graph with the outgoing edges of `X_i` moved to the clone.
    pub graph: Admg,
    /// `origin[k]` is the node of the estimation graph that network node `k`
    /// reads its data from (the clone reads `X_i`).
    pub origin: Vec<NodeId>,
    pub fixed_nodes: BTreeMap<NodeId, bool>,
    pub factors: Vec<Factor>,
    /// One table per network node, keyed by the factor's parents.
    pub learned_cpds: Vec<Cpt>,
    /// `(X_i, x)` in network indexing.
    pub target_arm: (NodeId, bool),
    pub clone: Option<NodeId>,
    /// The c-component of `X_i` in the reduced graph.
    pub component: Vec<NodeId>,
    pub reward: NodeId,
    order: Vec<NodeId>,
}

/// Builds `D_{i,x}` for the reduced graph of `X_i`. `xi` is given in the
/// reduced graph's indexing; `origin` maps reduced nodes to data columns.
pub fn build_d(h: &ReducedGraph, xi: NodeId, x: bool) -> Result<DNetwork> {
    let g = &h.graph;
    if !g.is_intervenable(xi) {
        return Err(ModelError::NotIntervenable(xi.0));
    }
    for &c in g.children(xi) {
        if g.component_of(xi).contains(&c) {
            return Err(ModelError::NotIdentifiable {
                treatment: h.origin[xi.0].0,
                child: h.origin[c.0].0,
            });
        }
    }
    let order = g.topological_order().to_vec();
    let component = g.component_of(xi);
    let zs: Vec<EffectiveParents> = g.nodes().map(|v| effective_parents(g, v, &order)).collect();
    let needs_clone = zs
        .iter()
        .any(|z| !component.contains(&z.node) && z.set.contains(&xi));

    let w = g.len();
    let clone = needs_clone.then_some(NodeId(w));
    let mut b = Admg::builder();
    for v in g.nodes() {
        b.node(g.label(v).to_string());
    }
    if needs_clone {
        b.node(format!("{}'", g.label(xi)));
    }
    for (from, to) in g.directed_edges() {
        match clone {
            Some(c) if from == xi => b.edge(c, to),
            _ => b.edge(from, to),
        };
    }
    for (a, c) in g.bidirected_edges() {
        b.bidirected(a, c);
    }
    b.intervenable(xi).reward(g.reward());
    let graph = b.build()?;

    let mut factors = Vec::with_capacity(w + needs_clone as usize);
    for z in &zs {
        let outside = !component.contains(&z.node);
        let mut parents: Vec<NodeId> = z
            .set
            .iter()
            .map(|&p| match clone {
                Some(c) if outside && p == xi => c,
                _ => p,
            })
            .collect();
        // The clone has the largest index, so the swap can break the order.
        parents.sort();
        factors.push(Factor {
            node: z.node,
            parents,
        });
    }
    let mut origin = h.origin.clone();
    let mut fixed_nodes = BTreeMap::new();
    let mut full_order = Vec::with_capacity(w + 1);
    if let Some(c) = clone {
        factors.push(Factor {
            node: c,
            parents: Vec::new(),
        });
        origin.push(h.origin[xi.0]);
        fixed_nodes.insert(c, x);
        full_order.push(c);
    }
    full_order.extend(order);
    let learned_cpds = factors
        .iter()
        .map(|f| Cpt {
            owner: f.node,
            parent_order: f.parents.clone(),
            table: vec![0.5; 1 << f.parents.len()],
        })
        .collect();
    let mut d = DNetwork {
        graph,
        origin,
        fixed_nodes,
        factors,
        learned_cpds,
        target_arm: (xi, x),
        clone,
        component,
        reward: g.reward(),
        order: full_order,
    };
    d.set_target(x);
    Ok(d)
}

impl DNetwork {
    /// Points the clone at `x`. Learned tables do not depend on `x`, so one
    /// learned network serves both arms of `X_i`.
    pub fn set_target(&mut self, x: bool) {
        self.target_arm.1 = x;
        if let Some(c) = self.clone {
            self.fixed_nodes.insert(c, x);
            self.learned_cpds[c.0] = Cpt::constant(c, if x { 1.0 } else { 0.0 });
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The factorized joint as a network whose edges are the factor
    /// dependencies. The clone is a deterministic root.
    fn factor_network(&self) -> Result<Cbn> {
        let mut b = Admg::builder();
        for v in self.graph.nodes() {
            b.node(self.graph.label(v).to_string());
        }
        for f in &self.factors {
            for &p in &f.parents {
                b.edge(p, f.node);
            }
        }
        b.reward(self.reward);
        Cbn::new(b.build()?, self.learned_cpds.clone())
    }

    /// `P_D(Y = 1)` by enumeration over the network's nodes.
    pub fn exact_reward(&self, limit: usize) -> Result<f64> {
        Enumerator::new(limit).reward(&self.factor_network()?, Arm::Observe)
    }

    /// `P_D(Y = 1)` estimated from `draws` ancestral samples.
    pub fn sampled_reward<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> f64 {
        if draws == 0 {
            return 0.5;
        }
        let mut values = vec![false; self.len()];
        let mut hits = 0usize;
        for _ in 0..draws {
            for &v in &self.order {
                values[v.0] = match self.fixed_nodes.get(&v) {
                    Some(&x) => x,
                    None => rng.gen::<f64>() < self.learned_cpds[v.0].p_one(&values),
                };
            }
            hits += values[self.reward.0] as usize;
        }
        hits as f64 / draws as f64
    }
}

/// Learns every factor of `d` from observational samples with add-one
/// smoothing. Outside the component of `X_i`, cells with fewer than
/// `threshold` matching samples fall back to 1/2.
pub fn learn_d(d: &mut DNetwork, samples: &[ObsRecord], threshold: usize) {
    for (k, f) in d.factors.iter().enumerate() {
        if d.fixed_nodes.contains_key(&f.node) {
            continue;
        }
        let cols: Vec<usize> = f.parents.iter().map(|p| d.origin[p.0].0).collect();
        let own = d.origin[f.node.0].0;
        let cells = 1usize << cols.len();
        let mut total = vec![0u32; cells];
        let mut ones = vec![0u32; cells];
        for s in samples {
            let j = cols
                .iter()
                .enumerate()
                .fold(0, |acc, (b, &c)| acc | ((s.values[c] as usize) << b));
            total[j] += 1;
            ones[j] += s.values[own] as u32;
        }
        let in_component = d.component.contains(&f.node);
        d.learned_cpds[k].table = (0..cells)
            .map(|j| {
                if !in_component && (total[j] as usize) < threshold {
                    0.5
                } else {
                    (ones[j] as f64 + 1.0) / (total[j] as f64 + 2.0)
                }
            })
            .collect();
    }
}

/// Knobs of the estimation pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    /// Minimum matching samples for a learned cell outside `X_i`'s component.
    pub threshold: usize,
    /// Networks with more nodes than this are evaluated by sampling.
    pub enumeration_limit: usize,
    /// Synthetic draws per arm on the sampling path.
    pub sample_budget: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            threshold: 0,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            sample_budget: 10_000,
        }
    }
}

/// Structural part of the pipeline for every intervenable node, computed
/// once per graph.
#[derive(Debug, Clone)]
pub struct EstimationPlan {
    networks: Vec<DNetwork>,
}

impl EstimationPlan {
    /// `g` must be projected and identifiable.
    pub fn new(g: &Admg) -> Result<Self> {
        if g.has_hidden() {
            return Err(ModelError::NotProjected);
        }
        if let crate::admg::Identifiability::Violation {
            treatment, child, ..
        } = g.check_identifiability()?
        {
            return Err(ModelError::NotIdentifiable {
                treatment: treatment.0,
                child: child.0,
            });
        }
        let networks = g
            .intervenable()
            .iter()
            .map(|&xi| {
                let h = g.reduce_graph(xi)?;
                let local = h.local(xi).expect("X_i belongs to W");
                build_d(&h, local, false)
            })
            .collect::<Result<_>>()?;
        Ok(EstimationPlan { networks })
    }

    pub fn networks(&self) -> &[DNetwork] {
        &self.networks
    }

    /// Estimates of every arm, keyed by arm in the graph's indexing.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        samples: &[ObsRecord],
        cfg: &EstimationConfig,
        rng: &mut R,
    ) -> Result<BTreeMap<Arm, f64>> {
        let mut out = BTreeMap::new();
        out.insert(Arm::Observe, empirical_reward(samples));
        for d in &self.networks {
            let mut d = d.clone();
            learn_d(&mut d, samples, cfg.threshold);
            let target = d.origin[d.target_arm.0 .0];
            for x in [false, true] {
                d.set_target(x);
                let mu = if d.len() <= cfg.enumeration_limit {
                    d.exact_reward(cfg.enumeration_limit)?
                } else {
                    d.sampled_reward(cfg.sample_budget, rng)
                };
                out.insert(Arm::Do { target, value: x }, mu);
            }
        }
        Ok(out)
    }
}

/// Plain mean of the observed rewards, 1/2 for no samples.
pub fn empirical_reward(samples: &[ObsRecord]) -> f64 {
    if samples.is_empty() {
        0.5
    } else {
        samples.iter().filter(|s| s.reward).count() as f64 / samples.len() as f64
    }
}

/// Runs the whole pipeline on `g` with the default threshold.
pub fn estimate_all_rewards<R: Rng + ?Sized>(
    g: &Admg,
    samples: &[ObsRecord],
    sample_budget: usize,
    rng: &mut R,
) -> Result<BTreeMap<Arm, f64>> {
    let cfg = EstimationConfig {
        sample_budget,
        ..EstimationConfig::default()
    };
    EstimationPlan::new(g)?.estimate(samples, &cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbn::exact_reward;
    use crate::cbn::generators::gen_experiment3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw(cbn: &Cbn, n: usize, seed: u64) -> Vec<ObsRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| cbn.sample(Arm::Observe, &mut rng)).collect()
    }

    #[test]
    fn effective_parents_cases() {
        let mut b = Admg::builder();
        let a = b.node("A");
        let bb = b.node("B");
        let u = b.node("u");
        let v = b.node("v");
        let p = b.node("P");
        let y = b.node("Y");
        b.edge(a, u)
            .edge(bb, v)
            .edge(p, y)
            .bidirected(u, v)
            .reward(y);
        let g = b.build().unwrap();
        let order = g.topological_order().to_vec();
        assert_eq!(effective_parents(&g, v, &order).set, vec![a, bb, u]);
        assert_eq!(effective_parents(&g, y, &order).set, vec![p]);
        assert!(effective_parents(&g, a, &order).set.is_empty());
    }

    #[test]
    fn chain_gets_one_clone() {
        let mut b = Admg::builder();
        let x = b.node("X");
        let m = b.node("M");
        let y = b.node("Y");
        b.edge(x, m).edge(m, y).intervenable(x).reward(y);
        let g = b.build().unwrap();
        let h = ReducedGraph {
            graph: g.clone(),
            origin: g.nodes().collect(),
        };
        let d = build_d(&h, x, true).unwrap();
        let c = d.clone.unwrap();
        assert_eq!(d.graph.len(), 4);
        assert!(d.graph.children(x).is_empty());
        assert!(d.graph.parents(c).is_empty());
        assert_eq!(d.graph.children(c), &[m]);
        assert_eq!(d.fixed_nodes.get(&c), Some(&true));
        assert_eq!(d.factors[m.0].parents, vec![c]);
    }

    #[test]
    fn no_clone_without_outside_dependence() {
        let mut b = Admg::builder();
        let x = b.node("X");
        let y = b.node("Y");
        b.intervenable(x).reward(y);
        let g = b.build().unwrap();
        let h = ReducedGraph {
            graph: g.clone(),
            origin: g.nodes().collect(),
        };
        let d = build_d(&h, x, false).unwrap();
        assert!(d.clone.is_none());
        assert!(d.fixed_nodes.is_empty());
    }

    #[test]
    fn smoothing_arithmetic() {
        let mut b = Admg::builder();
        let x = b.node("X");
        let y = b.node("Y");
        b.edge(x, y).intervenable(x).reward(y);
        let g = b.build().unwrap();
        let h = g.reduce_graph(x).unwrap();
        let mut d = build_d(&h, x, true).unwrap();
        learn_d(&mut d, &[], 0);
        assert_eq!(d.learned_cpds[x.0].table, vec![0.5]);
        assert_eq!(d.learned_cpds[y.0].table, vec![0.5, 0.5]);
        let rec = ObsRecord {
            values: vec![true, true],
            reward: true,
        };
        learn_d(&mut d, &vec![rec; 10], 0);
        assert_eq!(d.learned_cpds[x.0].table, vec![11.0 / 12.0]);
        // Y given X: the X = 1 cell saw 10 ones.
        assert_eq!(d.learned_cpds[y.0].table, vec![0.5, 11.0 / 12.0]);
        // The threshold only bites outside X's component.
        learn_d(&mut d, &[], 5);
        assert_eq!(d.learned_cpds[x.0].table, vec![0.5]);
        let rec = ObsRecord {
            values: vec![true, false],
            reward: false,
        };
        learn_d(&mut d, &vec![rec; 3], 5);
        assert_eq!(d.learned_cpds[x.0].table, vec![4.0 / 5.0]);
        assert_eq!(d.learned_cpds[y.0].table, vec![0.5, 0.5]);
    }

    #[test]
    fn learned_network_with_true_tables_is_the_interventional_marginal() {
        let cbn = gen_experiment3();
        let g = cbn.visible_graph();
        let plan = EstimationPlan::new(g).unwrap();
        for d in plan.networks() {
            let mut d = d.clone();
            // Exact joint tables in place of learned ones.
            for (k, f) in d.factors.iter().enumerate() {
                if d.fixed_nodes.contains_key(&f.node) {
                    continue;
                }
                let mut query = vec![d.origin[f.node.0]];
                query.extend(f.parents.iter().map(|p| d.origin[p.0]));
                let joint = crate::cbn::exact_marginal(&cbn, Arm::Observe, &query).unwrap();
                d.learned_cpds[k].table = (0..1usize << f.parents.len())
                    .map(|j| {
                        let one = joint[1 | (j << 1)];
                        let zero = joint[j << 1];
                        if one + zero == 0.0 {
                            0.5
                        } else {
                            one / (one + zero)
                        }
                    })
                    .collect();
            }
            let target = d.origin[d.target_arm.0 .0];
            for x in [false, true] {
                d.set_target(x);
                let want = exact_reward(&cbn, Arm::Do { target, value: x }).unwrap();
                assert!((d.exact_reward(22).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn experiment3_estimates_converge() {
        let cbn = gen_experiment3();
        let samples = draw(&cbn, 100_000, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_all_rewards(cbn.visible_graph(), &samples, 1000, &mut rng).unwrap();
        assert_eq!(est.len(), 7);
        let x2 = cbn.graph().find("X2").unwrap();
        assert!(
            (est[&Arm::Do {
                target: x2,
                value: true
            }] - 0.5)
                .abs()
                < 0.02
        );
        assert!((est[&Arm::Observe] - 0.625).abs() < 0.02);
    }

    #[test]
    fn parentless_treatments_reduce_to_smoothed_conditionals() {
        let mut b = Admg::builder();
        let x1 = b.node("X1");
        let x2 = b.node("X2");
        let y = b.node("Y");
        b.edge(x1, y)
            .edge(x2, y)
            .intervenable(x1)
            .intervenable(x2)
            .reward(y);
        let cbn = Cbn::new(
            b.build().unwrap(),
            vec![
                Cpt::constant(x1, 0.3),
                Cpt::constant(x2, 0.6),
                Cpt::new(y, vec![x1, x2], vec![0.1, 0.5, 0.7, 0.9]).unwrap(),
            ],
        )
        .unwrap();
        let samples = draw(&cbn, 2000, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_all_rewards(cbn.visible_graph(), &samples, 0, &mut rng).unwrap();
        for xi in [x1, x2] {
            for x in [false, true] {
                let n = samples.iter().filter(|s| s.get(xi) == x).count() as f64;
                let k = samples
                    .iter()
                    .filter(|s| s.get(xi) == x && s.reward)
                    .count() as f64;
                let want = (k + 1.0) / (n + 2.0);
                let got = est[&Arm::Do {
                    target: xi,
                    value: x,
                }];
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn sampling_path_agrees_with_enumeration() {
        let cbn = gen_experiment3();
        let samples = draw(&cbn, 20_000, 5);
        let plan = EstimationPlan::new(cbn.visible_graph()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let exact = plan
            .estimate(&samples, &EstimationConfig::default(), &mut rng)
            .unwrap();
        let sampled_cfg = EstimationConfig {
            enumeration_limit: 0,
            sample_budget: 200_000,
            ..EstimationConfig::default()
        };
        let sampled = plan.estimate(&samples, &sampled_cfg, &mut rng).unwrap();
        for (arm, mu) in &exact {
            assert!((sampled[arm] - mu).abs() < 0.01, "{arm}");
        }
    }

    #[test]
    fn rejects_unidentifiable_graphs() {
        let mut b = Admg::builder();
        let x = b.node("X");
        let c = b.node("C");
        let y = b.node("Y");
        b.edge(x, c)
            .edge(c, y)
            .bidirected(x, c)
            .intervenable(x)
            .reward(y);
        let g = b.build().unwrap();
        assert!(matches!(
            EstimationPlan::new(&g),
            Err(ModelError::NotIdentifiable { .. })
        ));
    }
}
