//! Acyclic directed mixed graphs.
//!
//! Directed edges are causal links, bidirected edges stand for a latent
//! common parent. A graph may also carry explicit hidden nodes; those are
//! removed by [`Admg::latent_projection`], which turns every hidden parent of
//! two observable nodes into a bidirected edge.
//!
//! Node identity is a dense index. Labels are only carried along for display
//! and file round-trips.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Dense node index into an [`Admg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A mixed graph with a designated reward node and a set of intervenable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Admg {
    labels: Vec<String>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    spouses: Vec<Vec<NodeId>>,
    hidden: Vec<bool>,
    intervenable: Vec<NodeId>,
    reward: NodeId,
    topo: Vec<NodeId>,
}

/// Incremental constructor for [`Admg`]; validation happens in [`AdmgBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct AdmgBuilder {
    labels: Vec<String>,
    hidden: Vec<bool>,
    directed: Vec<(usize, usize)>,
    bidirected: Vec<(usize, usize)>,
    intervenable: Vec<usize>,
    reward: Option<usize>,
}

impl AdmgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observable node.
    pub fn node(&mut self, label: impl Into<String>) -> NodeId {
        self.labels.push(label.into());
        self.hidden.push(false);
        NodeId(self.labels.len() - 1)
    }

    pub fn hidden_node(&mut self, label: impl Into<String>) -> NodeId {
        self.labels.push(label.into());
        self.hidden.push(true);
        NodeId(self.labels.len() - 1)
    }

    pub fn edge(&mut self, from: NodeId, to: NodeId) -> &mut Self {
        self.directed.push((from.0, to.0));
        self
    }

    pub fn bidirected(&mut self, a: NodeId, b: NodeId) -> &mut Self {
        self.bidirected.push((a.0, b.0));
        self
    }

    pub fn intervenable(&mut self, v: NodeId) -> &mut Self {
        self.intervenable.push(v.0);
        self
    }

    pub fn reward(&mut self, y: NodeId) -> &mut Self {
        self.reward = Some(y.0);
        self
    }

    pub fn build(&self) -> Result<Admg> {
        let n = self.labels.len();
        let check = |i: usize| {
            if i >= n {
                Err(ModelError::NodeOutOfRange { index: i, len: n })
            } else {
                Ok(())
            }
        };

        let mut parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut children: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(a, b) in &self.directed {
            check(a)?;
            check(b)?;
            if a == b {
                return Err(ModelError::SelfLoop(a));
            }
            parents[b].insert(a);
            children[a].insert(b);
        }

        let mut spouses: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(a, b) in &self.bidirected {
            check(a)?;
            check(b)?;
            if a == b {
                return Err(ModelError::SelfLoop(a));
            }
            if self.hidden[a] || self.hidden[b] {
                return Err(ModelError::InvalidGraph(format!(
                    "bidirected edge {a}<->{b} touches a hidden node"
                )));
            }
            spouses[a].insert(b);
            spouses[b].insert(a);
        }

        let reward = self
            .reward
            .ok_or_else(|| ModelError::InvalidGraph("no reward node".into()))?;
        check(reward)?;
        if self.hidden[reward] {
            return Err(ModelError::InvalidGraph("reward node is hidden".into()));
        }

        let mut intervenable = BTreeSet::new();
        for &x in &self.intervenable {
            check(x)?;
            if x == reward {
                return Err(ModelError::InvalidGraph(
                    "reward node cannot be intervenable".into(),
                ));
            }
            if self.hidden[x] {
                return Err(ModelError::InvalidGraph(format!(
                    "hidden node {x} cannot be intervenable"
                )));
            }
            intervenable.insert(x);
        }

        let to_ids = |sets: Vec<BTreeSet<usize>>| -> Vec<Vec<NodeId>> {
            sets.into_iter()
                .map(|s| s.into_iter().map(NodeId).collect())
                .collect()
        };
        let parents = to_ids(parents);
        let topo = topological_sort(&parents)?;

        Ok(Admg {
            labels: self.labels.clone(),
            parents,
            children: to_ids(children),
            spouses: to_ids(spouses),
            hidden: self.hidden.clone(),
            intervenable: intervenable.into_iter().map(NodeId).collect(),
            reward: NodeId(reward),
            topo,
        })
    }
}

/// Kahn's algorithm with the smallest available index released first.
fn topological_sort(parents: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for p in ps {
            children[p.0].push(v);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(NodeId(v));
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        return Err(ModelError::Cycle);
    }
    Ok(order)
}

/// The c-component of an intervenable node together with its parent closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentContext {
    /// `S_i`, the c-component containing the node.
    pub component: Vec<NodeId>,
    /// `S_i` together with the observable parents of its members.
    pub pa_plus: Vec<NodeId>,
    /// `pa_plus` without the node itself.
    pub pa_c: Vec<NodeId>,
    /// `|S_i|`.
    pub k: usize,
}

/// Outcome of the identifiability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Identifiability {
    Identifiable,
    /// A bidirected path from an intervenable node to one of its children.
    Violation {
        treatment: NodeId,
        child: NodeId,
        path: Vec<NodeId>,
    },
}

impl Identifiability {
    pub fn is_identifiable(&self) -> bool {
        matches!(self, Identifiability::Identifiable)
    }
}

/// Output of [`Admg::reduce_graph`]: the reduced graph plus the map back to
/// the node indices of the graph it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    pub graph: Admg,
    /// `origin[k]` is the source-graph node of reduced node `k`.
    pub origin: Vec<NodeId>,
}

impl ReducedGraph {
    pub fn local(&self, source: NodeId) -> Option<NodeId> {
        self.origin.iter().position(|&o| o == source).map(NodeId)
    }
}

impl Admg {
    pub fn builder() -> AdmgBuilder {
        AdmgBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).map(NodeId)
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId)
    }

    pub fn is_hidden(&self, v: NodeId) -> bool {
        self.hidden[v.0]
    }

    pub fn has_hidden(&self) -> bool {
        self.hidden.iter().any(|&h| h)
    }

    pub fn hidden_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.hidden[v.0]).collect()
    }

    pub fn observable_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| !self.hidden[v.0]).collect()
    }

    pub fn reward(&self) -> NodeId {
        self.reward
    }

    pub fn intervenable(&self) -> &[NodeId] {
        &self.intervenable
    }

    pub fn is_intervenable(&self, v: NodeId) -> bool {
        self.intervenable.binary_search(&v).is_ok()
    }

    /// All directed parents, hidden ones included.
    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    /// Bidirected neighbours.
    pub fn spouses(&self, v: NodeId) -> &[NodeId] {
        &self.spouses[v.0]
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes()
            .flat_map(|v| self.children[v.0].iter().map(move |&c| (v, c)))
            .collect()
    }

    /// Bidirected edges as `(a, b)` with `a < b`.
    pub fn bidirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes()
            .flat_map(|v| {
                self.spouses[v.0]
                    .iter()
                    .filter(move |&&s| s > v)
                    .map(move |&s| (v, s))
            })
            .collect()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.children[from.0].binary_search(&to).is_ok()
    }

    pub fn has_bidirected(&self, a: NodeId, b: NodeId) -> bool {
        self.spouses[a.0].binary_search(&b).is_ok()
    }

    /// Topological order of all nodes, ties broken by ascending index.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Observable parents `Pa(v)`.
    pub fn pa(&self, v: NodeId) -> Vec<NodeId> {
        self.parents[v.0]
            .iter()
            .copied()
            .filter(|p| !self.hidden[p.0])
            .collect()
    }

    /// Partition of the observable nodes into c-components.
    ///
    /// Components are sorted internally and ordered by their smallest member.
    pub fn c_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in self.nodes() {
            if seen[start.0] || self.hidden[start.0] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start.0] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &s in &self.spouses[v.0] {
                    if !seen[s.0] {
                        seen[s.0] = true;
                        stack.push(s);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// The c-component containing `v`.
    pub fn component_of(&self, v: NodeId) -> Vec<NodeId> {
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &s in &self.spouses[u.0] {
                if seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// `S_i`, `Pa⁺(S_i)`, `Paᶜ(X_i)` and `k_i` for an intervenable node.
    pub fn pa_plus_and_pa_c(&self, xi: NodeId) -> Result<ComponentContext> {
        if !self.is_intervenable(xi) {
            return Err(ModelError::NotIntervenable(xi.0));
        }
        let component = self.component_of(xi);
        let mut pa_plus: BTreeSet<NodeId> = component.iter().copied().collect();
        for &v in &component {
            pa_plus.extend(self.pa(v));
        }
        let pa_plus: Vec<NodeId> = pa_plus.into_iter().collect();
        let pa_c = pa_plus.iter().copied().filter(|&v| v != xi).collect();
        Ok(ComponentContext {
            k: component.len(),
            component,
            pa_plus,
            pa_c,
        })
    }

    /// Replaces every hidden node by a bidirected edge between its two
    /// children and re-indexes the observable nodes densely in their original
    /// order. Hidden nodes with fewer than two children disappear.
    pub fn latent_projection(&self) -> Result<Admg> {
        let observable = self.observable_nodes();
        let mut new_index = vec![usize::MAX; self.len()];
        for (k, v) in observable.iter().enumerate() {
            new_index[v.0] = k;
        }

        let mut b = AdmgBuilder::new();
        for &v in &observable {
            b.node(self.labels[v.0].clone());
        }
        for (from, to) in self.directed_edges() {
            if !self.hidden[from.0] && !self.hidden[to.0] {
                b.directed.push((new_index[from.0], new_index[to.0]));
            }
        }
        for (a, c) in self.bidirected_edges() {
            b.bidirected.push((new_index[a.0], new_index[c.0]));
        }
        for u in self.hidden_nodes() {
            if !self.parents[u.0].is_empty() {
                return Err(ModelError::SemiMarkovViolation {
                    node: u.0,
                    reason: "hidden node has parents".into(),
                });
            }
            let kids = &self.children[u.0];
            if kids.len() > 2 {
                return Err(ModelError::SemiMarkovViolation {
                    node: u.0,
                    reason: format!("hidden node has {} children", kids.len()),
                });
            }
            if kids.len() == 2 {
                b.bidirected
                    .push((new_index[kids[0].0], new_index[kids[1].0]));
            }
        }
        for &x in &self.intervenable {
            b.intervenable.push(new_index[x.0]);
        }
        b.reward = Some(new_index[self.reward.0]);
        b.build()
    }

    /// Checks that no intervenable node reaches one of its children through
    /// bidirected edges only. Returns the first violation found, scanning
    /// treatments and children by ascending index.
    pub fn check_identifiability(&self) -> Result<Identifiability> {
        if self.has_hidden() {
            return Err(ModelError::NotProjected);
        }
        for &x in &self.intervenable {
            let n = self.len();
            let mut prev: Vec<Option<NodeId>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[x.0] = true;
            let mut queue = VecDeque::from([x]);
            while let Some(v) = queue.pop_front() {
                for &s in &self.spouses[v.0] {
                    if !seen[s.0] {
                        seen[s.0] = true;
                        prev[s.0] = Some(v);
                        queue.push_back(s);
                    }
                }
            }
            for &c in &self.children[x.0] {
                if seen[c.0] {
                    let mut path = vec![c];
                    let mut cur = c;
                    while let Some(p) = prev[cur.0] {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Ok(Identifiability::Violation {
                        treatment: x,
                        child: c,
                        path,
                    });
                }
            }
        }
        Ok(Identifiability::Identifiable)
    }

    /// Reduces the graph to `W = {Y, X_i} ∪ Paᶜ(X_i)` by treating every other
    /// node as unobservable and projecting it out.
    ///
    /// Between two `W` nodes the reduced graph has a directed edge `a → b` when
    /// `g` has a directed path from `a` to `b` whose interior avoids `W`, and a
    /// bidirected edge when both are reached from a common latent source (an
    /// outside node or an existing bidirected edge) along such paths.
    pub fn reduce_graph(&self, xi: NodeId) -> Result<ReducedGraph> {
        if self.has_hidden() {
            return Err(ModelError::NotProjected);
        }
        let ctx = self.pa_plus_and_pa_c(xi)?;
        let mut keep: BTreeSet<NodeId> = ctx.pa_c.iter().copied().collect();
        keep.insert(xi);
        keep.insert(self.reward);
        let origin: Vec<NodeId> = keep.into_iter().collect();
        let n = self.len();
        let mut local = vec![usize::MAX; n];
        for (k, v) in origin.iter().enumerate() {
            local[v.0] = k;
        }
        let in_w = |v: NodeId| local[v.0] != usize::MAX;

        // Latent sources: outside nodes are encoded by their index, a
        // pre-existing bidirected edge (a, b) by n + position in `bi`.
        let bi = self.bidirected_edges();
        let bi_key = |a: NodeId, b: NodeId| {
            let key = if a < b { (a, b) } else { (b, a) };
            n + bi.binary_search(&key).expect("bidirected edge listed")
        };

        let mut builder = AdmgBuilder::new();
        for &v in &origin {
            builder.node(self.labels[v.0].clone());
        }
        let mut sources: Vec<BTreeSet<usize>> = Vec::with_capacity(origin.len());
        for (k, &w) in origin.iter().enumerate() {
            let mut latent = BTreeSet::new();
            let mut visited = vec![false; n];
            let mut stack = vec![w];
            visited[w.0] = true;
            while let Some(v) = stack.pop() {
                for &s in &self.spouses[v.0] {
                    latent.insert(bi_key(v, s));
                }
                for &p in &self.parents[v.0] {
                    if in_w(p) {
                        builder.directed.push((local[p.0], k));
                    } else if !visited[p.0] {
                        visited[p.0] = true;
                        latent.insert(p.0);
                        stack.push(p);
                    }
                }
            }
            sources.push(latent);
        }
        for a in 0..origin.len() {
            for b in (a + 1)..origin.len() {
                if !sources[a].is_disjoint(&sources[b]) {
                    builder.bidirected.push((a, b));
                }
            }
        }
        for &x in &self.intervenable {
            if in_w(x) {
                builder.intervenable.push(local[x.0]);
            }
        }
        builder.reward = Some(local[self.reward.0]);
        Ok(ReducedGraph {
            graph: builder.build()?,
            origin,
        })
    }

    /// All nodes with a directed path into any of `targets`, targets included.
    pub fn ancestors_of(&self, targets: &[NodeId]) -> BTreeSet<NodeId> {
        let mut seen: BTreeSet<NodeId> = targets.iter().copied().collect();
        let mut stack: Vec<NodeId> = targets.to_vec();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v.0] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }
}
