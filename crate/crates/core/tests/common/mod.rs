#![allow(dead_code)]

use causal_bandits::{Admg, Cbn, Cpt, NodeId};
use proptest::prelude::*;
use rand::Rng;

/// Edge description of a projected graph over `n` nodes; node `n - 1` is the
/// reward and every other node is intervenable.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub n: usize,
    pub directed: Vec<(usize, usize)>,
    pub bidirected: Vec<(usize, usize)>,
}

impl GraphSpec {
    pub fn build(&self) -> Admg {
        let mut b = Admg::builder();
        let ids: Vec<NodeId> = (0..self.n).map(|i| b.node(format!("V{i}"))).collect();
        for &(a, c) in &self.directed {
            b.edge(ids[a], ids[c]);
        }
        for &(a, c) in &self.bidirected {
            b.bidirected(ids[a], ids[c]);
        }
        for &v in &ids[..self.n - 1] {
            b.intervenable(v);
        }
        b.reward(ids[self.n - 1]);
        b.build().expect("forward edges form a DAG")
    }
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |c| (a, c)))
        .collect()
}

/// Random projected ADMGs: directed edges only go forward in index order.
pub fn graph_spec(max_nodes: usize) -> impl Strategy<Value = GraphSpec> {
    (2..=max_nodes).prop_flat_map(|n| {
        let k = n * (n - 1) / 2;
        (
            Just(n),
            proptest::collection::vec(0u8..10, k),
            proptest::collection::vec(0u8..10, k),
        )
            .prop_map(|(n, d, bi)| {
                let all = pairs(n);
                GraphSpec {
                    n,
                    directed: all
                        .iter()
                        .zip(&d)
                        .filter(|(_, &r)| r < 3)
                        .map(|(&p, _)| p)
                        .collect(),
                    bidirected: all
                        .iter()
                        .zip(&bi)
                        .filter(|(_, &r)| r < 2)
                        .map(|(&p, _)| p)
                        .collect(),
                }
            })
    })
}

/// Components of the bidirected part by union-find.
pub fn union_find_components(n: usize, bidirected: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(a, b) in bidirected {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(v);
    }
    groups
}

fn random_table<R: Rng>(rng: &mut R, parents: usize) -> Vec<f64> {
    (0..1usize << parents)
        .map(|_| rng.gen_range(0.1..0.9))
        .collect()
}

/// Random binary network on `n` observable nodes (last is the reward) with
/// up to `max_parents` observable parents per node and `hidden` confounders,
/// each with two observable children.
pub fn random_cbn<R: Rng>(rng: &mut R, n: usize, max_parents: usize, hidden: usize) -> Cbn {
    let mut b = Admg::builder();
    let ids: Vec<NodeId> = (0..n).map(|i| b.node(format!("V{i}"))).collect();
    let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n + hidden];
    for v in 1..n {
        let want = rng.gen_range(0..=max_parents.min(v));
        let mut chosen: Vec<usize> = rand::seq::index::sample(rng, v, want).into_vec();
        chosen.sort_unstable();
        for p in chosen {
            b.edge(ids[p], ids[v]);
            parents[v].push(ids[p]);
        }
    }
    if n >= 2 {
        for u in 0..hidden {
            let h = b.hidden_node(format!("U{u}"));
            let kids = rand::seq::index::sample(rng, n, 2).into_vec();
            for k in kids {
                b.edge(h, ids[k]);
                parents[k].push(h);
            }
        }
    }
    for &v in &ids[..n - 1] {
        b.intervenable(v);
    }
    b.reward(ids[n - 1]);
    let g = b.build().expect("forward edges");
    let cpts = (0..g.len())
        .map(|v| {
            let mut ps = parents[v].clone();
            ps.sort();
            let table = random_table(rng, ps.len());
            Cpt::new(NodeId(v), ps, table).expect("valid table")
        })
        .collect();
    Cbn::new(g, cpts).expect("valid network")
}
