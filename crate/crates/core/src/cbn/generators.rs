//! Instance generators.
//!
//! All generators are deterministic functions of their seed and parameters;
//! randomness comes from a ChaCha8 stream seeded with the given `u64`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Arm, Cbn, Cpt};
use crate::admg::{Admg, NodeId};
use crate::error::{ModelError, Result};

/// Layered random instance: `X_1 ≺ … ≺ X_N ≺ Y`, each `X_i` with up to
/// `max_parents` earlier parents, every `X_i` a parent of `Y`, constant
/// conditional probabilities, and one tail node `X_j` driving the reward.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredRecipe {
    pub n: usize,
    pub max_parents: usize,
    /// Number of trailing nodes with the low probability `tail_p`.
    pub tail_count: usize,
    pub tail_p: f64,
    /// Probability for the remaining (head) nodes.
    pub head_p: f64,
    pub eps: f64,
    /// `q` used for `ε' = qε/(1−q)`.
    pub eps_q: f64,
}

/// The generated network together with the recipe facts needed to state its
/// rewards in closed form.
#[derive(Debug, Clone)]
pub struct LayeredInstance {
    pub cbn: Cbn,
    /// The reward-driving node (0-based index among the `X_i`, equal to its node id).
    pub best: NodeId,
    pub recipe: LayeredRecipe,
}

impl LayeredInstance {
    /// Closed-form arm rewards implied by the recipe, in canonical arm order.
    ///
    /// The `X_i` tables ignore their parents, so only `do(X_j = ·)` and the
    /// observational arm move the reward.
    pub fn recipe_rewards(&self) -> Vec<(Arm, f64)> {
        let r = &self.recipe;
        let eps_prime = r.eps_q * r.eps / (1.0 - r.eps_q);
        let pj = if self.best.0 + r.tail_count >= r.n {
            r.tail_p
        } else {
            r.head_p
        };
        let hi = 0.5 + r.eps;
        let lo = 0.5 - eps_prime;
        let mut out = vec![(Arm::Observe, pj * hi + (1.0 - pj) * lo)];
        for i in 0..r.n {
            for value in [false, true] {
                let mu = if i == self.best.0 {
                    if value {
                        hi
                    } else {
                        lo
                    }
                } else {
                    pj * hi + (1.0 - pj) * lo
                };
                out.push((
                    Arm::Do {
                        target: NodeId(i),
                        value,
                    },
                    mu,
                ));
            }
        }
        out
    }
}

pub fn gen_layered(seed: u64, recipe: &LayeredRecipe) -> Result<LayeredInstance> {
    let n = recipe.n;
    if n == 0 {
        return Err(ModelError::InvalidParameter(
            "need at least one node".into(),
        ));
    }
    if recipe.tail_count == 0 || recipe.tail_count > n {
        return Err(ModelError::InvalidParameter(format!(
            "tail count {} must lie in [1, {n}]",
            recipe.tail_count
        )));
    }
    for p in [recipe.tail_p, recipe.head_p] {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidParameter(format!(
                "probability {p} outside [0, 1]"
            )));
        }
    }
    let eps_prime = recipe.eps_q * recipe.eps / (1.0 - recipe.eps_q);
    if !(0.0..=0.5).contains(&recipe.eps) || !(0.0..=0.5).contains(&eps_prime) {
        return Err(ModelError::InvalidParameter(format!(
            "gaps ε = {}, ε' = {eps_prime} leave [0, 1]",
            recipe.eps
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Admg::builder();
    let xs: Vec<NodeId> = (1..=n).map(|i| b.node(format!("X{i}"))).collect();
    let y = b.node("Y");
    for (i, &x) in xs.iter().enumerate() {
        let count = rng.gen_range(0..=recipe.max_parents.min(i));
        let mut chosen: Vec<usize> = sample(&mut rng, i, count).into_vec();
        chosen.sort_unstable();
        for p in chosen {
            b.edge(xs[p], x);
        }
        b.edge(x, y).intervenable(x);
    }
    b.reward(y);
    let graph = b.build()?;

    let tail_start = n - recipe.tail_count;
    let best = NodeId(rng.gen_range(tail_start..n));
    let mut cpts: Vec<Cpt> = xs
        .iter()
        .map(|&x| {
            let p = if x.0 >= tail_start {
                recipe.tail_p
            } else {
                recipe.head_p
            };
            Cpt::constant(x, p)
        })
        .collect();
    cpts.push(Cpt::new(
        y,
        vec![best],
        vec![0.5 - eps_prime, 0.5 + recipe.eps],
    )?);
    Ok(LayeredInstance {
        cbn: Cbn::new(graph, cpts)?,
        best,
        recipe: recipe.clone(),
    })
}

/// Recipe with `tail_count` low-probability nodes at `1/(2·tail_count)`.
pub fn experiment_recipe(n: usize, tail_count: usize, eps: f64) -> LayeredRecipe {
    let tail_p = 1.0 / (2.0 * tail_count as f64);
    LayeredRecipe {
        n,
        max_parents: 2,
        tail_count,
        tail_p,
        head_p: 0.5,
        eps,
        eps_q: tail_p,
    }
}

/// Simple-regret benchmark: `N` intervenable nodes and `m = m_target`
/// (the defaults are `N = 100`, `m = 9`, `ε = 0.3`).
pub fn gen_experiment1(seed: u64, n: usize, m_target: usize, eps: f64) -> Result<LayeredInstance> {
    check_m_target(n, m_target)?;
    gen_layered(seed, &experiment_recipe(n, m_target, eps))
}

fn check_m_target(n: usize, m_target: usize) -> Result<()> {
    if m_target < 8 || m_target > n {
        return Err(ModelError::InvalidParameter(format!(
            "m target {m_target} not reachable with N = {n} (need 8 ≤ m ≤ N)"
        )));
    }
    Ok(())
}

/// Same recipe as [`gen_experiment1`] with the tail sized to hit `m_target`.
///
/// Head nodes with two parents have `q = 1/8`; they stay out of `I_m` only
/// when `1/8 ≥ 1/m`, so targets below 8 are rejected.
pub fn gen_experiment2(seed: u64, n: usize, m_target: usize) -> Result<LayeredInstance> {
    gen_experiment1(seed, n, m_target, 0.3)
}

/// The fixed four-node instance where the observational arm is optimal.
pub fn gen_experiment3() -> Cbn {
    let mut b = Admg::builder();
    let x1 = b.node("X1");
    let x2 = b.node("X2");
    let x3 = b.node("X3");
    let y = b.node("Y");
    b.edge(x1, x2).edge(x1, x3).edge(x2, y).edge(x3, y);
    b.intervenable(x1)
        .intervenable(x2)
        .intervenable(x3)
        .reward(y);
    let graph = b.build().expect("fixed graph is valid");
    let cpts = vec![
        Cpt::constant(x1, 0.5),
        Cpt::new(x2, vec![x1], vec![0.25, 0.75]).expect("valid"),
        Cpt::new(x3, vec![x1], vec![0.25, 0.75]).expect("valid"),
        Cpt::new(y, vec![x2, x3], vec![1.0, 0.0, 0.0, 1.0]).expect("valid"),
    ];
    Cbn::new(graph, cpts).expect("fixed instance is valid")
}

/// Cumulative-regret benchmark where an interventional arm is best:
/// at most one earlier parent per node, all `P(X_i) = 0.5`, and
/// `ε' = ε` since `q = 1/2`.
pub fn gen_experiment5(seed: u64, n: usize, eps: f64) -> Result<LayeredInstance> {
    gen_layered(
        seed,
        &LayeredRecipe {
            n,
            max_parents: 1,
            tail_count: n,
            tail_p: 0.5,
            head_p: 0.5,
            eps,
            eps_q: 0.5,
        },
    )
}

/// A forest over `X_1..X_N` listed in reverse topological order: `parent[i]`,
/// when present, has a larger index than `i`. Leaves feed the reward node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    pub parent: Vec<Option<usize>>,
}

impl TreeShape {
    /// Complete tree with the given branching factor and number of levels.
    pub fn complete(branching: usize, levels: usize) -> Result<Self> {
        if branching < 1 || levels < 1 {
            return Err(ModelError::InvalidParameter(
                "branching and levels must be positive".into(),
            ));
        }
        // Build top-down (root = 0), then reverse so leaves come first.
        let mut top_down: Vec<Option<usize>> = vec![None];
        let mut frontier = vec![0usize];
        for _ in 1..levels {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..branching {
                    top_down.push(Some(p));
                    next.push(top_down.len() - 1);
                }
            }
            frontier = next;
        }
        let n = top_down.len();
        let flip = |i: usize| n - 1 - i;
        let mut parent = vec![None; n];
        for (i, p) in top_down.iter().enumerate() {
            parent[flip(i)] = p.map(flip);
        }
        Ok(TreeShape { parent })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.parent.is_empty() {
            return Err(ModelError::InvalidParameter("empty tree".into()));
        }
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p <= i || p >= self.parent.len() {
                    return Err(ModelError::InvalidParameter(format!(
                        "node {i} has parent {p}; parents must come later in reverse topological order"
                    )));
                }
            }
        }
        Ok(())
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                out[p].push(i);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.children()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest number of nodes on a directed path from a root to the reward
    /// node, the reward node included.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        for i in (0..self.len()).rev() {
            depth[i] = self.parent[i].map_or(1, |p| depth[p] + 1);
        }
        depth.into_iter().max().unwrap_or(0) + 1
    }

    /// Leaves reachable from `i` (itself when it is a leaf).
    fn leaves_below(&self, i: usize, children: &[Vec<usize>]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            if children[v].is_empty() {
                out.push(v);
            }
            stack.extend(&children[v]);
        }
        out.sort_unstable();
        out
    }
}

/// Parameters chosen for the lower-bound family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeLowerBoundParams {
    pub alpha: f64,
    pub eps: f64,
    pub height: usize,
    pub leaves: usize,
}

pub fn tree_lower_bound_params(
    shape: &TreeShape,
    big_m: usize,
    horizon: u64,
) -> TreeLowerBoundParams {
    let h = shape.height();
    let leaves = shape.leaves().len();
    let hf = h as f64;
    let lf = leaves as f64;
    let alpha = (1.0 / (2.0 * hf * lf + 2f64.powi(h as i32 + 1)))
        .min(1.0 / (2f64.powi(h as i32) * lf * big_m as f64));
    let eps = 0.25f64.min((big_m as f64 / (18.0 * horizon as f64)).sqrt());
    TreeLowerBoundParams {
        alpha,
        eps,
        height: h,
        leaves,
    }
}

/// The `M + 1` networks `C_0..C_M` on a tree. `C_0` gives every arm reward
/// 1/2; in `C_i` the arm `do(X_i = 1)` is optimal. All have `m = M`.
///
/// `M` must satisfy `2 ≤ M ≤ N` and either `M ≥ 4` or `M = N`: otherwise the
/// nodes outside the first `M` (with `q = 1/4`) fall into `I_M` as well.
pub fn gen_tree_lower_bound(shape: &TreeShape, big_m: usize, horizon: u64) -> Result<Vec<Cbn>> {
    shape.validate()?;
    let n = shape.len();
    if big_m < 2 || big_m > n || (big_m < 4 && big_m != n) {
        return Err(ModelError::InvalidParameter(format!(
            "M = {big_m} unsupported for N = {n}: need 2 ≤ M ≤ N and (M ≥ 4 or M = N)"
        )));
    }
    if horizon == 0 {
        return Err(ModelError::InvalidParameter(
            "horizon must be positive".into(),
        ));
    }
    let params = tree_lower_bound_params(shape, big_m, horizon);
    let alpha = params.alpha;
    let children = shape.children();
    let all_leaves = shape.leaves();

    let mut b = Admg::builder();
    let xs: Vec<NodeId> = (1..=n).map(|i| b.node(format!("X{i}"))).collect();
    let y = b.node("Y");
    for (i, p) in shape.parent.iter().enumerate() {
        if let Some(p) = *p {
            b.edge(xs[p], xs[i]);
        }
        b.intervenable(xs[i]);
    }
    for &l in &all_leaves {
        b.edge(xs[l], y);
    }
    b.reward(y);
    let graph = b.build()?;

    let x_cpts: Vec<Cpt> = (0..n)
        .map(|i| {
            if i >= big_m {
                Cpt::constant(xs[i], 0.5)
            } else {
                // Edges of T_M need both endpoints among the first M nodes;
                // a node whose parent lies outside is a root of T_M.
                match shape.parent[i].filter(|&p| p < big_m) {
                    None => Cpt::constant(xs[i], alpha),
                    Some(p) => Cpt {
                        owner: xs[i],
                        parent_order: vec![xs[p]],
                        table: vec![alpha, 1.0 - alpha],
                    },
                }
            }
        })
        .collect();

    // Leaves of the tree that belong to the first M nodes.
    let m_leaves: Vec<usize> = all_leaves.iter().copied().filter(|&l| l < big_m).collect();

    let mut out = Vec::with_capacity(big_m + 1);
    let mut c0 = x_cpts.clone();
    c0.push(Cpt::constant(y, 0.5));
    out.push(Cbn::new(graph.clone(), c0)?);

    for i in 0..big_m {
        let below = shape.leaves_below(i, &children);
        let parent_order: Vec<NodeId> = m_leaves.iter().map(|&l| xs[l]).collect();
        let mut table = vec![0.5; 1usize << m_leaves.len()];
        let target: usize = m_leaves
            .iter()
            .enumerate()
            .filter(|(_, l)| below.contains(l))
            .fold(0, |acc, (j, _)| acc | (1 << j));
        table[target] = 0.5 + params.eps;
        let mut cpts = x_cpts.clone();
        cpts.push(Cpt::new(y, parent_order, table)?);
        out.push(Cbn::new(graph.clone(), cpts)?);
    }
    Ok(out)
}
