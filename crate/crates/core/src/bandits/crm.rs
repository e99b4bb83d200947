use rand::Rng;

use super::{argmax, BanditEnv, RegretTrace};
use crate::admg::Admg;
use crate::cbn::ObsRecord;
use crate::error::{ModelError, Result};

/// Observational data kept for one intervenable node.
#[derive(Debug, Clone)]
struct NodeLog {
    column: usize,
    parents: Vec<usize>,
    /// Odd-stream rewards split by `(x, z)`: `cells[x][z]`.
    cells: [Vec<Vec<bool>>; 2],
    /// `prefix[z][e]` counts occurrences of `z` among the first `e`
    /// even-stream records.
    prefix: Vec<Vec<u32>>,
}

impl NodeLog {
    fn z_of(&self, r: &ObsRecord) -> usize {
        self.parents
            .iter()
            .enumerate()
            .fold(0, |acc, (b, &c)| acc | ((r.values[c] as usize) << b))
    }

    fn even_len(&self) -> usize {
        self.prefix[0].len() - 1
    }

    /// `(Σ_c Y_c, C)` for the arm `do(X = x)`.
    fn observational_part(&self, x: usize) -> (f64, usize) {
        let cells = &self.cells[x];
        let e = self.even_len();
        let c = cells.iter().map(Vec::len).min().unwrap_or(0).min(e);
        if c == 0 {
            return (0.0, 0);
        }
        let width = e / c;
        let mut total = 0.0;
        for k in 0..c {
            let start = k * width;
            let end = if k + 1 == c { e } else { start + width };
            let len = (end - start) as f64;
            for (z, cell) in cells.iter().enumerate() {
                if cell[k] {
                    let hits = self.prefix[z][end] - self.prefix[z][start];
                    total += hits as f64 / len;
                }
            }
        }
        (total, c)
    }
}

/// Counts, estimates and observational logs of the cumulative-regret
/// algorithm. Arm indices follow the canonical order.
#[derive(Debug, Clone)]
pub struct CrmState {
    pulls: Vec<u64>,
    /// Rewards collected by direct pulls of each arm.
    hits: Vec<u64>,
    /// Per arm `(Σ_c Y_c, C)`; unused for `do()`.
    observational: Vec<(f64, usize)>,
    means: Vec<f64>,
    ucb: Vec<f64>,
    beta: f64,
    logs: Vec<NodeLog>,
    observations: u64,
}

impl CrmState {
    /// The graph must be fully observable: backdoor adjustment by `Pa(X_i)`.
    pub fn new(graph: &Admg) -> Result<Self> {
        if graph.has_hidden() || !graph.bidirected_edges().is_empty() {
            return Err(ModelError::IncompatibleAlgorithm {
                algorithm: "crm".into(),
                reason: "requires every node to be observable".into(),
            });
        }
        let logs: Vec<NodeLog> = graph
            .intervenable()
            .iter()
            .map(|&x| {
                let parents: Vec<usize> = graph.pa(x).iter().map(|p| p.0).collect();
                let z = 1usize << parents.len();
                NodeLog {
                    column: x.0,
                    parents,
                    cells: [vec![Vec::new(); z], vec![Vec::new(); z]],
                    prefix: vec![vec![0]; z],
                }
            })
            .collect();
        let arms = 1 + 2 * logs.len();
        Ok(CrmState {
            pulls: vec![0; arms],
            hits: vec![0; arms],
            observational: vec![(0.0, 0); arms],
            means: vec![0.0; arms],
            ucb: vec![f64::INFINITY; arms],
            beta: 1.0,
            logs,
            observations: 0,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.pulls.len()
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.pulls[arm]
    }

    pub fn total_pulls(&self) -> u64 {
        self.pulls.iter().sum()
    }

    pub fn estimate(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn ucb(&self, arm: usize) -> f64 {
        self.ucb[arm]
    }

    pub fn ucbs(&self) -> &[f64] {
        &self.ucb
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `C` of an interventional arm: the number of observational pseudo-samples
    /// pooled into its estimate.
    pub fn pooled(&self, arm: usize) -> usize {
        self.observational[arm].1
    }

    /// Sizes of the odd-stream cells of arm `arm` before truncation.
    pub fn cell_sizes(&self, arm: usize) -> Vec<usize> {
        let (i, x) = ((arm - 1) / 2, (arm - 1) % 2);
        self.logs[i].cells[x].iter().map(Vec::len).collect()
    }

    /// Records the outcome of pulling `arm`. Observational pulls alternate
    /// between the odd stream (reward cells) and the even stream (parent
    /// assignments).
    pub fn observe(&mut self, arm: usize, rec: &ObsRecord) {
        self.pulls[arm] += 1;
        self.hits[arm] += rec.reward as u64;
        if arm != 0 {
            return;
        }
        self.observations += 1;
        let odd = self.observations % 2 == 1;
        for log in &mut self.logs {
            let z = log.z_of(rec);
            if odd {
                let x = rec.values[log.column] as usize;
                log.cells[x][z].push(rec.reward);
            } else {
                for (k, p) in log.prefix.iter_mut().enumerate() {
                    let last = *p.last().expect("prefix starts at zero");
                    p.push(last + (k == z) as u32);
                }
            }
        }
        for (i, log) in self.logs.iter().enumerate() {
            for x in 0..2 {
                self.observational[1 + 2 * i + x] = log.observational_part(x);
            }
        }
    }

    /// Recomputes every estimate and upper confidence value at round `t`.
    pub fn refresh(&mut self, t: u64) {
        let ln_t = (t.max(1) as f64).ln();
        for a in 0..self.num_arms() {
            let (extra, c) = if a == 0 {
                (0.0, 0)
            } else {
                self.observational[a]
            };
            let n = self.pulls[a] as f64 + c as f64;
            if n == 0.0 {
                self.means[a] = 0.0;
                self.ucb[a] = f64::INFINITY;
            } else {
                self.means[a] = (self.hits[a] as f64 + extra) / n;
                self.ucb[a] = self.means[a] + (2.0 * ln_t / n).sqrt();
            }
        }
    }

    /// `β = min(2√2 / (μ̂* − μ̂_0), √ln t)` when some arm looks better than
    /// `do()`; unchanged otherwise.
    pub fn update_beta(&mut self, t: u64) {
        let best = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mu0 = self.means[0];
        if mu0 < best {
            let cap = (t.max(1) as f64).ln().sqrt();
            self.beta = (2.0 * 2f64.sqrt() / (best - mu0)).min(cap);
        }
    }

    /// One full round update: counts, estimates, then `β`.
    pub fn update(&mut self, arm: usize, rec: &ObsRecord, t: u64) {
        self.observe(arm, rec);
        self.refresh(t);
        self.update_beta(t);
    }
}

/// Cumulative-regret algorithm for fully observable networks. Every arm is
/// pulled once; afterwards `do()` is pulled whenever it has fewer than
/// `β² ln t` pulls, and the arm with the largest upper confidence value
/// otherwise.
pub fn run_crm<R: Rng + ?Sized>(
    env: &BanditEnv,
    horizon: usize,
    rng: &mut R,
) -> Result<RegretTrace> {
    if !env.is_fully_observable() {
        return Err(ModelError::IncompatibleAlgorithm {
            algorithm: "crm".into(),
            reason: "requires every node to be observable (no hidden confounders)".into(),
        });
    }
    let mut state = CrmState::new(env.visible_graph())?;
    let mut s = env.session(rng);
    let k = s.num_arms();
    let mut t = 0u64;
    for a in 0..k.min(horizon) {
        t += 1;
        let rec = s.pull(a);
        state.update(a, &rec, t);
    }
    while (t as usize) < horizon {
        t += 1;
        let beta = state.beta();
        let a = if (state.pulls(0) as f64) < beta * beta * (t as f64).ln() {
            0
        } else {
            argmax(state.ucbs())
        };
        let rec = s.pull(a);
        state.update(a, &rec, t);
    }
    Ok(s.finish(None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parentless() -> Admg {
        let mut b = Admg::builder();
        let x = b.node("X");
        let y = b.node("Y");
        b.edge(x, y).intervenable(x).reward(y);
        b.build().unwrap()
    }

    fn rec(x: bool, y: bool) -> ObsRecord {
        ObsRecord {
            values: vec![x, y],
            reward: y,
        }
    }

    #[test]
    fn empty_cell_means_pure_interventional_mean() {
        let mut s = CrmState::new(&parentless()).unwrap();
        s.update(2, &rec(true, true), 1);
        s.update(2, &rec(true, false), 2);
        s.update(2, &rec(true, true), 3);
        assert_eq!(s.pooled(2), 0);
        assert!((s.estimate(2) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_cell_pools_odd_stream_rewards() {
        let mut s = CrmState::new(&parentless()).unwrap();
        // Observational: odd X=1,Y=1 ; even ; odd X=1,Y=0 ; even.
        let obs = [
            rec(true, true),
            rec(false, false),
            rec(true, false),
            rec(true, true),
        ];
        let mut t = 0;
        for o in &obs {
            t += 1;
            s.update(0, o, t);
        }
        t += 1;
        s.update(2, &rec(true, true), t);
        assert_eq!(s.pooled(2), 2);
        // (1 interventional hit + 1 + 0) / (1 + 2)
        assert!((s.estimate(2) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.pulls(0), 4);
        assert!((s.estimate(0) - 0.5).abs() < 1e-12);
        let radius = (2.0 * (t as f64).ln() / 3.0).sqrt();
        assert!((s.ucb(2) - s.estimate(2) - radius).abs() < 1e-12);
    }

    #[test]
    fn blocks_weight_cells_by_even_stream_frequencies() {
        let mut b = Admg::builder();
        let z = b.node("Z");
        let x = b.node("X");
        let y = b.node("Y");
        b.edge(z, x).edge(x, y).edge(z, y).intervenable(x).reward(y);
        let g = b.build().unwrap();
        let mut s = CrmState::new(&g).unwrap();
        let r = |zv: bool, xv: bool, yv: bool| ObsRecord {
            values: vec![zv, xv, yv],
            reward: yv,
        };
        // odd: (z0,x1,y1) ; even z0 ; odd (z1,x1,y0) ; even z1 ; odd (z1,x1,y1) ; even z1
        let seq = [
            r(false, true, true),
            r(false, false, false),
            r(true, true, false),
            r(true, false, false),
            r(true, true, true),
            r(true, false, false),
        ];
        for (t, o) in seq.iter().enumerate() {
            s.update(0, o, t as u64 + 1);
        }
        // do(X=1) is arm 2. Cells: z0 -> [1], z1 -> [0, 1]; C = 1.
        assert_eq!(s.cell_sizes(2), vec![1, 2]);
        assert_eq!(s.pooled(2), 1);
        // One block holding all three even records: p(z0) = 1/3, p(z1) = 2/3.
        // Y_1 = 1 * 1/3 + 0 * 2/3.
        assert_eq!(s.pulls(2), 0);
        assert!((s.estimate(2) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn beta_is_capped_and_positive() {
        let mut s = CrmState::new(&parentless()).unwrap();
        s.update(0, &rec(false, false), 1);
        s.update(1, &rec(false, true), 2);
        s.update(2, &rec(true, true), 3);
        assert!(s.beta() > 0.0);
        assert!(s.beta() <= (3f64).ln().sqrt() + 1e-12);
    }

    #[test]
    fn rejects_bidirected_graphs() {
        let mut b = Admg::builder();
        let x = b.node("X");
        let w = b.node("W");
        let y = b.node("Y");
        b.edge(x, y).bidirected(w, y).intervenable(x).reward(y);
        assert!(matches!(
            CrmState::new(&b.build().unwrap()),
            Err(ModelError::IncompatibleAlgorithm { .. })
        ));
    }
}
