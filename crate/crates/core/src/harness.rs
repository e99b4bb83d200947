//! Seeded multi-run experiments.
//!
//! A plan lists instance variants, runs per instance, horizons and
//! algorithms. Every run gets its own seed derived from the plan's base seed:
//!
//! ```text
//! s = splitmix64(base);  for v in [instance, run, algorithm id, horizon]: s = splitmix64(s ^ v)
//! ```
//!
//! Instance generators use the same chain over `[variant, instance]` with
//! algorithm id 0. Algorithm ids are srm 1, crm 2, ue 3, sr 4, ucb1 5.
//! Cumulative-regret algorithms run once up to the largest horizon (seeded
//! with that horizon) and are read off at every horizon; simple-regret
//! algorithms run separately per horizon.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandits::{
    run_crm, run_srm, run_successive_rejects, run_ucb1, run_uniform_exploration, BanditEnv,
    BoundParams, CrmArmStats,
};
use crate::cbn::generators::{
    gen_experiment1, gen_experiment2, gen_experiment3, gen_experiment5, gen_tree_lower_bound,
    TreeShape,
};
use crate::cbn::{exact_q_and_m, load_instance, Arm, Cbn, Enumerator, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{ModelError, Result};

/// `splitmix64` step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |s, &v| splitmix64(s ^ v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Srm,
    Crm,
    Ue,
    Sr,
    Ucb1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Srm,
        Algorithm::Crm,
        Algorithm::Ue,
        Algorithm::Sr,
        Algorithm::Ucb1,
    ];

    pub fn id(self) -> u64 {
        match self {
            Algorithm::Srm => 1,
            Algorithm::Crm => 2,
            Algorithm::Ue => 3,
            Algorithm::Sr => 4,
            Algorithm::Ucb1 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Srm => "srm",
            Algorithm::Crm => "crm",
            Algorithm::Ue => "ue",
            Algorithm::Sr => "sr",
            Algorithm::Ucb1 => "ucb1",
        }
    }

    /// Measured by cumulative rather than simple regret.
    pub fn is_cumulative(self) -> bool {
        matches!(self, Algorithm::Crm | Algorithm::Ucb1)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ModelError::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Exp5,
    TreeLb,
    Custom,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Exp5 => "exp5",
            ExperimentId::TreeLb => "tree_lb",
            ExperimentId::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exp1" => ExperimentId::Exp1,
            "exp2" => ExperimentId::Exp2,
            "exp3" => ExperimentId::Exp3,
            "exp5" => ExperimentId::Exp5,
            "tree_lb" | "tree-lb" => ExperimentId::TreeLb,
            "custom" => ExperimentId::Custom,
            _ => {
                return Err(ModelError::InvalidParameter(format!(
                    "unknown experiment '{s}'"
                )))
            }
        })
    }
}

/// Where a variant's instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Exp1 {
        n: usize,
        m: usize,
        eps: f64,
    },
    Exp2 {
        n: usize,
        m: usize,
    },
    Exp3,
    Exp5 {
        n: usize,
        eps: f64,
    },
    /// The `M + 1` networks of the lower-bound family on a complete tree;
    /// instance `k` is `C_k`.
    TreeLb {
        branching: usize,
        levels: usize,
        big_m: usize,
        horizon: u64,
    },
    File {
        path: String,
    },
}

impl InstanceSource {
    fn generate(&self, seed: u64, index: usize) -> Result<Cbn> {
        Ok(match self {
            InstanceSource::Exp1 { n, m, eps } => gen_experiment1(seed, *n, *m, *eps)?.cbn,
            InstanceSource::Exp2 { n, m } => gen_experiment2(seed, *n, *m)?.cbn,
            InstanceSource::Exp3 => gen_experiment3(),
            InstanceSource::Exp5 { n, eps } => gen_experiment5(seed, *n, *eps)?.cbn,
            InstanceSource::TreeLb {
                branching,
                levels,
                big_m,
                horizon,
            } => {
                let shape = TreeShape::complete(*branching, *levels)?;
                let mut family = gen_tree_lower_bound(&shape, *big_m, *horizon)?;
                if index >= family.len() {
                    return Err(ModelError::InvalidParameter(format!(
                        "tree family has {} members, instance {index} requested",
                        family.len()
                    )));
                }
                family.swap_remove(index)
            }
            InstanceSource::File { path } => load_instance(path)?,
        })
    }
}

/// A set of instances sharing one label in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    /// Value on the x axis when variants rather than horizons are compared.
    pub x: Option<f64>,
    pub source: InstanceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub experiment: ExperimentId,
    pub variants: Vec<Variant>,
    /// Instances per variant.
    pub instances: usize,
    pub runs: usize,
    pub horizons: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    /// Estimate arm means by Monte-Carlo when exact enumeration is infeasible.
    pub monte_carlo_fallback: bool,
    /// Largest number of summed-over variables the exact oracle accepts.
    #[serde(default = "default_limit")]
    pub enumeration_limit: usize,
}

fn default_limit() -> usize {
    DEFAULT_ENUMERATION_LIMIT
}

/// Draws per arm for the Monte-Carlo oracle.
pub const MONTE_CARLO_DRAWS: usize = 1_000_000;

impl ExperimentPlan {
    /// The protocol of a named experiment at full size. `n` overrides the
    /// number of intervenable nodes where the experiment has one.
    pub fn canonical(id: ExperimentId, base_seed: u64, n: Option<usize>) -> Result<Self> {
        let plan = |variants, instances, runs, horizons: Vec<u64>, algorithms| ExperimentPlan {
            experiment: id,
            variants,
            instances,
            runs,
            horizons,
            algorithms,
            base_seed,
            monte_carlo_fallback: false,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        };
        let single = |label: &str, source| {
            vec![Variant {
                label: label.to_string(),
                x: None,
                source,
            }]
        };
        use Algorithm::*;
        Ok(match id {
            ExperimentId::Exp1 => plan(
                single(
                    "exp1",
                    InstanceSource::Exp1 {
                        n: n.unwrap_or(100),
                        m: 9,
                        eps: 0.3,
                    },
                ),
                50,
                100,
                vec![500, 1000, 1500, 2000, 2500],
                vec![Srm, Ue, Sr],
            ),
            ExperimentId::Exp2 => {
                let n = n.unwrap_or(100);
                let variants = (10..=50)
                    .step_by(2)
                    .filter(|&m| m <= n)
                    .map(|m| Variant {
                        label: format!("exp2[N={n},m={m}]"),
                        x: Some(m as f64),
                        source: InstanceSource::Exp2 { n, m },
                    })
                    .collect();
                plan(variants, 50, 100, vec![1600], vec![Srm, Ue, Sr])
            }
            ExperimentId::Exp3 => plan(
                single("exp3", InstanceSource::Exp3),
                1,
                30,
                vec![1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000],
                vec![Crm, Ucb1],
            ),
            ExperimentId::Exp5 => plan(
                single(
                    "exp5",
                    InstanceSource::Exp5 {
                        n: n.unwrap_or(10),
                        eps: 0.1,
                    },
                ),
                12,
                30,
                vec![1_000, 2_000, 5_000, 10_000, 20_000, 50_000],
                vec![Crm, Ucb1],
            ),
            ExperimentId::TreeLb => plan(
                single(
                    "tree_lb",
                    InstanceSource::TreeLb {
                        branching: 2,
                        levels: 3,
                        big_m: 5,
                        horizon: 1000,
                    },
                ),
                6,
                100,
                vec![500, 1000, 1500, 2000, 2500],
                vec![Srm, Ue, Sr],
            ),
            ExperimentId::Custom => {
                return Err(ModelError::InvalidParameter(
                    "custom experiments have no canonical plan".into(),
                ))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidParameter(m.to_string()));
        if self.variants.is_empty() || self.algorithms.is_empty() {
            return bad("plan needs at least one variant and one algorithm");
        }
        if self.instances == 0 || self.runs == 0 {
            return bad("instance and run counts must be positive");
        }
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be non-empty and strictly increasing");
        }
        if self.horizons[0] == 0 {
            return bad("horizons must be positive");
        }
        Ok(())
    }

    fn instance_seed(&self, variant: usize, instance: usize) -> u64 {
        mix_seed(self.base_seed, &[variant as u64, instance as u64, 0, 0])
    }

    fn run_seed(&self, instance: u64, run: usize, algorithm: Algorithm, horizon: u64) -> u64 {
        mix_seed(
            self.base_seed,
            &[instance, run as u64, algorithm.id(), horizon],
        )
    }
}

/// Oracle facts about one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub variant: String,
    pub index: usize,
    pub seed: u64,
    /// `exact` or `monte_carlo`.
    pub oracle: String,
    pub arms: Vec<String>,
    pub means: Vec<f64>,
    pub best_arm: String,
    pub best_mean: f64,
    pub q: Option<Vec<f64>>,
    pub k: Option<Vec<usize>>,
    pub m: Option<usize>,
    pub intervenable: usize,
    /// Bound statistics of the interventional arms (fully observable only).
    pub crm_arms: Option<Vec<CrmArmStats>>,
    pub delta0: f64,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub algorithm: Algorithm,
    /// Instance index, or `all` for the pooled row.
    pub instance: String,
    pub horizon: u64,
    pub runs: usize,
    pub mean_regret: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: usize,
    pub instance: usize,
    pub run: usize,
    pub algorithm: Algorithm,
    pub horizon: u64,
    pub seed: u64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub experiment: String,
    pub algorithm: Algorithm,
    pub horizons: Vec<u64>,
    /// Bound with unit constant, averaged over instances.
    pub values: Vec<f64>,
    /// Smallest constant `c` with `c · bound ≥ mean regret` at every horizon.
    pub fitted_constant: f64,
    pub shape_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub plan: ExperimentPlan,
    pub seed_rule: String,
    pub instances: Vec<InstanceSummary>,
    pub rows: Vec<ReportRow>,
    pub runs: Vec<RunRecord>,
    pub bounds: Vec<BoundSeries>,
    pub notes: Vec<String>,
}

pub const CSV_HEADER: &str = "experiment,algorithm,instance,horizon,runs,mean_regret,stderr";

const SEED_RULE: &str = "s = splitmix64(base); for v in [instance, run, algorithm_id, horizon]: \
s = splitmix64(s ^ v); instance = variant * instances + index; cumulative algorithms use the \
largest horizon; generators use [variant, index, 0, 0]";

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct Prepared {
    variant: usize,
    index: usize,
    env: BanditEnv,
    summary: InstanceSummary,
}

fn prepare(plan: &ExperimentPlan, variant: usize, index: usize) -> Result<Prepared> {
    let v = &plan.variants[variant];
    let seed = plan.instance_seed(variant, index);
    let cbn = v.source.generate(seed, index)?;
    let enumerator = Enumerator::new(plan.enumeration_limit);
    let (env, oracle) = match BanditEnv::with_enumerator(cbn.clone(), &enumerator) {
        Ok(env) => (env, "exact"),
        Err(ModelError::EnumerationInfeasible { .. }) if plan.monte_carlo_fallback => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[u64::MAX]));
            let means = BanditEnv::monte_carlo_means(&cbn, MONTE_CARLO_DRAWS, &mut rng);
            (BanditEnv::with_means(cbn.clone(), means), "monte_carlo")
        }
        Err(e) => return Err(e),
    };
    let qm = exact_q_and_m(&cbn, &enumerator).ok();
    let arms = env.arms().to_vec();
    let best = crate::bandits::argmax(env.means());
    let delta0 = env.gap(0);
    let crm_arms = if cbn.is_fully_observable() {
        crm_stats(&cbn, &env, &enumerator).ok()
    } else {
        None
    };
    let summary = InstanceSummary {
        variant: v.label.clone(),
        index,
        seed,
        oracle: oracle.to_string(),
        arms: arms.iter().map(Arm::to_string).collect(),
        means: env.means().to_vec(),
        best_arm: arms[best].to_string(),
        best_mean: env.best_mean(),
        q: qm.as_ref().map(|r| r.q.clone()),
        k: qm.as_ref().map(|r| r.k.clone()),
        m: qm.as_ref().map(|r| r.m),
        intervenable: cbn.visible_graph().intervenable().len(),
        crm_arms,
        delta0,
    };
    Ok(Prepared {
        variant,
        index,
        env,
        summary,
    })
}

/// Gaps, `p_{i,x}` and `Z_i` for every interventional arm.
fn crm_stats(cbn: &Cbn, env: &BanditEnv, e: &Enumerator) -> Result<Vec<CrmArmStats>> {
    let g = cbn.graph();
    let mut out = Vec::new();
    for (i, &x) in g.intervenable().iter().enumerate() {
        let pa = g.pa(x);
        let mut query = vec![x];
        query.extend(&pa);
        let joint = e.marginal(cbn, Arm::Observe, &query)?;
        for value in 0..2usize {
            let p = (0..1usize << pa.len())
                .map(|z| joint[value | (z << 1)])
                .fold(f64::INFINITY, f64::min);
            out.push(CrmArmStats {
                gap: env.gap(1 + 2 * i + value),
                p,
                z: 1 << pa.len(),
            });
        }
    }
    Ok(out)
}

struct Task {
    instance: usize,
    run: usize,
    algorithm: Algorithm,
}

/// Regrets of one task at each plan horizon.
fn run_task(plan: &ExperimentPlan, prep: &Prepared, t: &Task) -> Result<Vec<(u64, u64, f64)>> {
    let global = (prep.variant * plan.instances + prep.index) as u64;
    let max_h = *plan.horizons.last().expect("validated");
    let env = &prep.env;
    if t.algorithm.is_cumulative() {
        let seed = plan.run_seed(global, t.run, t.algorithm, max_h);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = match t.algorithm {
            Algorithm::Crm => run_crm(env, max_h as usize, &mut rng)?,
            _ => run_ucb1(env, max_h as usize, &mut rng),
        };
        return Ok(plan
            .horizons
            .iter()
            .map(|&h| (h, seed, trace.cumulative_at(h as usize)))
            .collect());
    }
    plan.horizons
        .iter()
        .map(|&h| {
            let seed = plan.run_seed(global, t.run, t.algorithm, h);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = match t.algorithm {
                Algorithm::Srm => run_srm(env, h as usize, &mut rng)?.1,
                Algorithm::Ue => run_uniform_exploration(env, h as usize, &mut rng),
                _ => run_successive_rejects(env, h as usize, &mut rng)?,
            };
            Ok((h, seed, trace.simple_regret))
        })
        .collect()
}

/// Runs the plan on `jobs` threads (0 = all available). The report depends
/// only on the plan.
pub fn execute(plan: &ExperimentPlan, jobs: usize) -> Result<RegretReport> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ModelError::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| execute_inner(plan))
}

fn execute_inner(plan: &ExperimentPlan) -> Result<RegretReport> {
    let keys: Vec<(usize, usize)> = (0..plan.variants.len())
        .flat_map(|v| (0..plan.instances).map(move |i| (v, i)))
        .collect();
    let prepared: Vec<Prepared> = keys
        .par_iter()
        .map(|&(v, i)| prepare(plan, v, i))
        .collect::<Result<_>>()?;

    let tasks: Vec<Task> = (0..prepared.len())
        .flat_map(|instance| {
            (0..plan.runs).flat_map(move |run| {
                plan.algorithms.iter().map(move |&algorithm| Task {
                    instance,
                    run,
                    algorithm,
                })
            })
        })
        .collect();
    let results: Vec<Vec<(u64, u64, f64)>> = tasks
        .par_iter()
        .map(|t| run_task(plan, &prepared[t.instance], t))
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(results.len() * plan.horizons.len());
    for (t, res) in tasks.iter().zip(&results) {
        let p = &prepared[t.instance];
        for &(horizon, seed, regret) in res {
            runs.push(RunRecord {
                variant: p.variant,
                instance: p.index,
                run: t.run,
                algorithm: t.algorithm,
                horizon,
                seed,
                regret,
            });
        }
    }
    runs.sort_by(|a, b| {
        (a.variant, a.algorithm, a.horizon, a.instance, a.run).cmp(&(
            b.variant,
            b.algorithm,
            b.horizon,
            b.instance,
            b.run,
        ))
    });

    let mut rows = Vec::new();
    for (vi, variant) in plan.variants.iter().enumerate() {
        let mut algorithms = plan.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        for &alg in &algorithms {
            for &h in &plan.horizons {
                let cell: Vec<&RunRecord> = runs
                    .iter()
                    .filter(|r| r.variant == vi && r.algorithm == alg && r.horizon == h)
                    .collect();
                for inst in 0..plan.instances {
                    let vals: Vec<f64> = cell
                        .iter()
                        .filter(|r| r.instance == inst)
                        .map(|r| r.regret)
                        .collect();
                    let (mean, se) = mean_and_stderr(&vals);
                    rows.push(ReportRow {
                        experiment: variant.label.clone(),
                        algorithm: alg,
                        instance: inst.to_string(),
                        horizon: h,
                        runs: vals.len(),
                        mean_regret: mean,
                        stderr: se,
                    });
                }
                let vals: Vec<f64> = cell.iter().map(|r| r.regret).collect();
                let (mean, se) = mean_and_stderr(&vals);
                rows.push(ReportRow {
                    experiment: variant.label.clone(),
                    algorithm: alg,
                    instance: "all".into(),
                    horizon: h,
                    runs: vals.len(),
                    mean_regret: mean,
                    stderr: se,
                });
            }
        }
    }

    let mut notes = Vec::new();
    if prepared.iter().any(|p| p.summary.oracle == "monte_carlo") {
        notes.push(format!(
            "some arm means are Monte-Carlo estimates from {MONTE_CARLO_DRAWS} draws per arm"
        ));
    }
    Ok(RegretReport {
        plan: plan.clone(),
        seed_rule: SEED_RULE.to_string(),
        instances: prepared.into_iter().map(|p| p.summary).collect(),
        rows,
        runs,
        bounds: Vec::new(),
        notes,
    })
}

/// Appends bound curves (unit constant, averaged over instances) for SRM and
/// CRM rows. The CRM curve is skipped with a note when `do()` is optimal on
/// some instance, since the bound then reduces to a constant.
pub fn overlay_bounds(report: &mut RegretReport) -> Result<()> {
    let horizons = report.plan.horizons.clone();
    let mut series = Vec::new();
    for variant in &report.plan.variants {
        let insts: Vec<&InstanceSummary> = report
            .instances
            .iter()
            .filter(|s| s.variant == variant.label)
            .collect();
        let all_row = |alg: Algorithm, h: u64| {
            report.rows.iter().find(|r| {
                r.experiment == variant.label
                    && r.algorithm == alg
                    && r.horizon == h
                    && r.instance == "all"
            })
        };
        for alg in [Algorithm::Srm, Algorithm::Crm] {
            if !report.plan.algorithms.contains(&alg) {
                continue;
            }
            let mut values = Vec::with_capacity(horizons.len());
            let mut skipped = false;
            for &h in &horizons {
                let mut total = 0.0;
                for s in &insts {
                    let params = match alg {
                        Algorithm::Srm => BoundParams::Srm {
                            m: s.m.ok_or_else(|| missing("m", s))?,
                            n: s.intervenable,
                            horizon: h,
                        },
                        _ => {
                            if s.delta0 <= 0.0 {
                                skipped = true;
                                break;
                            }
                            BoundParams::Crm {
                                delta0: s.delta0,
                                arms: s.crm_arms.clone().ok_or_else(|| missing("crm stats", s))?,
                                horizon: h,
                            }
                        }
                    };
                    total += crate::bandits::theorem_bounds(&params);
                }
                if skipped {
                    break;
                }
                values.push(total / insts.len() as f64);
            }
            if skipped {
                report.notes.push(format!(
                    "{}: crm bound skipped, the observational arm is optimal (Δ₀ = 0)",
                    variant.label
                ));
                continue;
            }
            let fitted_constant = horizons
                .iter()
                .zip(&values)
                .filter_map(|(&h, &b)| all_row(alg, h).map(|r| r.mean_regret / b))
                .fold(0.0, f64::max);
            series.push(BoundSeries {
                experiment: variant.label.clone(),
                algorithm: alg,
                horizons: horizons.clone(),
                values,
                fitted_constant,
                shape_only: true,
            });
        }
    }
    report.bounds.extend(series);
    Ok(())
}

fn missing(what: &str, s: &InstanceSummary) -> ModelError {
    ModelError::InvalidParameter(format!(
        "instance {} of {} lacks oracle {what}",
        s.index, s.variant
    ))
}

impl RegretReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.experiment, r.algorithm, r.instance, r.horizon, r.runs, r.mean_regret, r.stderr
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The pooled row of an algorithm at a horizon for a variant label.
    pub fn pooled(&self, experiment: &str, alg: Algorithm, horizon: u64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.experiment == experiment
                && r.algorithm == alg
                && r.horizon == horizon
                && r.instance == "all"
        })
    }

    /// Line chart of pooled mean regret: one series per algorithm, x is the
    /// horizon, or the variant's `x` when the plan has a single horizon and
    /// several variants.
    pub fn to_svg(&self) -> String {
        let by_variant = self.plan.horizons.len() == 1
            && self.plan.variants.len() > 1
            && self.plan.variants.iter().all(|v| v.x.is_some());
        let mut algorithms = self.plan.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for &alg in &algorithms {
            if by_variant {
                let pts = self
                    .plan
                    .variants
                    .iter()
                    .filter_map(|v| {
                        self.pooled(&v.label, alg, self.plan.horizons[0])
                            .map(|r| (v.x.unwrap_or(0.0), r.mean_regret))
                    })
                    .collect();
                series.push((alg.name().to_string(), pts));
            } else {
                for v in &self.plan.variants {
                    let pts = self
                        .plan
                        .horizons
                        .iter()
                        .filter_map(|&h| {
                            self.pooled(&v.label, alg, h)
                                .map(|r| (h as f64, r.mean_regret))
                        })
                        .collect();
                    let name = if self.plan.variants.len() > 1 {
                        format!("{} {}", alg.name(), v.label)
                    } else {
                        alg.name().to_string()
                    };
                    series.push((name, pts));
                }
            }
        }
        let x_label = if by_variant { "m" } else { "horizon" };
        render_svg(&series, x_label, "mean regret", self.plan.experiment.name())
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn render_svg(
    series: &[(String, Vec<(f64, f64)>)],
    x_label: &str,
    y_label: &str,
    title: &str,
) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - y / y1 * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#,
        left + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y1 * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            top + ph + 16.0,
            format_tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(fy) + 4.0,
            format_tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = p
            .iter()
            .enumerate()
            .map(|(j, &(x, y))| {
                format!(
                    "{}{:.1} {:.1}",
                    if j == 0 { "M" } else { "L" },
                    sx(x),
                    sy(y)
                )
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in p {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 12.0,
            left + pw + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + pw + 38.0,
            ly + 4.0,
            name
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}
