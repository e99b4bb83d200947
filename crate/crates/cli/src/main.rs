use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causal_bandits::admg::Identifiability;
use causal_bandits::bandits::BanditEnv;
use causal_bandits::cbn::generators::{
    gen_experiment1, gen_experiment2, gen_experiment3, gen_experiment5, gen_tree_lower_bound,
    TreeShape,
};
use causal_bandits::cbn::{
    exact_q_and_m, load_instance, save_instance, Enumerator, DEFAULT_ENUMERATION_LIMIT,
};
use causal_bandits::harness::{
    execute, overlay_bounds, Algorithm, ExperimentId, ExperimentPlan, InstanceSource, RegretReport,
    Variant,
};
use causal_bandits::{Admg, Arm, Cbn, ModelError, NodeId};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "cbandit",
    version,
    about = "Causal bandit experiments on binary causal Bayesian networks"
)]
struct Cli {
    /// Worker threads for experiments (0 = available parallelism).
    #[arg(long, global = true, env = "CB_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate instance files.
    Gen(GenArgs),
    /// Print structure, identifiability and exact rewards of an instance.
    Inspect(InspectArgs),
    /// Run one algorithm on an instance file.
    Run(RunArgs),
    /// Reproduce a named experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Exp1,
    Exp2,
    Exp3,
    Exp5,
    TreeLb,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    kind: GenKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, or directory for `tree-lb`.
    #[arg(long)]
    out: PathBuf,
    /// Intervenable nodes.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Target m (exp1, exp2).
    #[arg(long = "m")]
    m: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Size of the distinguished node set (tree-lb).
    #[arg(long = "M", default_value_t = 5)]
    big_m: usize,
    /// Horizon the tree instances are tuned for (tree-lb).
    #[arg(long = "T", default_value_t = 1000)]
    horizon: u64,
    #[arg(long, default_value_t = 2)]
    branching: usize,
    #[arg(long, default_value_t = 3)]
    levels: usize,
}

#[derive(clap::Args, Debug)]
struct InspectArgs {
    instance: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    enumeration_limit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long)]
    algo: String,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    horizon: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values = ["csv", "json"])]
    format: Vec<Format>,
    /// Fall back to Monte-Carlo arm means when enumeration is infeasible.
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    enumeration_limit: usize,
}

#[derive(clap::Args, Debug)]
struct ExperimentArgs {
    /// exp1, exp2, exp3, exp5 or tree_lb.
    id: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', default_values = ["csv", "json", "svg"])]
    format: Vec<Format>,
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    enumeration_limit: usize,
}

enum Failure {
    Usage(String),
    Model(ModelError),
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Model(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Run(a) => cmd_run(a, cli.jobs),
        Command::Experiment(a) => cmd_experiment(a, cli.jobs),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                ModelError::EnumerationInfeasible { .. } => 4,
                ModelError::Io(_) => 1,
                _ => 3,
            })
        }
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| Failure::Usage(format!("{what} is stochastic and needs --seed")))
}

fn arm_label(g: &Admg, arm: Arm) -> String {
    match arm {
        Arm::Observe => "do()".into(),
        Arm::Do { target, value } => format!("do({}={})", g.label(target), value as u8),
    }
}

fn labels(g: &Admg, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&v| g.label(v).to_string()).collect()
}

/// Prints m and the best arm when the oracle is feasible.
fn summarize(cbn: &Cbn, name: &str) {
    let g = cbn.visible_graph();
    match BanditEnv::new(cbn.clone()) {
        Ok(env) => {
            let best = causal_bandits::bandits::argmax(env.means());
            let m = exact_q_and_m(cbn, &Enumerator::default())
                .map(|r| r.m.to_string())
                .unwrap_or_else(|_| "n/a".into());
            println!(
                "{name}: nodes={} m={m} mu0={} best={} ({})",
                cbn.graph().len(),
                env.means()[0],
                arm_label(g, env.arms()[best]),
                env.best_mean()
            );
        }
        Err(e) => println!(
            "{name}: nodes={} oracle unavailable: {e}",
            cbn.graph().len()
        ),
    }
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let eps = a.eps;
    let single = |cbn: Cbn| -> CliResult {
        if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        save_instance(&cbn, &a.out)?;
        summarize(&cbn, &a.out.display().to_string());
        Ok(())
    };
    match a.kind {
        GenKind::Exp1 => {
            let seed = require_seed(a.seed, "gen exp1")?;
            single(
                gen_experiment1(
                    seed,
                    a.n.unwrap_or(100),
                    a.m.unwrap_or(9),
                    eps.unwrap_or(0.3),
                )?
                .cbn,
            )
        }
        GenKind::Exp2 => {
            let seed = require_seed(a.seed, "gen exp2")?;
            let m =
                a.m.ok_or_else(|| Failure::Usage("gen exp2 needs --m".into()))?;
            single(gen_experiment2(seed, a.n.unwrap_or(100), m)?.cbn)
        }
        GenKind::Exp5 => {
            let seed = require_seed(a.seed, "gen exp5")?;
            single(gen_experiment5(seed, a.n.unwrap_or(10), eps.unwrap_or(0.1))?.cbn)
        }
        GenKind::Exp3 => single(gen_experiment3()),
        GenKind::TreeLb => {
            let shape = TreeShape::complete(a.branching, a.levels)?;
            let family = gen_tree_lower_bound(&shape, a.big_m, a.horizon)?;
            fs::create_dir_all(&a.out)?;
            for (i, cbn) in family.iter().enumerate() {
                let path = a.out.join(format!("C{i}.json"));
                save_instance(cbn, &path)?;
                summarize(cbn, &path.display().to_string());
            }
            Ok(())
        }
    }
}

fn cmd_inspect(a: InspectArgs) -> CliResult {
    let cbn = load_instance(&a.instance)?;
    let g = cbn.visible_graph();
    let order = labels(g, g.topological_order());
    let components: Vec<Vec<String>> = g.c_components().iter().map(|c| labels(g, c)).collect();
    let mut pa_c = serde_json::Map::new();
    for &x in g.intervenable() {
        let ctx = g.pa_plus_and_pa_c(x)?;
        pa_c.insert(
            g.label(x).to_string(),
            json!({ "pa_c": labels(g, &ctx.pa_c), "k": ctx.k }),
        );
    }
    let ident = match g.check_identifiability()? {
        Identifiability::Identifiable => json!({ "identifiable": true }),
        Identifiability::Violation {
            treatment,
            child,
            path,
        } => json!({
            "identifiable": false,
            "witness": {
                "treatment": g.label(treatment),
                "child": g.label(child),
                "path": labels(g, &path),
            }
        }),
    };
    let enumerator = Enumerator::new(a.enumeration_limit);
    let oracle = match BanditEnv::with_enumerator(cbn.clone(), &enumerator) {
        Ok(env) => {
            let rewards: serde_json::Map<String, Value> = env
                .arms()
                .iter()
                .zip(env.means())
                .map(|(&arm, &mu)| (arm_label(g, arm), json!(mu)))
                .collect();
            let qm = exact_q_and_m(&cbn, &enumerator).ok();
            json!({
                "feasible": true,
                "rewards": rewards,
                "q": qm.as_ref().map(|r| r.q.clone()),
                "m": qm.as_ref().map(|r| r.m),
            })
        }
        Err(e @ ModelError::EnumerationInfeasible { .. }) => {
            json!({ "feasible": false, "reason": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "nodes": cbn.graph().len(),
        "hidden": labels(cbn.graph(), &cbn.graph().hidden_nodes()),
        "topological_order": order,
        "c_components": components,
        "intervenable": pa_c,
        "identifiability": ident,
        "oracle": oracle,
    });
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("json value")
        );
        return Ok(());
    }
    println!(
        "nodes: {} ({} hidden)",
        report["nodes"],
        report["hidden"].as_array().map_or(0, Vec::len)
    );
    println!("topological order: {}", join(&report["topological_order"]));
    println!("c-components:");
    for c in report["c_components"].as_array().into_iter().flatten() {
        println!("  {{{}}}", join(c));
    }
    println!("Pa^c sets:");
    for (x, v) in pa_c.iter() {
        println!("  {x}: k={} Pa^c={{{}}}", v["k"], join(&v["pa_c"]));
    }
    let id = &report["identifiability"];
    if id["identifiable"] == json!(true) {
        println!("identifiable=true");
    } else {
        let w = &id["witness"];
        println!(
            "identifiable=false witness: {} <-> ... <-> {} via {{{}}}",
            w["treatment"].as_str().unwrap_or_default(),
            w["child"].as_str().unwrap_or_default(),
            join(&w["path"])
        );
    }
    let o = &report["oracle"];
    if o["feasible"] == json!(true) {
        println!("rewards:");
        for (arm, mu) in o["rewards"].as_object().into_iter().flatten() {
            println!("  {arm}: {mu}");
        }
        if !o["m"].is_null() {
            println!("q: {}", o["q"]);
            println!("m: {}", o["m"]);
        }
    } else {
        println!(
            "rewards: enumeration-infeasible ({})",
            o["reason"].as_str().unwrap_or_default()
        );
    }
    Ok(())
}

fn join(v: &Value) -> String {
    v.as_array()
        .into_iter()
        .flatten()
        .map(|s| s.as_str().map_or_else(|| s.to_string(), str::to_string))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_algorithm(s: &str) -> CliResult<Algorithm> {
    s.parse()
        .map_err(|e: ModelError| Failure::Usage(e.to_string()))
}

fn write_outputs(report: &RegretReport, dir: &Path, stem: &str, formats: &[Format]) -> CliResult {
    fs::create_dir_all(dir)?;
    for f in formats {
        let (ext, body) = match f {
            Format::Csv => ("csv", report.to_csv()),
            Format::Json => ("json", report.to_json()?),
            Format::Svg => ("svg", report.to_svg()),
        };
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn check_plan(plan: &ExperimentPlan) -> CliResult {
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_run(a: RunArgs, jobs: usize) -> CliResult {
    let seed = require_seed(a.seed, "run")?;
    let algorithm = parse_algorithm(&a.algo)?;
    let cbn = load_instance(&a.instance)?;
    if algorithm == Algorithm::Crm && !cbn.is_fully_observable() {
        return Err(ModelError::IncompatibleAlgorithm {
            algorithm: "crm".into(),
            reason: "the instance has hidden confounders; crm assumes every node is observable"
                .into(),
        }
        .into());
    }
    let plan = ExperimentPlan {
        experiment: ExperimentId::Custom,
        variants: vec![Variant {
            label: a
                .instance
                .file_stem()
                .map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned()),
            x: None,
            source: InstanceSource::File {
                path: a.instance.display().to_string(),
            },
        }],
        instances: 1,
        runs: a.runs,
        horizons: a.horizon,
        algorithms: vec![algorithm],
        base_seed: seed,
        monte_carlo_fallback: a.monte_carlo,
        enumeration_limit: a.enumeration_limit,
    };
    check_plan(&plan)?;
    let report = execute(&plan, jobs)?;
    write_outputs(
        &report,
        &a.out,
        &format!("run_{}", algorithm.name()),
        &a.format,
    )
}

fn cmd_experiment(a: ExperimentArgs, jobs: usize) -> CliResult {
    let id: ExperimentId =
        a.id.parse()
            .map_err(|e: ModelError| Failure::Usage(e.to_string()))?;
    if id == ExperimentId::Custom {
        return Err(Failure::Usage("use `run` for custom instances".into()));
    }
    let seed = require_seed(a.seed, "experiment")?;
    let mut plan = ExperimentPlan::canonical(id, seed, a.n)?;
    if let Some(r) = a.runs {
        plan.runs = r;
    }
    if let Some(i) = a.instances {
        plan.instances = i;
    }
    if let Some(h) = a.horizons {
        plan.horizons = h;
    }
    if let Some(algos) = a.algos {
        plan.algorithms = algos
            .iter()
            .map(|s| parse_algorithm(s))
            .collect::<CliResult<_>>()?;
    }
    plan.monte_carlo_fallback = a.monte_carlo;
    plan.enumeration_limit = a.enumeration_limit;
    if id == ExperimentId::TreeLb && plan.instances > 6 {
        return Err(Failure::Usage(
            "the default tree family has 6 members".into(),
        ));
    }
    check_plan(&plan)?;
    let mut report = execute(&plan, jobs)?;
    if let Err(e) = overlay_bounds(&mut report) {
        report.notes.push(format!("bounds not overlaid: {e}"));
    }
    write_outputs(&report, &a.out, id.name(), &a.format)?;
    for row in report.rows.iter().filter(|r| r.instance == "all") {
        println!(
            "{} {} T={} mean={:.5} se={:.5}",
            row.experiment, row.algorithm, row.horizon, row.mean_regret, row.stderr
        );
    }
    Ok(())
}
