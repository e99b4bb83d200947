use causal_bandits::bandits::srm_bound;
use causal_bandits::harness::{
    execute, overlay_bounds, Algorithm, ExperimentId, ExperimentPlan, InstanceSource, Variant,
};

fn exp1_plan(seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        experiment: ExperimentId::Exp1,
        variants: vec![Variant {
            label: "exp1-small".into(),
            x: None,
            source: InstanceSource::Exp1 {
                n: 30,
                m: 9,
                eps: 0.3,
            },
        }],
        instances: 5,
        runs: 20,
        horizons: vec![500, 1000, 1500, 2000, 2500],
        algorithms: vec![Algorithm::Srm, Algorithm::Ue],
        base_seed: seed,
        monte_carlo_fallback: false,
        enumeration_limit: causal_bandits::cbn::DEFAULT_ENUMERATION_LIMIT,
    }
}

#[test]
fn srm_regret_trends_down_with_the_horizon() {
    let r = execute(&exp1_plan(17), 0).unwrap();
    let rows: Vec<_> = r
        .plan
        .horizons
        .iter()
        .map(|&h| r.pooled("exp1-small", Algorithm::Srm, h).unwrap())
        .collect();
    for w in rows.windows(2) {
        let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(
            w[1].mean_regret <= w[0].mean_regret + slack,
            "T={} {} vs T={} {}",
            w[0].horizon,
            w[0].mean_regret,
            w[1].horizon,
            w[1].mean_regret
        );
    }
}

#[test]
fn fitted_bound_dominates_srm_regret() {
    let mut r = execute(&exp1_plan(18), 0).unwrap();
    overlay_bounds(&mut r).unwrap();
    let s = r
        .bounds
        .iter()
        .find(|b| b.algorithm == Algorithm::Srm)
        .unwrap();
    assert!(s.shape_only);
    for (&h, &b) in s.horizons.iter().zip(&s.values) {
        let m = r
            .pooled("exp1-small", Algorithm::Srm, h)
            .unwrap()
            .mean_regret;
        assert!(s.fitted_constant * b >= m - 1e-12);
        // every instance has m = 9 and N = 30
        assert!((b - srm_bound(9, 30, h)).abs() < 1e-12);
    }
}

#[test]
fn regrets_are_nonnegative_and_cells_complete() {
    let r = execute(&exp1_plan(19), 0).unwrap();
    assert!(r.runs.iter().all(|x| x.regret >= 0.0));
    for row in &r.rows {
        let want = if row.instance == "all" { 5 * 20 } else { 20 };
        assert_eq!(row.runs, want);
    }
    assert!(r
        .instances
        .iter()
        .all(|i| i.oracle == "exact" && i.m == Some(9)));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let mut p = exp1_plan(20);
    p.runs = 3;
    let a = execute(&p, 1).unwrap().to_json().unwrap();
    let b = execute(&p, 4).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
