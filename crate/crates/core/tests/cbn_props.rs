mod common;

use causal_bandits::cbn::generators::{
    experiment_recipe, gen_experiment1, gen_experiment5, gen_layered,
};
use causal_bandits::cbn::{
    arms_of, backdoor_reward, exact_marginal, exact_reward, m_from_q, Enumerator, InstanceFile,
};
use causal_bandits::Arm;
use common::random_cbn;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginals_are_distributions(seed in any::<u64>(), n in 2usize..8, hidden in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cbn = random_cbn(&mut rng, n, 3, hidden);
        let g = cbn.graph();
        for arm in arms_of(g) {
            let query: Vec<_> = g.observable_nodes();
            let joint = exact_marginal(&cbn, arm, &query).unwrap();
            let total: f64 = joint.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(joint.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn pruned_enumeration_matches_full_joint(seed in any::<u64>(), n in 2usize..8, hidden in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cbn = random_cbn(&mut rng, n, 3, hidden);
        let g = cbn.graph();
        let y = g.reward();
        let all: Vec<_> = g.nodes().collect();
        let ypos = all.iter().position(|&v| v == y).unwrap();
        for arm in arms_of(g) {
            let joint = exact_marginal(&cbn, arm, &all).unwrap();
            let from_joint: f64 = joint
                .iter()
                .enumerate()
                .filter(|(k, _)| k >> ypos & 1 == 1)
                .map(|(_, p)| p)
                .sum();
            let direct = exact_reward(&cbn, arm).unwrap();
            prop_assert!((from_joint - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn backdoor_matches_intervention(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cbn = random_cbn(&mut rng, n, 3, 0);
        let e = Enumerator::default();
        for &x in cbn.graph().intervenable() {
            for v in [false, true] {
                let bd = backdoor_reward(&cbn, x, v, &e).unwrap();
                let ex = exact_reward(&cbn, Arm::Do { target: x, value: v }).unwrap();
                prop_assert!((bd - ex).abs() < 1e-12, "{} vs {}", bd, ex);
            }
        }
    }

    #[test]
    fn instance_files_round_trip(seed in any::<u64>(), n in 2usize..9, hidden in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cbn = random_cbn(&mut rng, n, 3, hidden);
        let text = InstanceFile::from_cbn(&cbn).to_json().unwrap();
        let back = InstanceFile::from_json(&text).unwrap().to_cbn().unwrap();
        prop_assert_eq!(back, cbn);
    }

    #[test]
    fn m_stays_in_range(q in proptest::collection::vec(0.0f64..=1.0, 1..40), k in 1usize..4) {
        let ks = vec![k; q.len()];
        let m = m_from_q(&q, &ks, q.len());
        prop_assert!(m >= 2 && m <= 2 * q.len().max(1));
        let below = q.iter().filter(|&&p| p.powi(k as i32) < 1.0 / m as f64).count();
        prop_assert!(below <= m);
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        let a = gen_experiment1(seed, 20, 9, 0.3).unwrap();
        let b = gen_experiment1(seed, 20, 9, 0.3).unwrap();
        prop_assert_eq!(a.cbn, b.cbn);
        let c = gen_layered(seed, &experiment_recipe(30, 10, 0.2)).unwrap();
        let d = gen_layered(seed, &experiment_recipe(30, 10, 0.2)).unwrap();
        prop_assert_eq!(c.cbn, d.cbn);
        prop_assert_eq!(gen_experiment5(seed, 6, 0.1).unwrap().cbn, gen_experiment5(seed, 6, 0.1).unwrap().cbn);
    }
}

/// Ancestral sampling agrees with exact rewards within five standard errors.
#[test]
fn sampling_frequencies_match_exact_rewards() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 40_000;
    for trial in 0..6 {
        let cbn = random_cbn(&mut rng, 6, 2, trial % 3);
        for arm in arms_of(cbn.graph()) {
            let mu = exact_reward(&cbn, arm).unwrap();
            let hits = (0..draws)
                .filter(|_| cbn.sample(arm, &mut rng).reward)
                .count();
            let freq = hits as f64 / draws as f64;
            let se = (mu * (1.0 - mu) / draws as f64).sqrt().max(1e-9);
            assert!(
                (freq - mu).abs() < 5.0 * se,
                "trial {trial} arm {arm}: {freq} vs {mu}"
            );
        }
    }
}

#[test]
fn different_seeds_give_different_instances() {
    let a = gen_experiment1(1, 30, 9, 0.3).unwrap();
    let b = gen_experiment1(2, 30, 9, 0.3).unwrap();
    assert_ne!(a.cbn, b.cbn);
}
