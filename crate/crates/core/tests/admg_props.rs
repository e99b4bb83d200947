mod common;

use std::collections::BTreeSet;

use causal_bandits::admg::Identifiability;
use causal_bandits::NodeId;
use common::{graph_spec, random_cbn, union_find_components};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn c_components_match_union_find(spec in graph_spec(9)) {
        let g = spec.build();
        let got: Vec<Vec<usize>> = g
            .c_components()
            .into_iter()
            .map(|c| c.into_iter().map(|v| v.0).collect())
            .collect();
        prop_assert_eq!(got, union_find_components(spec.n, &spec.bidirected));
    }

    #[test]
    fn projection_of_projected_graph_is_identity(spec in graph_spec(8)) {
        let g = spec.build();
        prop_assert_eq!(g.latent_projection().unwrap(), g);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in 3usize..9, hidden in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cbn = random_cbn(&mut rng, n, 2, hidden);
        let once = cbn.graph().latent_projection().unwrap();
        prop_assert_eq!(once.len(), n);
        prop_assert!(!once.has_hidden());
        prop_assert_eq!(once.latent_projection().unwrap(), once);
    }

    #[test]
    fn topological_order_respects_edges(spec in graph_spec(9)) {
        let g = spec.build();
        let order = g.topological_order();
        let mut pos = vec![usize::MAX; g.len()];
        for (k, v) in order.iter().enumerate() {
            prop_assert_eq!(pos[v.0], usize::MAX);
            pos[v.0] = k;
        }
        prop_assert_eq!(order.len(), g.len());
        for (a, b) in g.directed_edges() {
            prop_assert!(pos[a.0] < pos[b.0]);
        }
    }

    #[test]
    fn dropping_bidirected_edges_preserves_identifiability(
        spec in graph_spec(8),
        keep in proptest::collection::vec(any::<bool>(), 28),
    ) {
        let g = spec.build();
        let mut thinner = spec.clone();
        thinner.bidirected = spec
            .bidirected
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&e, _)| e)
            .collect();
        let h = thinner.build();
        if g.check_identifiability().unwrap().is_identifiable() {
            prop_assert!(h.check_identifiability().unwrap().is_identifiable());
        }
    }

    #[test]
    fn confounder_free_graphs_are_identifiable(spec in graph_spec(9)) {
        let mut free = spec.clone();
        free.bidirected.clear();
        prop_assert!(free.build().check_identifiability().unwrap().is_identifiable());
    }

    #[test]
    fn treatment_confounded_with_its_child_is_rejected(spec in graph_spec(8), pick in any::<prop::sample::Index>()) {
        let mut s = spec.clone();
        // X → C and X ↔ C for one forward pair among the intervenable nodes.
        let pairs: Vec<(usize, usize)> = (0..s.n - 1)
            .flat_map(|a| (a + 1..s.n).map(move |c| (a, c)))
            .collect();
        let (x, c) = pairs[pick.index(pairs.len())];
        if !s.directed.contains(&(x, c)) {
            s.directed.push((x, c));
        }
        if !s.bidirected.contains(&(x, c)) {
            s.bidirected.push((x, c));
        }
        match s.build().check_identifiability().unwrap() {
            Identifiability::Violation { treatment, child, path } => {
                prop_assert!(s.build().has_edge(treatment, child));
                prop_assert_eq!(path.first(), Some(&treatment));
                prop_assert_eq!(path.last(), Some(&child));
            }
            Identifiability::Identifiable => prop_assert!(false, "violation missed"),
        }
    }

    #[test]
    fn reduced_graph_keeps_exactly_w(spec in graph_spec(8), pick in any::<prop::sample::Index>()) {
        let g = spec.build();
        let xs = g.intervenable();
        let xi = xs[pick.index(xs.len())];
        let ctx = g.pa_plus_and_pa_c(xi).unwrap();
        let reduced = g.reduce_graph(xi).unwrap();
        let mut want: BTreeSet<NodeId> = ctx.pa_c.iter().copied().collect();
        want.insert(xi);
        want.insert(g.reward());
        let got: BTreeSet<NodeId> = reduced.origin.iter().copied().collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(reduced.graph.len(), reduced.origin.len());
        let local_x = reduced.local(xi).unwrap();
        prop_assert!(reduced.graph.is_intervenable(local_x));
        prop_assert_eq!(reduced.origin[reduced.graph.reward().0], g.reward());
    }

    #[test]
    fn pa_c_excludes_the_node_and_k_counts_its_component(spec in graph_spec(9), pick in any::<prop::sample::Index>()) {
        let g = spec.build();
        let xs = g.intervenable();
        let xi = xs[pick.index(xs.len())];
        let ctx = g.pa_plus_and_pa_c(xi).unwrap();
        prop_assert!(!ctx.pa_c.contains(&xi));
        prop_assert!(ctx.pa_plus.contains(&xi));
        prop_assert_eq!(ctx.k, ctx.component.len());
        prop_assert_eq!(ctx.pa_plus.len(), ctx.pa_c.len() + 1);
        for v in &ctx.component {
            prop_assert!(ctx.pa_plus.contains(v));
            for p in g.parents(*v) {
                prop_assert!(ctx.pa_plus.contains(p));
            }
        }
    }
}
