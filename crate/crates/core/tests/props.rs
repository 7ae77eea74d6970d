//! Property-based invariants.

use proptest::prelude::*;

use silab_core::decay::{self, PotentialFunction, TreeRecursionParams};
use silab_core::exact::{DistributionTable, HardcoreModel, Pinning, Spin};
use silab_core::gen;
use silab_core::graph::RootedTree;
use silab_core::ratio::Ratio;

proptest! {
    /// BFS distances satisfy the triangle inequality.
    #[test]
    fn bfs_triangle_inequality(seed in any::<u64>(), n in 2usize..9, extra in 0usize..4) {
        let mut rng = gen::rng(seed);
        let g = gen::random_connected_graph(&mut rng, n, extra);
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let duv = g.shortest_path_distance(u, v).unwrap().unwrap();
                    let duw = g.shortest_path_distance(u, w).unwrap().unwrap();
                    let dwv = g.shortest_path_distance(w, v).unwrap().unwrap();
                    prop_assert!(duv <= duw + dwv);
                }
            }
        }
    }

    /// Complete trees have the closed-form node count.
    #[test]
    fn complete_tree_count(b in 2usize..5, d in 0usize..5) {
        let t = RootedTree::complete_ary_tree(b, d).unwrap();
        prop_assert_eq!(t.node_count(), (b.pow(d as u32 + 1) - 1) / (b - 1));
    }

    /// Law of total probability over a random hardcore instance.
    #[test]
    fn law_of_total_probability(seed in any::<u64>(), n in 2usize..7, lambda in 0.05f64..4.0) {
        let mut rng = gen::rng(seed);
        let g = gen::random_connected_graph(&mut rng, n, 2);
        let m = HardcoreModel::new(g, lambda).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        prop_assert!(t.mass_consistent());
        for i in 0..n {
            for j in 0..n {
                if i == j || !t.is_free(i) {
                    continue;
                }
                let pi = t.marginal(i);
                let total = t.conditional_marginal(j, i, Spin::In).unwrap() * pi
                    + t.conditional_marginal(j, i, Spin::Out).unwrap() * (1.0 - pi);
                prop_assert!((t.marginal(j) - total).abs() < 1e-12);
            }
        }
    }

    /// The tree DP and brute-force enumeration agree on random trees.
    #[test]
    fn tree_dp_matches_enumeration(seed in any::<u64>(), n in 2usize..10, lambda in 0.05f64..4.0) {
        let mut rng = gen::rng(seed);
        let g = gen::random_tree(&mut rng, n);
        let m = HardcoreModel::new(g.clone(), lambda).unwrap();
        let pin = gen::random_consistent_pinning(&mut rng, &g, Some(0));
        if let Ok(table) = DistributionTable::enumerate_hardcore(&m, &pin) {
            let (z, p) = silab_core::exact::tree_partition_dp(&m, &pin, 0).unwrap();
            prop_assert!((z - table.total()).abs() <= 1e-10 * table.total());
            prop_assert!((p - table.marginal(0)).abs() < 1e-10);
        }
    }

    /// The potential function inverts cleanly.
    #[test]
    fn potential_round_trip(y in 0.0f64..30.0) {
        let phi = PotentialFunction;
        prop_assert!((phi.phi(phi.phi_inverse(y)) - y).abs() < 1e-10);
    }

    /// Fixed points have vanishing residual and live in `(0, f(0)]`.
    #[test]
    fn fixed_point_residual(lambda in 0.01f64..8.0, d in 1usize..7) {
        let p = TreeRecursionParams::hardcore(lambda, d).unwrap();
        let r = decay::fixed_point(&p);
        prop_assert!((p.f(r) - r).abs() < 1e-12 * (1.0 + r));
        prop_assert!(r > 0.0 && r <= p.f(0.0));
    }

    /// The recursion treats an infinite child ratio as a hard zero.
    #[test]
    fn recursion_infinite_child(lambda in 0.1f64..4.0, r in 0.0f64..10.0) {
        let v = decay::tree_recurrence_value(lambda, &[Ratio::Finite(r), Ratio::Infinite]);
        prop_assert_eq!(v, 0.0);
    }
}
