use ccb_core::costs::{block_cuts, CostEvaluator};
use ccb_core::*;
use proptest::prelude::*;

/// Random simple graph on `n` vertices: a weight per vertex pair, kept when
/// the coin says so.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec((any::<bool>(), 0.01f64..5.0), pairs).prop_map(move |coins| {
            let mut edges = Vec::new();
            let mut t = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let (keep, w) = coins[t];
                    t += 1;
                    if keep {
                        edges.push((i, j, w));
                    }
                }
            }
            Graph::new(n, edges).unwrap()
        })
    })
}

fn labels_strategy(n: usize, k: usize) -> impl Strategy<Value = PartitionK> {
    prop::collection::vec(0..k, n)
        .prop_filter_map("every block nonempty", move |l| PartitionK::new(l, k).ok())
}

fn graph_and_partition(max_n: usize, k: usize) -> impl Strategy<Value = (Graph, PartitionK)> {
    graph_strategy(max_n)
        .prop_filter("at least k vertices", move |g| g.n() >= k)
        .prop_flat_map(move |g| {
            let n = g.n();
            (Just(g), labels_strategy(n, k))
        })
}

/// Independent check: every labeling in `k^n`, minus those with empty
/// blocks.
fn exhaustive_min(g: &Graph, kind: CostKind, k: usize) -> f64 {
    let n = g.n();
    let mut best = f64::INFINITY;
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let l = c % k;
                c /= k;
                l
            })
            .collect();
        if let Ok(p) = PartitionK::new(labels, k) {
            if let Ok(v) = kind.evaluate(g, &p) {
                best = best.min(v);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_kills_constants(g in graph_strategy(12)) {
        let y = g.laplacian_apply(&vec![1.0; g.n()]).unwrap();
        prop_assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_matches_dense(g in graph_strategy(12), seed in any::<u64>()) {
        let n = g.n();
        let x: Vec<f64> = (0..n).map(|i| ((seed as f64 + i as f64) * 0.7).sin()).collect();
        let got = g.laplacian_apply(&x).unwrap();
        let want = g.dense_laplacian() * nalgebra::DVector::from_vec(x);
        for (a, b) in got.iter().zip(want.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_form_is_edge_sum(g in graph_strategy(12), seed in any::<u32>()) {
        let n = g.n();
        let x: Vec<f64> = (0..n).map(|i| ((seed as f64) * 0.13 + i as f64 * 1.7).cos()).collect();
        let lx = g.laplacian_apply(&x).unwrap();
        let form: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
        let direct: f64 = g.edges().iter().map(|e| e.w * (x[e.i] - x[e.j]).powi(2)).sum();
        prop_assert!(form >= -1e-12);
        prop_assert!((form - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn psi_and_phi_are_symmetric(v in 0.001f64..0.999, tau in 0.01f64..=2.0, p in 1.01f64..50.0) {
        let a = psi_tau(v, tau).unwrap();
        let b = psi_tau(1.0 - v, tau).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let c = phi_p(v, p).unwrap();
        let d = phi_p(1.0 - v, p).unwrap();
        prop_assert!((c - d).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn psi_bounded_by_one(v in 0.001f64..0.999, tau in 0.01f64..=2.0) {
        let a = psi_tau(v, tau).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-15);
        prop_assert!(a <= psi_tau(0.5, tau).unwrap() + 1e-15);
    }

    #[test]
    fn matrix_form_matches_set_form(
        (g, part) in graph_and_partition(9, 3),
        tau in 0.05f64..=2.0,
        normalized in any::<bool>(),
    ) {
        let mode = if normalized { BalanceMode::Normalized } else { BalanceMode::Ratio };
        prop_assume!(!normalized || g.degrees().iter().all(|&d| d > 0.0));
        let w = BalanceWeights::for_graph(&g, mode).unwrap();
        let a = ccb_cost(&g, &part, tau, &w).unwrap();
        let b = ccb_cost_matrix_form(&g, &part, tau, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn multiway_cut_is_half_the_block_cuts((g, part) in graph_and_partition(10, 3)) {
        let total = multiway_cut(&g, &part).unwrap();
        let mut half = 0.0;
        for l in 0..part.k() {
            let bi: Vec<usize> = part.labels().iter().map(|&x| usize::from(x == l)).collect();
            half += cut_cost(&g, &PartitionK::from_labels(bi).unwrap()).unwrap();
        }
        prop_assert!((total - 0.5 * half).abs() <= 1e-12 * total.max(1.0));
        let blocks: f64 = block_cuts(&g, &part).unwrap().iter().sum();
        prop_assert!((total - 0.5 * blocks).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn small_tau_approaches_multiway_cut((g, part) in graph_and_partition(10, 3)) {
        let w = BalanceWeights::for_graph(&g, BalanceMode::Ratio).unwrap();
        let c = ccb_cost(&g, &part, 1e-9, &w).unwrap();
        let m = multiway_cut(&g, &part).unwrap();
        prop_assert!((c - m).abs() <= 1e-6 * m.max(1.0));
    }

    #[test]
    fn two_way_ccb_reduces_to_psi((g, part) in graph_and_partition(10, 2), tau in 0.05f64..=2.0) {
        let w = BalanceWeights::for_graph(&g, BalanceMode::Ratio).unwrap();
        let total = w.total();
        let masses = part.masses(w.pi());
        let cut = cut_cost(&g, &part).unwrap();
        let c = ccb_cost(&g, &part, tau, &w).unwrap();
        let via_psi = cut / psi_tau(masses[0] / total, tau).unwrap();
        prop_assert!((c * total.powf(tau / 2.0) - via_psi).abs() <= 1e-10 * via_psi.max(1.0));
    }
}

#[test]
fn psi_phi_identity_on_grid() {
    for i in 1..50 {
        let v = i as f64 / 50.0;
        for p in [1.5, 2.0, 2.5, 3.0, 5.0, 11.0] {
            let lhs = psi_tau(v, 2.0 / (p - 1.0)).ok();
            let rhs = phi_p(v, p).unwrap().powf(1.0 / (p - 1.0));
            // Ψ is only defined for τ ≤ 2, i.e. p ≥ 2
            if let Some(lhs) = lhs {
                assert!((lhs - rhs).abs() < 1e-12, "v={v} p={p}: {lhs} vs {rhs}");
            } else {
                assert!(p < 2.0);
            }
        }
    }
}

#[test]
fn brute_force_matches_exhaustive_enumeration() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for trial in 0..30 {
        let n = rng.random_range(3..=7);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < 0.6 {
                    edges.push((i, j, rng.random_range(0.1..3.0)));
                }
            }
        }
        let g = Graph::new(n, edges).unwrap();
        let k = 2 + trial % 2;
        let kinds = [
            CostKind::Cut,
            CostKind::Ccb {
                tau: rng.random_range(0.1..2.0),
                mode: BalanceMode::Ratio,
            },
            CostKind::Bh {
                p: rng.random_range(1.1..4.0),
                mode: BalanceMode::Ratio,
            },
        ];
        for kind in kinds {
            if matches!(kind, CostKind::Bh { .. }) && k != 2 {
                continue;
            }
            let (part, cost) = brute_force_min(&g, kind, k).unwrap();
            let oracle = exhaustive_min(&g, kind, k);
            assert!(
                (cost - oracle).abs() <= 1e-12 * oracle.max(1.0),
                "{kind:?}: {cost} vs {oracle}"
            );
            assert_eq!(kind.evaluate(&g, &part).unwrap(), cost);
        }
    }
}

#[test]
fn evaluator_caches_the_same_values() {
    let g = toy_graph(0.4).unwrap();
    let kind = CostKind::Ccb {
        tau: 1.0,
        mode: BalanceMode::Normalized,
    };
    let ev = CostEvaluator::new(&g, kind).unwrap();
    for part in [toy_singleton_partition(), toy_balanced_partition()] {
        assert_eq!(
            ev.evaluate(&part).unwrap(),
            kind.evaluate(&g, &part).unwrap()
        );
    }
}

#[test]
fn toy_graph_shape() {
    let g = toy_graph(0.3).unwrap();
    assert_eq!((g.n(), g.edge_count()), (7, 9));
    assert!((g.degrees()[6] - 0.3).abs() < 1e-15);
    assert!(toy_graph(1.0).is_err());
    assert!(toy_graph(0.0).is_err());
}
