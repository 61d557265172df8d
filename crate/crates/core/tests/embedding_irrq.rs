use ccb_core::eigen::{dense_symmetric_eigen, materialize};
use ccb_core::irrq::{estimate_theta, rotate, update_epsilon, update_gamma, weighted_residuals};
use ccb_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v, rng.random_range(0.2..2.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < extra && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                edges.push((i, j, rng.random_range(0.2..2.0)));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Random `Y` with `YᵀΠY = I` and `YᵀΠ1 = 0`, by Gram-Schmidt in the
/// Π-inner product starting from the constant vector.
fn random_feasible(rng: &mut ChaCha8Rng, pi: &[f64], k: usize) -> Embedding {
    let n = pi.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 { (0..n).map(|i| pi[i] * a[i] * b[i]).sum() };
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let norm1 = ip(&basis[0], &basis[0]).sqrt();
    basis[0].iter_mut().for_each(|v| *v /= norm1);
    while basis.len() < k + 1 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = ip(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = ip(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    Embedding::from_matrix(DMatrix::from_fn(n, k, |i, j| basis[j + 1][i]))
}

#[test]
fn beth_then_aleph_recovers_every_feasible_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(3..=15);
        let pi: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..4.0)).collect();
        let k = rng.random_range(1..n);
        let y = random_feasible(&mut rng, &pi, k);
        let e = ConstraintEliminator::new(&BalanceWeights::custom(BalanceMode::Ratio, pi).unwrap())
            .unwrap();
        let g = e.beth(&y).unwrap();
        let back = e.aleph(&g).unwrap();
        assert!((back.matrix() - y.matrix()).amax() < 1e-10);
    }
}

#[test]
fn reduced_operator_has_no_trivial_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..30 {
        let n = rng.random_range(3..=30);
        let g = random_connected(&mut rng, n, 0.1);
        let mode = if trial % 2 == 0 {
            BalanceMode::Ratio
        } else {
            BalanceMode::Normalized
        };
        let w = BalanceWeights::for_graph(&g, mode).unwrap();
        let e = ConstraintEliminator::new(&w).unwrap();
        let op = ReducedOperator::new(&e, &g, None).unwrap();
        let (vals, _) = dense_symmetric_eigen(&materialize(&op));
        let top = vals[vals.len() - 1];
        assert!(vals[0] > 1e-8 * top, "λ₁ = {} vs λmax = {top}", vals[0]);
    }
}

#[test]
fn reduced_diagonal_matches_materialized() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let n = rng.random_range(3..=25);
        let g = random_connected(&mut rng, n, 0.2);
        let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
        let e = ConstraintEliminator::new(&w).unwrap();
        let gamma: Vec<f64> = (0..g.edge_count())
            .map(|_| rng.random_range(0.1..100.0))
            .collect();
        let op = ReducedOperator::new(&e, &g, Some(&gamma)).unwrap();
        let dense = materialize(&op);
        let diag = op.diagonal().unwrap();
        for (i, d) in diag.iter().enumerate() {
            assert!((d - dense[(i, i)]).abs() <= 1e-10 * dense.amax());
        }
    }
}

#[test]
fn lobpcg_agrees_with_dense_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let g = random_connected(&mut rng, 320, 0.01);
    let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    let e = ConstraintEliminator::new(&w).unwrap();
    let op = ReducedOperator::new(&e, &g, None).unwrap();
    let k = 3;
    let opts = EigenOptions {
        dense_threshold: 0,
        ..Default::default()
    };
    let iterative = eigensolve_smallest(&op, k, &opts, None).unwrap();
    assert!(iterative.iterations > 0);
    let (vals, vecs) = dense_symmetric_eigen(&materialize(&op));
    for j in 0..k {
        assert!((iterative.values[j] - vals[j]).abs() < 1e-8 * vals[vals.len() - 1]);
    }
    let u = vecs.columns(0, k).into_owned();
    let resid = &iterative.vectors - &u * (u.transpose() * &iterative.vectors);
    assert!(resid.amax() < 1e-5);
}

#[test]
fn epsilon_trace_is_nonincreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..15 {
        let n = rng.random_range(6..=30);
        let g = random_connected(&mut rng, n, 0.2);
        let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
        let cfg = IrrqConfig {
            tau: rng.random_range(0.3..1.9),
            k: rng.random_range(1..=2),
            ..Default::default()
        };
        let res = irrq_solve(&g, &cfg, &w).unwrap();
        for pair in res.trace.windows(2) {
            assert!(pair[1].epsilon <= pair[0].epsilon);
            assert!(pair[1].epsilon >= 0.0);
        }
    }
}

#[test]
fn every_iterate_is_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let g = random_connected(&mut rng, 25, 0.2);
    let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    // truncating the run at m iterations exposes the m-th iterate
    for m in 1..=6 {
        let cfg = IrrqConfig {
            tau: 0.7,
            k: 2,
            max_iters: m,
            rel_cost_tol: 0.0,
            ..Default::default()
        };
        let res = irrq_solve(&g, &cfg, &w).unwrap();
        assert!(res.embedding.constraint_error(w.pi()) < 1e-8);
    }
}

#[test]
fn quadratic_weights_are_exactly_one() {
    let g = barbell(3, 0.2).unwrap();
    let y = Embedding::from_matrix(DMatrix::from_fn(6, 1, |i, _| i as f64));
    let gamma = update_gamma(&g, &y, 0.0, 2.0).unwrap();
    assert!(gamma.iter().all(|&v| v == 1.0));
}

#[test]
fn residuals_and_weights_ignore_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = random_connected(&mut rng, 20, 0.3);
    let w = BalanceWeights::for_graph(&g, BalanceMode::Ratio).unwrap();
    let y = random_feasible(&mut rng, w.pi(), 3);
    let h = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5)
        .qr()
        .q();
    let yr = rotate(&y, &h);
    let (a, b) = (weighted_residuals(&g, &y), weighted_residuals(&g, &yr));
    for (x, z) in a.iter().zip(&b) {
        assert!((x - z).abs() < 1e-12);
    }
    for tau in [0.5, 1.0, 1.5] {
        let ga = update_gamma(&g, &y, 0.01, tau).unwrap();
        let gb = update_gamma(&g, &yr, 0.01, tau).unwrap();
        for (x, z) in ga.iter().zip(&gb) {
            assert!((x - z).abs() <= 1e-10 * x.abs());
        }
    }
    assert_eq!(
        update_epsilon(&g, &y, 1.0, 5),
        update_epsilon(&g, &yr, 1.0, 5)
    );
}

#[test]
fn regularized_start_from_eigenmap_reproduces_default_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let g = random_connected(&mut rng, 30, 0.15);
    let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    let cfg = IrrqConfig {
        tau: 1.0,
        k: 2,
        ..Default::default()
    };
    let default = irrq_solve(&g, &cfg, &w).unwrap();
    let le = irrq_solve(
        &g,
        &IrrqConfig {
            tau: 2.0,
            ..cfg.clone()
        },
        &w,
    )
    .unwrap()
    .embedding;
    let hooked = irrq_solve_with(&g, &cfg, &w, InitialWeights::Regularized(le.clone())).unwrap();
    assert_eq!(hooked.embedding, default.embedding);
    assert_eq!(hooked.trace, default.trace);

    // the ratio weights change the first iterate and nothing else about the run
    let lp = irrq_solve_with(&g, &cfg, &w, InitialWeights::LpRatio(le)).unwrap();
    assert_ne!(lp.trace[0].j_tau, default.trace[0].j_tau);
    assert!(lp.embedding.constraint_error(w.pi()) < 1e-8);
}

#[test]
fn eigenmap_sign_pattern_separates_bells() {
    let g = barbell(5, 0.05).unwrap();
    let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    let cfg = IrrqConfig {
        tau: 2.0,
        k: 1,
        ..Default::default()
    };
    let y = irrq_solve(&g, &cfg, &w).unwrap().embedding;
    let col = y.column(0);
    let left = col[0].signum();
    assert!(col[..5].iter().all(|v| v.signum() == left));
    assert!(col[5..].iter().all(|v| v.signum() == -left));

    // the same span as the dense generalized problem
    let sp: Vec<f64> = w.pi().iter().map(|p| p.sqrt()).collect();
    let s_inv = DMatrix::from_diagonal(&DVector::from_iterator(10, sp.iter().map(|s| 1.0 / s)));
    let (_, vecs) = dense_symmetric_eigen(&(&s_inv * g.dense_laplacian() * &s_inv));
    let u: Vec<f64> = (0..10).map(|i| vecs[(i, 1)] / sp[i]).collect();
    let dot: f64 = (0..10).map(|i| w.pi()[i] * u[i] * col[i]).sum();
    assert!((dot.abs() - 1.0).abs() < 1e-10);
}

#[test]
fn theta_counts_bridges_of_a_separated_embedding() {
    let g = barbell(4, 0.3).unwrap();
    let y = Embedding::from_matrix(DMatrix::from_fn(
        8,
        1,
        |i, _| if i < 4 { 1.0 } else { -1.0 },
    ));
    assert_eq!(estimate_theta(&g, &y, 2, 0).unwrap(), 2);
}

#[test]
fn stiff_reweighting_still_solves() {
    let (img, gt) = ccb_core::synthetic::three_stripes(24, 2).unwrap();
    let (g, _) = lab_affinity(
        &img,
        &AffinityParams {
            radius: 3.0,
            ..Default::default()
        },
    )
    .unwrap();
    let w = BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    let cfg = IrrqConfig {
        tau: 0.5,
        k: 2,
        ..Default::default()
    };
    let res = irrq_solve(&g, &cfg, &w).unwrap();
    assert!(res.embedding.constraint_error(w.pi()) < 1e-8);
    let km = kmeans(res.embedding.matrix(), 3, 0).unwrap();
    assert_eq!(eval::covering(&km.labels, &gt).unwrap(), 1.0);
}
