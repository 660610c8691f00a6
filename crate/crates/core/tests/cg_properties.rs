mod common;

use common::*;
use krylov_certify::cg::{cg_init, recurrence_append};
use krylov_certify::estimators::Criterion;
use krylov_certify::oracle::{exact_solve, Truth};
use krylov_certify::sparse::dot;
use krylov_certify::tridiag::{eigenvalues, extremal_eigenvalues};
use krylov_certify::{solve, CsrMatrix, DenseSym, SolveConfig, SymTridiagonal};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn diag_chain_matches_brute_force_cg() {
    let dense = [1.0, 0.0, 0.0, 2.0];
    let brute = brute_force_cg(2, &dense, &[1.0, 1.0], 2);
    let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
    let mut s = cg_init(&a, &[1.0, 1.0], &[0.0, 0.0]).unwrap();
    s.step(&a).unwrap();
    s.step(&a).unwrap();
    for i in 0..2 {
        assert!(rel(s.alpha_hist[i], brute.alpha[i]) <= 1e-15);
    }
    assert!(rel(s.beta_hist[0], brute.beta[0]) <= 1e-15);
    assert_eq!(s.x, brute.x[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn finite_termination_on_repeated_spectra(
        distinct in proptest::collection::vec(0.5f64..50.0, 1..8),
        reps in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut diag: Vec<f64> = distinct.iter().flat_map(|&v| std::iter::repeat(v).take(reps)).collect();
        // shuffle positions
        for i in (1..diag.len()).rev() {
            let j = rng.gen_range(0..=i);
            diag.swap(i, j);
        }
        let mut q = distinct.clone();
        q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        q.dedup();
        let a = CsrMatrix::from_diagonal(&diag);
        let b: Vec<f64> = (0..diag.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
        let cfg = SolveConfig { tol: 1e-10, criterion: Criterion::RelResidue, ..SolveConfig::default() };
        let r = solve(&a, &b, &cfg).unwrap();
        prop_assert!(r.iterations <= q.len(), "{} > {}", r.iterations, q.len());
        prop_assert!(r.converged());
    }

    #[test]
    fn state_invariants_along_the_run(seed in any::<u64>(), n in 5usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dense, _) = random_spd(&mut rng, n, 10.0);
        let a = csr(n, &dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_true = exact_solve(&DenseSym::new(n, dense.clone()).unwrap(), &b).unwrap();
        let truth = Truth::new(&a, x_true).unwrap();
        let mut s = cg_init(&a, &b, &vec![0.0; n]).unwrap();
        // directions formed while the residual is still well above rounding level
        let mut dirs = vec![s.d.clone()];
        let mut prev_err = truth.errors(&s.x).unwrap().anorm;
        while s.k < n && s.rel_residue > 1e-12 {
            s.step(&a).unwrap();
            if s.rel_residue > 1e-4 {
                dirs.push(s.d.clone());
            }
            prop_assert!(*s.alpha_hist.last().unwrap() > 0.0);
            prop_assert!(*s.beta_hist.last().unwrap() > 0.0);
            let drift = s.residual_drift(&a, &b).unwrap();
            prop_assert!(drift <= 1e-10 * s.b_norm, "drift {drift}");
            let q = a.quadratic_form(&s.x).unwrap();
            if s.rel_residue > 1e-6 {
                prop_assert!(rel(s.xk_anorm_sq, q) <= 1e-10, "k {}: {} vs {}", s.k, s.xk_anorm_sq, q);
            }
            // exact arithmetic has x_kᵀr_k = 0; late in the run it carries the whole gap
            let q_corrected = q + 2.0 * dot(&s.x, &s.r);
            prop_assert!(rel(s.xk_anorm_sq, q_corrected) <= 1e-12, "k {}: {} vs {}", s.k, s.xk_anorm_sq, q_corrected);
            let hs: f64 = (0..s.k).map(|i| s.alpha_hist[i] * s.r_norm_sq_hist[i]).sum();
            prop_assert!(rel(s.xk_anorm_sq, hs) <= 1e-14);
            let err = truth.errors(&s.x).unwrap().anorm;
            if err > 1e-10 * truth.anorm() {
                prop_assert!(err < prev_err, "A-norm error grew: {prev_err} -> {err}");
            }
            prev_err = err;
        }
        // local A-orthogonality of directions
        let ad: Vec<Vec<f64>> = dirs.iter().map(|d| a.matvec(d).unwrap()).collect();
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len().min(i + 6) {
                let lhs = dot(&dirs[i], &ad[j]).abs();
                let scale = dot(&dirs[i], &ad[i]).sqrt() * dot(&dirs[j], &ad[j]).sqrt();
                if scale > 0.0 {
                    prop_assert!(lhs <= 1e-8 * scale, "d{i}ᵀAd{j} = {lhs}, scale {scale}");
                }
            }
        }
    }

    /// Σ α_i‖r_i‖² = ‖x‖²_A − ‖x − x_k‖²_A survives the loss of global
    /// orthogonality; x_kᵀAx_k itself drifts from it by 2 x_kᵀr_k.
    #[test]
    fn energy_identity_on_ill_conditioned_matrices(seed in any::<u64>(), n in 5usize..60, log_kappa in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dense, _) = random_spd(&mut rng, n, 10f64.powf(log_kappa));
        let a = csr(n, &dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_true = exact_solve(&DenseSym::new(n, dense).unwrap(), &b).unwrap();
        let truth = Truth::new(&a, x_true).unwrap();
        let x_sq = truth.anorm().powi(2);
        let mut s = cg_init(&a, &b, &vec![0.0; n]).unwrap();
        while s.k < 3 * n && s.rel_residue > 1e-12 {
            s.step(&a).unwrap();
            let err = truth.errors(&s.x).unwrap().anorm;
            let gap = (s.xk_anorm_sq - (x_sq - err * err)).abs();
            prop_assert!(gap <= 1e-10 * x_sq, "k {}: gap {gap:e}", s.k);
        }
    }

    #[test]
    fn interlacing_of_extremal_ritz_values(seed in any::<u64>(), n in 10usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dense, _) = random_spd(&mut rng, n, 1e3);
        let a = csr(n, &dense);
        let b = vec![1.0; n];
        let mut s = cg_init(&a, &b, &vec![0.0; n]).unwrap();
        let mut j = SymTridiagonal::default();
        let mut prev: Option<(f64, f64)> = None;
        while s.k < n && !s.converged() && s.rel_residue > 1e-13 {
            s.step(&a).unwrap();
            recurrence_append(&mut j, &s.alpha_hist, &s.beta_hist).unwrap();
            let (f, g) = extremal_eigenvalues(&j, 1e-14);
            if let Some((pf, pg)) = prev {
                prop_assert!(f <= pf + 1e-12 * g, "f grew {pf} -> {f}");
                prop_assert!(g >= pg - 1e-12 * g, "g shrank {pg} -> {g}");
            }
            prev = Some((f, g));
        }
    }
}

fn run_to_termination(n: usize, dense: &[f64]) -> SymTridiagonal {
    let a = csr(n, dense);
    let b = vec![1.0; n];
    let mut s = cg_init(&a, &b, &vec![0.0; n]).unwrap();
    let mut j = SymTridiagonal::default();
    while s.k < n && !s.converged() {
        s.step(&a).unwrap();
        recurrence_append(&mut j, &s.alpha_hist, &s.beta_hist).unwrap();
    }
    j
}

#[test]
fn jacobi_matrix_at_termination_has_the_spectrum_of_a() {
    for (seed, n) in [(1u64, 50usize), (2, 30), (3, 50)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dense, lambda) = chebyshev_spd(&mut rng, n, 1e3);
        let j = run_to_termination(n, &dense);
        assert_eq!(j.dim(), n);
        let mu = eigenvalues(&j, 1e-14);
        let oracle = jacobi_eigenvalues(n, &dense);
        for i in 0..n {
            assert!(rel(oracle[i], lambda[i]) <= 1e-10, "oracle sanity {i}");
            assert!(rel(mu[i], oracle[i]) <= 1e-8, "seed {seed} n {n} index {i}: {} vs {}", mu[i], oracle[i]);
        }
    }
}

#[test]
fn look_ahead_is_exact_at_termination() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let n = 30;
    let (dense, _) = random_spd(&mut rng, n, 1e2);
    let a = csr(n, &dense);
    let cfg = SolveConfig {
        tol: 1e-300,
        criterion: Criterion::RelResidue,
        max_iter: Some(n),
        ..SolveConfig::default()
    };
    let r = solve(&a, &vec![1.0; n], &cfg).unwrap();
    assert_eq!(r.iterations, n);
    let last = r.records.last().unwrap();
    assert!(rel(last.a_tilde, last.f) <= 1e-14);
}

#[test]
fn cg_agrees_with_the_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 40;
    let (dense, _) = random_spd(&mut rng, n, 1e3);
    let a = csr(n, &dense);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cfg = SolveConfig { tol: 1e-12, criterion: Criterion::RelResidue, ..SolveConfig::default() };
    let r = solve(&a, &b, &cfg).unwrap();
    let x = exact_solve(&DenseSym::new(n, dense).unwrap(), &b).unwrap();
    let diff: f64 = x.iter().zip(&r.x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= 1e-8 * dot(&x, &x).sqrt());
}
