mod common;

use common::*;
use mosaic_qaoa_core::bfgs::BfgsOptions;
use mosaic_qaoa_core::engine::{energy_and_gradient, evaluate_circuit, optimize_params, AnsatzCircuit};
use mosaic_qaoa_core::pool::{build_pool, score_pool};
use mosaic_qaoa_core::sat::{max_sat_opt, CnfFormula};
use mosaic_qaoa_core::sim::{build_cost_diag, gradient_score, StateVector};
use mosaic_qaoa_core::tiling::{select_single_adapt, solve_greedy_tetris, solve_mwis_exact};
use num_complex::Complex64;
use rand::Rng;

#[test]
fn max_sat_matches_independent_maximizer() {
    for seed in 0..60 {
        let n = 3 + (seed % 10) as u32;
        let f = random_formula(n, seed);
        let opt = max_sat_opt(&f).unwrap();
        assert_eq!(opt.opt, brute_force_opt(&f), "seed {seed}");
        assert_eq!(f.satisfied_count(opt.witness), opt.opt);
    }
}

#[test]
fn dense_oracle_agrees_with_kernels() {
    let mut r = rng(17);
    for case in 0..40 {
        let n = 3 + case % 3;
        let f = random_formula(n as u32, case as u64);
        let diag = build_cost_diag(&f).unwrap();
        let c = random_circuit(n, 3, &mut r);
        let (psi, e) = evaluate_circuit(&c, &diag).unwrap();
        let (dense, de) = dense_evaluate(&c, diag.values());
        for (a, b) in psi.amplitudes().iter().zip(&dense) {
            assert!((a - b).norm() < 1e-10, "case {case}");
        }
        assert!((e - de).abs() < 1e-10);
    }
}

#[test]
fn gradient_scores_match_dense_commutator() {
    // score = -dE/dbeta = i <phi|[H, A]|phi> computed with dense matrices.
    let mut r = rng(5);
    for seed in 0..8 {
        let f = random_formula(4, seed);
        let diag = build_cost_diag(&f).unwrap();
        let c = random_circuit(4, 2, &mut r);
        let (psi, _) = evaluate_circuit(&c, &diag).unwrap();
        let gamma0 = r.random_range(0.0..1.0);
        let mut phi = psi.clone();
        phi.apply_phase(&diag, gamma0).unwrap();
        for op in build_pool(4).unwrap() {
            let mut expect = Complex64::new(0.0, 0.0);
            for letters in operator_letters(&op, 4) {
                let a = dense_pauli(&letters);
                let a_phi = mat_vec(&a, phi.amplitudes());
                let h_phi: Vec<Complex64> =
                    phi.amplitudes().iter().zip(diag.values()).map(|(x, v)| x * v).collect();
                let ha: Complex64 = h_phi.iter().zip(&a_phi).map(|(l, x)| l.conj() * x).sum();
                // <phi|[H,A]|phi> = <H phi|A phi> - conj(...) = 2i Im <H phi|A phi>
                expect += Complex64::new(0.0, 1.0) * Complex64::new(0.0, 2.0 * ha.im);
            }
            let got = gradient_score(&psi, &diag, &op, gamma0).unwrap();
            assert!((got - expect.re).abs() < 1e-12, "{op}");
            assert!(expect.im.abs() < 1e-12);
        }
    }
}

#[test]
fn pure_x_scores_vanish_at_zero_probe() {
    for seed in 0..10 {
        let f = random_formula(5, seed);
        let diag = build_cost_diag(&f).unwrap();
        let pool = build_pool(5).unwrap();
        let scored = score_pool(&StateVector::plus(5), &diag, 0.0, &pool, 1e-6).unwrap();
        for (op, s) in &scored.scores {
            if op.is_pure_x() {
                assert!(s.abs() < 1e-12, "{op} {s}");
            }
        }
    }
}

#[test]
fn reoptimizing_an_optimum_is_a_fixed_point() {
    let mut r = rng(23);
    for seed in 0..10 {
        let f = random_formula(5, seed);
        let diag = build_cost_diag(&f).unwrap();
        let c = random_circuit(5, 3, &mut r);
        let opts = BfgsOptions::default();
        let (p1, e1) = optimize_params(&c, &diag, &c.parameters(), &opts).unwrap();
        let (_, e2) = optimize_params(&c, &diag, &p1, &opts).unwrap();
        assert!((e1 - e2).abs() < 1e-9, "{e1} {e2}");
        assert!(e1 <= evaluate_circuit(&c, &diag).unwrap().1 + 1e-12);
    }
}

#[test]
fn adjoint_gradient_on_twenty_circuits() {
    let mut r = rng(99);
    for seed in 0..20 {
        let n = 3 + (seed % 4) as u32;
        let f = random_formula(n, seed);
        let diag = build_cost_diag(&f).unwrap();
        let c = random_circuit(n as usize, 4, &mut r);
        let x = c.parameters();
        let (_, g) = energy_and_gradient(&c, &diag, &x).unwrap();
        let energy = |p: &[f64]| energy_and_gradient(&c, &diag, p).unwrap().0;
        for (i, gi) in g.iter().enumerate() {
            let fd = central_difference(&energy, &x, i, 1e-5);
            assert!((fd - gi).abs() < 1e-5, "seed {seed} param {i}: {fd} vs {gi}");
        }
    }
}

#[test]
fn selectors_agree_with_enumeration_on_pool_graphs() {
    let mut r = rng(3);
    for seed in 0..20 {
        let f = random_formula(4, seed);
        let diag = build_cost_diag(&f).unwrap();
        let c = random_circuit(4, 2, &mut r);
        let (psi, _) = evaluate_circuit(&c, &diag).unwrap();
        let pool = build_pool(4).unwrap();
        let scored = score_pool(&psi, &diag, 0.5, &pool, 1e-6).unwrap();
        let g = mosaic_qaoa_core::IncompatibilityGraph::from_scored(&scored, 4);
        let exact = solve_mwis_exact(&g);
        let best = enumerate_mwis(&g);
        assert!((exact.total_weight - best).abs() < 1e-12);
        let greedy = solve_greedy_tetris(&g);
        let single = select_single_adapt(&g);
        assert!(g.is_independent(&exact.chosen) && g.is_independent(&greedy.chosen));
        assert!(exact.total_weight >= greedy.total_weight - 1e-12);
        assert!(greedy.total_weight >= single.total_weight - 1e-12);
    }
}

#[test]
fn empty_circuit_energy_is_diagonal_mean() {
    for seed in 0..10 {
        let f: CnfFormula = random_formula(6, seed);
        let diag = build_cost_diag(&f).unwrap();
        let (_, e) = evaluate_circuit(&AnsatzCircuit::empty(6), &diag).unwrap();
        let mean = diag.values().iter().sum::<f64>() / 64.0;
        assert!((e - mean).abs() < 1e-12);
        assert!((e - f.m() as f64 / 8.0).abs() < 1e-12);
    }
}
