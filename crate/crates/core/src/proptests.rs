//! Property tests for invariants that span several modules.

use crate::ansatz::{build_unitary, latent_entropy, latent_state, mixed_state, CircuitParams, LatentParams};
use crate::estimator::{apply_depolarizing, Locus};
use crate::model::{
    build_hamiltonian, gibbs_state, log_partition_function, magnetic_entropy, singlet_state, triplet_states, DimerModel,
};
use crate::optimizer::{minimize, Method, OptimizerConfig};
use crate::qcore::{
    eigh, expectation, fidelity, matrix_exp_hermitian, von_neumann_entropy, CMatrix, DensityMatrix, HermitianOperator,
    StateVector,
};
use crate::thermo::{analytic_value, fit_coupling, DataRecord, Engine, ExperimentalDataset, FitConfig, Quantity};
use crate::vqt::{free_energy_cost, VqtParams, VqtProblem};
use crate::Scalar;
use num_complex::Complex64;
use proptest::prelude::*;

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 32)
}

fn complex_matrix(v: &[f64]) -> CMatrix<f64> {
    CMatrix::from_fn(4, |i, j| Complex64::new(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]))
}

fn hermitian(v: &[f64]) -> CMatrix<f64> {
    let a = complex_matrix(v);
    (&a + &a.adjoint()).scale(0.5)
}

fn density(v: &[f64]) -> DensityMatrix<f64> {
    let a = complex_matrix(v);
    let m = &a * &a.adjoint();
    let tr = m.trace().re.max(1e-12);
    DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
}

/// Gram-Schmidt on the columns of a random complex matrix.
fn unitary(v: &[f64]) -> CMatrix<f64> {
    let a = complex_matrix(v);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..4 {
        let mut c: Vec<Complex64> = (0..4).map(|i| a[(i, j)] + if i == j { 2.0 } else { 0.0 }).collect();
        for q in &cols {
            let proj: Complex64 = q.iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
            for (ci, qi) in c.iter_mut().zip(q) {
                *ci -= proj * qi;
            }
        }
        let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols.push(c.into_iter().map(|x| x / n).collect());
    }
    CMatrix::from_fn(4, |i, j| cols[j][i])
}

fn pure(v: &[f64]) -> StateVector<f64> {
    StateVector::normalized((0..4).map(|i| Complex64::new(v[2 * i], v[2 * i + 1] + 0.1)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs_hermitian(v in entries()) {
        let h = hermitian(&v);
        let es = eigh(&h, &f64::default_policy()).unwrap();
        prop_assert!(es.reconstruct().max_abs_diff(&h) <= 1e-9);
    }

    #[test]
    fn exp_spectrum_is_exp_of_spectrum(v in entries(), s in -3.0f64..3.0) {
        let op = HermitianOperator::new(hermitian(&v)).unwrap();
        let es = eigh(op.matrix(), &f64::default_policy()).unwrap();
        let ex = matrix_exp_hermitian(&op, s);
        let es_exp = eigh(ex.matrix(), &f64::default_policy()).unwrap();
        let mut want: Vec<f64> = es.eigenvalues().iter().map(|l| (s * l).exp()).collect();
        let mut got = es_exp.eigenvalues().to_vec();
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (a, b) in want.iter().zip(&got) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn entropy_is_unitarily_invariant(v in entries(), w in entries()) {
        let rho = density(&v);
        let u = unitary(&w);
        let s0 = von_neumann_entropy(&rho).unwrap();
        let s1 = von_neumann_entropy(&rho.evolve(&u)).unwrap();
        prop_assert!((s0 - s1).abs() <= 1e-9);
    }

    #[test]
    fn fidelity_symmetric_bounded_and_overlap_on_pure(v in entries(), w in entries()) {
        let (a, b) = (density(&v), density(&w));
        let fab = fidelity(&a, &b);
        prop_assert!((fab - fidelity(&b, &a)).abs() <= 1e-8);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&fab));
        let (p, q) = (pure(&v), pure(&w));
        let f = fidelity(&DensityMatrix::pure(&p), &DensityMatrix::pure(&q));
        prop_assert!((f - p.inner(&q).norm()).abs() <= 1e-6);
    }

    #[test]
    fn expectation_is_bilinear(v in entries(), w in entries(), x in entries(), a in -2.0f64..2.0, p in 0.0f64..1.0) {
        let h1 = HermitianOperator::new(hermitian(&v)).unwrap();
        let h2 = HermitianOperator::new(hermitian(&w)).unwrap();
        let (r1, r2) = (density(&x), density(&v));
        let sum = HermitianOperator::new(&h1.matrix().scale(a) + h2.matrix()).unwrap();
        let lhs = expectation(&sum, &r1).unwrap();
        let rhs = a * expectation(&h1, &r1).unwrap() + expectation(&h2, &r1).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
        let mix = DensityMatrix::new(&r1.matrix().scale(p) + &r2.matrix().scale(1.0 - p)).unwrap();
        let lhs = expectation(&h1, &mix).unwrap();
        let rhs = p * expectation(&h1, &r1).unwrap() + (1.0 - p) * expectation(&h1, &r2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn latent_entropy_matches_von_neumann(t0 in -8.0f64..8.0, t1 in -8.0f64..8.0, phi in prop::collection::vec(-7.0f64..7.0, 16)) {
        let lp = LatentParams::new([t0, t1]);
        let diag = latent_state(&lp);
        let s = latent_entropy(&lp);
        prop_assert!((von_neumann_entropy(&diag).unwrap() - s).abs() <= 1e-12);
        let cp = CircuitParams::new(2, phi).unwrap();
        prop_assert!((von_neumann_entropy(&mixed_state(&lp, &cp)).unwrap() - s).abs() <= 1e-9);
    }

    #[test]
    fn rotation_angles_are_4pi_periodic(phi in prop::collection::vec(-7.0f64..7.0, 8), k in 0usize..6) {
        let u = build_unitary(&CircuitParams::new(1, phi.clone()).unwrap());
        let mut shifted = phi;
        shifted[k] += 4.0 * std::f64::consts::PI;
        let v = build_unitary(&CircuitParams::new(1, shifted).unwrap());
        prop_assert!(u.max_abs_diff(&v) <= 1e-10);
    }

    #[test]
    fn depolarizing_preserves_trace_and_positivity(v in entries(), p in 0.0f64..1.0, locus in 0usize..3) {
        let rho = density(&v);
        let locus = match locus { 0 => Locus::Qubit(0), 1 => Locus::Qubit(1), _ => Locus::Both };
        let out = apply_depolarizing(&rho, p, locus);
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
        let es = eigh(out.matrix(), &f64::default_policy()).unwrap();
        prop_assert!(es.eigenvalues().iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn gibbs_identities(j in -10.0f64..50.0, lt in -3.0f64..2.5) {
        let t = 10f64.powf(lt);
        let m = DimerModel::new(j);
        let g = gibbs_state(&m, t).unwrap();
        let s = g.population_of(&singlet_state());
        let trip = triplet_states::<f64>();
        let t1 = g.population_of(&trip[0]);
        for st in &trip {
            prop_assert!((g.population_of(st) - t1).abs() <= 1e-12);
        }
        prop_assert!((3.0 * t1 + s - 1.0).abs() <= 1e-12);
        prop_assert!((magnetic_entropy(&m, t).unwrap() - von_neumann_entropy(&g).unwrap()).abs() <= 1e-9);
        let h = build_hamiltonian(&m);
        let z = matrix_exp_hermitian(&h, -1.0 / t).matrix().trace().re;
        let lnz = log_partition_function(&m, t).unwrap();
        if z.is_finite() && z > 0.0 {
            prop_assert!((lnz - z.ln()).abs() <= 1e-9 * lnz.abs().max(1.0));
        }
    }

    #[test]
    fn chi_t_is_monotone_in_temperature(j in 0.01f64..50.0, lt in -3.0f64..2.5, step in 1.0001f64..3.0) {
        let m = DimerModel::new(j);
        let t = 10f64.powf(lt);
        let q = Quantity::ChiReducedTimesT;
        let a = analytic_value(&m, q, t, Default::default()).unwrap();
        let b = analytic_value(&m, q, t * step, Default::default()).unwrap();
        prop_assert!(b >= a);
        prop_assert!(b <= 0.25 * t * step + 1e-12);
    }

    #[test]
    fn fit_argmin_ignores_sigma_scale(scale in 0.01f64..100.0) {
        let data = ExperimentalDataset::bundled();
        let scaled = ExperimentalDataset::new(
            data.quantity,
            data.units,
            data.source.clone(),
            data.records
                .iter()
                .map(|r| DataRecord {
                    sigma: Some(r.sigma.unwrap_or(1.0) * scale),
                    ..*r
                })
                .collect(),
        )
        .unwrap();
        let cfg = FitConfig::default();
        let a = fit_coupling(&data, Engine::Analytic, &cfg).unwrap();
        let b = fit_coupling(&scaled, Engine::Analytic, &cfg).unwrap();
        prop_assert!((a.j_over_kb - b.j_over_kb).abs() <= 2.0 * cfg.tolerance);
    }

    #[test]
    fn minimize_never_reports_worse_than_start(x0 in prop::collection::vec(-3.0f64..3.0, 4), simplex in any::<bool>()) {
        let cfg = OptimizerConfig {
            method: if simplex { Method::Simplex } else { Method::LinearApprox },
            max_iterations: 60,
            ..OptimizerConfig::default()
        };
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2) + v.sin()).sum::<f64>();
        let trace = minimize(f, &x0, &cfg).unwrap();
        prop_assert!(trace.best_cost <= f(&x0));
        prop_assert!(trace.evaluations <= cfg.max_iterations);
    }
}

#[test]
fn cost_never_undercuts_log_partition_bound() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig {
        cases: 1000,
        ..ProptestConfig::default()
    });
    let strat = (
        prop::collection::vec(-10.0f64..10.0, 2 + 16),
        -10.0f64..50.0,
        -3.0f64..2.55,
    );
    runner
        .run(&strat, |(x, j, lt)| {
            let mut prob = VqtProblem::new(DimerModel::new(j), 10f64.powf(lt)).unwrap();
            prob.ansatz.layers = 2;
            let p = VqtParams::from_slice(&x, 2).unwrap();
            let cost = free_energy_cost(&p, &prob).unwrap();
            let bound = -log_partition_function(&prob.model, prob.temperature).unwrap();
            prop_assert!(cost >= bound - 1e-9, "cost {cost} < bound {bound}");
            Ok(())
        })
        .unwrap();
}
