//! Property tests over random states, operators and strategies.

mod common;

use bivver_core::constructors::{
    near_optimal_two_way, one_way_optimal, two_qubit_one_way, two_qubit_two_way,
};
use bivver_core::linalg::{
    self, herm_eig, kron, partial_trace, partial_transpose, swap_operator, BipartiteDims,
    ComplexMatrix, Subsystem,
};
use bivver_core::optimizer::{
    project_hyperbolic, solve_one_way_relaxation, solve_two_way_relaxation,
};
use bivver_core::protocol::{chernoff_confidence, confidence_iid, copies_needed};
use bivver_core::states::{fidelity, schmidt_decompose, DensityOperator};
use bivver_core::strategy::{diagnose, spectral_gap, twirl, validate_semi_optimal_one_way};
use bivver_core::{Complex64, SchmidtState, SolverOptions, Strategy};
use common::{haar_state, max_abs_diff, random_hermitian, random_pass_operator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unitary(r: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    random_hermitian(r, d).qr().q()
}

fn constructed(s: &SchmidtState) -> Vec<Strategy> {
    let mut out = vec![one_way_optimal(s).unwrap(), near_optimal_two_way(s).unwrap()];
    if let Some(theta) = s.theta() {
        out.push(two_qubit_one_way(theta).unwrap());
        out.push(two_qubit_two_way(theta).unwrap());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kron_is_associative_and_bilinear(seed in any::<u64>(), t in -2.0f64..2.0) {
        let mut r = rng(seed);
        let (a, b, c, e) = (
            random_hermitian(&mut r, 2),
            random_hermitian(&mut r, 3),
            random_hermitian(&mut r, 2),
            random_hermitian(&mut r, 2),
        );
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(max_abs_diff(&left, &right) < 1e-12);
        let s = linalg::real(t);
        let lin = kron(&(&a * s + &e), &b);
        let parts = kron(&a, &b) * s + kron(&e, &b);
        prop_assert!(max_abs_diff(&lin, &parts) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(&mut r, da), random_hermitian(&mut r, db));
        let dims = BipartiteDims::new(da, db);
        let reduced = partial_trace(&kron(&a, &b), dims, Subsystem::B).unwrap();
        prop_assert!(max_abs_diff(&reduced, &(&a * b.trace())) < 1e-12);
        let reduced = partial_trace(&kron(&a, &b), dims, Subsystem::A).unwrap();
        prop_assert!(max_abs_diff(&reduced, &(&b * a.trace())) < 1e-12);
    }

    #[test]
    fn partial_transpose_keeps_trace_and_hermiticity(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let m = random_hermitian(&mut r, d * d);
        for side in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(&m, BipartiteDims::square(d), side).unwrap();
            prop_assert!((pt.trace() - m.trace()).norm() < 1e-12);
            prop_assert!(linalg::hermitian_deviation(&pt) < 1e-12);
        }
    }

    #[test]
    fn herm_eig_is_consistent(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let m = random_hermitian(&mut r, n);
        let eig = herm_eig(&m).unwrap();
        let sum: f64 = eig.values.iter().sum();
        prop_assert!((sum - m.trace().re).abs() < 1e-10);
        let gram = eig.vectors.adjoint() * &eig.vectors;
        prop_assert!(max_abs_diff(&gram, &linalg::identity(n)) < 1e-10);
    }

    #[test]
    fn swap_squares_to_identity(d in 1usize..6) {
        let s = swap_operator(d);
        prop_assert!(max_abs_diff(&(&s * &s), &linalg::identity(d * d)) < 1e-15);
    }

    #[test]
    fn schmidt_decompose_recovers_coefficients(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let (u, v) = (random_unitary(&mut r, d), random_unitary(&mut r, d));
        let diag = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j { linalg::real(s.coeffs()[i]) } else { Complex64::new(0.0, 0.0) }
        });
        let (back, _) = schmidt_decompose(&(u * diag * v.transpose())).unwrap();
        prop_assert_eq!(back.dim(), s.dim());
        for (a, b) in back.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_is_linear(seed in any::<u64>(), d in 2usize..4, p in 0.0f64..1.0) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let dims = s.dims();
        let density = |r: &mut ChaCha8Rng| {
            let h = random_hermitian(r, d * d);
            let x = &h * &h;
            let t = x.trace();
            DensityOperator::new(x / t, dims).unwrap()
        };
        let (a, b) = (density(&mut r), density(&mut r));
        let mix = a.matrix() * linalg::real(p) + b.matrix() * linalg::real(1.0 - p);
        let mix = DensityOperator::new(mix, dims).unwrap();
        let want = p * fidelity(&s, &a).unwrap() + (1.0 - p) * fidelity(&s, &b).unwrap();
        prop_assert!((fidelity(&s, &mix).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn constructed_strategies_are_valid(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let psi = s.state_vector();
        for strategy in constructed(&s) {
            let om = strategy.omega();
            let eig = herm_eig(om).unwrap();
            prop_assert!(eig.min() >= -1e-9 && eig.max() <= 1.0 + 1e-9);
            prop_assert!(linalg::vector_norm(&(om * &psi - &psi)) <= 1e-9);
            prop_assert!(diagnose(&strategy).unwrap().passed());
            prop_assert!(strategy.v().unwrap() >= 0.5 - 1e-10);
            for wt in strategy.tests() {
                let total = wt.test.sender_povm().iter()
                    .fold(ComplexMatrix::zeros(d, d), |acc, m| acc + m);
                prop_assert!(max_abs_diff(&total, &linalg::identity(d)) <= 1e-12);
            }
        }
        let one_way = validate_semi_optimal_one_way(&one_way_optimal(&s).unwrap()).unwrap();
        prop_assert!(one_way.passed());
    }

    #[test]
    fn constructor_gaps_match_closed_forms(seed in any::<u64>(), d in 2usize..=10) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let l = s.coeffs();
        let one = one_way_optimal(&s).unwrap().v().unwrap();
        prop_assert!((one - 1.0 / (1.0 + l[0] * l[0])).abs() < 1e-10);
        let near = near_optimal_two_way(&s).unwrap().v().unwrap();
        prop_assert!((near - 1.0 / (1.0 + 0.5 * (l[0] * l[0] + l[1] * l[1]))).abs() < 1e-10);
    }

    #[test]
    fn twirl_properties(seed in any::<u64>(), d in 2usize..4, t in -2.0f64..2.0) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let (a, b) = (random_hermitian(&mut r, d * d), random_hermitian(&mut r, d * d));
        let k = linalg::real(t);
        let ta = twirl(&a).unwrap();
        prop_assert!(max_abs_diff(&twirl(&(&a * k + &b)).unwrap(), &(&ta * k + twirl(&b).unwrap())) < 1e-12);
        prop_assert!(max_abs_diff(&twirl(&ta).unwrap(), &ta) < 1e-15);
        prop_assert!((ta.trace() - a.trace()).norm() < 1e-12);
        prop_assert!(linalg::hermitian_deviation(&ta) < 1e-12);
        let p = s.projector();
        prop_assert!(max_abs_diff(&twirl(&p).unwrap(), &p) < 1e-12);
        let pos = &a * &a;
        prop_assert!(herm_eig(&twirl(&pos).unwrap()).unwrap().min() >= -1e-10);
        let omega = random_pass_operator(&mut r, &s);
        let v = spectral_gap(&omega, &s).unwrap().v;
        prop_assert!(spectral_gap(&twirl(&omega).unwrap(), &s).unwrap().v >= v - 1e-10);
    }

    #[test]
    fn hyperbolic_projection_lands_in_set(
        a in -3.0f64..3.0, b in -3.0f64..3.0, re in -3.0f64..3.0, im in -3.0f64..3.0,
    ) {
        let (pa, pb, pz) = project_hyperbolic(a, b, Complex64::new(re, im));
        prop_assert!(pa >= -1e-12 && pb >= -1e-12);
        prop_assert!(pa * pb >= pz.norm_sqr() - 1e-10);
        let again = project_hyperbolic(pa, pb, pz);
        prop_assert!((again.0 - pa).abs() < 1e-10 && (again.1 - pb).abs() < 1e-10);
        prop_assert!((again.2 - pz).norm() < 1e-10);
    }

    #[test]
    fn chernoff_matches_iid_at_full_pass_rate(
        v in 0.05f64..1.0, eps in 0.01f64..0.9, n in 1u64..500,
    ) {
        let iid = confidence_iid(v, eps, n).unwrap();
        let ch = chernoff_confidence(1.0, v, eps, n).unwrap();
        prop_assert!((iid - ch).abs() <= 1e-12 * iid.max(1e-300) + 1e-300);
    }

    #[test]
    fn copies_needed_is_nonincreasing(
        v in 0.05f64..0.95, eps in 0.01f64..0.5, delta in 1e-8f64..0.5, bump in 1.0f64..1.5,
    ) {
        let n = copies_needed(v, eps, delta).unwrap();
        prop_assert!(copies_needed((v * bump).min(1.0), eps, delta).unwrap() <= n);
        prop_assert!(copies_needed(v, (eps * bump).min(0.99), delta).unwrap() <= n);
        prop_assert!(copies_needed(v, eps, (delta * bump).min(1.0)).unwrap() <= n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relaxation_values_respect_analytic_bounds(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let s = haar_state(&mut r, d);
        let l = s.coeffs();
        let opts = SolverOptions::default();
        let one = solve_one_way_relaxation(&s, &opts).unwrap();
        prop_assert!(one.value <= 1.0 / (1.0 + l[0] * l[0]) + 1e-6);
        prop_assert!(one.residuals.max() < opts.tol_inner);
        let two = solve_two_way_relaxation(&s, &opts).unwrap();
        let near = 1.0 / (1.0 + 0.5 * (l[0] * l[0] + l[1] * l[1]));
        prop_assert!(two.value >= near - 1e-6);
        prop_assert!(two.value >= one.value - 1e-6);
        prop_assert!(two.residuals.max() < opts.tol_inner);
    }
}
