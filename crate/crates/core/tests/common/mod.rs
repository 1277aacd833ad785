//! Random inputs shared by the integration tests.

#![allow(dead_code)]

use bivver_core::linalg::{self, c, ComplexMatrix};
use bivver_core::states::schmidt_decompose;
use bivver_core::SchmidtState;
use rand::Rng;
use rand_distr::StandardNormal;

/// Schmidt coefficients of a Haar-random pure state on `C^d ⊗ C^d`.
pub fn haar_state(rng: &mut impl Rng, d: usize) -> SchmidtState {
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = linalg::frobenius_norm(&g);
    schmidt_decompose(&(g / linalg::real(norm))).unwrap().0
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    linalg::hermitian_part(&g)
}

/// `|ψ⟩⟨ψ| + P⊥ X P⊥` with `X` a random density operator times a random
/// factor in `[0, 1]`: a pass operator that accepts the target with
/// certainty.
pub fn random_pass_operator(rng: &mut impl Rng, state: &SchmidtState) -> ComplexMatrix {
    let n = state.dim() * state.dim();
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let x = &g * g.adjoint();
    let x = &x / x.trace() * linalg::real(rng.random_range(0.0..1.0));
    let p = state.projector();
    let perp = linalg::identity(n) - &p;
    &p + &perp * x * &perp
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
