//! Closed-form optimal and near-optimal strategies.
//!
//! Indices are 0-based throughout: `|f_k⟩ = d^{-1/2} Σⱼ γ^{jk} |j⟩` and
//! `|φ_k⟩ = Σⱼ γ^{-jk} λⱼ |j⟩` with `j, k ∈ {0, …, d−1}` and `γ = e^{2πi/d}`.
//! Shifting both indices to 1-based only relabels the outcomes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, basis_ket, c, kron, projector, real, Complex64, ComplexMatrix};
use crate::states::{canonical_theta, SchmidtState};
use crate::strategy::{ConditionalTest, Direction, Strategy, WeightedTest};

/// The diagonal unitaries `g_k = Φ_k ⊗ Φ_k†` generating the local phase group,
/// where `Φ_k` multiplies `|k⟩` by `i`.
pub fn group_generators(d: usize) -> Vec<ComplexMatrix> {
    (0..d)
        .map(|k| {
            let mut phi = linalg::identity(d);
            phi[(k, k)] = c(0.0, 1.0);
            kron(&phi, &phi.adjoint())
        })
        .collect()
}

/// The local phase gate `Φ = diag(i^{n₀}, …, i^{n_{d−1}})` for exponents `n`.
pub fn phase_gate(exponents: &[u8]) -> ComplexMatrix {
    let d = exponents.len();
    let mut phi = ComplexMatrix::zeros(d, d);
    for (j, &n) in exponents.iter().enumerate() {
        phi[(j, j)] = i_pow(n);
    }
    phi
}

pub(crate) fn i_pow(n: u8) -> Complex64 {
    match n % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Sender Fourier basis and receiver conditional states.
#[derive(Debug, Clone)]
pub struct FourierPair {
    /// Orthonormal `|f_k⟩`.
    pub f_vectors: Vec<ComplexMatrix>,
    /// Unit `|φ_k⟩`, the receiver's state after the sender observes `f_k`.
    pub phi_vectors: Vec<ComplexMatrix>,
}

pub fn fourier_pair(state: &SchmidtState) -> FourierPair {
    let d = state.dim();
    let lambda = state.coeffs();
    let scale = 1.0 / (d as f64).sqrt();
    let root = |exp: i64| {
        let angle = 2.0 * PI * (exp.rem_euclid(d as i64) as f64) / d as f64;
        Complex64::from_polar(1.0, angle)
    };
    let mut f_vectors = Vec::with_capacity(d);
    let mut phi_vectors = Vec::with_capacity(d);
    for k in 0..d as i64 {
        let f: Vec<Complex64> = (0..d as i64).map(|j| root(j * k) * scale).collect();
        let phi: Vec<Complex64> = (0..d as i64)
            .map(|j| root(-j * k) * lambda[j as usize])
            .collect();
        f_vectors.push(linalg::ket(&f));
        phi_vectors.push(linalg::ket(&phi));
    }
    FourierPair {
        f_vectors,
        phi_vectors,
    }
}

/// Computational-basis test: both parties measure `{|k⟩}` and pass when the
/// outcomes agree. Its operator is `P_ZZ = Σₖ |kk⟩⟨kk|`.
pub fn computational_test(d: usize) -> Result<ConditionalTest> {
    let z: Vec<ComplexMatrix> = (0..d).map(|k| projector(&basis_ket(d, k))).collect();
    ConditionalTest::new(Direction::AToB, z.clone(), z)
}

/// Sender measures `{|f_k⟩}`, receiver tests `|φ_k⟩`, after a random phase
/// element. The untwirled operator is `X_ψ = Σₖ |f_k⟩⟨f_k| ⊗ |φ_k⟩⟨φ_k|`.
pub fn fourier_test(state: &SchmidtState, direction: Direction) -> Result<ConditionalTest> {
    let pair = fourier_pair(state);
    let povm = pair.f_vectors.iter().map(projector).collect();
    let pass = pair.phi_vectors.iter().map(projector).collect();
    Ok(ConditionalTest::new(direction, povm, pass)?.with_twirl())
}

/// `Ω→ = w P_ZZ + (1 − w) · twirl(X_ψ→)` for a chosen weight `w ∈ [0, 1]`.
pub fn one_way_with_weight(state: &SchmidtState, w: f64) -> Result<Strategy> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("weight {w} outside [0, 1]")));
    }
    Strategy::new(
        state.clone(),
        vec![
            WeightedTest {
                prob: w,
                test: computational_test(state.dim())?,
            },
            WeightedTest {
                prob: 1.0 - w,
                test: fourier_test(state, Direction::AToB)?,
            },
        ],
    )
}

/// Weight `λ₁² / (1 + λ₁²)` of the optimal one-way strategy.
pub fn one_way_weight(state: &SchmidtState) -> f64 {
    let l1 = state.largest().powi(2);
    l1 / (1.0 + l1)
}

/// Optimal one-way strategy, `v = 1 / (1 + λ₁²)`.
pub fn one_way_optimal(state: &SchmidtState) -> Result<Strategy> {
    one_way_with_weight(state, one_way_weight(state))
}

/// Analytic value `1 / (1 + λ₁²)` of [`one_way_optimal`].
pub fn one_way_value(state: &SchmidtState) -> f64 {
    1.0 / (1.0 + state.largest().powi(2))
}

/// `λ² = ½(λ₁² + λ₂²)`.
pub fn mean_top_square(state: &SchmidtState) -> Result<f64> {
    let sq = state.squares();
    if sq.len() < 2 {
        return Err(Error::InvalidParameter(
            "two-way construction needs Schmidt rank at least 2".into(),
        ));
    }
    Ok(0.5 * (sq[0] + sq[1]))
}

/// Analytic value `1 / (1 + λ²)` of [`near_optimal_two_way`].
pub fn near_optimal_value(state: &SchmidtState) -> Result<f64> {
    Ok(1.0 / (1.0 + mean_top_square(state)?))
}

/// Swap-symmetrized one-way construction with `w = λ² / (1 + λ²)`.
///
/// The computational test is symmetric under the swap, so it appears once;
/// the Fourier test is split evenly between both directions.
pub fn near_optimal_two_way(state: &SchmidtState) -> Result<Strategy> {
    let l2 = mean_top_square(state)?;
    let w = l2 / (1.0 + l2);
    Strategy::new(
        state.clone(),
        vec![
            WeightedTest {
                prob: w,
                test: computational_test(state.dim())?,
            },
            WeightedTest {
                prob: 0.5 * (1.0 - w),
                test: fourier_test(state, Direction::AToB)?,
            },
            WeightedTest {
                prob: 0.5 * (1.0 - w),
                test: fourier_test(state, Direction::BToA)?,
            },
        ],
    )
}

/// The two projective settings built from `|φ_k⟩ = g^k |φ₀⟩`,
/// `|φ₀⟩ = |+⟩ ⊗ (cos θ|0⟩ + sin θ|1⟩)`: the `X` setting uses `k ∈ {0, 2}`,
/// the `Y` setting `k ∈ {1, 3}`.
fn two_qubit_settings(theta: f64, direction: Direction) -> Result<[ConditionalTest; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = linalg::real_ket(&[h, h]);
    let target_b = linalg::real_ket(&[theta.cos(), theta.sin()]);
    let phase = phase_gate(&[0, 1]);
    let alice = |k: i32| phase.pow(k as u32) * &plus;
    let bob = |k: i32| phase.adjoint().pow(k as u32) * &target_b;
    let setting = |ks: [i32; 2]| {
        ConditionalTest::new(
            direction,
            ks.iter().map(|&k| projector(&alice(k))).collect(),
            ks.iter().map(|&k| projector(&bob(k))).collect(),
        )
    };
    Ok([setting([0, 2])?, setting([1, 3])?])
}

/// Three-setting projective one-way strategy for `cos θ|00⟩ + sin θ|11⟩`.
pub fn two_qubit_one_way(theta: f64) -> Result<Strategy> {
    let theta = canonical_theta(theta)?;
    let cos2 = theta.cos().powi(2);
    let [x, y] = two_qubit_settings(theta, Direction::AToB)?;
    Strategy::new(
        SchmidtState::two_qubit(theta)?,
        vec![
            WeightedTest {
                prob: cos2 / (1.0 + cos2),
                test: computational_test(2)?,
            },
            WeightedTest {
                prob: 0.5 / (1.0 + cos2),
                test: x,
            },
            WeightedTest {
                prob: 0.5 / (1.0 + cos2),
                test: y,
            },
        ],
    )
}

/// Five-setting two-way strategy with `v = 2/3` for every two-qubit target.
pub fn two_qubit_two_way(theta: f64) -> Result<Strategy> {
    let theta = canonical_theta(theta)?;
    let [x_ab, y_ab] = two_qubit_settings(theta, Direction::AToB)?;
    let [x_ba, y_ba] = two_qubit_settings(theta, Direction::BToA)?;
    let sixth = 1.0 / 6.0;
    Strategy::new(
        SchmidtState::two_qubit(theta)?,
        vec![
            WeightedTest {
                prob: 1.0 / 3.0,
                test: computational_test(2)?,
            },
            WeightedTest { prob: sixth, test: x_ab },
            WeightedTest { prob: sixth, test: x_ba },
            WeightedTest { prob: sixth, test: y_ab },
            WeightedTest { prob: sixth, test: y_ba },
        ],
    )
}

/// Closed form of the twirled one-way operator:
/// `⟨ij|Ω|ij⟩ = (1−w)λⱼ²`, `⟨ii|Ω|jj⟩ = (1−w)λᵢλⱼ`, `⟨ii|Ω|ii⟩ = w + (1−w)λᵢ²`.
pub fn one_way_closed_form(state: &SchmidtState, w: f64) -> ComplexMatrix {
    let d = state.dim();
    let lambda = state.coeffs();
    let mut omega = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                omega[(i * d + i, i * d + i)] = real(w + (1.0 - w) * lambda[i] * lambda[i]);
            } else {
                omega[(i * d + j, i * d + j)] = real((1.0 - w) * lambda[j] * lambda[j]);
                omega[(i * d + i, j * d + j)] = real((1.0 - w) * lambda[i] * lambda[j]);
            }
        }
    }
    omega
}
