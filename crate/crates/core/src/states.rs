//! Bipartite pure targets in Schmidt-canonical form, and density operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, herm_eig, hermitian_deviation, is_finite, real, BipartiteDims, Complex64, ComplexMatrix,
};

/// Schmidt coefficients below this value are dropped.
pub const DROP_TOL: f64 = 1e-12;
/// Largest deviation of `Σλ²` from one that is silently renormalized.
pub const RENORM_TOL: f64 = 1e-6;
/// Tolerance on the PSD and trace conditions of [`DensityOperator`].
pub const DENSITY_TOL: f64 = 1e-9;

/// `|ψ⟩ = Σᵢ λᵢ |ii⟩` with `λ₁ ≥ … ≥ λ_d > 0` and `Σλᵢ² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtState {
    coeffs: Vec<f64>,
}

impl SchmidtState {
    /// Builds a canonical state from (possibly unsorted) Schmidt coefficients.
    ///
    /// Entries below [`DROP_TOL`] are removed, the rest are sorted in
    /// descending order, and renormalized when `Σλ²` is within
    /// [`RENORM_TOL`] of one.
    pub fn from_schmidt(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidState("empty Schmidt coefficient list".into()));
        }
        if let Some(bad) = coeffs.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidState(format!(
                "Schmidt coefficients must be finite and nonnegative, got {bad}"
            )));
        }
        let mut kept: Vec<f64> = coeffs.iter().copied().filter(|&x| x >= DROP_TOL).collect();
        if kept.is_empty() {
            return Err(Error::InvalidState("all Schmidt coefficients vanish".into()));
        }
        let norm_sq: f64 = kept.iter().map(|x| x * x).sum();
        if (norm_sq - 1.0).abs() > RENORM_TOL {
            return Err(Error::InvalidState(format!(
                "Schmidt coefficients are not normalized (sum of squares {norm_sq})"
            )));
        }
        if (norm_sq - 1.0).abs() > 8.0 * f64::EPSILON {
            let norm = norm_sq.sqrt();
            kept.iter_mut().for_each(|x| *x /= norm);
        }
        kept.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { coeffs: kept })
    }

    /// `cos θ |00⟩ + sin θ |11⟩`.
    ///
    /// `θ ∈ (π/4, π/2)` is accepted and maps onto `π/2 − θ` by relabeling.
    pub fn two_qubit(theta: f64) -> Result<Self> {
        let theta = canonical_theta(theta)?;
        Self::from_schmidt(&[theta.cos(), theta.sin()])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Schmidt rank.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dims(&self) -> BipartiteDims {
        BipartiteDims::square(self.dim())
    }

    /// Squared Schmidt coefficients `λᵢ²`.
    pub fn squares(&self) -> Vec<f64> {
        self.coeffs.iter().map(|x| x * x).collect()
    }

    /// Largest coefficient `λ₁`.
    pub fn largest(&self) -> f64 {
        self.coeffs[0]
    }

    /// `θ` with `(cos θ, sin θ) = (λ₁, λ₂)` for Schmidt rank two.
    pub fn theta(&self) -> Option<f64> {
        (self.dim() == 2).then(|| self.coeffs[1].atan2(self.coeffs[0]))
    }

    /// The `d² × 1` vector `Σᵢ λᵢ |ii⟩`.
    pub fn state_vector(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut v = ComplexMatrix::zeros(d * d, 1);
        for (i, &l) in self.coeffs.iter().enumerate() {
            v[(i * d + i, 0)] = real(l);
        }
        v
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        linalg::projector(&self.state_vector())
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
            dims: self.dims(),
        }
    }
}

/// Validates `θ` and folds `(π/4, π/2)` onto `(0, π/4)`.
pub fn canonical_theta(theta: f64) -> Result<f64> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    if !theta.is_finite() || theta <= 0.0 || theta >= FRAC_PI_2 {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, pi/4] (or (pi/4, pi/2) before relabeling), got {theta}"
        )));
    }
    Ok(if theta > FRAC_PI_4 { FRAC_PI_2 - theta } else { theta })
}

/// Isometries taking the canonical frame to the input's local bases:
/// `|ψ_in⟩ = (a ⊗ b) Σₖ λₖ |kk⟩`.
#[derive(Debug, Clone)]
pub struct LocalFrames {
    /// `d₁ × d`, columns are Alice's Schmidt vectors.
    pub a: ComplexMatrix,
    /// `d₂ × d`, columns are Bob's Schmidt vectors.
    pub b: ComplexMatrix,
}

impl LocalFrames {
    /// Maps the canonical state back to the input frame, as a `d₁ × d₂` amplitude matrix.
    pub fn amplitudes(&self, state: &SchmidtState) -> ComplexMatrix {
        let d = state.dim();
        let mut sigma = ComplexMatrix::zeros(d, d);
        for (k, &l) in state.coeffs().iter().enumerate() {
            sigma[(k, k)] = real(l);
        }
        &self.a * sigma * self.b.transpose()
    }
}

/// Schmidt decomposition of a `d₁ × d₂` amplitude matrix `C`, where
/// `|ψ⟩ = Σᵢⱼ Cᵢⱼ |i⟩|j⟩`.
pub fn schmidt_decompose(amplitudes: &ComplexMatrix) -> Result<(SchmidtState, LocalFrames)> {
    if amplitudes.is_empty() || !is_finite(amplitudes) {
        return Err(Error::InvalidState("amplitude matrix is empty or non-finite".into()));
    }
    let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidState("amplitude matrix is zero".into()));
    }
    if (norm_sq - 1.0).abs() > RENORM_TOL {
        return Err(Error::InvalidState(format!(
            "amplitudes are not normalized (squared norm {norm_sq})"
        )));
    }
    let s = linalg::svd(amplitudes)?;
    let rank = s.singular_values.iter().filter(|&&x| x >= DROP_TOL).count();
    let state = SchmidtState::from_schmidt(&s.singular_values[..rank])?;
    // C = U Σ V†, so Bob's k-th Schmidt vector is the k-th row of V† read as a column.
    let a = s.u.columns(0, rank).into_owned();
    let b = s.v_adjoint.rows(0, rank).transpose();
    Ok((state, LocalFrames { a, b }))
}

/// A normalized bipartite density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: BipartiteDims,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(matrix: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        let n = dims.total();
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "density operator is {}x{}, dims require {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > linalg::TOL_HERMITIAN {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidState(format!("density operator trace is {tr}")));
        }
        let min = herm_eig(&matrix)?.min();
        if min < -DENSITY_TOL {
            return Err(Error::InvalidState(format!(
                "density operator is not positive (min eigenvalue {min})"
            )));
        }
        Ok(Self {
            matrix: linalg::hermitian_part(&matrix),
            dims,
        })
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn pure(vector: &ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        let norm = linalg::vector_norm(vector);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = vector / real(norm);
        Self::new(linalg::projector(&v), dims)
    }

    /// `I / n` on the full space.
    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let n = dims.total();
        Self {
            matrix: linalg::identity(n) / real(n as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }
}

/// `⟨ψ|σ|ψ⟩`.
pub fn fidelity(state: &SchmidtState, sigma: &DensityOperator) -> Result<f64> {
    if sigma.dims() != state.dims() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, density operator is {}x{}",
            state.dim(),
            state.dim(),
            sigma.dims().dim_a,
            sigma.dims().dim_b
        )));
    }
    let f = linalg::expectation(sigma.matrix(), &state.state_vector());
    Ok(clamp_unit(f, DENSITY_TOL))
}

/// Clamps values within `tol` outside `[0, 1]` onto the interval.
pub(crate) fn clamp_unit(x: f64, tol: f64) -> f64 {
    if (-tol..0.0).contains(&x) {
        0.0
    } else if x > 1.0 && x <= 1.0 + tol {
        1.0
    } else {
        x
    }
}

/// State input accepted by the command-line tools:
/// `{"schmidt": [λ₁, …]}` or `{"amplitudes": [[[re, im], …], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateInput {
    Schmidt { schmidt: Vec<f64> },
    Amplitudes { amplitudes: Vec<Vec<[f64; 2]>> },
}

impl StateInput {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Canonical target for this input.
    pub fn to_state(&self) -> Result<SchmidtState> {
        match self {
            StateInput::Schmidt { schmidt } => SchmidtState::from_schmidt(schmidt),
            StateInput::Amplitudes { amplitudes } => {
                let rows = amplitudes.len();
                let cols = amplitudes.first().map_or(0, Vec::len);
                if rows == 0 || cols == 0 || amplitudes.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidState(
                        "amplitude matrix must be a nonempty rectangular array".into(),
                    ));
                }
                let m = ComplexMatrix::from_fn(rows, cols, |i, j| {
                    let [re, im] = amplitudes[i][j];
                    Complex64::new(re, im)
                });
                Ok(schmidt_decompose(&m)?.0)
            }
        }
    }
}

impl From<&SchmidtState> for StateInput {
    fn from(s: &SchmidtState) -> Self {
        StateInput::Schmidt {
            schmidt: s.coeffs().to_vec(),
        }
    }
}
