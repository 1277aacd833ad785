//! Dense complex linear algebra for bipartite operators.
//!
//! Bipartite indices are flattened as `|i⟩_A ⊗ |j⟩_B ↦ i * dim_b + j`, so the
//! A factor is always the slow (outer) index. Every operator in the crate uses
//! this convention.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = num_complex::Complex<f64>;

/// Dense complex matrix. Kets are stored as single-column matrices.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const TOL_HERMITIAN: f64 = 1e-9;

const EIG_MAX_SWEEPS: usize = 10_000;

/// Local dimensions of a bipartite system `A ⊗ B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    /// Both factors of dimension `d`.
    pub fn square(d: usize) -> Self {
        Self { dim_a: d, dim_b: d }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n} operator for dims {}x{}, got {}x{}",
                self.dim_a,
                self.dim_b,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }
}

/// Selects one factor of a bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Computational basis ket `|index⟩` in dimension `dim`.
pub fn basis_ket(dim: usize, index: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(dim, 1);
    v[(index, 0)] = real(1.0);
    v
}

/// Column vector from a slice of amplitudes.
pub fn ket(amplitudes: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(amplitudes.len(), 1, amplitudes)
}

/// `|v⟩⟨v|` for a column vector `v`.
pub fn projector(v: &ComplexMatrix) -> ComplexMatrix {
    v * v.adjoint()
}

/// `⟨u|v⟩` for column vectors.
pub fn inner(u: &ComplexMatrix, v: &ComplexMatrix) -> Complex64 {
    (u.adjoint() * v)[(0, 0)]
}

/// `⟨v|m|v⟩`, real part only.
pub fn expectation(m: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.trace()
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Relative Frobenius deviation from Hermiticity, `‖m − m†‖ / ‖m‖`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let norm = frobenius_norm(m);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius_norm(&(m - m.adjoint())) / norm
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Traces out the `traced` factor and returns the reduced operator on the other one.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: BipartiteDims,
    traced: Subsystem,
) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let (da, db) = (dims.dim_a, dims.dim_b);
    let out = match traced {
        Subsystem::B => ComplexMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
        }),
        Subsystem::A => ComplexMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
        }),
    };
    Ok(out)
}

/// Transposes the indices of the `which` factor only.
pub fn partial_transpose(
    m: &ComplexMatrix,
    dims: BipartiteDims,
    which: Subsystem,
) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let db = dims.dim_b;
    let n = dims.total();
    let out = ComplexMatrix::from_fn(n, n, |r, s| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (s / db, s % db);
        match which {
            Subsystem::B => m[(i * db + l, k * db + j)],
            Subsystem::A => m[(k * db + j, i * db + l)],
        }
    });
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` belongs to `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Eigenvector for the largest eigenvalue.
    pub fn top_vector(&self) -> ComplexMatrix {
        let last = self.vectors.ncols() - 1;
        self.vectors.columns(last, 1).into_owned()
    }
}

/// Hermitian eigen-decomposition.
///
/// The input is symmetrized before solving; inputs further than
/// [`TOL_HERMITIAN`] (relative Frobenius) from Hermitian are rejected.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolve needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let dev = hermitian_deviation(m);
    if dev > TOL_HERMITIAN {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = hermitian_part(m);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok(HermEigen { values, vectors })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.max())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.min())
}

/// Thin singular value decomposition `m = U diag(σ) V†` with σ descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let s = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let (u, v_t) = match (s.u, s.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NoConvergence("singular value decomposition")),
    };
    let k = s.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let singular_values = order.iter().map(|&i| s.singular_values[i]).collect();
    let u = ComplexMatrix::from_fn(u.nrows(), k, |r, col| u[(r, order[col])]);
    let v_adjoint = ComplexMatrix::from_fn(k, v_t.ncols(), |row, col| v_t[(order[row], col)]);
    Ok(Svd {
        u,
        singular_values,
        v_adjoint,
    })
}

/// The swap `S|i⟩|j⟩ = |j⟩|i⟩` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let n = d * d;
    let mut s = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = real(1.0);
        }
    }
    s
}

/// Integer square root for bipartite `d² × d²` operators.
pub fn local_dim(m: &ComplexMatrix) -> Result<usize> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square operator, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {n} is not a perfect square"
        )));
    }
    Ok(d)
}

/// Converts a real vector into a complex column vector.
pub fn real_ket(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_iterator(values.len(), 1, values.iter().map(|&x| real(x)))
}

/// Euclidean norm of a column vector.
pub fn vector_norm(v: &ComplexMatrix) -> f64 {
    frobenius_norm(v)
}
