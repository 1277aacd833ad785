//! Numerical solution of the twirled PPT relaxations.
//!
//! After twirling, a one-way pass operator is described by a real matrix
//! `w` (the weights `⟨ij|Ω|ij⟩`, `i ≠ j`) and a Hermitian `d × d` block `ρ`
//! (the entries `⟨ii|Ω|jj⟩`). The relaxations maximize
//!
//! ```text
//! min{ 1 − cap(w), 1 − λ_max(ρ − λλᵀ) }
//! ```
//!
//! with `cap(w) = max w_ij` (one-way) or `max ½(w_ij + w_ji)` (two-way),
//! subject to `0 ≤ ρ ≤ I`, `ρλ = λ`, `Σ_{j≠i} w_ij + ρ_ii = 1` and
//! `w_ij w_ji ≥ |ρ_ij|²`, `w ≥ 0`.
//!
//! The maximum is found by bisection on the level `t`. Each level is a convex
//! feasibility problem. Its constraints force `ρ` to be real with
//! `ρ_ij = w_ij λᵢ/λⱼ = w_ji λⱼ/λᵢ ≥ 0` (see [`Reduced`]), so the problem is
//! solved in `ρ` alone by Dykstra's alternating projections between a box on
//! the off-diagonal entries and the spectral set `ρ = λλᵀ + R`, `Rλ = 0`,
//! `0 ≤ R ≤ 1 − t`. Every iterate can be repaired to an exactly feasible
//! `(w, ρ)`, and [`dual_bound`] certifies levels from above.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::barrier;
use crate::constructors;
use crate::error::{Error, Result};
use crate::linalg::{self, herm_eig, real, Complex64, ComplexMatrix};
use crate::states::SchmidtState;

pub use crate::strategy::ppt_min_eigenvalue;

/// Which relaxation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OneWay,
    TwoWay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Bisection stops when the bracket is narrower than this.
    pub tol_outer: f64,
    /// A level is feasible once every set is within this distance.
    pub tol_inner: f64,
    /// Sweep budget per feasibility problem.
    pub max_iter: usize,
    /// Sweeps between plateau comparisons.
    pub plateau_window: usize,
    /// Relative residual decrease over one window below which a level is infeasible.
    pub plateau_rel: f64,
    /// Open the two-way bisection at the analytic near-optimal point, after
    /// checking that it satisfies every constraint.
    pub seed_two_way: bool,
    /// Finish with a barrier-method polish when the certified gap left by
    /// the bisection exceeds `tol_outer`.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_outer: 1e-5,
            tol_inner: 1e-8,
            max_iter: 20_000,
            plateau_window: 100,
            plateau_rel: 1e-12,
            seed_two_way: true,
            polish: true,
        }
    }
}

/// Constraint violations of a candidate `(w, ρ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Distance of the spectrum of `ρ` from `[0, 1]`.
    pub rho_bounds: f64,
    /// `‖ρλ − λ‖`.
    pub pinning: f64,
    /// `max_i |Σ_{j≠i} w_ij + ρ_ii − 1|`.
    pub row_sums: f64,
    /// `max (|ρ_ij|² − w_ij w_ji)₊`.
    pub hyperbolic: f64,
    /// `max (−w_ij)₊`.
    pub negativity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.rho_bounds,
            self.pinning,
            self.row_sums,
            self.hyperbolic,
            self.negativity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// A point of the relaxation together with its objective value.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub mode: Mode,
    /// Objective value at `(w, ρ)`.
    pub value: f64,
    /// Off-diagonal weights; the diagonal is zero.
    pub w: DMatrix<f64>,
    pub rho: ComplexMatrix,
    pub residuals: Residuals,
    /// Total projection sweeps spent.
    pub iterations: usize,
}

/// JSON form of a [`RelaxationSolution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub value: f64,
    pub w: Vec<Vec<f64>>,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl RelaxationSolution {
    fn from_parts(
        mode: Mode,
        w: DMatrix<f64>,
        rho: ComplexMatrix,
        state: &SchmidtState,
        iterations: usize,
    ) -> Result<Self> {
        let value = objective(mode, &w, &rho, state)?;
        let residuals = residuals(&w, &rho, state)?;
        Ok(Self {
            mode,
            value,
            w,
            rho,
            residuals,
            iterations,
        })
    }

    pub fn to_file(&self) -> SolutionFile {
        let d = self.w.nrows();
        let rows = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..d).map(|i| (0..d).map(|j| f(i, j)).collect()).collect()
        };
        SolutionFile {
            value: self.value,
            w: rows(&|i, j| self.w[(i, j)]),
            rho_re: rows(&|i, j| self.rho[(i, j)].re),
            rho_im: rows(&|i, j| self.rho[(i, j)].im),
            residuals: self.residuals,
            iterations: self.iterations,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

/// `min{1 − cap(w), 1 − λ_max(ρ − λλᵀ)}`.
pub fn objective(
    mode: Mode,
    w: &DMatrix<f64>,
    rho: &ComplexMatrix,
    state: &SchmidtState,
) -> Result<f64> {
    let d = state.dim();
    let mut cap: f64 = 0.0;
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let c = match mode {
                Mode::OneWay => w[(i, j)],
                Mode::TwoWay => 0.5 * (w[(i, j)] + w[(j, i)]),
            };
            cap = cap.max(c);
        }
    }
    let lambda = linalg::real_ket(state.coeffs());
    let shifted = rho - linalg::projector(&lambda);
    let top = herm_eig(&linalg::hermitian_part(&shifted))?.max();
    Ok((1.0 - cap).min(1.0 - top))
}

/// Evaluates every constraint of the relaxation at `(w, ρ)`.
pub fn residuals(w: &DMatrix<f64>, rho: &ComplexMatrix, state: &SchmidtState) -> Result<Residuals> {
    let d = state.dim();
    let lambda = linalg::real_ket(state.coeffs());
    let eig = herm_eig(&linalg::hermitian_part(rho))?;
    let mut r = Residuals {
        rho_bounds: (-eig.min()).max(eig.max() - 1.0).max(0.0),
        pinning: linalg::vector_norm(&(rho * &lambda - &lambda)),
        ..Residuals::default()
    };
    for i in 0..d {
        let row: f64 = (0..d).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        r.row_sums = r.row_sums.max((row + rho[(i, i)].re - 1.0).abs());
        for j in (0..d).filter(|&j| j != i) {
            r.negativity = r.negativity.max(-w[(i, j)]);
            let gap = rho[(i, j)].norm_sqr() - w[(i, j)] * w[(j, i)];
            r.hyperbolic = r.hyperbolic.max(gap);
        }
    }
    Ok(r)
}

/// `Ω = Σ_{i≠j} w_ij |ij⟩⟨ij| + Σ_ij ρ_ij |ii⟩⟨jj|`.
pub fn reconstruct_omega(sol: &RelaxationSolution, state: &SchmidtState) -> ComplexMatrix {
    omega_from_parts(&sol.w, &sol.rho, state.dim())
}

pub(crate) fn omega_from_parts(w: &DMatrix<f64>, rho: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let mut omega = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                omega[(i * d + j, i * d + j)] = real(w[(i, j)]);
            }
            omega[(i * d + i, j * d + j)] = rho[(i, j)];
        }
    }
    omega
}

/// Nearest point of `{(a, b, z) : a b ≥ |z|², a, b ≥ 0}` to `(w_ij, w_ji, ρ_ij)`
/// in the metric `a² + b² + 2|z|²`.
///
/// With `z' = √2 z` the set becomes the rotated cone `2ab ≥ |z'|²`. Rotating
/// `(a, b)` by 45° (`u = (a+b)/√2`, `s = (a−b)/√2`) diagonalizes the quadratic
/// form `2ab = u² − s²`, so the set is the second-order cone
/// `u ≥ ‖(s, z')‖`. Its projection is explicit: keep the point if inside,
/// send it to the origin if inside the polar cone, otherwise
/// `u ← (u + ‖v‖)/2` and `v ← u · v/‖v‖` with `v = (s, z')`.
pub fn project_hyperbolic(w_ij: f64, w_ji: f64, rho_ij: Complex64) -> (f64, f64, Complex64) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let u = (w_ij + w_ji) / sqrt2;
    let s = (w_ij - w_ji) / sqrt2;
    let zr = rho_ij.re * sqrt2;
    let zi = rho_ij.im * sqrt2;
    let norm = (s * s + zr * zr + zi * zi).sqrt();
    if norm <= u {
        return (w_ij, w_ji, rho_ij);
    }
    if norm <= -u {
        return (0.0, 0.0, Complex64::new(0.0, 0.0));
    }
    let alpha = 0.5 * (u + norm);
    let scale = alpha / norm;
    let (u, s, zr, zi) = (alpha, s * scale, zr * scale, zi * scale);
    (
        (u + s) / sqrt2,
        (u - s) / sqrt2,
        Complex64::new(zr / sqrt2, zi / sqrt2),
    )
}

/// Coefficient `c_ij` of the level constraint `ρ_ij ≤ (1 − t) c_ij` once
/// `w` is written through `ρ` (see [`Reduced`]).
fn pair_cap(lambda: &[f64], i: usize, j: usize, mode: Mode) -> f64 {
    let (a, b) = (lambda[i], lambda[j]);
    match mode {
        Mode::OneWay => a.min(b) / a.max(b),
        Mode::TwoWay => 2.0 * a * b / (a * a + b * b),
    }
}

/// The feasibility problem at one level in the coordinates `ρ` alone.
///
/// Summing `λᵢ²` times each row constraint against `λᵢ` times the pinning
/// rows gives `Σ_{i<j} xᵀ B_ij x = 0` with `x = (λᵢ, −λⱼ)` and `B_ij` the
/// positive 2×2 block of the pair. Hence every feasible point has
/// `ρ_ij = w_ij λᵢ/λⱼ = w_ji λⱼ/λᵢ ≥ 0`, and conversely any real `ρ` with
/// `ρλ = λ`, `λλᵀ ≤ ρ ≤ I` and nonnegative off-diagonal entries extends to a
/// feasible point through those relations. The row sums and the hyperbolic
/// constraints then hold identically, the caps on `w` become the box
/// `0 ≤ ρ_ij ≤ (1 − t) c_ij`, and the level is decided by alternating between
/// that box and the spectral set `ρ = λλᵀ + R`, `Rλ = 0`, `0 ≤ R ≤ 1 − t`.
struct Reduced<'a> {
    d: usize,
    lambda: &'a [f64],
    mode: Mode,
    cap: f64,
    pin: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl<'a> Reduced<'a> {
    fn new(state: &'a SchmidtState, mode: Mode, cap: f64) -> Self {
        let d = state.dim();
        let lambda = state.coeffs();
        let pin = DMatrix::from_fn(d, d, |i, j| lambda[i] * lambda[j]);
        let q = DMatrix::identity(d, d) - &pin;
        Self {
            d,
            lambda,
            mode,
            cap,
            pin,
            q,
        }
    }

    fn project_box(&self, x: &mut DMatrix<f64>) {
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                let top = self.cap * pair_cap(self.lambda, i, j, self.mode);
                let r = (0.5 * (x[(i, j)] + x[(j, i)])).clamp(0.0, top);
                x[(i, j)] = r;
                x[(j, i)] = r;
            }
        }
    }

    /// `λλᵀ + V clip(Vᵀ S V, [0, upper]) Vᵀ` with `S` the symmetric part of `x`.
    fn band(&self, x: &DMatrix<f64>, upper: f64) -> DMatrix<f64> {
        let sym = (x + x.transpose()) * 0.5;
        let inner = &self.q * sym * &self.q;
        let eig = SymmetricEigen::new((&inner + inner.transpose()) * 0.5);
        let mut r = DMatrix::zeros(self.d, self.d);
        for (k, &val) in eig.eigenvalues.iter().enumerate() {
            let clipped = val.clamp(0.0, upper);
            if clipped != 0.0 {
                let v = eig.eigenvectors.column(k);
                r += (v * v.transpose()) * clipped;
            }
        }
        r
    }

    fn project_spectral(&self, x: &mut DMatrix<f64>) {
        *x = &self.pin + self.band(x, self.cap.min(1.0));
    }

    /// Largest distance from `x` to either set.
    fn distance(&self, x: &DMatrix<f64>) -> f64 {
        let mut a = x.clone();
        self.project_box(&mut a);
        let mut b = x.clone();
        self.project_spectral(&mut b);
        (x - a).norm().max((x - b).norm())
    }

    /// Maps `x` to a point satisfying every constraint exactly: the spectrum of
    /// `Q x Q` is clipped to `[0, 1]`, shrunk towards zero until the
    /// off-diagonal entries of `ρ` are nonnegative, and `w` is read off `ρ`.
    fn repair(&self, x: &DMatrix<f64>, state: &SchmidtState, sweeps: usize) -> Result<RelaxationSolution> {
        let d = self.d;
        let lam = self.lambda;
        let r = self.band(x, 1.0);
        let mut alpha: f64 = 1.0;
        for i in 0..d {
            for j in (i + 1)..d {
                if r[(i, j)] < 0.0 {
                    alpha = alpha.min(lam[i] * lam[j] / -r[(i, j)]);
                }
            }
        }
        let rho = &self.pin + r * alpha;
        from_reduced(&rho, self.mode, state, sweeps)
    }

    /// Excess of the off-diagonal entries of `x` over the box; near an
    /// infeasible level this is the separating direction used by
    /// [`dual_bound`].
    fn box_gap(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut clamped = x.clone();
        self.project_box(&mut clamped);
        DMatrix::from_fn(self.d, self.d, |i, j| {
            if i < j {
                x[(i, j)] - clamped[(i, j)]
            } else {
                0.0
            }
        })
    }
}

/// Extends a real `ρ` with `ρλ = λ` to `(w, ρ)` through
/// `w_ij = ρ_ij λⱼ/λᵢ`, after symmetrizing and clearing rounding-level
/// negative off-diagonal entries.
fn from_reduced(
    rho: &DMatrix<f64>,
    mode: Mode,
    state: &SchmidtState,
    iterations: usize,
) -> Result<RelaxationSolution> {
    let d = state.dim();
    let lam = state.coeffs();
    let rho = DMatrix::from_fn(d, d, |i, j| {
        let v = 0.5 * (rho[(i, j)] + rho[(j, i)]);
        if i == j {
            v
        } else {
            v.max(0.0)
        }
    });
    let w = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            rho[(i, j)] * lam[j] / lam[i]
        }
    });
    RelaxationSolution::from_parts(mode, w, rho.map(real), state, iterations)
}

/// Outcome of one feasibility problem.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub feasible: bool,
    /// Best exactly feasible point met on the way; its value may fall short
    /// of the level.
    pub point: RelaxationSolution,
    /// Largest distance to a constraint set at exit.
    pub distance: f64,
    /// Best certified upper bound on the relaxation value found on the way.
    pub upper_bound: f64,
    /// The sweep budget ran out before any stopping rule fired.
    pub exhausted: bool,
}

/// Upper bound on the relaxation value from Lagrange weights `m_ij` on the
/// off-diagonal entries (upper triangle of `m` is read).
///
/// With `R = V S Vᵀ`, `V` an orthonormal basis of `λ⊥`, weak duality for
/// `min s` subject to `0 ≤ S ≤ s`, `0 ≤ λᵢλⱼ + R_ij ≤ s c_ij` gives
///
/// ```text
/// s ≥ Σ m_ij λᵢλⱼ / (Tr (Vᵀ M V)₋ + Σ (m_ij)₊ c_ij),   M_ij = M_ji = m_ij / 2,
/// ```
///
/// for every real `m`, so the value is at most `1 − s`.
pub fn dual_bound(state: &SchmidtState, mode: Mode, m: &DMatrix<f64>) -> Result<f64> {
    let d = state.dim();
    let lam = state.coeffs();
    let mut half = ComplexMatrix::zeros(d, d);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let mij = m[(i, j)];
            half[(i, j)] = real(0.5 * mij);
            half[(j, i)] = real(0.5 * mij);
            num += mij * lam[i] * lam[j];
            den += mij.max(0.0) * pair_cap(lam, i, j, mode);
        }
    }
    let v = crate::strategy::complement_basis(&linalg::real_ket(lam));
    let eig = herm_eig(&linalg::hermitian_part(&(v.adjoint() * half * &v)))?;
    den += eig.values.iter().map(|&e| (-e).max(0.0)).sum::<f64>();
    if num <= 0.0 || den <= 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - num / den).min(1.0))
}

/// The deterministic starting point `ρ = λλᵀ`, `w_ij = (1 − λᵢ²)/(d − 1)`.
pub fn initial_point(state: &SchmidtState) -> (DMatrix<f64>, ComplexMatrix) {
    let d = state.dim();
    let sq = state.squares();
    let w = DMatrix::from_fn(d, d, |i, j| {
        if i == j || d < 2 {
            0.0
        } else {
            (1.0 - sq[i]) / (d - 1) as f64
        }
    });
    let rho = linalg::projector(&linalg::real_ket(state.coeffs()));
    (w, rho)
}

/// The twirled near-optimal two-way operator written as `(w, ρ)`:
/// `w_ij = (1 − w)λⱼ²`, `ρ = wI + (1 − w)λλᵀ` with `w = λ²/(1 + λ²)`.
pub fn near_optimal_point(state: &SchmidtState) -> Result<(DMatrix<f64>, ComplexMatrix)> {
    let l2 = constructors::mean_top_square(state)?;
    let weight = l2 / (1.0 + l2);
    let d = state.dim();
    let sq = state.squares();
    let w = DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { (1.0 - weight) * sq[j] });
    let lambda = linalg::real_ket(state.coeffs());
    let rho = linalg::identity(d) * real(weight) + linalg::projector(&lambda) * real(1.0 - weight);
    Ok((w, rho))
}

fn require_entangled(state: &SchmidtState) -> Result<()> {
    if state.dim() < 2 {
        return Err(Error::InvalidParameter(
            "relaxations need Schmidt rank at least 2".into(),
        ));
    }
    Ok(())
}

/// Decides whether the level `target_t` is attainable by Dykstra's
/// alternating projections, starting from `ρ = λλᵀ`.
///
/// The level is feasible once both sets are within `tol_inner`, or once an
/// exactly repaired iterate reaches it. It is infeasible when the distance
/// stops decreasing (relative drop below `plateau_rel` over
/// `plateau_window` sweeps), when the dual certificate falls below it, or
/// when the sweep budget runs out.
pub fn feasibility_project(
    target_t: f64,
    state: &SchmidtState,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<Feasibility> {
    if !(0.0..=1.0).contains(&target_t) {
        return Err(Error::InvalidParameter(format!(
            "target level {target_t} outside [0, 1]"
        )));
    }
    require_entangled(state)?;
    let problem = Reduced::new(state, mode, 1.0 - target_t);
    let d = problem.d;
    let mut x = problem.pin.clone();
    let mut p_box = DMatrix::zeros(d, d);
    let mut p_band = DMatrix::zeros(d, d);

    let window = opts.plateau_window.max(1);
    let mut last_check = f64::INFINITY;
    let mut sweeps = 0;
    let mut distance = problem.distance(&x);
    let mut point = problem.repair(&x, state, 0)?;
    let mut feasible = distance < opts.tol_inner || point.value >= target_t;
    let mut upper: f64 = 1.0;

    while !feasible && sweeps < opts.max_iter {
        let y = &x + &p_box;
        x = y.clone();
        problem.project_box(&mut x);
        p_box = y - &x;
        let y = &x + &p_band;
        x = y.clone();
        problem.project_spectral(&mut x);
        p_band = y - &x;
        sweeps += 1;

        if sweeps % 10 == 0 || sweeps == opts.max_iter {
            distance = problem.distance(&x);
            let candidate = problem.repair(&x, state, sweeps)?;
            if candidate.value >= point.value {
                point = candidate;
            }
            upper = upper.min(dual_bound(state, mode, &problem.box_gap(&x))?);
            if distance < opts.tol_inner || point.value >= target_t {
                feasible = true;
            } else if upper < target_t {
                break;
            } else if sweeps % window == 0 {
                if last_check - distance < opts.plateau_rel * last_check {
                    break;
                }
                last_check = distance;
            }
        }
    }
    point.iterations = sweeps;
    Ok(Feasibility {
        feasible,
        point,
        distance,
        upper_bound: upper,
        exhausted: !feasible && sweeps >= opts.max_iter,
    })
}

/// Maximizes the relaxation by bisection on the level.
fn solve(state: &SchmidtState, mode: Mode, opts: &SolverOptions) -> Result<RelaxationSolution> {
    require_entangled(state)?;
    let mut total_sweeps = 0;

    let seeded = if mode == Mode::TwoWay && opts.seed_two_way {
        let (w, rho) = near_optimal_point(state)?;
        let sol = RelaxationSolution::from_parts(mode, w, rho, state, 0)?;
        (sol.residuals.max() < opts.tol_inner).then_some(sol)
    } else {
        None
    };

    let mut best = match seeded {
        Some(point) => point,
        None => {
            let f = feasibility_project(0.0, state, mode, opts)?;
            total_sweeps += f.point.iterations;
            if !f.feasible {
                return Err(Error::SolverNonConvergence { best: None });
            }
            f.point
        }
    };
    let mut lo = best.value.max(0.0);
    let mut hi: f64 = 1.0;
    // only dual certificates, unlike `hi` which also trusts plateau verdicts
    let mut certified: f64 = 1.0;
    let mut exhausted = false;

    while hi - lo > opts.tol_outer {
        let mid = 0.5 * (lo + hi);
        let f = feasibility_project(mid, state, mode, opts)?;
        total_sweeps += f.point.iterations;
        // every repaired iterate is feasible, whatever the verdict on `mid`
        if f.point.value > best.value {
            best = f.point;
            lo = lo.max(best.value);
        }
        certified = certified.min(f.upper_bound);
        exhausted |= f.exhausted;
        hi = hi.min(f.upper_bound);
        if f.feasible {
            lo = lo.max(mid);
        } else {
            hi = hi.min(mid);
        }
        hi = hi.max(lo);
    }

    if certified - best.value > opts.tol_outer {
        let polished = if opts.polish { polish(state, mode, opts)? } else { None };
        match polished {
            Some(point) if point.value > best.value => best = point,
            Some(_) => {}
            None if exhausted => {
                return Err(Error::SolverNonConvergence {
                    best: Some(best.value),
                })
            }
            None => {}
        }
    }

    best.iterations = total_sweeps;
    Ok(best)
}

/// Barrier-path solution, used when thin level sets stall the projections.
fn polish(state: &SchmidtState, mode: Mode, opts: &SolverOptions) -> Result<Option<RelaxationSolution>> {
    let lam = state.coeffs();
    let d = state.dim();
    let caps = DMatrix::from_fn(d, d, |i, j| if i < j { pair_cap(lam, i, j, mode) } else { 0.0 });
    let Some(p) = barrier::polish(lam, &caps, 0.1 * opts.tol_outer) else {
        return Ok(None);
    };
    let pin = DMatrix::from_fn(d, d, |i, j| lam[i] * lam[j]);
    let point = from_reduced(&(pin + p.r), mode, state, 0)?;
    Ok((point.residuals.max() < opts.tol_inner).then_some(point))
}

/// Optimal one-way relaxation value and a maximizing point.
pub fn solve_one_way_relaxation(
    state: &SchmidtState,
    opts: &SolverOptions,
) -> Result<RelaxationSolution> {
    solve(state, Mode::OneWay, opts)
}

/// Optimal two-way relaxation value and a maximizing point.
pub fn solve_two_way_relaxation(
    state: &SchmidtState,
    opts: &SolverOptions,
) -> Result<RelaxationSolution> {
    solve(state, Mode::TwoWay, opts)
}

pub fn solve_relaxation(
    state: &SchmidtState,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<RelaxationSolution> {
    solve(state, mode, opts)
}
