//! Verification strategies built from one-way conditional tests.
//!
//! A [`ConditionalTest`] is one sender POVM plus a receiver pass/fail test for
//! each sender outcome. A [`Strategy`] mixes tests with probabilities; its pass
//! operator `Ω = Σᵢ pᵢ Ωᵢ` determines the spectral gap `v(Ω)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, herm_eig, kron, local_dim, partial_trace, partial_transpose, real, BipartiteDims,
    Complex64, ComplexMatrix, Subsystem,
};
use crate::states::{SchmidtState, StateInput};

/// Tolerance for POVM completeness and operator bounds on individual tests.
pub const TOL_TEST: f64 = 1e-10;
/// Tolerance for mixture probabilities summing to one.
pub const TOL_PROB: f64 = 1e-12;
/// Tolerance for `⟨ψ|Ω|ψ⟩ = 1`, the marginal condition and PPT.
pub const TOL_OMEGA: f64 = 1e-9;
/// Sender outcomes rarer than this on the target never occur and are not checked.
pub const TOL_BRANCH: f64 = 1e-14;

/// Who measures first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Alice measures, Bob tests.
    #[serde(rename = "a_to_b")]
    AToB,
    /// Bob measures, Alice tests.
    #[serde(rename = "b_to_a")]
    BToA,
}

impl Direction {
    pub fn sender(self) -> Subsystem {
        match self {
            Direction::AToB => Subsystem::A,
            Direction::BToA => Subsystem::B,
        }
    }

    pub fn receiver(self) -> Subsystem {
        match self {
            Direction::AToB => Subsystem::B,
            Direction::BToA => Subsystem::A,
        }
    }

    /// Places a sender/receiver operator pair in `A ⊗ B` order.
    pub fn place(self, sender: &ComplexMatrix, receiver: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Direction::AToB => kron(sender, receiver),
            Direction::BToA => kron(receiver, sender),
        }
    }
}

/// One sender measurement followed by outcome-conditioned receiver tests.
///
/// When `twirled` is set the test is preceded by a uniformly random element of
/// the local phase group (see [`twirl`]); the pass operator is then the twirl of
/// `Σₐ Mₐ ⊗ Nₐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTest {
    direction: Direction,
    sender_povm: Vec<ComplexMatrix>,
    receiver_pass: Vec<ComplexMatrix>,
    twirled: bool,
}

impl ConditionalTest {
    pub fn new(
        direction: Direction,
        sender_povm: Vec<ComplexMatrix>,
        receiver_pass: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if sender_povm.is_empty() {
            return Err(Error::InvalidStrategy("sender POVM has no outcomes".into()));
        }
        if sender_povm.len() != receiver_pass.len() {
            return Err(Error::InvalidStrategy(format!(
                "{} sender outcomes but {} receiver tests",
                sender_povm.len(),
                receiver_pass.len()
            )));
        }
        let ds = sender_povm[0].nrows();
        let dr = receiver_pass[0].nrows();
        if sender_povm.iter().any(|m| m.shape() != (ds, ds))
            || receiver_pass.iter().any(|n| n.shape() != (dr, dr))
        {
            return Err(Error::DimensionMismatch(
                "POVM elements and pass operators must be square and of equal size per side"
                    .into(),
            ));
        }
        let total = sender_povm
            .iter()
            .fold(ComplexMatrix::zeros(ds, ds), |acc, m| acc + m);
        let completeness = max_abs(&(total - linalg::identity(ds)));
        if completeness > TOL_TEST {
            return Err(Error::InvalidStrategy(format!(
                "sender POVM does not sum to identity (residual {completeness:.3e})"
            )));
        }
        for m in &sender_povm {
            let min = herm_eig(m)?.min();
            if min < -TOL_TEST {
                return Err(Error::InvalidStrategy(format!(
                    "POVM element is not positive (min eigenvalue {min:.3e})"
                )));
            }
        }
        for n in &receiver_pass {
            let e = herm_eig(n)?;
            if e.min() < -TOL_TEST || e.max() > 1.0 + TOL_TEST {
                return Err(Error::InvalidStrategy(format!(
                    "pass operator outside [0, I] (spectrum [{:.3e}, {:.3e}])",
                    e.min(),
                    e.max()
                )));
            }
        }
        Ok(Self {
            direction,
            sender_povm,
            receiver_pass,
            twirled: false,
        })
    }

    /// Marks the test as preceded by a random phase-group element.
    pub fn with_twirl(mut self) -> Self {
        self.twirled = true;
        self
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn sender_povm(&self) -> &[ComplexMatrix] {
        &self.sender_povm
    }

    pub fn receiver_pass(&self) -> &[ComplexMatrix] {
        &self.receiver_pass
    }

    pub fn is_twirled(&self) -> bool {
        self.twirled
    }

    pub fn outcomes(&self) -> usize {
        self.sender_povm.len()
    }

    pub fn dims(&self) -> BipartiteDims {
        let ds = self.sender_povm[0].nrows();
        let dr = self.receiver_pass[0].nrows();
        match self.direction {
            Direction::AToB => BipartiteDims::new(ds, dr),
            Direction::BToA => BipartiteDims::new(dr, ds),
        }
    }

    /// `Σₐ Mₐ ⊗ Nₐ` in `A ⊗ B` order, without the twirl.
    pub fn bare_operator(&self) -> ComplexMatrix {
        let n = self.dims().total();
        self.sender_povm
            .iter()
            .zip(&self.receiver_pass)
            .fold(ComplexMatrix::zeros(n, n), |acc, (m, p)| {
                acc + self.direction.place(m, p)
            })
    }

    /// Pass operator of this test, including the twirl when requested.
    pub fn operator(&self) -> ComplexMatrix {
        let bare = self.bare_operator();
        if self.twirled {
            twirl_mask(&bare, self.dims().dim_a)
        } else {
            bare
        }
    }
}

/// A test with its mixture probability.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTest {
    pub prob: f64,
    pub test: ConditionalTest,
}

/// A probabilistic mixture of conditional tests for a fixed target.
#[derive(Debug, Clone)]
pub struct Strategy {
    target: SchmidtState,
    tests: Vec<WeightedTest>,
    omega: ComplexMatrix,
    gap: OnceLock<SpectralGapReport>,
}

impl Strategy {
    /// Validates the mixture and that every test accepts the target with certainty.
    pub fn new(target: SchmidtState, tests: Vec<WeightedTest>) -> Result<Self> {
        if tests.is_empty() {
            return Err(Error::InvalidStrategy("strategy has no tests".into()));
        }
        if let Some(t) = tests.iter().find(|t| !(t.prob >= 0.0) || !t.prob.is_finite()) {
            return Err(Error::InvalidStrategy(format!(
                "negative or non-finite probability {}",
                t.prob
            )));
        }
        let total: f64 = tests.iter().map(|t| t.prob).sum();
        if (total - 1.0).abs() > TOL_PROB {
            return Err(Error::InvalidStrategy(format!(
                "test probabilities sum to {total}"
            )));
        }
        let dims = target.dims();
        if let Some(t) = tests.iter().find(|t| t.test.dims() != dims) {
            let td = t.test.dims();
            return Err(Error::DimensionMismatch(format!(
                "test acts on {}x{}, target is {}x{}",
                td.dim_a, td.dim_b, dims.dim_a, dims.dim_b
            )));
        }
        let n = dims.total();
        let omega = tests
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, t| {
                acc + t.test.operator() * real(t.prob)
            });
        let fid = linalg::expectation(&omega, &target.state_vector());
        if (fid - 1.0).abs() > TOL_OMEGA {
            return Err(Error::TargetNotPreserved(fid));
        }
        Ok(Self {
            target,
            tests,
            omega,
            gap: OnceLock::new(),
        })
    }

    pub fn target(&self) -> &SchmidtState {
        &self.target
    }

    pub fn tests(&self) -> &[WeightedTest] {
        &self.tests
    }

    /// The assembled pass operator `Ω`.
    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    /// Spectral-gap report for `Ω`, computed once.
    pub fn spectral_gap(&self) -> Result<&SpectralGapReport> {
        if let Some(r) = self.gap.get() {
            return Ok(r);
        }
        let report = spectral_gap(&self.omega, &self.target)?;
        Ok(self.gap.get_or_init(|| report))
    }

    /// `v(Ω)`.
    pub fn v(&self) -> Result<f64> {
        Ok(self.spectral_gap()?.v)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StrategyFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StrategyFile = serde_json::from_str(text)?;
        file.into_strategy()
    }
}

impl PartialEq for Strategy {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target && self.tests == other.tests
    }
}

/// `Ω = Σᵢ pᵢ Ωᵢ`.
pub fn assemble_omega(strategy: &Strategy) -> ComplexMatrix {
    strategy.omega().clone()
}

/// Result of [`spectral_gap`].
#[derive(Debug, Clone)]
pub struct SpectralGapReport {
    /// `v(Ω) = 1 − ‖P⊥ Ω P⊥‖`.
    pub v: f64,
    /// Top eigenvector of `P⊥ Ω P⊥` inside the complement of the target.
    /// `None` when the complement is empty (`d = 1`).
    pub top_perp_eigenvector: Option<ComplexMatrix>,
    pub omega: ComplexMatrix,
}

/// Orthonormal basis (as columns) of the complement of a unit vector.
///
/// A Householder reflection maps `e₀` to `v`; its remaining columns span `v⊥`.
pub fn complement_basis(v: &ComplexMatrix) -> ComplexMatrix {
    let n = v.nrows();
    // Align the phase of v₀ so the reflection is exact.
    let v0 = v[(0, 0)];
    let phase = if v0.norm() > 0.0 { v0 / v0.norm() } else { real(1.0) };
    let w = v / phase;
    let mut u = w.clone();
    u[(0, 0)] -= real(1.0);
    let unorm_sq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let h = if unorm_sq < 1e-30 {
        linalg::identity(n)
    } else {
        linalg::identity(n) - (&u * u.adjoint()) * real(2.0 / unorm_sq)
    };
    h.columns(1, n - 1).into_owned()
}

/// `v(Ω) = 1 − λ_max(P⊥ Ω P⊥)` with `P⊥ = I − |ψ⟩⟨ψ|`.
pub fn spectral_gap(omega: &ComplexMatrix, target: &SchmidtState) -> Result<SpectralGapReport> {
    let psi = target.state_vector();
    let n = psi.nrows();
    if omega.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, target needs {n}x{n}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let dev = linalg::hermitian_deviation(omega);
    if dev > linalg::TOL_HERMITIAN {
        return Err(Error::NotHermitian(dev));
    }
    let fid = linalg::expectation(omega, &psi);
    if (fid - 1.0).abs() > TOL_OMEGA {
        return Err(Error::TargetNotPreserved(fid));
    }
    if n == 1 {
        return Ok(SpectralGapReport {
            v: 1.0,
            top_perp_eigenvector: None,
            omega: omega.clone(),
        });
    }
    let q = complement_basis(&psi);
    let restricted = q.adjoint() * omega * &q;
    let eig = herm_eig(&restricted)?;
    // P⊥ΩP⊥ also has the eigenvalue 0 on |ψ⟩.
    let top = eig.max().max(0.0);
    let v = (1.0 - top).clamp(0.0, 1.0);
    Ok(SpectralGapReport {
        v,
        top_perp_eigenvector: Some(&q * eig.top_vector()),
        omega: omega.clone(),
    })
}

/// Keeps the entries `⟨ij|Ω|ij⟩` and `⟨ii|Ω|jj⟩` and zeros the rest.
///
/// This equals the average of `g Ω g†` over the group generated by
/// `g_k = Φ_k ⊗ Φ_k†`, where `Φ_k` multiplies `|k⟩` by `i`.
pub fn twirl(omega: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = local_dim(omega)?;
    Ok(twirl_mask(omega, d))
}

pub(crate) fn twirl_mask(omega: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let n = d * d;
    ComplexMatrix::from_fn(n, n, |r, s| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (s / d, s % d);
        if r == s || (i == j && k == l) {
            omega[(r, s)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `½(Ω + S Ω S†)`.
pub fn swap_symmetrize(omega: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = local_dim(omega)?;
    Ok(swap_symmetrize_dim(omega, d))
}

pub(crate) fn swap_conjugate(omega: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let n = d * d;
    // (S Ω S)[(i,j),(k,l)] = Ω[(j,i),(l,k)]
    ComplexMatrix::from_fn(n, n, |r, s| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (s / d, s % d);
        omega[(j * d + i, l * d + k)]
    })
}

fn swap_symmetrize_dim(omega: &ComplexMatrix, d: usize) -> ComplexMatrix {
    (omega + swap_conjugate(omega, d)) * real(0.5)
}

/// Pass/fail with the measured residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    fn at_most(residual: f64, tol: f64) -> Self {
        Self {
            passed: residual <= tol,
            residual,
        }
    }
}

/// Operator-level conditions of an optimal one-way strategy.
#[derive(Debug, Clone, Serialize)]
pub struct OneWayDiagnostics {
    /// Every test sends from Alice to Bob.
    pub all_a_to_b: bool,
    /// `Tr_B(Ω) = I_A`, residual is the max entry deviation.
    pub marginal: Check,
    /// `⟨ψ|Ω|ψ⟩ = 1`.
    pub fidelity: Check,
    /// Positive partial transpose; residual is the minimum eigenvalue of `Ω^{T_B}`.
    pub ppt: Check,
    /// Each receiver test equals the conditional post-measurement projector.
    /// `None` when only an operator was supplied.
    pub semi_optimal: Option<Check>,
    /// Sender outcomes with probability below [`TOL_BRANCH`] on the target.
    pub unreachable_outcomes: usize,
}

impl OneWayDiagnostics {
    pub fn passed(&self) -> bool {
        self.all_a_to_b
            && self.marginal.passed
            && self.fidelity.passed
            && self.ppt.passed
            && self.semi_optimal.is_none_or(|c| c.passed)
    }
}

/// Conditions on a mixed-direction strategy.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyDiagnostics {
    /// `⟨ψ|Ω|ψ⟩ = 1`.
    pub fidelity: Check,
    /// `0 ≤ Ω ≤ I`; residual is the largest violation.
    pub bounds: Check,
    /// Minimum eigenvalue of `Ω^{T_B}`.
    pub ppt: Check,
    /// For every test, tracing out the receiver leaves the identity on the sender.
    pub sender_marginal: Check,
    /// Every receiver test is the conditional projector for its branch.
    pub semi_optimal: Check,
    /// `‖Ω − SΩS†‖`, informational.
    pub swap_asymmetry: f64,
    pub unreachable_outcomes: usize,
}

impl StrategyDiagnostics {
    pub fn passed(&self) -> bool {
        self.fidelity.passed
            && self.bounds.passed
            && self.ppt.passed
            && self.sender_marginal.passed
            && self.semi_optimal.passed
    }
}

/// Receiver's normalized post-measurement state after the sender sees `m`,
/// together with the outcome probability on the target.
pub fn conditional_state(
    target: &SchmidtState,
    direction: Direction,
    m: &ComplexMatrix,
) -> Result<(f64, ComplexMatrix)> {
    let d = target.dim();
    let dims = target.dims();
    let psi = target.projector();
    let lifted = direction.place(m, &linalg::identity(d));
    let unnorm = partial_trace(&(lifted * psi), dims, direction.sender())?;
    let p = unnorm.trace().re;
    if p < TOL_BRANCH {
        return Ok((p, ComplexMatrix::zeros(d, d)));
    }
    Ok((p, unnorm / real(p)))
}

fn semi_optimality(strategy: &Strategy) -> Result<(Check, usize)> {
    let mut worst: f64 = 0.0;
    let mut unreachable = 0;
    for wt in strategy.tests() {
        let t = &wt.test;
        for (m, n) in t.sender_povm().iter().zip(t.receiver_pass()) {
            let (p, cond) = conditional_state(strategy.target(), t.direction(), m)?;
            if p < TOL_BRANCH {
                unreachable += 1;
                continue;
            }
            worst = worst.max(max_abs(&(n - cond)));
        }
    }
    Ok((Check::at_most(worst, TOL_OMEGA), unreachable))
}

/// Checks `Tr_B(Ω) = I`, `⟨ψ|Ω|ψ⟩ = 1` and PPT for a bare one-way operator.
pub fn validate_one_way_operator(
    omega: &ComplexMatrix,
    target: &SchmidtState,
) -> Result<OneWayDiagnostics> {
    let dims = target.dims();
    let d = target.dim();
    let marginal = partial_trace(omega, dims, Subsystem::B)?;
    let marginal_res = max_abs(&(marginal - linalg::identity(d)));
    let fid = linalg::expectation(omega, &target.state_vector());
    let ppt = ppt_min_eigenvalue(omega, dims)?;
    Ok(OneWayDiagnostics {
        all_a_to_b: true,
        marginal: Check::at_most(marginal_res, TOL_OMEGA),
        fidelity: Check::at_most((fid - 1.0).abs(), TOL_OMEGA),
        ppt: Check {
            passed: ppt >= -TOL_OMEGA,
            residual: ppt,
        },
        semi_optimal: None,
        unreachable_outcomes: 0,
    })
}

/// Necessary conditions for a semi-optimal one-way strategy.
pub fn validate_semi_optimal_one_way(strategy: &Strategy) -> Result<OneWayDiagnostics> {
    let mut diag = validate_one_way_operator(strategy.omega(), strategy.target())?;
    diag.all_a_to_b = strategy
        .tests()
        .iter()
        .all(|t| t.test.direction() == Direction::AToB);
    let (semi, unreachable) = semi_optimality(strategy)?;
    diag.semi_optimal = Some(semi);
    diag.unreachable_outcomes = unreachable;
    Ok(diag)
}

/// Checks a general (possibly mixed-direction) strategy test by test.
pub fn diagnose(strategy: &Strategy) -> Result<StrategyDiagnostics> {
    let target = strategy.target();
    let dims = target.dims();
    let d = target.dim();
    let omega = strategy.omega();

    let fid = linalg::expectation(omega, &target.state_vector());
    let eig = herm_eig(omega)?;
    let bounds = (-eig.min()).max(eig.max() - 1.0).max(0.0);
    let ppt = ppt_min_eigenvalue(omega, dims)?;

    let mut marginal_worst: f64 = 0.0;
    for wt in strategy.tests() {
        let t = &wt.test;
        let op = t.operator();
        let m = partial_trace(&op, dims, t.direction().receiver())?;
        marginal_worst = marginal_worst.max(max_abs(&(m - linalg::identity(d))));
    }
    let (semi, unreachable) = semi_optimality(strategy)?;

    Ok(StrategyDiagnostics {
        fidelity: Check::at_most((fid - 1.0).abs(), TOL_OMEGA),
        bounds: Check::at_most(bounds, TOL_OMEGA),
        ppt: Check {
            passed: ppt >= -TOL_OMEGA,
            residual: ppt,
        },
        sender_marginal: Check::at_most(marginal_worst, TOL_OMEGA),
        semi_optimal: semi,
        swap_asymmetry: max_abs(&(omega - swap_conjugate(omega, d))),
        unreachable_outcomes: unreachable,
    })
}

/// Minimum eigenvalue of the partial transpose on B.
pub fn ppt_min_eigenvalue(omega: &ComplexMatrix, dims: BipartiteDims) -> Result<f64> {
    let pt = partial_transpose(omega, dims, Subsystem::B)?;
    Ok(herm_eig(&pt)?.min())
}

pub(crate) fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Nested `[re, im]` rows.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    let m = ComplexMatrix::from_fn(r, cols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    if !linalg::is_finite(&m) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

/// On-disk form of a [`Strategy`]. Operators refer to the Schmidt-canonical frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyFile {
    pub target: StateInput,
    pub tests: Vec<TestFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFile {
    pub prob: f64,
    pub direction: Direction,
    pub sender_povm: Vec<MatrixJson>,
    pub receiver_pass: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub twirl: bool,
}

impl From<&Strategy> for StrategyFile {
    fn from(s: &Strategy) -> Self {
        StrategyFile {
            target: StateInput::from(s.target()),
            tests: s
                .tests()
                .iter()
                .map(|wt| TestFile {
                    prob: wt.prob,
                    direction: wt.test.direction(),
                    sender_povm: wt.test.sender_povm().iter().map(matrix_to_json).collect(),
                    receiver_pass: wt.test.receiver_pass().iter().map(matrix_to_json).collect(),
                    twirl: wt.test.is_twirled(),
                })
                .collect(),
        }
    }
}

impl StrategyFile {
    pub fn into_strategy(self) -> Result<Strategy> {
        let target = self.target.to_state()?;
        let tests = self
            .tests
            .iter()
            .map(|t| {
                let povm = t
                    .sender_povm
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                let pass = t
                    .receiver_pass
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                let mut test = ConditionalTest::new(t.direction, povm, pass)?;
                if t.twirl {
                    test = test.with_twirl();
                }
                Ok(WeightedTest { prob: t.prob, test })
            })
            .collect::<Result<Vec<_>>>()?;
        Strategy::new(target, tests)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::linalg::{basis_ket, projector};

    /// Closure of the generators under multiplication, by breadth-first search.
    fn enumerate_group(d: usize) -> Vec<ComplexMatrix> {
        let gens: Vec<ComplexMatrix> = (0..d)
            .map(|k| {
                let mut phi = linalg::identity(d);
                phi[(k, k)] = Complex64::new(0.0, 1.0);
                kron(&phi, &phi.adjoint())
            })
            .collect();
        let mut group = vec![linalg::identity(d * d)];
        let mut frontier = group.clone();
        while let Some(g) = frontier.pop() {
            for h in &gens {
                let prod = &g * h;
                if !group.iter().any(|e| max_abs_diff(e, &prod) < 1e-12) {
                    group.push(prod.clone());
                    frontier.push(prod);
                }
            }
        }
        group
    }

    fn group_average(omega: &ComplexMatrix, group: &[ComplexMatrix]) -> ComplexMatrix {
        let n = omega.nrows();
        let sum = group
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, g| acc + g * omega * g.adjoint());
        sum / real(group.len() as f64)
    }

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_group(2).len(), 4);
        assert_eq!(enumerate_group(3).len(), 16);
    }

    #[test]
    fn twirl_mask_equals_group_average() {
        let mut r = rng(21);
        for d in [2, 3] {
            let group = enumerate_group(d);
            for _ in 0..5 {
                let h = random_hermitian(&mut r, d * d);
                let avg = group_average(&h, &group);
                assert!(max_abs_diff(&twirl(&h).unwrap(), &avg) < 1e-12);
            }
        }
    }

    #[test]
    fn twirl_is_idempotent_and_fixes_target() {
        let mut r = rng(22);
        let h = random_hermitian(&mut r, 16);
        let once = twirl(&h).unwrap();
        assert_eq!(twirl(&once).unwrap(), once);
        assert!((once.trace() - h.trace()).norm() < 1e-12);

        let s = SchmidtState::from_schmidt(&[0.8, 0.5, 0.2, 0.07f64.sqrt()]).unwrap();
        let p = s.projector();
        assert!(max_abs_diff(&twirl(&p).unwrap(), &p) < 1e-15);

        let rho = random_density(&mut r, 16);
        let tw = twirl(&rho).unwrap();
        assert!(herm_eig(&tw).unwrap().min() > -1e-12);
        assert!(twirl(&linalg::identity(8)).is_err());
    }

    #[test]
    fn swap_symmetrize_examples() {
        let mut r = rng(23);
        let h = random_hermitian(&mut r, 9);
        let sym = swap_symmetrize(&h).unwrap();
        assert!(max_abs_diff(&swap_symmetrize(&sym).unwrap(), &sym) < 1e-15);
        let s = linalg::swap_operator(3);
        let direct = (&h + &s * &h * s.adjoint()) * real(0.5);
        assert!(max_abs_diff(&sym, &direct) < 1e-15);
        assert!(swap_symmetrize(&linalg::identity(5)).is_err());
    }

    #[test]
    fn spectral_gap_trivial_cases() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let r = spectral_gap(&s.projector(), &s).unwrap();
        assert!((r.v - 1.0).abs() < 1e-12);
        let r = spectral_gap(&linalg::identity(4), &s).unwrap();
        assert!(r.v.abs() < 1e-12);
        let top = r.top_perp_eigenvector.unwrap();
        assert!(linalg::inner(&s.state_vector(), &top).norm() < 1e-12);

        let bad = projector(&basis_ket(4, 1));
        assert!(matches!(
            spectral_gap(&bad, &s),
            Err(Error::TargetNotPreserved(_))
        ));

        let product = SchmidtState::from_schmidt(&[1.0]).unwrap();
        let r = spectral_gap(&linalg::identity(1), &product).unwrap();
        assert_eq!(r.v, 1.0);
        assert!(r.top_perp_eigenvector.is_none());
    }

    #[test]
    fn spectral_gap_matches_projected_norm() {
        // v recomputed from P⊥ΩP⊥ on the full space
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let omega = (s.projector() + linalg::identity(4)) * real(0.5);
        let r = spectral_gap(&omega, &s).unwrap();
        let perp = linalg::identity(4) - s.projector();
        let full = &perp * &omega * &perp;
        let top = herm_eig(&full).unwrap().max();
        assert!((r.v - (1.0 - top)).abs() < 1e-12);
        assert!((r.v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let mut r = rng(24);
        let raw = random_matrix(&mut r, 6, 1);
        let v = &raw / real(linalg::vector_norm(&raw));
        let q = complement_basis(&v);
        assert_eq!(q.shape(), (6, 5));
        assert!(max_abs_diff(&(q.adjoint() * &q), &linalg::identity(5)) < 1e-12);
        assert!(max_abs(&(v.adjoint() * &q)) < 1e-12);
    }

    fn trivial_test(d: usize) -> ConditionalTest {
        ConditionalTest::new(
            Direction::AToB,
            vec![linalg::identity(d)],
            vec![linalg::identity(d)],
        )
        .unwrap()
    }

    #[test]
    fn identity_test_gives_identity_omega() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let strat = Strategy::new(
            s,
            vec![WeightedTest {
                prob: 1.0,
                test: trivial_test(2),
            }],
        )
        .unwrap();
        assert_eq!(assemble_omega(&strat), linalg::identity(4));
        assert!(strat.v().unwrap().abs() < 1e-12);
    }

    #[test]
    fn identity_receivers_fail_semi_optimality() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let z = vec![projector(&basis_ket(2, 0)), projector(&basis_ket(2, 1))];
        let test = ConditionalTest::new(
            Direction::AToB,
            z,
            vec![linalg::identity(2), linalg::identity(2)],
        )
        .unwrap();
        let strat = Strategy::new(s, vec![WeightedTest { prob: 1.0, test }]).unwrap();
        let diag = validate_semi_optimal_one_way(&strat).unwrap();
        assert!(!diag.semi_optimal.unwrap().passed);
        assert!(!diag.marginal.passed);
        assert!(diag.fidelity.passed);
        assert!(!diag.passed());
    }

    #[test]
    fn global_target_projector_fails_marginal() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let diag = validate_one_way_operator(&s.projector(), &s).unwrap();
        assert!(!diag.marginal.passed);
        assert!((diag.marginal.residual - (1.0 - 0.36)).abs() < 1e-12);
        assert!(diag.fidelity.passed);
        assert!(!diag.ppt.passed);
    }

    #[test]
    fn mixture_is_linear() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        let z = ConditionalTest::new(
            Direction::AToB,
            vec![projector(&basis_ket(2, 0)), projector(&basis_ket(2, 1))],
            vec![projector(&basis_ket(2, 0)), projector(&basis_ket(2, 1))],
        )
        .unwrap();
        let strat = Strategy::new(
            s,
            vec![
                WeightedTest { prob: 0.5, test: z.clone() },
                WeightedTest { prob: 0.5, test: trivial_test(2) },
            ],
        )
        .unwrap();
        let expected = (z.operator() + linalg::identity(4)) * real(0.5);
        assert!(max_abs_diff(strat.omega(), &expected) < 1e-15);
    }

    #[test]
    fn test_and_strategy_validation() {
        let s = SchmidtState::from_schmidt(&[0.8, 0.6]).unwrap();
        assert!(ConditionalTest::new(Direction::AToB, vec![], vec![]).is_err());
        let half = linalg::identity(2) * real(0.5);
        assert!(ConditionalTest::new(
            Direction::AToB,
            vec![half.clone()],
            vec![linalg::identity(2)]
        )
        .is_err());
        assert!(ConditionalTest::new(
            Direction::AToB,
            vec![linalg::identity(2)],
            vec![linalg::identity(2) * real(2.0)]
        )
        .is_err());
        let bad_prob = Strategy::new(
            s.clone(),
            vec![WeightedTest { prob: 0.9, test: trivial_test(2) }],
        );
        assert!(bad_prob.is_err());
        let wrong_dim = Strategy::new(
            s.clone(),
            vec![WeightedTest { prob: 1.0, test: trivial_test(3) }],
        );
        assert!(matches!(wrong_dim, Err(Error::DimensionMismatch(_))));
        // Bob tests only |1⟩ after any outcome: rejects the target.
        let reject = ConditionalTest::new(
            Direction::AToB,
            vec![linalg::identity(2)],
            vec![projector(&basis_ket(2, 1))],
        )
        .unwrap();
        assert!(matches!(
            Strategy::new(s, vec![WeightedTest { prob: 1.0, test: reject }]),
            Err(Error::TargetNotPreserved(_))
        ));
    }

    #[test]
    fn direction_places_receiver_first_for_b_to_a() {
        let m = projector(&basis_ket(2, 0));
        let n = projector(&basis_ket(2, 1));
        assert_eq!(Direction::BToA.place(&m, &n), kron(&n, &m));
        assert_eq!(Direction::AToB.place(&m, &n), kron(&m, &n));
    }
}
