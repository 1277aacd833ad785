//! Sample-complexity bounds, worst-case states and Monte Carlo simulation.
//!
//! Each simulated copy draws its randomness from its own ChaCha stream
//! (`seed`, stream = copy or repetition index), so results do not depend on
//! how rayon splits the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructors::i_pow;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::states::{DensityOperator, SchmidtState};
use crate::strategy::{spectral_gap, Strategy};

/// Probabilities this far outside `[0, 1]` are rounding and get clamped.
pub const TOL_CLAMP: f64 = 1e-12;

/// The parameters of one verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Infidelity threshold `ε`.
    pub epsilon: f64,
    /// Target failure probability `δ`.
    pub delta: f64,
    /// Copies consumed `N`.
    pub n_copies: u64,
    /// Observed pass frequency `f`.
    pub frequency: f64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        open_unit("epsilon", self.epsilon)?;
        open_unit("delta", self.delta)?;
        if self.n_copies == 0 {
            return Err(Error::InvalidParameter("n_copies must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.frequency) {
            return Err(Error::InvalidParameter(format!(
                "frequency {} outside [0, 1]",
                self.frequency
            )));
        }
        Ok(())
    }

    pub fn copies_needed(&self, v: f64) -> Result<u64> {
        copies_needed(v, self.epsilon, self.delta)
    }

    pub fn confidence_iid(&self, v: f64) -> Result<f64> {
        confidence_iid(v, self.epsilon, self.n_copies)
    }

    pub fn chernoff_confidence(&self, v: f64) -> Result<f64> {
        chernoff_confidence(self.frequency, v, self.epsilon, self.n_copies)
    }
}

fn open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} outside (0, 1)")))
    }
}

/// `D(x‖y) = x ln(x/y) + (1−x) ln((1−x)/(1−y))`, with `0 ln 0 = 0`.
pub fn kl_divergence(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
    }
    open_unit("y", y)?;
    let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p / q).ln() };
    Ok((term(x, y) + term(1.0 - x, 1.0 - y)).max(0.0))
}

/// `(1 − εv)^N`, evaluated as `exp(N ln(1 − εv))`.
pub fn confidence_iid(v: f64, epsilon: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "need v, epsilon in [0, 1], got v = {v}, epsilon = {epsilon}"
        )));
    }
    let x = epsilon * v;
    if x >= 1.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok((n as f64 * (-x).ln_1p()).exp())
}

/// Smallest `N ≥ 1` with `(1 − εv)^N ≤ δ`.
pub fn copies_needed(v: f64, epsilon: f64, delta: f64) -> Result<u64> {
    if v <= 0.0 || v > 1.0 || v.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "v = {v} outside (0, 1]; a strategy without a gap cannot verify"
        )));
    }
    open_unit("epsilon", epsilon)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1]")));
    }
    let ratio = delta.ln() / (-(epsilon * v)).ln_1p();
    let mut n = ratio.ceil().max(1.0) as u64;
    // guard against the ratio landing a rounding error above an integer
    while n > 1 && confidence_iid(v, epsilon, n - 1)? <= delta {
        n -= 1;
    }
    Ok(n)
}

/// `exp(−D(f ‖ 1 − εv) N)`, the one-sided Chernoff bound on accepting a bad
/// state after observing pass frequency `f`.
pub fn chernoff_confidence(f: f64, v: f64, epsilon: f64, n: u64) -> Result<f64> {
    let y = 1.0 - epsilon * v;
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "1 - epsilon*v = {y} outside (0, 1)"
        )));
    }
    if !(f > y && f <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pass frequency {f} must exceed 1 - epsilon*v = {y}"
        )));
    }
    Ok((-kl_divergence(f, y)? * n as f64).exp())
}

/// The fidelity-`(1−ε)` state `√(1−ε)|ψ⟩ + √ε|φ⟩` with `|φ⟩` a top eigenvector
/// of `P⊥ΩP⊥`; it passes with probability exactly `1 − εv(Ω)`.
pub fn worst_case_state(
    omega: &ComplexMatrix,
    target: &SchmidtState,
    epsilon: f64,
) -> Result<DensityOperator> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} outside [0, 1)"
        )));
    }
    let psi = target.state_vector();
    if epsilon == 0.0 {
        return DensityOperator::pure(&psi, target.dims());
    }
    let report = spectral_gap(omega, target)?;
    let phi = report.top_perp_eigenvector.ok_or_else(|| {
        Error::InvalidParameter("a product target has no orthogonal direction".into())
    })?;
    let chi = psi * linalg::real((1.0 - epsilon).sqrt()) + phi * linalg::real(epsilon.sqrt());
    DensityOperator::pure(&chi, target.dims())
}

/// Same as [`worst_case_state`] with `Ω` taken from a strategy.
pub fn worst_case_for(strategy: &Strategy, epsilon: f64) -> Result<DensityOperator> {
    worst_case_state(strategy.omega(), strategy.target(), epsilon)
}

/// How a simulation is tallied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Each repetition measures up to `N` copies and stops at the first failure.
    StopOnFail,
    /// Every copy is measured and passes are counted.
    Frequency,
}

/// Choice and pass counts of one mixture component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCount {
    pub chosen: u64,
    pub passed: u64,
}

/// Result of [`simulate`].
///
/// In frequency mode `trials` counts copies and `passes` counts passing copies;
/// `analytic_rate` is `1 − Tr(Ωσ)`. In stop-on-fail mode `trials` counts
/// repetitions of `copies_per_trial` copies, `passes` counts repetitions that
/// accepted, and `analytic_rate` is `1 − Tr(Ωσ)^N`. Both rates are rejection
/// rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: SimMode,
    pub trials: u64,
    pub copies_per_trial: u64,
    pub passes: u64,
    pub per_setting: Vec<SettingCount>,
    pub empirical_fail_rate: f64,
    pub analytic_rate: f64,
    pub seed: u64,
}

impl SimReport {
    /// `passes / trials`.
    pub fn pass_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.passes as f64 / self.trials as f64
        }
    }
}

/// Sender-outcome probability and conditional pass probability for one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub outcome: f64,
    pub pass: f64,
}

/// Per-test precomputed operators `Mₐ ⊗ I` and `Mₐ ⊗ Nₐ`.
struct Compiled {
    marginals: Vec<ComplexMatrix>,
    joints: Vec<ComplexMatrix>,
    twirled: bool,
}

fn compile(strategy: &Strategy) -> Vec<Compiled> {
    strategy
        .tests()
        .iter()
        .map(|wt| {
            let t = &wt.test;
            let dir = t.direction();
            let dr = t.receiver_pass()[0].nrows();
            let eye = linalg::identity(dr);
            Compiled {
                marginals: t.sender_povm().iter().map(|m| dir.place(m, &eye)).collect(),
                joints: t
                    .sender_povm()
                    .iter()
                    .zip(t.receiver_pass())
                    .map(|(m, n)| dir.place(m, n))
                    .collect(),
                twirled: t.is_twirled(),
            }
        })
        .collect()
}

/// `Tr(Aσ)` for Hermitian `A` and `σ`.
fn trace_product(a: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(sigma.transpose().iter())
        .map(|(x, y)| (x * y).re)
        .sum()
}

fn checked(p: f64) -> Result<f64> {
    if (-TOL_CLAMP..=1.0 + TOL_CLAMP).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::Probability(p))
    }
}

fn branches_of(test: &Compiled, sigma: &ComplexMatrix) -> Result<Vec<Branch>> {
    test.marginals
        .iter()
        .zip(&test.joints)
        .map(|(m, j)| {
            let outcome = checked(trace_product(m, sigma))?;
            let joint = checked(trace_product(j, sigma))?;
            let pass = if outcome > 0.0 {
                checked(joint / outcome)?
            } else {
                0.0
            };
            Ok(Branch { outcome, pass })
        })
        .collect()
}

/// The two-stage branch probabilities of test `index` on `σ`, without the twirl.
pub fn branch_probabilities(
    strategy: &Strategy,
    index: usize,
    sigma: &DensityOperator,
) -> Result<Vec<Branch>> {
    check_dims(strategy, sigma)?;
    let compiled = compile(strategy);
    let test = compiled.get(index).ok_or_else(|| {
        Error::InvalidParameter(format!("strategy has no test with index {index}"))
    })?;
    branches_of(test, sigma.matrix())
}

fn check_dims(strategy: &Strategy, sigma: &DensityOperator) -> Result<()> {
    if strategy.target().dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(
            "state and strategy act on different spaces".into(),
        ));
    }
    Ok(())
}

/// `g σ g†` for `g = Φ(n) ⊗ Φ(n)†` with a random exponent vector, `n₀ = 0`.
fn random_phase(sigma: &ComplexMatrix, d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut exps = vec![0u8; d];
    for e in exps.iter_mut().skip(1) {
        *e = rng.random_range(0..4);
    }
    let diag: Vec<_> = (0..d * d)
        .map(|x| {
            let (i, j) = (x / d, x % d);
            i_pow(exps[i].wrapping_add(4 - exps[j]))
        })
        .collect();
    ComplexMatrix::from_fn(d * d, d * d, |x, y| diag[x] * sigma[(x, y)] * diag[y].conj())
}

fn pick(weights: impl Iterator<Item = f64>, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        if w > 0.0 {
            last = k;
        }
        acc += w;
        if u < acc {
            return k;
        }
    }
    last
}

struct Sampler<'a> {
    probs: Vec<f64>,
    tests: Vec<Compiled>,
    plain: Vec<Option<Vec<Branch>>>,
    sigma: &'a ComplexMatrix,
    d: usize,
}

impl<'a> Sampler<'a> {
    fn new(strategy: &Strategy, sigma: &'a DensityOperator) -> Result<Self> {
        check_dims(strategy, sigma)?;
        let tests = compile(strategy);
        let plain = tests
            .iter()
            .map(|t| (!t.twirled).then(|| branches_of(t, sigma.matrix())).transpose())
            .collect::<Result<_>>()?;
        Ok(Self {
            probs: strategy.tests().iter().map(|t| t.prob).collect(),
            tests,
            plain,
            sigma: sigma.matrix(),
            d: sigma.dims().dim_a,
        })
    }

    /// Returns the chosen setting and whether the copy passed.
    fn copy(&self, rng: &mut ChaCha8Rng) -> Result<(usize, bool)> {
        let k = pick(self.probs.iter().copied(), rng);
        let twirled;
        let branches = match &self.plain[k] {
            Some(b) => b,
            None => {
                let rotated = random_phase(self.sigma, self.d, rng);
                twirled = branches_of(&self.tests[k], &rotated)?;
                &twirled
            }
        };
        let a = pick(branches.iter().map(|b| b.outcome), rng);
        let u: f64 = rng.random();
        Ok((k, u < branches[a].pass))
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone)]
struct Tally {
    passes: u64,
    per_setting: Vec<SettingCount>,
}

impl Tally {
    fn empty(n: usize) -> Self {
        Self {
            passes: 0,
            per_setting: vec![SettingCount::default(); n],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.passes += other.passes;
        for (a, b) in self.per_setting.iter_mut().zip(other.per_setting) {
            a.chosen += b.chosen;
            a.passed += b.passed;
        }
        self
    }
}

/// Runs the adaptive protocol on i.i.d. copies of `σ`.
///
/// In frequency mode `copies × trials` copies are measured and every pass is
/// counted. In stop-on-fail mode each of `trials` repetitions measures up to
/// `copies` copies and accepts if none fails.
pub fn simulate(
    strategy: &Strategy,
    sigma: &DensityOperator,
    copies: u64,
    trials: u64,
    seed: u64,
    mode: SimMode,
) -> Result<SimReport> {
    if copies == 0 || trials == 0 {
        return Err(Error::InvalidParameter(
            "copies and trials must be positive".into(),
        ));
    }
    let sampler = Sampler::new(strategy, sigma)?;
    let settings = strategy.tests().len();
    let pass_prob = checked(trace_product(strategy.omega(), sigma.matrix()))?;

    let (units, per_unit) = match mode {
        SimMode::Frequency => (copies.checked_mul(trials), 1),
        SimMode::StopOnFail => (Some(trials), copies),
    };
    let units = units.ok_or_else(|| Error::InvalidParameter("too many copies".into()))?;

    let tally = (0..units)
        .into_par_iter()
        .map(|unit| -> Result<Tally> {
            let mut rng = stream(seed, unit);
            let mut t = Tally::empty(settings);
            let mut all = true;
            for _ in 0..per_unit {
                let (k, ok) = sampler.copy(&mut rng)?;
                t.per_setting[k].chosen += 1;
                if ok {
                    t.per_setting[k].passed += 1;
                } else {
                    all = false;
                    break;
                }
            }
            t.passes = u64::from(all);
            Ok(t)
        })
        .try_reduce(|| Tally::empty(settings), |a, b| Ok(a.merge(b)))?;

    let analytic_rate = match mode {
        SimMode::Frequency => 1.0 - pass_prob,
        SimMode::StopOnFail => 1.0 - (copies as f64 * pass_prob.ln()).exp(),
    };
    Ok(SimReport {
        mode,
        trials: units,
        copies_per_trial: per_unit,
        passes: tally.passes,
        per_setting: tally.per_setting,
        empirical_fail_rate: 1.0 - tally.passes as f64 / units as f64,
        analytic_rate: analytic_rate.clamp(0.0, 1.0),
        seed,
    })
}
