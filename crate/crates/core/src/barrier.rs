//! Log-barrier Newton method for the reduced relaxation
//!
//! ```text
//! min s  subject to  0 ≤ S ≤ s,  0 ≤ λᵢλⱼ + (V S Vᵀ)_ij ≤ s c_ij  (i < j),
//! ```
//!
//! with `S` symmetric of size `d − 1` and `V` an orthonormal basis of `λ⊥`.
//! It is used to polish bisection results whose certified gap is still wide:
//! near the optimum the level sets get thin and alternating projections slow
//! to a crawl, while the barrier path converges in a few dozen Newton steps.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg;

/// Central-path point once the duality gap `ν/τ` is below `gap`.
pub(crate) struct Polished {
    /// `R = V S Vᵀ`, so that `ρ = λλᵀ + R`.
    pub r: DMatrix<f64>,
}

struct Program {
    m: usize,
    /// `(k, l)` with `k ≤ l` for each coordinate of `S`.
    coords: Vec<(usize, usize)>,
    /// `λᵢλⱼ`, `c_ij` and the row `a` with `(V S Vᵀ)_ij = a · S` per pair.
    pairs: Vec<(f64, f64, DVector<f64>)>,
    v: DMatrix<f64>,
}

impl Program {
    fn n(&self) -> usize {
        self.coords.len() + 1
    }

    fn unit(&self, a: usize) -> DMatrix<f64> {
        let (k, l) = self.coords[a];
        let mut e = DMatrix::zeros(self.m, self.m);
        e[(k, l)] = 1.0;
        e[(l, k)] = 1.0;
        e
    }

    fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.m, self.m);
        for (a, &(k, l)) in self.coords.iter().enumerate() {
            s[(k, l)] = x[a];
            s[(l, k)] = x[a];
        }
        s
    }

    /// Slacks of the linear constraints, or `None` outside the domain.
    fn slacks(&self, x: &DVector<f64>) -> Option<Vec<(f64, f64)>> {
        let s = x[self.n() - 1];
        let sv = x.rows(0, self.n() - 1);
        self.pairs
            .iter()
            .map(|(pin, cap, a)| {
                let r = a.dot(&sv);
                let lo = pin + r;
                let hi = s * cap - pin - r;
                (lo > 0.0 && hi > 0.0).then_some((lo, hi))
            })
            .collect()
    }

    fn inverses(&self, x: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let s = self.matrix(x);
        let y = DMatrix::identity(self.m, self.m) * x[self.n() - 1] - &s;
        Some((Cholesky::new(s)?.inverse(), Cholesky::new(y)?.inverse()))
    }

    /// `τ s + barrier`, or `None` outside the domain.
    fn value(&self, x: &DVector<f64>, tau: f64) -> Option<f64> {
        let slacks = self.slacks(x)?;
        let s = self.matrix(x);
        let y = DMatrix::identity(self.m, self.m) * x[self.n() - 1] - &s;
        let logdet = |m: DMatrix<f64>| -> Option<f64> {
            let l = Cholesky::new(m)?;
            Some(2.0 * l.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        };
        let mut f = tau * x[self.n() - 1] - logdet(s)? - logdet(y)?;
        for (lo, hi) in slacks {
            f -= lo.ln() + hi.ln();
        }
        Some(f)
    }

    fn newton_system(&self, x: &DVector<f64>, tau: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n();
        let ns = n - 1;
        let (p, z) = self.inverses(x)?;
        let slacks = self.slacks(x)?;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        g[ns] = tau - z.trace();
        h[(ns, ns)] = (&z * &z).trace();
        let z2 = &z * &z;
        let units: Vec<DMatrix<f64>> = (0..ns).map(|a| self.unit(a)).collect();
        let pe: Vec<DMatrix<f64>> = units.iter().map(|e| &p * e * &p).collect();
        let ze: Vec<DMatrix<f64>> = units.iter().map(|e| &z * e * &z).collect();
        for a in 0..ns {
            g[a] = -(&p * &units[a]).trace() + (&z * &units[a]).trace();
            h[(a, ns)] = -(&z2 * &units[a]).trace();
            h[(ns, a)] = h[(a, ns)];
            for b in 0..=a {
                let eb = &units[b];
                let v = pe[a].component_mul(eb).sum() + ze[a].component_mul(eb).sum();
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        for ((_, cap, a), (lo, hi)) in self.pairs.iter().zip(slacks) {
            // −log(lo) with ∇lo = (a, 0); −log(hi) with ∇hi = (−a, cap)
            let mut dhi = DVector::zeros(n);
            dhi.rows_mut(0, ns).copy_from(&(-a));
            dhi[ns] = *cap;
            let mut dlo = DVector::zeros(n);
            dlo.rows_mut(0, ns).copy_from(a);
            g -= &dlo / lo + &dhi / hi;
            h += &dlo * dlo.transpose() / (lo * lo) + &dhi * dhi.transpose() / (hi * hi);
        }
        Some((g, h))
    }
}

/// Follows the central path from a strictly feasible start until the duality
/// gap is below `gap`. Returns `None` if a Newton step breaks down first.
pub(crate) fn polish(lambda: &[f64], caps: &DMatrix<f64>, gap: f64) -> Option<Polished> {
    let d = lambda.len();
    let m = d - 1;
    let v = crate::strategy::complement_basis(&linalg::real_ket(lambda)).map(|z| z.re);
    let coords: Vec<(usize, usize)> = (0..m).flat_map(|k| (k..m).map(move |l| (k, l))).collect();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let a = DVector::from_iterator(
                coords.len(),
                coords.iter().map(|&(k, l)| {
                    if k == l {
                        v[(i, k)] * v[(j, k)]
                    } else {
                        v[(i, k)] * v[(j, l)] + v[(i, l)] * v[(j, k)]
                    }
                }),
            );
            pairs.push((lambda[i] * lambda[j], caps[(i, j)], a));
        }
    }
    let program = Program {
        m,
        coords,
        pairs,
        v,
    };
    let n = program.n();

    // S = I/2 keeps every λᵢλⱼ + R_ij = λᵢλⱼ/2 positive; s = 3/2 clears the caps
    let mut x = DVector::zeros(n);
    for (a, &(k, l)) in program.coords.iter().enumerate() {
        if k == l {
            x[a] = 0.5;
        }
    }
    x[n - 1] = 1.5;
    let nu = (2 * m + 2 * program.pairs.len()) as f64;
    let mut tau = 1.0;

    loop {
        for _ in 0..100 {
            let (g, h) = program.newton_system(&x, tau)?;
            let chol = factor(h)?;
            let step = chol.solve(&(-&g));
            let decrement = -g.dot(&step);
            if decrement < 1e-12 {
                break;
            }
            let f0 = program.value(&x, tau)?;
            let mut alpha = 1.0;
            loop {
                let trial = &x + &step * alpha;
                if let Some(f) = program.value(&trial, tau) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                        return None;
                }
            }
        }
        if nu / tau < gap {
            return Some(finish(&program, &x));
        }
        tau *= 8.0;
    }
}

/// Cholesky of `h`, retried with a growing diagonal shift once rounding at
/// large `τ` costs it definiteness. A shifted step is still a descent step.
fn factor(h: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().amax();
    for shift in [0.0, 1e-14, 1e-12, 1e-10] {
        let shifted = &h + DMatrix::identity(h.nrows(), h.ncols()) * (shift * scale);
        if let Some(chol) = Cholesky::new(shifted) {
            return Some(chol);
        }
    }
    None
}

fn finish(program: &Program, x: &DVector<f64>) -> Polished {
    let s = program.matrix(x);
    Polished {
        r: &program.v * s * program.v.transpose(),
    }
}
