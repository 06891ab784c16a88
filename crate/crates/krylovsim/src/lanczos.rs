//! Short-iterative Lanczos propagation `psi <- exp(-i H dt) psi`.
//!
//! The Krylov space `{v, Hv, ..., H^{m-1} v}` is built once per step; the
//! tridiagonal projection is diagonalised and the exponential applied in the
//! small space. The a-posteriori error estimate is `beta_m |(e^{-iT dt} e_1)_m|`
//! and does not depend on the Krylov vectors, so halving `dt` reuses them.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::hamiltonian::SparseHamiltonian;

/// Below this `beta` the Krylov space is invariant and the step is exact.
const BREAKDOWN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Number of accepted sub-steps used to cover the requested interval.
    pub substeps: usize,
    /// Number of Hamiltonian applications.
    pub matvecs: usize,
    /// Largest error estimate among accepted sub-steps.
    pub error_estimate: f64,
    /// Smallest sub-step actually taken.
    pub min_dt: f64,
}

#[derive(Debug)]
pub struct LanczosPropagator {
    krylov_dim: usize,
    tolerance: f64,
    max_halvings: u32,
    vectors: Vec<Vec<C64>>,
    work: Vec<C64>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Coefficients of `exp(-i T dt) e_1` from the eigen-decomposition of `T`.
fn small_exponential(eig: &SymmetricEigen<f64, nalgebra::Dyn>, dt: f64) -> Vec<C64> {
    let m = eig.eigenvalues.len();
    let q = &eig.eigenvectors;
    let weights: Vec<C64> = (0..m)
        .map(|j| C64::from_polar(1.0, -eig.eigenvalues[j] * dt) * q[(0, j)])
        .collect();
    (0..m).map(|i| (0..m).map(|j| weights[j] * q[(i, j)]).sum()).collect()
}

impl LanczosPropagator {
    pub fn new(krylov_dim: usize, tolerance: f64) -> Result<Self> {
        if krylov_dim < 2 {
            return Err(SimError::Config {
                name: "krylovDim",
                value: krylov_dim as f64,
                reason: "Krylov dimension must be at least 2",
            });
        }
        if !(tolerance > 0.0) {
            return Err(SimError::Config {
                name: "stepTolerance",
                value: tolerance,
                reason: "step tolerance must be positive",
            });
        }
        Ok(Self {
            krylov_dim,
            tolerance,
            max_halvings: 30,
            vectors: Vec::new(),
            work: Vec::new(),
        })
    }

    pub fn krylov_dim(&self) -> usize {
        self.krylov_dim
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Builds the Krylov basis from `psi`. Returns `(alpha, beta, beta_last, norm)`
    /// where `beta_last` is the residual norm after the final vector.
    fn build(&mut self, h: &SparseHamiltonian, psi: &[C64]) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let dim = psi.len();
        let m = self.krylov_dim.min(dim);
        if self.vectors.len() < m || self.vectors.first().is_some_and(|v| v.len() != dim) {
            self.vectors = (0..m).map(|_| vec![C64::new(0.0, 0.0); dim]).collect();
        }
        self.work.resize(dim, C64::new(0.0, 0.0));
        let nrm = norm(psi);
        for (v, p) in self.vectors[0].iter_mut().zip(psi) {
            *v = p / nrm;
        }
        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut beta_last = 0.0;
        for j in 0..m {
            h.apply(&self.vectors[j], &mut self.work);
            let a = dot(&self.vectors[j], &self.work).re;
            alpha.push(a);
            {
                let (w, v) = (&mut self.work, &self.vectors[j]);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * a;
                }
            }
            if j > 0 {
                let b = beta[j - 1];
                let (w, v) = (&mut self.work, &self.vectors[j - 1]);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * b;
                }
            }
            // one pass of local reorthogonalisation against the last two vectors
            for back in j.saturating_sub(1)..=j {
                let c = dot(&self.vectors[back], &self.work);
                let (w, v) = (&mut self.work, &self.vectors[back]);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * c;
                }
            }
            let b = norm(&self.work);
            if j + 1 == m || b < BREAKDOWN {
                beta_last = if b < BREAKDOWN { 0.0 } else { b };
                break;
            }
            beta.push(b);
            let (_, tail) = self.vectors.split_at_mut(j + 1);
            for (vi, wi) in tail[0].iter_mut().zip(&self.work) {
                *vi = wi / b;
            }
        }
        (alpha, beta, beta_last, nrm)
    }

    /// Advances `psi` by `dt`, sub-stepping whenever the error estimate
    /// exceeds the tolerance.
    pub fn step(&mut self, h: &SparseHamiltonian, psi: &mut [C64], dt: f64) -> Result<StepReport> {
        let mut remaining = dt;
        let mut report = StepReport {
            substeps: 0,
            matvecs: 0,
            error_estimate: 0.0,
            min_dt: dt,
        };
        let mut trial = dt;
        while remaining > 1e-14 * dt.abs().max(1.0) {
            trial = trial.min(remaining);
            let (alpha, beta, beta_last, nrm) = self.build(h, psi);
            report.matvecs += alpha.len();
            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut halvings = 0;
            let (coeffs, estimate) = loop {
                let c = small_exponential(&eig, trial);
                let est = beta_last * c[m - 1].norm() * nrm;
                if est <= self.tolerance {
                    break (c, est);
                }
                halvings += 1;
                if halvings > self.max_halvings {
                    return Err(SimError::StepFailed {
                        t: dt - remaining,
                        estimate: est,
                        halvings,
                    });
                }
                trial *= 0.5;
            };
            for x in psi.iter_mut() {
                *x = C64::new(0.0, 0.0);
            }
            for (j, c) in coeffs.iter().enumerate() {
                let c = c * nrm;
                for (x, v) in psi.iter_mut().zip(&self.vectors[j]) {
                    *x += v * c;
                }
            }
            remaining -= trial;
            report.substeps += 1;
            report.error_estimate = report.error_estimate.max(estimate);
            report.min_dt = report.min_dt.min(trial);
            if halvings == 0 {
                // try to grow back towards the requested step
                trial = (trial * 2.0).min(dt);
            }
        }
        Ok(report)
    }
}
