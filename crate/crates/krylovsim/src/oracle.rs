//! Lattice oracles: dense diagonalisation of the one-excitation sector and
//! iterative resolvent solves in the two-excitation sector.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use wqed_core::ModelParams;

use crate::basis::{LatticeBasis, Sector};
use crate::error::{Result, SimError};
use crate::hamiltonian::{build_hamiltonian, Boundary, SparseHamiltonian};

/// An out-of-band eigenstate of the finite chain.
#[derive(Debug, Clone)]
pub struct LatticeBoundState {
    /// Excitation energy `E + Omega/2` (comparable with the continuum `omega_b`).
    pub energy: f64,
    /// Emitter weight `|<up|psi>|^2`.
    pub p_b: f64,
    /// Eigenvector in the one-excitation basis, signed so that `<up|psi> > 0`.
    pub vector: Vec<f64>,
}

/// Dense one-excitation eigenpairs outside the band, sorted by energy.
pub fn dense_bound_states(params: &ModelParams, n: usize) -> Result<Vec<LatticeBoundState>> {
    let basis = LatticeBasis::new(n, Sector::One)?;
    let h = build_hamiltonian(params, &basis, Boundary::HardWall).to_dense();
    let eig = SymmetricEigen::new(h);
    let edge = params.band_edge();
    let shift = 0.5 * params.omega();
    let up = basis.up_index(0);
    let mut out: Vec<LatticeBoundState> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, e)| (*e + shift).abs() > edge + 1e-9)
        .map(|(i, &e)| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            if v[up] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            LatticeBoundState {
                energy: e + shift,
                p_b: v[up] * v[up],
                vector: v,
            }
        })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CocgSolution {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate orthogonal conjugate gradient for the complex-symmetric system
/// `(shift - H) x = b`.
pub fn cocg_solve(h: &SparseHamiltonian, shift: C64, b: &[C64], tol: f64, max_iter: usize) -> Result<CocgSolution> {
    let n = b.len();
    let tdot = |u: &[C64], v: &[C64]| -> C64 { u.iter().zip(v).map(|(a, c)| a * c).sum() };
    let nrm = |u: &[C64]| u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let bnorm = nrm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok(CocgSolution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![C64::new(0.0, 0.0); n];
    let mut rho = tdot(&r, &r);
    for it in 1..=max_iter {
        h.apply(&p, &mut q);
        q.iter_mut().zip(&p).for_each(|(qi, pi)| *qi = pi * shift - *qi);
        let alpha = rho / tdot(&p, &q);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += pi * alpha);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= qi * alpha);
        let res = nrm(&r) / bnorm;
        if res < tol {
            return Ok(CocgSolution {
                x,
                iterations: it,
                residual: res,
            });
        }
        let rho_new = tdot(&r, &r);
        let beta = rho_new / rho;
        rho = rho_new;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + *pi * beta);
    }
    Err(SimError::NoConvergence {
        iterations: max_iter,
        residual: nrm(&r) / bnorm,
    })
}

/// `<p up| (z - Omega/2 - H)^{-1} |k up>` on a periodic chain for fixed `k`,
/// rescaled by `N / 2pi` to the continuum normalisation of momentum states.
#[derive(Debug, Clone)]
pub struct LatticeG5 {
    basis: LatticeBasis,
    solution: Vec<C64>,
    pub k: f64,
    pub iterations: usize,
}

impl LatticeG5 {
    /// Lattice momentum `2 pi m / N`.
    pub fn momentum(n: usize, m: i64) -> f64 {
        2.0 * PI * m as f64 / n as f64
    }

    pub fn solve(params: &ModelParams, n: usize, z: C64, k_index: i64, tol: f64) -> Result<Self> {
        let basis = LatticeBasis::new(n, Sector::Two)?;
        let h = build_hamiltonian(params, &basis, Boundary::Periodic);
        let k = Self::momentum(n, k_index);
        // A plane wave has vanishing bilinear norm b^T b, on which COCG breaks
        // down; solve for its real cosine and sine parts instead.
        let norm = (n as f64).sqrt();
        let mut cos_rhs = vec![C64::new(0.0, 0.0); basis.dim()];
        let mut sin_rhs = cos_rhs.clone();
        for s in 0..n {
            let phase = k * basis.position(s) as f64;
            cos_rhs[basis.up_index(s)] = C64::new(phase.cos() / norm, 0.0);
            sin_rhs[basis.up_index(s)] = C64::new(phase.sin() / norm, 0.0);
        }
        let shift = z - 0.5 * params.omega();
        let max_iter = 20 * basis.dim();
        let c = cocg_solve(&h, shift, &cos_rhs, tol, max_iter)?;
        let s = cocg_solve(&h, shift, &sin_rhs, tol, max_iter)?;
        Ok(Self {
            basis,
            solution: c.x.iter().zip(&s.x).map(|(a, b)| a + C64::i() * b).collect(),
            k,
            iterations: c.iterations + s.iterations,
        })
    }

    /// Continuum-normalised element at lattice momentum index `p_index`.
    pub fn element(&self, p_index: i64) -> C64 {
        let n = self.basis.sites();
        let p = Self::momentum(n, p_index);
        let norm = (n as f64).sqrt();
        let overlap: C64 = (0..n)
            .map(|s| {
                C64::from_polar(1.0 / norm, -p * self.basis.position(s) as f64) * self.solution[self.basis.up_index(s)]
            })
            .sum();
        overlap * (n as f64 / (2.0 * PI))
    }
}
