//! The lattice Hamiltonian
//! `H = -J sum_x (a_{x+1}^† a_x + h.c.) + Omega/2 sigma_z + g' (sigma^+ a_0 + a_0^† sigma^-)`
//! restricted to one excitation sector, stored as a real symmetric CSR matrix.

use num_complex::Complex64 as C64;
use wqed_core::ModelParams;

use crate::basis::{LatticeBasis, Sector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Open chain: sites `0` and `N-1` have a single neighbour.
    #[default]
    HardWall,
    /// Ring: site `N-1` hops to site `0`.
    Periodic,
}

/// Real symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    basis: LatticeBasis,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

fn neighbours(n: usize, site: usize, boundary: Boundary) -> impl Iterator<Item = usize> {
    let left = match (site, boundary) {
        (0, Boundary::HardWall) => None,
        (0, Boundary::Periodic) => Some(n - 1),
        _ => Some(site - 1),
    };
    let right = match (site + 1 == n, boundary) {
        (true, Boundary::HardWall) => None,
        (true, Boundary::Periodic) => Some(0),
        _ => Some(site + 1),
    };
    left.into_iter().chain(right)
}

/// Assembles `H_d` in the given basis.
pub fn build_hamiltonian(params: &ModelParams, basis: &LatticeBasis, boundary: Boundary) -> SparseHamiltonian {
    let n = basis.sites();
    let c = basis.center();
    let j = params.j();
    let gp = params.g_prime();
    let half_omega = 0.5 * params.omega();
    let sqrt2 = std::f64::consts::SQRT_2;

    let dim = basis.dim();
    let mut indptr = Vec::with_capacity(dim + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(8);
    let flush =
        |row: &mut Vec<(usize, f64)>, indices: &mut Vec<u32>, values: &mut Vec<f64>, indptr: &mut Vec<usize>| {
            row.sort_by_key(|e| e.0);
            for &(col, v) in row.iter() {
                if v != 0.0 {
                    indices.push(col as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
            row.clear();
        };

    match basis.sector() {
        Sector::One => {
            for s in 0..n {
                row.push((s, -half_omega));
                for m in neighbours(n, s, boundary) {
                    row.push((m, -j));
                }
                if s == c {
                    row.push((basis.up_index(0), gp));
                }
                flush(&mut row, &mut indices, &mut values, &mut indptr);
            }
            row.push((c, gp));
            row.push((basis.up_index(0), half_omega));
            flush(&mut row, &mut indices, &mut values, &mut indptr);
        }
        Sector::Two => {
            for idx in 0..basis.pair_count() {
                let (a, b) = basis.pair_sites(idx);
                row.push((idx, -half_omega));
                if a == b {
                    for m in neighbours(n, a, boundary) {
                        row.push((basis.pair_index(m, a), -j * sqrt2));
                    }
                } else {
                    for m in neighbours(n, a, boundary) {
                        let f = if m == b { sqrt2 } else { 1.0 };
                        row.push((basis.pair_index(m, b), -j * f));
                    }
                    for m in neighbours(n, b, boundary) {
                        let f = if m == a { sqrt2 } else { 1.0 };
                        row.push((basis.pair_index(a, m), -j * f));
                    }
                }
                // a_0^† sigma^- takes |x, up> to a_0^† a_x^† |0>
                if a == c && b == c {
                    row.push((basis.up_index(c), gp * sqrt2));
                } else if a == c {
                    row.push((basis.up_index(b), gp));
                } else if b == c {
                    row.push((basis.up_index(a), gp));
                }
                flush(&mut row, &mut indices, &mut values, &mut indptr);
            }
            for s in 0..n {
                let up = basis.up_index(s);
                row.push((up, half_omega));
                for m in neighbours(n, s, boundary) {
                    row.push((basis.up_index(m), -j));
                }
                let f = if s == c { sqrt2 } else { 1.0 };
                row.push((basis.pair_index(s, c), gp * f));
                flush(&mut row, &mut indices, &mut values, &mut indptr);
            }
        }
    }

    SparseHamiltonian {
        basis: *basis,
        indptr,
        indices,
        values,
    }
}

impl SparseHamiltonian {
    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for k in lo..hi {
                acc += x[self.indices[k] as usize] * self.values[k];
            }
            *out = acc;
        }
    }

    /// Matrix element `<row|H|col>`.
    pub fn element(&self, row: usize, col: usize) -> f64 {
        let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
        match self.indices[lo..hi].binary_search(&(col as u32)) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `<x|H|x>` (real for Hermitian `H`).
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn spectral_bound(&self) -> f64 {
        (0..self.dim())
            .map(|r| {
                self.values[self.indptr[r]..self.indptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Dense copy, for small oracles only.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for r in 0..d {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k] as usize)] = self.values[k];
            }
        }
        m
    }
}
