//! Two-photon momentum spectrum of the emitter-down sector.
//!
//! `psi(p1, p2) = (1/2pi) sum_{x1,x2} psi(x1, x2) e^{-i (p1 x1 + p2 x2)}` with
//! positions measured from the emitter, on the lattice momenta `2 pi m / N`.
//! With cell area `(2pi/N)^2` the spectral power equals the down-sector norm.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::basis::Sector;
use crate::error::{Result, SimError};
use crate::state::LatticeState;

#[derive(Debug, Clone)]
pub struct MomentumSpectrum {
    /// Lattice momenta in increasing order, all in `(-pi, pi]`.
    pub momenta: Vec<f64>,
    /// Row-major `amplitudes[a * n + b] = psi(momenta[a], momenta[b])`.
    pub amplitudes: Vec<C64>,
}

impl MomentumSpectrum {
    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn cell_area(&self) -> f64 {
        let d = 2.0 * PI / self.len() as f64;
        d * d
    }

    pub fn at(&self, a: usize, b: usize) -> C64 {
        self.amplitudes[a * self.len() + b]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `sum |psi(p1,p2)|^2 dp1 dp2`.
    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.cell_area()
    }
}

/// Lattice momentum of FFT bin `m`, folded into `(-pi, pi]`.
fn bin_momentum(m: usize, n: usize) -> f64 {
    let p = 2.0 * PI * m as f64 / n as f64;
    if p > PI {
        p - 2.0 * PI
    } else {
        p
    }
}

/// Fourier transform of the first-quantised down-sector wavefunction.
pub fn spectrum_down_sector(state: &LatticeState) -> Result<MomentumSpectrum> {
    let b = state.basis();
    if b.sector() != Sector::Two {
        return Err(SimError::WrongSector {
            expected: Sector::Two,
            found: b.sector(),
        });
    }
    let n = b.sites();
    let mut grid = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            grid[i * n + j] = state.pair_wavefunction(i, j);
        }
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    for row in grid.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = grid[i * n + j];
        }
        fft.process(&mut column);
        for i in 0..n {
            grid[i * n + j] = column[i];
        }
    }

    // bins sorted by folded momentum; site s sits at x = s - c
    let c = b.center() as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b2| bin_momentum(a, n).total_cmp(&bin_momentum(b2, n)));
    let momenta: Vec<f64> = order.iter().map(|&m| bin_momentum(m, n)).collect();
    let shift: Vec<C64> = momenta.iter().map(|&p| C64::from_polar(1.0, p * c)).collect();
    let scale = 1.0 / (2.0 * PI);
    let mut amplitudes = Vec::with_capacity(n * n);
    for (a, &ma) in order.iter().enumerate() {
        for (bb, &mb) in order.iter().enumerate() {
            amplitudes.push(grid[ma * n + mb] * shift[a] * shift[bb] * scale);
        }
    }
    Ok(MomentumSpectrum { momenta, amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LatticeBasis;
    use crate::state::prepare_two_photon;
    use wqed_core::smatrix::WavepacketSpec;

    #[test]
    fn parseval() {
        let b = LatticeBasis::new(101, Sector::Two).unwrap();
        let f = WavepacketSpec::new(0.9, 5.0, -20.0).unwrap();
        let g = WavepacketSpec::new(-1.3, 4.0, 25.0).unwrap();
        let st = prepare_two_photon(&b, &f, &g).unwrap();
        let sp = spectrum_down_sector(&st).unwrap();
        assert!((sp.power() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn product_of_packet_spectra() {
        // one packet, identical photons: psi(p1,p2) = f(p1) f(p2) up to the lattice sum
        let b = LatticeBasis::new(151, Sector::Two).unwrap();
        let spec = WavepacketSpec::new(1.1, 6.0, -30.0).unwrap();
        let st = prepare_two_photon(&b, &spec, &spec).unwrap();
        let sp = spectrum_down_sector(&st).unwrap();
        let mut worst: f64 = 0.0;
        for (a, &p1) in sp.momenta.iter().enumerate() {
            for (c, &p2) in sp.momenta.iter().enumerate() {
                let expect = spec.amplitude_k(p1) * spec.amplitude_k(p2);
                worst = worst.max((sp.at(a, c) - expect).norm());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }
}
