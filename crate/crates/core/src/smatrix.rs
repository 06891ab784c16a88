//! On-shell S-matrix elements for one and two photons and the wavepacket
//! out-states built from them.
//!
//! Channel 0 holds two free photons with the emitter in its ground state,
//! channel 1 a free photon next to a bound state `|Psi±>`. Every kernel depends
//! on momenta only through band energies, so momentum-plane integrals are
//! rewritten on energy shells: `omega_{1,2} = E/2 ± Delta`, with the Jacobian
//! `1 / (sqrt(4J^2 - omega_1^2) sqrt(4J^2 - omega_2^2))` and a sum over the four
//! momentum sign combinations.
//!
//! Packets use `<x|k> = exp(i k x) / sqrt(2 pi)`; the phase of `f(k)` is
//! referenced to the packet centre `x_c`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Momentum};
use crate::quadrature::{principal_value, principal_value_eta, GaussLegendre};
use crate::resolvent::{BoundState, Branch};
use crate::vertex::{QuadratureConfig, VertexKernel, VertexOrder};

/// Packets are considered zero beyond this many inverse widths from `k0`.
pub const PACKET_SUPPORT: f64 = 6.0;

/// Largest norm fraction a packet may lose outside `[-pi, pi]`.
pub const MAX_PACKET_LEAK: f64 = 1e-3;

const SHELL_SLACK: f64 = 1e-12;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Single-photon reflection and transmission amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePhotonRT {
    pub k: Momentum,
    pub r: C64,
    pub t: C64,
}

impl OnePhotonRT {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }
}

fn reject_band_edge(params: &ModelParams, k: f64) -> Result<()> {
    if params.band_edge() * k.sin().abs() < 1e-12 {
        return Err(Error::BandEdge { k });
    }
    Ok(())
}

/// `r = -g'^2 / (g'^2 + i (2J cos k + Omega) 2J |sin k|)`, `t = 1 + r`.
pub fn one_photon_rt(params: &ModelParams, k: f64) -> Result<OnePhotonRT> {
    let k = Momentum::new(k)?;
    reject_band_edge(params, k.value())?;
    let gp2 = params.g_prime() * params.g_prime();
    let kv = k.value();
    let detuning = params.band_edge() * kv.cos() + params.omega();
    let r = -gp2 / C64::new(gp2, detuning * params.band_edge() * kv.sin().abs());
    Ok(OnePhotonRT { k, r, t: 1.0 + r })
}

/// `(r, t)` continued to the band edges, where a coupled emitter reflects
/// perfectly.
fn one_photon_rt_or_limit(params: &ModelParams, k: f64) -> (C64, C64) {
    match one_photon_rt(params, k) {
        Ok(rt) => (rt.r, rt.t),
        Err(_) if params.g_prime() > 0.0 => (C64::new(-1.0, 0.0), C64::new(0.0, 0.0)),
        Err(_) => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
    }
}

fn require_zero_omega(params: &ModelParams) -> Result<()> {
    if params.omega() != 0.0 {
        return Err(Error::NonzeroOmega { omega: params.omega() });
    }
    Ok(())
}

/// Photon reflection and transmission off the bound state of `branch`,
/// `r = -2 pi i p_b g^2 U(omega_k + omega_b + i eta; k, k) / (2J |sin k|)`,
/// `t = 1 + r`.
pub fn bound_to_bound_rt(
    params: &ModelParams,
    k: f64,
    branch: Branch,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<(C64, C64)> {
    let sums = bound_to_bound_sums(params, k, &BoundState::new(params, branch)?, order, qc)?;
    let r = *sums.last().expect("order >= 0");
    Ok((r, 1.0 + r))
}

/// Reflection amplitudes for every truncation `0..=order`.
fn bound_to_bound_sums(
    params: &ModelParams,
    k: f64,
    bound: &BoundState,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<Vec<C64>> {
    require_zero_omega(params)?;
    let k = Momentum::new(k)?.value();
    reject_band_edge(params, k)?;
    let wk = params.dispersion(k);
    let kernel = VertexKernel::new(params, qc.on_shell(wk + bound.omega_b), qc)?;
    let sums = kernel.u_partial(order.0, wk, wk)?.sums();
    let pref = -2.0 * PI * I * bound.p_b * params.g2() / (params.band_edge() * k.sin().abs());
    Ok(sums.into_iter().map(|u| pref * u).collect())
}

/// Packet-averaged bound-to-bound probabilities at one truncation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundToBoundRates {
    pub order: usize,
    pub reflection: f64,
    pub transmission: f64,
}

impl BoundToBoundRates {
    /// Probability leaving channel 1, `1 - R - T`.
    pub fn loss(&self) -> f64 {
        1.0 - self.reflection - self.transmission
    }
}

/// `R = ∫ |f|^2 |r|^2 dk` and `T = ∫ |f|^2 |t|^2 dk` for every order up to
/// `order`, on `nodes` Gauss–Legendre points across the packet support.
pub fn bound_to_bound_packet(
    params: &ModelParams,
    spec: &WavepacketSpec,
    branch: Branch,
    order: VertexOrder,
    qc: &QuadratureConfig,
    nodes: usize,
) -> Result<Vec<BoundToBoundRates>> {
    spec.check_truncation()?;
    let (lo, hi) = spec.momentum_support();
    let edge = (lo / PI).ceil() * PI;
    if edge <= hi {
        return Err(Error::BandEdge { k: edge });
    }
    let bound = BoundState::new(params, branch)?;
    let gl = GaussLegendre::new(nodes);
    let samples: Vec<(f64, f64)> = gl.mapped(lo, hi).collect();
    let per_node = samples
        .par_iter()
        .map(|&(k, w)| {
            let weight = w * spec.amplitude_k(k).norm_sqr();
            let r = bound_to_bound_sums(params, Momentum::wrapped(k).value(), &bound, order, qc)?;
            Ok((weight, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=order.0)
        .map(|n| {
            let (mut refl, mut trans) = (0.0, 0.0);
            for (w, r) in &per_node {
                refl += w * r[n].norm_sqr();
                trans += w * (1.0 + r[n]).norm_sqr();
            }
            BoundToBoundRates {
                order: n,
                reflection: refl,
                transmission: trans,
            }
        })
        .collect())
}

/// Gaussian photon packet
/// `f(x) = (pi s^2)^{-1/4} exp(-(x - x_c)^2 / 2s^2 + i k0 x)`, whose
/// transform is `f(k) = (s^2/pi)^{1/4} exp(-s^2 (k - k0)^2 / 2 - i (k - k0) x_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    pub k0: f64,
    pub s: f64,
    pub xc: f64,
}

impl WavepacketSpec {
    pub fn new(k0: f64, s: f64, xc: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                value: s,
                reason: "packet width must be positive",
            });
        }
        Momentum::new(k0)?;
        if !xc.is_finite() {
            return Err(Error::InvalidParameter {
                name: "xc",
                value: xc,
                reason: "packet centre must be finite",
            });
        }
        Ok(Self { k0, s, xc })
    }

    /// Norm fraction of the continuum Gaussian lying outside `[-pi, pi]`.
    pub fn leak(&self) -> f64 {
        1.0 - 0.5 * (erf(self.s * (PI - self.k0)) + erf(self.s * (PI + self.k0)))
    }

    pub fn check_truncation(&self) -> Result<()> {
        let leak = self.leak();
        if leak > MAX_PACKET_LEAK {
            return Err(Error::PacketTruncation { s: self.s, leak });
        }
        Ok(())
    }

    /// Momentum interval `k0 ± 6/s` outside which the packet is negligible.
    pub fn momentum_support(&self) -> (f64, f64) {
        let half = PACKET_SUPPORT / self.s;
        (self.k0 - half, self.k0 + half)
    }

    /// Range of band energies covered by the momentum support.
    pub fn energy_support(&self, params: &ModelParams) -> (f64, f64) {
        let (lo, hi) = self.momentum_support();
        let e = params.band_edge();
        if hi - lo >= 2.0 * PI {
            return (-e, e);
        }
        let (a, b) = (params.dispersion(lo), params.dispersion(hi));
        let mut emin = a.min(b);
        let mut emax = a.max(b);
        // cos k peaks at even multiples of pi and bottoms out at odd ones
        if (lo / (2.0 * PI)).ceil() * 2.0 * PI <= hi {
            emin = -e;
        }
        if ((lo - PI) / (2.0 * PI)).ceil() * 2.0 * PI + PI <= hi {
            emax = e;
        }
        (emin, emax)
    }

    /// Momentum amplitude `f(k)`, periodised over neighbouring Brillouin
    /// zones so that it is exactly the lattice Fourier series of `f(x)`.
    pub fn amplitude_k(&self, k: f64) -> C64 {
        let norm = (self.s * self.s / PI).powf(0.25);
        (-1..=1)
            .map(|n| {
                let d = k + 2.0 * PI * n as f64 - self.k0;
                norm * (-0.5 * self.s * self.s * d * d).exp() * C64::from_polar(1.0, -d * self.xc)
            })
            .sum()
    }

    /// Real-space amplitude `f(x)`.
    pub fn amplitude_x(&self, x: f64) -> C64 {
        let d = x - self.xc;
        let norm = (PI * self.s * self.s).powf(-0.25);
        norm * (-d * d / (2.0 * self.s * self.s)).exp() * C64::from_polar(1.0, self.k0 * x)
    }
}

/// Checked `f(k)`: rejects `|k| > pi` and packets that do not fit the zone.
pub fn gaussian_packet_k(spec: &WavepacketSpec, k: f64) -> Result<C64> {
    Momentum::new(k)?;
    spec.check_truncation()?;
    Ok(spec.amplitude_k(k))
}

/// `f(x)` on a lattice site or any real position.
pub fn gaussian_packet_x(spec: &WavepacketSpec, x: f64) -> C64 {
    spec.amplitude_x(x)
}

/// Normalised symmetric two-photon amplitude `f(k1, k2)`: the plain product
/// for identical packets, the symmetrised product otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonPacket {
    pub first: WavepacketSpec,
    pub second: WavepacketSpec,
    identical: bool,
    norm: f64,
}

impl TwoPhotonPacket {
    pub fn identical(spec: WavepacketSpec) -> Result<Self> {
        spec.check_truncation()?;
        Ok(Self {
            first: spec,
            second: spec,
            identical: true,
            norm: 1.0,
        })
    }

    pub fn symmetrized(first: WavepacketSpec, second: WavepacketSpec) -> Result<Self> {
        if first == second {
            return Self::identical(first);
        }
        first.check_truncation()?;
        second.check_truncation()?;
        let overlap = gaussian_overlap(&first, &second);
        let n2 = 2.0 * (1.0 + overlap.norm_sqr());
        Ok(Self {
            first,
            second,
            identical: false,
            norm: 1.0 / n2.sqrt(),
        })
    }

    pub fn is_identical(&self) -> bool {
        self.identical
    }

    pub fn amplitude(&self, k1: f64, k2: f64) -> C64 {
        let (a, b) = (&self.first, &self.second);
        if self.identical {
            a.amplitude_k(k1) * a.amplitude_k(k2)
        } else {
            self.norm * (a.amplitude_k(k1) * b.amplitude_k(k2) + b.amplitude_k(k1) * a.amplitude_k(k2))
        }
    }

    /// `sum_{s1, s2 = ±} f(s1 k(omega1), s2 k(omega2))`.
    pub fn sign_sum(&self, params: &ModelParams, omega1: f64, omega2: f64) -> C64 {
        let k1 = band_momentum(params, omega1);
        let k2 = band_momentum(params, omega2);
        self.amplitude(k1, k2) + self.amplitude(-k1, k2) + self.amplitude(k1, -k2) + self.amplitude(-k1, -k2)
    }

    /// `sum_{s1, s2} |f(s1 k(omega1), s2 k(omega2))|^2`.
    pub fn sign_sum_sqr(&self, params: &ModelParams, omega1: f64, omega2: f64) -> f64 {
        let k1 = band_momentum(params, omega1);
        let k2 = band_momentum(params, omega2);
        self.amplitude(k1, k2).norm_sqr()
            + self.amplitude(-k1, k2).norm_sqr()
            + self.amplitude(k1, -k2).norm_sqr()
            + self.amplitude(-k1, -k2).norm_sqr()
    }

    /// Single-photon energy range shared by both packets.
    pub fn photon_energy_support(&self, params: &ModelParams) -> (f64, f64) {
        let (a0, a1) = self.first.energy_support(params);
        let (b0, b1) = self.second.energy_support(params);
        (a0.min(b0), a1.max(b1))
    }

    /// Range of total energies `E = omega1 + omega2` carried by the packet.
    pub fn total_energy_support(&self, params: &ModelParams) -> (f64, f64) {
        let (a0, a1) = self.first.energy_support(params);
        let (b0, b1) = self.second.energy_support(params);
        (a0 + b0, a1 + b1)
    }
}

/// `∫ dk conj(f_a) f_b` for two continuum Gaussians.
fn gaussian_overlap(a: &WavepacketSpec, b: &WavepacketSpec) -> C64 {
    let gl = GaussLegendre::new(64);
    let lo = a.momentum_support().0.min(b.momentum_support().0);
    let hi = a.momentum_support().1.max(b.momentum_support().1);
    gl.composite(lo, hi, 16)
        .into_iter()
        .map(|(k, w)| w * a.amplitude_k(k).conj() * b.amplitude_k(k))
        .sum()
}

/// `k(omega) = arccos(-omega / 2J)` in `[0, pi]`.
fn band_momentum(params: &ModelParams, omega: f64) -> f64 {
    (-omega / params.band_edge()).clamp(-1.0, 1.0).acos()
}

/// Integration limits on the shell of total energy `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyShellDomain {
    pub energy: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
    /// Limits on `|p|` for the free photon accompanying a bound state;
    /// `[0, pi]` for two free photons.
    pub p_lo: f64,
    pub p_hi: f64,
}

impl EnergyShellDomain {
    /// Shell for two free photons of total energy `energy`.
    pub fn free(params: &ModelParams, energy: f64) -> Result<Self> {
        let e = params.band_edge();
        if !(energy.abs() <= 2.0 * e) {
            return Err(Error::OutOfBand {
                omega: energy,
                lo: -2.0 * e,
                hi: 2.0 * e,
            });
        }
        Ok(Self {
            energy,
            delta_lo: (-e + energy / 2.0).max(-e - energy / 2.0),
            delta_hi: (e - energy / 2.0).min(e + energy / 2.0),
            p_lo: 0.0,
            p_hi: PI,
        })
    }

    /// Shell reached from channel 1 with free photon energy `omega_p` and
    /// bound energy `omega_b`; `p_lo, p_hi` are the admissible `|p|` for
    /// that bound state.
    pub fn with_bound(params: &ModelParams, omega_b: f64, omega_p: f64) -> Result<Self> {
        let (wlo, whi) = channel_one_photon_range(params, omega_b)?;
        let mut d = Self::free(params, omega_p + omega_b)?;
        d.p_lo = band_momentum(params, wlo);
        d.p_hi = band_momentum(params, whi);
        Ok(d)
    }

    /// `(omega1, omega2) = (E/2 + Delta, E/2 - Delta)`, checked to lie in the band.
    pub fn energies(&self, params: &ModelParams, delta: f64) -> Result<(f64, f64)> {
        let w1 = 0.5 * self.energy + delta;
        let w2 = 0.5 * self.energy - delta;
        let e = params.band_edge() * (1.0 + SHELL_SLACK);
        for w in [w1, w2] {
            if w.abs() > e {
                return Err(Error::OutOfBand {
                    omega: w,
                    lo: -params.band_edge(),
                    hi: params.band_edge(),
                });
            }
        }
        Ok((w1, w2))
    }

    /// Sub-interval of `[delta_lo, delta_hi]` where both photon energies lie
    /// in `[wmin, wmax]`; `None` when empty.
    pub fn restricted(&self, wmin: f64, wmax: f64) -> Option<(f64, f64)> {
        let h = 0.5 * self.energy;
        let lo = self.delta_lo.max(wmin - h).max(h - wmax);
        let hi = self.delta_hi.min(wmax - h).min(h - wmin);
        (lo < hi).then_some((lo, hi))
    }
}

/// Free-photon energies compatible with a bound state of energy `omega_b`:
/// `[max(-2J, -4J - omega_b), min(2J, 4J - omega_b)]`.
pub fn channel_one_photon_range(params: &ModelParams, omega_b: f64) -> Result<(f64, f64)> {
    let e = params.band_edge();
    let lo = (-e).max(-2.0 * e - omega_b);
    let hi = e.min(2.0 * e - omega_b);
    if lo > hi {
        return Err(Error::OutOfBand {
            omega: omega_b,
            lo: -3.0 * e,
            hi: 3.0 * e,
        });
    }
    Ok((lo, hi))
}

/// Gauss–Legendre nodes for `[a, b]` after `x = (a+b)/2 - (b-a)/2 cos(phi)`,
/// which removes inverse square-root endpoint singularities.
fn cosine_nodes(gl: &GaussLegendre, a: f64, b: f64) -> Vec<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    gl.mapped(0.0, PI)
        .map(|(phi, w)| (c - h * phi.cos(), w * h * phi.sin()))
        .collect()
}

/// Node counts for the shell integrals and the tolerance on the packet norm
/// reconstructed on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellGrid {
    pub energy_nodes: usize,
    pub delta_nodes: usize,
    pub momentum_nodes: usize,
    pub tolerance: f64,
}

impl Default for ShellGrid {
    fn default() -> Self {
        Self {
            energy_nodes: 64,
            delta_nodes: 64,
            momentum_nodes: 64,
            tolerance: 1e-3,
        }
    }
}

impl ShellGrid {
    /// `∫ dE ∫ dDelta sum_{s1,s2} |f|^2 / (sqrt sqrt)`, which is 1 when the
    /// grid resolves the packet.
    pub fn packet_norm(&self, params: &ModelParams, packet: &TwoPhotonPacket) -> Result<f64> {
        let (emin, emax) = packet.total_energy_support(params);
        let (wmin, wmax) = packet.photon_energy_support(params);
        let gl_e = GaussLegendre::new(self.energy_nodes);
        let gl_d = GaussLegendre::new(self.delta_nodes);
        let mut total = 0.0;
        for (energy, we) in gl_e.mapped(emin, emax) {
            let shell = EnergyShellDomain::free(params, energy)?;
            let Some((lo, hi)) = shell.restricted(wmin, wmax) else {
                continue;
            };
            for (delta, wd) in cosine_nodes(&gl_d, lo, hi) {
                let (w1, w2) = shell.energies(params, delta)?;
                let jac = params.band_jacobian(w1) * params.band_jacobian(w2);
                if jac > 0.0 {
                    total += we * wd * packet.sign_sum_sqr(params, w1, w2) / jac;
                }
            }
        }
        Ok(total)
    }

    /// Fails with [`Error::GridTooCoarse`] when the packet norm is not
    /// reproduced to `tolerance`.
    pub fn check(&self, params: &ModelParams, packet: &TwoPhotonPacket) -> Result<()> {
        let norm = self.packet_norm(params, packet)?;
        if (norm - 1.0).abs() > self.tolerance {
            return Err(Error::GridTooCoarse {
                reason: format!(
                    "packet norm on the {}x{} shell grid is {norm:.6}",
                    self.energy_nodes, self.delta_nodes
                ),
            });
        }
        Ok(())
    }
}

/// Free-to-bound amplitude without the energy delta and the `-2 pi i`:
/// `g^3 sqrt(p_b) [U(z;p,k1)/H(z;k1) + U(z;p,k2)/H(z;k2)]` at
/// `z = omega_p + omega_b + i eta`.
pub fn free_to_bound_amplitude(
    params: &ModelParams,
    p: f64,
    branch: Branch,
    k1: f64,
    k2: f64,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<C64> {
    require_zero_omega(params)?;
    let bound = BoundState::new(params, branch)?;
    let wp = params.dispersion(p);
    let kernel = VertexKernel::new(params, qc.on_shell(wp + bound.omega_b), qc)?;
    free_to_bound_with(&kernel, &bound, order, wp, params.dispersion(k1), params.dispersion(k2))
}

fn free_to_bound_with(
    kernel: &VertexKernel,
    bound: &BoundState,
    order: VertexOrder,
    wp: f64,
    w1: f64,
    w2: f64,
) -> Result<C64> {
    let params = kernel.params();
    let pref = params.g().powi(3) * bound.p_b.sqrt();
    if pref == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let u1 = kernel.u_partial(order.0, wp, w1)?.value();
    let u2 = kernel.u_partial(order.0, wp, w2)?.value();
    Ok(pref * (u1 / kernel.h(w1) + u2 / kernel.h(w2)))
}

/// Channel-1 out-state amplitude sampled over `|p|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeToBoundOutState {
    pub branch: Branch,
    pub omega_b: f64,
    /// Gauss–Legendre nodes in `|p|`; the amplitude is even in `p`.
    pub momenta: Vec<f64>,
    pub weights: Vec<f64>,
    pub amplitudes: Vec<C64>,
    /// `<out|out> = 2 ∫_0^pi |A(p)|^2 dp`.
    pub trap_probability: f64,
}

/// Bound-state out-state of a two-photon packet,
/// `A(p) = (1/sqrt 2) ∫ dDelta (-2 pi i) T / (sqrt sqrt) sum_{s1,s2} f`.
pub fn free_to_bound_out_state(
    params: &ModelParams,
    packet: &TwoPhotonPacket,
    branch: Branch,
    order: VertexOrder,
    qc: &QuadratureConfig,
    grid: &ShellGrid,
) -> Result<FreeToBoundOutState> {
    require_zero_omega(params)?;
    qc.validate()?;
    grid.check(params, packet)?;
    let bound = BoundState::new(params, branch)?;
    let (wlo, whi) = channel_one_photon_range(params, bound.omega_b)?;
    let (emin, emax) = packet.total_energy_support(params);
    let (wmin, wmax) = packet.photon_energy_support(params);
    let lo = wlo.max(emin - bound.omega_b);
    let hi = whi.min(emax - bound.omega_b);
    let empty = FreeToBoundOutState {
        branch,
        omega_b: bound.omega_b,
        momenta: Vec::new(),
        weights: Vec::new(),
        amplitudes: Vec::new(),
        trap_probability: 0.0,
    };
    if lo >= hi || params.g_prime() == 0.0 {
        return Ok(empty);
    }
    let gl_p = GaussLegendre::new(grid.momentum_nodes);
    let gl_d = GaussLegendre::new(grid.delta_nodes);
    let nodes: Vec<(f64, f64)> = gl_p
        .mapped(band_momentum(params, lo), band_momentum(params, hi))
        .collect();
    let amplitudes = nodes
        .par_iter()
        .map(|&(p, _)| {
            let wp = params.dispersion(p);
            let shell = EnergyShellDomain::with_bound(params, bound.omega_b, wp)?;
            let Some((dlo, dhi)) = shell.restricted(wmin, wmax) else {
                return Ok(C64::new(0.0, 0.0));
            };
            let kernel = VertexKernel::new(params, qc.on_shell(shell.energy), qc)?;
            let mut acc = C64::new(0.0, 0.0);
            for (delta, wd) in cosine_nodes(&gl_d, dlo, dhi) {
                let (w1, w2) = shell.energies(params, delta)?;
                let jac = params.band_jacobian(w1) * params.band_jacobian(w2);
                let f = packet.sign_sum(params, w1, w2);
                if jac == 0.0 || f == C64::new(0.0, 0.0) {
                    continue;
                }
                let t = free_to_bound_with(&kernel, &bound, order, wp, w1, w2)?;
                acc += wd * t * f / jac;
            }
            Ok(-2.0 * PI * I * acc / 2f64.sqrt())
        })
        .collect::<Result<Vec<C64>>>()?;
    let trap_probability = 2.0
        * nodes
            .iter()
            .zip(&amplitudes)
            .map(|((_, w), a)| w * a.norm_sqr())
            .sum::<f64>();
    Ok(FreeToBoundOutState {
        momenta: nodes.iter().map(|n| n.0).collect(),
        weights: nodes.iter().map(|n| n.1).collect(),
        amplitudes,
        trap_probability,
        ..empty
    })
}

/// Free-to-free connected part
/// `B = -2 pi i g^4 sum_{m,n} U'(E; p_m, k_n) / (H(E;p_m) H(E;k_n))`, where
/// `U'` carries the bare vertex as the real `1 / (E - omega_pm - omega_kn)`
/// and higher vertices at `E + i eta`.
pub fn free_to_free_b(
    params: &ModelParams,
    p1: f64,
    p2: f64,
    k1: f64,
    k2: f64,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<C64> {
    let wp = [params.dispersion(p1), params.dispersion(p2)];
    let wk = [params.dispersion(k1), params.dispersion(k2)];
    let energy = wp[0] + wp[1];
    let mismatch = (energy - wk[0] - wk[1]).abs();
    if mismatch > 1e-9 {
        return Err(Error::OffShell { mismatch });
    }
    let g4 = params.g2() * params.g2();
    if g4 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let kernel = VertexKernel::new(params, qc.on_shell(energy), qc)?;
    let mut acc = C64::new(0.0, 0.0);
    for &a in &wp {
        for &b in &wk {
            let gap = energy - a - b;
            if gap == 0.0 {
                return Err(Error::Pole {
                    z: energy,
                    omega_b: a + b,
                });
            }
            let mut u = C64::new(1.0 / gap, 0.0);
            if order.0 > 0 {
                let sums = kernel.u_partial(order.0, a, b)?;
                u += sums.value() - sums.terms[0];
            }
            acc += u / (kernel.h(a) * kernel.h(b));
        }
    }
    Ok(-2.0 * PI * I * g4 * acc)
}

/// Two-photon out-state of channel 0 for a symmetric input packet.
#[derive(Debug, Clone)]
pub struct FreeToFreeEvaluator {
    params: ModelParams,
    packet: TwoPhotonPacket,
    order: VertexOrder,
    qc: QuadratureConfig,
    energy_support: (f64, f64),
    photon_support: (f64, f64),
}

impl FreeToFreeEvaluator {
    pub fn new(
        params: &ModelParams,
        packet: &TwoPhotonPacket,
        order: VertexOrder,
        qc: &QuadratureConfig,
    ) -> Result<Self> {
        qc.validate()?;
        Ok(Self {
            params: *params,
            packet: *packet,
            order,
            qc: *qc,
            energy_support: packet.total_energy_support(params),
            photon_support: packet.photon_energy_support(params),
        })
    }

    /// `F(p1,p2)` such that `|out> = (1/sqrt 2) ∫∫ F |p1 p2>`, so that
    /// `<out|out> = ∫∫ |F|^2`.
    pub fn amplitude(&self, p1: f64, p2: f64) -> Result<C64> {
        let f = |a: f64, b: f64| self.packet.amplitude(a, b);
        let (r1, t1) = one_photon_rt_or_limit(&self.params, p1);
        let (r2, t2) = one_photon_rt_or_limit(&self.params, p2);
        let single = f(p1, p2) * t1 * t2 + f(-p1, -p2) * r1 * r2 + f(p1, -p2) * t1 * r2 + f(-p1, p2) * r1 * t2;
        Ok(single + self.connected(p1, p2)?)
    }

    /// The `(1/2) ∫ dDelta B / (sqrt sqrt) sum f` term alone.
    pub fn connected(&self, p1: f64, p2: f64) -> Result<C64> {
        let params = &self.params;
        let g4 = params.g2() * params.g2();
        let wp = [params.dispersion(p1), params.dispersion(p2)];
        let energy = wp[0] + wp[1];
        let zero = C64::new(0.0, 0.0);
        if g4 == 0.0 || energy < self.energy_support.0 || energy > self.energy_support.1 {
            return Ok(zero);
        }
        let shell = EnergyShellDomain::free(params, energy)?;
        let Some((lo, hi)) = shell.restricted(self.photon_support.0, self.photon_support.1) else {
            return Ok(zero);
        };
        let kernel = VertexKernel::new(params, self.qc.on_shell(energy), &self.qc)?;
        let hp = [kernel.h(wp[0]), kernel.h(wp[1])];
        let pref = -2.0 * PI * I * g4;

        // packet weight on the shell, including both Jacobians
        let weight = |delta: f64| -> C64 {
            let (w1, w2) = (0.5 * energy + delta, 0.5 * energy - delta);
            let jac = params.band_jacobian(w1) * params.band_jacobian(w2);
            if jac == 0.0 {
                return zero;
            }
            self.packet.sign_sum(params, w1, w2) / jac
        };
        // c_{mn} = pref / (H(p_m) H(k_n))
        let coeff = |m: usize, w_k: f64| pref / (hp[m] * kernel.h(w_k));

        // bare vertex: term (m,1) is -1/(Delta - d0) with d0 = omega_{pm'} - E/2,
        // term (m,2) is +1/(Delta - d0) with d0 = E/2 - omega_{pm'}
        let dp = 0.5 * (wp[0] - wp[1]);
        let numerator_at = |pole: f64| {
            move |delta: f64| {
                let (w1, w2) = (0.5 * energy + delta, 0.5 * energy - delta);
                let w = weight(delta);
                // pole at +dp pairs (m=2, n=1) with (m=1, n=2); at -dp (m=1, n=1) with (m=2, n=2)
                if pole > 0.0 {
                    w * (coeff(0, w2) - coeff(1, w1))
                } else {
                    w * (coeff(1, w2) - coeff(0, w1))
                }
            }
        };
        let gk = self.qc.adaptive();
        let mut total = zero;
        for (pole, x0) in [(1.0, dp), (-1.0, -dp)] {
            let num = numerator_at(pole);
            let est = if self.qc.principal_value {
                principal_value(&gk, num, lo, hi, x0, &[])?
            } else {
                principal_value_eta(&gk, num, lo, hi, x0, self.qc.eta, &[])?
            };
            total += est.value;
        }

        if self.order.0 > 0 {
            let failure = std::cell::RefCell::new(None);
            let reg = gk.integrate(
                |delta| {
                    let (w1, w2) = (0.5 * energy + delta, 0.5 * energy - delta);
                    let mut acc = zero;
                    for m in 0..2 {
                        for &wk in &[w1, w2] {
                            match kernel.u_partial(self.order.0, wp[m], wk) {
                                Ok(s) => acc += coeff(m, wk) * (s.value() - s.terms[0]),
                                Err(e) => {
                                    failure.borrow_mut().get_or_insert(e);
                                }
                            }
                        }
                    }
                    acc * weight(delta)
                },
                lo,
                hi,
                &[dp, -dp],
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            total += reg.value;
        }
        Ok(0.5 * total)
    }

    /// `F` on the tensor grid `momenta x momenta`, row-major in `p1`.
    pub fn on_grid(&self, momenta: &[f64]) -> Result<FreeToFreeOutState> {
        let n = momenta.len();
        let amplitudes = (0..n * n)
            .into_par_iter()
            .map(|idx| self.amplitude(momenta[idx / n], momenta[idx % n]))
            .collect::<Result<Vec<_>>>()?;
        Ok(FreeToFreeOutState {
            momenta: momenta.to_vec(),
            amplitudes,
        })
    }

    /// `<out|out> = ∫∫ |F|^2`, integrated on energy shells over all four
    /// momentum quadrants.
    pub fn norm(&self, grid: &ShellGrid) -> Result<f64> {
        let params = &self.params;
        let (emin, emax) = self.energy_support;
        let (wmin, wmax) = self.photon_support;
        let gl_e = GaussLegendre::new(grid.energy_nodes);
        let gl_d = GaussLegendre::new(grid.delta_nodes);
        let energies: Vec<(f64, f64)> = gl_e.mapped(emin, emax).collect();
        let parts = energies
            .par_iter()
            .map(|&(energy, we)| {
                let shell = EnergyShellDomain::free(params, energy)?;
                // panels split where the packet support starts and ends
                let mut cuts = vec![shell.delta_lo];
                if let Some((lo, hi)) = shell.restricted(wmin, wmax) {
                    cuts.extend([lo, hi]);
                }
                cuts.push(shell.delta_hi);
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
                let mut acc = 0.0;
                for pair in cuts.windows(2) {
                    for (delta, wd) in cosine_nodes(&gl_d, pair[0], pair[1]) {
                        let (w1, w2) = shell.energies(params, delta)?;
                        let jac = params.band_jacobian(w1) * params.band_jacobian(w2);
                        if jac == 0.0 {
                            continue;
                        }
                        let (k1, k2) = (band_momentum(params, w1), band_momentum(params, w2));
                        let mut quad = 0.0;
                        for (a, b) in [(k1, k2), (-k1, k2), (k1, -k2), (-k1, -k2)] {
                            quad += self.amplitude(a, b)?.norm_sqr();
                        }
                        acc += wd * quad / jac;
                    }
                }
                Ok(we * acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    }
}

/// `F(p1, p2)` sampled on a square momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeToFreeOutState {
    pub momenta: Vec<f64>,
    /// Row-major: `amplitudes[i * n + j] = F(momenta[i], momenta[j])`.
    pub amplitudes: Vec<C64>,
}

impl FreeToFreeOutState {
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Convenience wrapper for [`FreeToFreeEvaluator::on_grid`].
pub fn free_to_free_out_state(
    params: &ModelParams,
    packet: &TwoPhotonPacket,
    order: VertexOrder,
    qc: &QuadratureConfig,
    momenta: &[f64],
) -> Result<FreeToFreeOutState> {
    FreeToFreeEvaluator::new(params, packet, order, qc)?.on_grid(momenta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(gp: f64) -> ModelParams {
        ModelParams::with_coupling(gp).unwrap()
    }

    #[test]
    fn one_photon_example() {
        let rt = one_photon_rt(&params(1.0), PI / 3.0).unwrap();
        assert_abs_diff_eq!(rt.r.re, -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(rt.r.im, 0.433_012_701_892_219_3, epsilon = 1e-12);
        assert_abs_diff_eq!(rt.reflectance(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn on_resonance_reflection_is_total() {
        // cos(pi/2) is 6e-17 in floating point, not zero
        let rt = one_photon_rt(&params(0.7), PI / 2.0).unwrap();
        assert!((rt.r + 1.0).norm() < 1e-15);
        assert!(rt.t.norm() < 1e-15);
        let p = ModelParams::new(1.0, 1.0, 0.7).unwrap();
        let k = (-0.5f64).acos();
        let rt = one_photon_rt(&p, k).unwrap();
        assert_abs_diff_eq!(rt.r.re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn decoupled_emitter_is_transparent() {
        let rt = one_photon_rt(&params(0.0), 1.1).unwrap();
        assert_eq!(rt.r, C64::new(0.0, 0.0));
        assert_eq!(rt.t, C64::new(1.0, 0.0));
    }

    #[test]
    fn band_edges_rejected() {
        for k in [0.0, PI, -PI] {
            assert!(matches!(one_photon_rt(&params(1.0), k), Err(Error::BandEdge { .. })));
        }
    }

    #[test]
    fn bound_to_bound_decoupled_limit() {
        let qc = QuadratureConfig::default();
        let (r, t) = bound_to_bound_rt(&params(1e-4), 1.0, Branch::Minus, VertexOrder(1), &qc).unwrap();
        assert!(r.norm() < 1e-6);
        assert!((t - 1.0).norm() < 1e-6);
    }

    /// With `U = V0` the on-shell kernel is real, so `r` is imaginary and
    /// `|r|^2 + |1 + r|^2 = 1 + 2|r|^2`: truncation alone exceeds unitarity.
    #[test]
    fn bound_to_bound_order_zero_closed_form() {
        let p = params(0.5);
        let qc = QuadratureConfig::default();
        let b = BoundState::new(&p, Branch::Minus).unwrap();
        for &k in &[0.6, 1.2, PI / 2.0, 2.2] {
            let (r, t) = bound_to_bound_rt(&p, k, Branch::Minus, VertexOrder(0), &qc).unwrap();
            let v0 = 1.0 / C64::new(b.omega_b - p.dispersion(k), qc.eta);
            let expect = -2.0 * PI * I * b.p_b * p.g2() * v0 / (2.0 * k.sin());
            assert!((r - expect).norm() < 1e-12 * expect.norm(), "k={k}: {r}");
            assert!(r.re.abs() < 1e-5 * r.im.abs());
            let excess = r.norm_sqr() + t.norm_sqr() - 1.0;
            assert!((excess - 2.0 * r.norm_sqr()).abs() <= 2.0 * r.re.abs() + 1e-15);
        }
    }

    #[test]
    fn bound_to_bound_order_one_is_nearly_unitary() {
        let qc = QuadratureConfig::default();
        for &k in &[0.6, 1.2, PI / 2.0, 2.2] {
            let (r, t) = bound_to_bound_rt(&params(0.5), k, Branch::Minus, VertexOrder(1), &qc).unwrap();
            let loss = 1.0 - r.norm_sqr() - t.norm_sqr();
            assert!(loss.abs() < 5e-2, "k={k}: {loss}");
        }
    }

    #[test]
    fn bound_to_bound_needs_zero_omega() {
        let p = ModelParams::new(1.0, 0.2, 0.5).unwrap();
        let qc = QuadratureConfig::default();
        assert!(matches!(
            bound_to_bound_rt(&p, 1.0, Branch::Plus, VertexOrder(0), &qc),
            Err(Error::NonzeroOmega { .. })
        ));
    }

    #[test]
    fn packet_norm_and_peak() {
        let spec = WavepacketSpec::new(1.0, 12.0, -40.0).unwrap();
        let gl = GaussLegendre::new(64);
        let norm: f64 = gl
            .composite(-PI, PI, 32)
            .into_iter()
            .map(|(k, w)| w * spec.amplitude_k(k).norm_sqr())
            .sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
        let peak = spec.amplitude_k(1.0).norm();
        assert!(spec.amplitude_k(1.01).norm() < peak);
        assert!(spec.amplitude_k(0.99).norm() < peak);
    }

    #[test]
    fn inverse_transform_recovers_real_space_packet() {
        // f(x) = (2 pi)^{-1/2} ∫ dk f(k) exp(i k x); the integrand is periodic,
        // so the trapezoid rule is spectrally accurate
        let spec = WavepacketSpec::new(0.9, 12.0, -37.0).unwrap();
        let n = 4096;
        let h = 2.0 * PI / n as f64;
        for off in [0.0, 12.0, -12.0, 24.0, -24.0] {
            let x = spec.xc + off;
            let sum: C64 = (0..n)
                .map(|i| {
                    let k = -PI + h * i as f64;
                    spec.amplitude_k(k) * C64::from_polar(1.0, k * x)
                })
                .sum();
            let back = sum * h / (2.0 * PI).sqrt();
            assert!((back - spec.amplitude_x(x)).norm() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn truncated_packet_rejected() {
        let spec = WavepacketSpec::new(3.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            gaussian_packet_k(&spec, 0.0),
            Err(Error::PacketTruncation { .. })
        ));
        assert!(WavepacketSpec::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn energy_support_includes_band_edges() {
        let p = params(1.0);
        let spec = WavepacketSpec::new(0.2, 12.0, 0.0).unwrap();
        assert_eq!(spec.energy_support(&p).0, -2.0);
        let spec = WavepacketSpec::new(3.0, 12.0, 0.0).unwrap();
        assert_eq!(spec.energy_support(&p).1, 2.0);
        let spec = WavepacketSpec::new(PI / 2.0, 12.0, 0.0).unwrap();
        let (a, b) = spec.energy_support(&p);
        assert_abs_diff_eq!(a, -2.0 * (0.5f64).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 2.0 * (0.5f64).sin(), epsilon = 1e-12);
    }

    #[test]
    fn two_photon_norms() {
        let a = WavepacketSpec::new(1.0, 12.0, -40.0).unwrap();
        let b = WavepacketSpec::new(1.3, 10.0, -80.0).unwrap();
        let p = params(0.5);
        let grid = ShellGrid::default();
        let fine = ShellGrid {
            energy_nodes: 96,
            delta_nodes: 96,
            ..grid
        };
        let same = TwoPhotonPacket::identical(a).unwrap();
        assert_abs_diff_eq!(grid.packet_norm(&p, &same).unwrap(), 1.0, epsilon = 1e-6);
        let mixed = TwoPhotonPacket::symmetrized(a, b).unwrap();
        assert_abs_diff_eq!(fine.packet_norm(&p, &mixed).unwrap(), 1.0, epsilon = 1e-6);
        let coarse = ShellGrid {
            energy_nodes: 3,
            delta_nodes: 3,
            ..grid
        };
        assert!(matches!(
            coarse.check(&p, &TwoPhotonPacket::identical(a).unwrap()),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn shell_domain_limits() {
        let p = params(1.0);
        let d = EnergyShellDomain::free(&p, 1.0).unwrap();
        assert_abs_diff_eq!(d.delta_lo, -1.5);
        assert_abs_diff_eq!(d.delta_hi, 1.5);
        assert!(d.energies(&p, 1.6).is_err());
        let (w1, w2) = d.energies(&p, 1.5).unwrap();
        assert_abs_diff_eq!(w1, 2.0);
        assert_abs_diff_eq!(w2, -1.0);
        let b = BoundState::new(&p, Branch::Plus).unwrap();
        let (lo, hi) = channel_one_photon_range(&p, b.omega_b).unwrap();
        assert_eq!(lo, -2.0);
        assert_abs_diff_eq!(hi, 4.0 - b.omega_b);
    }

    #[test]
    fn free_to_bound_symmetry_and_decoupling() {
        let p = params(0.5);
        let qc = QuadratureConfig::default();
        let a = free_to_bound_amplitude(&p, 0.7, Branch::Minus, 1.1, 1.9, VertexOrder(1), &qc).unwrap();
        let b = free_to_bound_amplitude(&p, 0.7, Branch::Minus, 1.9, 1.1, VertexOrder(1), &qc).unwrap();
        assert!((a - b).norm() <= 1e-12 * a.norm());
        let z = free_to_bound_amplitude(&params(1e-6), 0.7, Branch::Minus, 1.1, 1.9, VertexOrder(1), &qc).unwrap();
        assert!(z.norm() < 1e-12);
    }

    #[test]
    fn free_to_free_b_symmetry_and_shell() {
        let p = ModelParams::new(1.0, 0.3, 0.5).unwrap();
        let qc = QuadratureConfig::default();
        let (p1, p2, k1) = (0.8, 1.7, 1.1);
        let e = p.dispersion(p1) + p.dispersion(p2);
        let k2 = p.wavevector_from_energy(e - p.dispersion(k1), 1.0).unwrap();
        let order = VertexOrder(0);
        let b = free_to_free_b(&p, p1, p2, k1, k2, order, &qc).unwrap();
        let bp = free_to_free_b(&p, p2, p1, k1, k2, order, &qc).unwrap();
        let bk = free_to_free_b(&p, p1, p2, k2, k1, order, &qc).unwrap();
        assert!((b - bp).norm() < 1e-12 * b.norm());
        assert!((b - bk).norm() < 1e-12 * b.norm());
        assert!(matches!(
            free_to_free_b(&p, p1, p2, k1, k2 + 0.01, order, &qc),
            Err(Error::OffShell { .. })
        ));
        assert_eq!(
            free_to_free_b(&params(0.0), p1, p2, k1, k2, order, &qc).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn free_to_free_decoupled_is_identity() {
        let spec = WavepacketSpec::new(2.0 * PI / 5.0, 12.0, -50.0).unwrap();
        let packet = TwoPhotonPacket::identical(spec).unwrap();
        let ev = FreeToFreeEvaluator::new(&params(0.0), &packet, VertexOrder(0), &QuadratureConfig::default()).unwrap();
        for (a, b) in [(1.2, 1.3), (-0.4, 1.25)] {
            assert_eq!(ev.amplitude(a, b).unwrap(), packet.amplitude(a, b));
        }
    }

    #[test]
    fn principal_value_methods_agree() {
        let spec = WavepacketSpec::new(2.0 * PI / 5.0, 12.0, -50.0).unwrap();
        let packet = TwoPhotonPacket::identical(spec).unwrap();
        let p = params(0.5);
        let qc = QuadratureConfig::default();
        let sym = FreeToFreeEvaluator::new(&p, &packet, VertexOrder(0), &qc).unwrap();
        let eta = FreeToFreeEvaluator::new(
            &p,
            &packet,
            VertexOrder(0),
            &QuadratureConfig {
                principal_value: false,
                ..qc
            },
        )
        .unwrap();
        for (a, b) in [(1.1, 1.4), (0.9, 1.66), (-1.3, 1.2)] {
            let x = sym.connected(a, b).unwrap();
            let y = eta.connected(a, b).unwrap();
            assert!(x.norm() > 0.0);
            assert!((x - y).norm() <= 0.01 * x.norm(), "({a},{b}): {x} vs {y}");
        }
    }
}
