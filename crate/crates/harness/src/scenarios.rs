//! Paired analytic and lattice computations for the scattering channels.
//!
//! Lattice runs place packets at `x_c = -PACKET_OFFSET * s` and run until the
//! residual flux settles or the wall-echo time is used up.

use num_complex::Complex64 as C64;
use wqed_core::quadrature::GaussLegendre;
use wqed_core::resolvent::{BoundState, Branch};
use wqed_core::smatrix::{
    bound_to_bound_packet, free_to_bound_out_state, one_photon_rt, BoundToBoundRates, ShellGrid, TwoPhotonPacket,
    WavepacketSpec,
};
use wqed_core::vertex::{QuadratureConfig, VertexOrder};
use wqed_core::ModelParams;
use wqed_krylovsim::measure::{measure_up_sector, photon_probability, trapping_rate, ChannelBudget, Region};
use wqed_krylovsim::sim::Completion;
use wqed_krylovsim::state::{prepare_bound_product, prepare_one_photon, prepare_two_photon};
use wqed_krylovsim::{Boundary, LatticeBasis, LatticeState, Sector, SimConfig, Simulation};

use crate::error::{HarnessError, Result};

/// Packet centre in units of its width, measured from the emitter.
pub const PACKET_OFFSET: f64 = 5.0;

/// Knobs shared by every lattice run of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSettings {
    pub n: usize,
    pub dt: f64,
    pub krylov_dim: usize,
    pub step_tolerance: f64,
    pub flux_tolerance: f64,
    pub quiet_window: f64,
    /// Defaults to the longest run the wall-echo check allows.
    pub total_time: Option<f64>,
}

impl LatticeSettings {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            dt: 0.05,
            krylov_dim: 30,
            step_tolerance: 1e-10,
            flux_tolerance: 1e-8,
            quiet_window: 10.0,
            total_time: None,
        }
    }

    pub fn sim_config(&self, params: &ModelParams) -> SimConfig {
        let mut c = SimConfig::new(self.n, 0.0);
        c.dt = self.dt;
        c.krylov_dim = self.krylov_dim;
        c.step_tolerance = self.step_tolerance;
        c.flux_tolerance = self.flux_tolerance;
        c.quiet_window = self.quiet_window;
        c.boundary = Boundary::HardWall;
        c.sample_interval = self.dt.max(1.0);
        c.total_time = self
            .total_time
            .unwrap_or_else(|| ((self.n / 2) as f64 / params.j().abs()).floor());
        c
    }
}

pub fn packet_for(k0: f64, s: f64) -> Result<WavepacketSpec> {
    packet_at(k0, s, PACKET_OFFSET)
}

/// Packet centred `offset` widths to the left of the emitter.
pub fn packet_at(k0: f64, s: f64, offset: f64) -> Result<WavepacketSpec> {
    Ok(WavepacketSpec::new(k0, s, -offset * s)?)
}

/// What a lattice run leaves behind besides its observable.
#[derive(Debug, Clone)]
pub struct RunInfo {
    pub completion: Completion,
    pub norm_drift: f64,
    pub max_step_error: f64,
    /// `|free + trapped - 1|` at the end of a two-excitation run.
    pub budget_error: f64,
}

fn run(
    params: &ModelParams,
    settings: &LatticeSettings,
    init: LatticeState,
    p_b: f64,
) -> Result<(LatticeState, RunInfo)> {
    let mut sim = Simulation::new(params, settings.sim_config(params), init)?;
    let completion = sim.run_to_completion()?;
    let norm_drift = sim.trajectory().norm_drift();
    let max_step_error = sim.max_step_error();
    let state = sim.into_state();
    let budget_error = match state.basis().sector() {
        Sector::Two => (ChannelBudget::new(&state, p_b).total() - 1.0).abs(),
        Sector::One => (state.norm_sqr() - 1.0).abs(),
    };
    Ok((
        state,
        RunInfo {
            completion,
            norm_drift,
            max_step_error,
            budget_error,
        },
    ))
}

/// `∫ |f(k)|^2 |r_k|^2 dk`.
pub fn one_photon_reflectance(params: &ModelParams, spec: &WavepacketSpec) -> Result<f64> {
    let (lo, hi) = spec.momentum_support();
    let mut acc = 0.0;
    for (k, w) in GaussLegendre::new(64).composite(lo, hi, 8) {
        acc += w
            * spec.amplitude_k(k).norm_sqr()
            * one_photon_rt(params, wqed_core::Momentum::wrapped(k).value())?.reflectance();
    }
    Ok(acc)
}

/// Lattice one-photon reflection probability.
pub fn simulate_one_photon(
    params: &ModelParams,
    spec: &WavepacketSpec,
    settings: &LatticeSettings,
) -> Result<(f64, RunInfo)> {
    let basis = LatticeBasis::new(settings.n, Sector::One)?;
    let (state, info) = run(params, settings, prepare_one_photon(&basis, spec)?, 1.0)?;
    Ok((photon_probability(&state, Region::Left, 0), info))
}

#[derive(Debug, Clone)]
pub struct BoundToBoundSim {
    pub reflection: f64,
    pub transmission: f64,
    pub info: RunInfo,
}

impl BoundToBoundSim {
    pub fn loss(&self) -> f64 {
        1.0 - self.reflection - self.transmission
    }
}

pub fn analytic_bound_to_bound(
    params: &ModelParams,
    spec: &WavepacketSpec,
    branch: Branch,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<Vec<BoundToBoundRates>> {
    Ok(bound_to_bound_packet(params, spec, branch, order, qc, 96)?)
}

pub fn simulate_bound_to_bound(
    params: &ModelParams,
    spec: &WavepacketSpec,
    branch: Branch,
    settings: &LatticeSettings,
) -> Result<BoundToBoundSim> {
    let basis = LatticeBasis::new(settings.n, Sector::Two)?;
    let p_b = BoundState::new(params, branch)?.p_b;
    let (state, info) = run(
        params,
        settings,
        prepare_bound_product(&basis, params, spec, branch)?,
        p_b,
    )?;
    Ok(BoundToBoundSim {
        reflection: measure_up_sector(&state, Region::Left, 0, p_b),
        transmission: measure_up_sector(&state, Region::Right, 0, p_b),
        info,
    })
}

/// Total trapping `<out_-|out_-> + <out_+|out_+>` of two identical packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapping {
    pub minus: f64,
    pub plus: f64,
}

impl Trapping {
    pub fn total(&self) -> f64 {
        self.minus + self.plus
    }
}

pub fn analytic_free_to_bound(
    params: &ModelParams,
    packet: &TwoPhotonPacket,
    order: VertexOrder,
    qc: &QuadratureConfig,
    grid: &ShellGrid,
) -> Result<Trapping> {
    let minus = free_to_bound_out_state(params, packet, Branch::Minus, order, qc, grid)?.trap_probability;
    let plus = free_to_bound_out_state(params, packet, Branch::Plus, order, qc, grid)?.trap_probability;
    Ok(Trapping { minus, plus })
}

/// Lattice trapping rate; with `Omega = 0` both bound states share `p_b`.
pub fn simulate_free_to_bound(
    params: &ModelParams,
    spec: &WavepacketSpec,
    settings: &LatticeSettings,
) -> Result<(f64, LatticeState, RunInfo)> {
    if params.omega() != 0.0 {
        return Err(HarnessError::Config {
            key: "model.Omega".into(),
            message: "trapping is normalised by a single p_b, which needs Omega = 0".into(),
        });
    }
    let basis = LatticeBasis::new(settings.n, Sector::Two)?;
    let p_b = BoundState::new(params, Branch::Minus)?.p_b;
    let (state, info) = run(params, settings, prepare_two_photon(&basis, spec, spec)?, p_b)?;
    Ok((trapping_rate(&state, p_b), state, info))
}

/// Zero-mean normalised cross-correlation of two equally sized samples.
pub fn zncc(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Local maxima of a sampled curve (interior points strictly above both neighbours).
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

pub fn c64_abs2(v: &[C64]) -> Vec<f64> {
    v.iter().map(|a| a.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zncc_limits() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((zncc(&a, &a) - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|x| 10.0 - 2.0 * x).collect();
        assert!((zncc(&a, &b) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn maxima() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.5, 0.7, 0.2, 0.3]), vec![1, 3]);
    }
}
