//! Simulation driver: configuration, time stepping, sampling and completion.

use std::io::Write;
use std::path::Path;

use wqed_core::ModelParams;

use crate::error::{Result, SimError};
use crate::hamiltonian::{build_hamiltonian, Boundary, SparseHamiltonian};
use crate::lanczos::{LanczosPropagator, StepReport};
use crate::measure::{down_sector_norm, flux_observables, up_sector_probability, Region};
use crate::state::LatticeState;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Site count (odd).
    pub n: usize,
    /// Outer time step; sub-stepped automatically when the Lanczos estimate is too large.
    pub dt: f64,
    pub total_time: f64,
    pub krylov_dim: usize,
    pub boundary: Boundary,
    /// Position separating the `Left` and `Right` measurement regions.
    pub split: i64,
    /// Per-step Lanczos error bound.
    pub step_tolerance: f64,
    /// Residual flux (probability per unit time) below which scattering counts as complete.
    pub flux_tolerance: f64,
    /// Time the flux has to stay below tolerance.
    pub quiet_window: f64,
    /// Interval between recorded samples.
    pub sample_interval: f64,
}

impl SimConfig {
    pub fn new(n: usize, total_time: f64) -> Self {
        Self {
            n,
            dt: 0.05,
            total_time,
            krylov_dim: 30,
            boundary: Boundary::HardWall,
            split: 0,
            step_tolerance: 1e-10,
            flux_tolerance: 1e-8,
            quiet_window: 10.0,
            sample_interval: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(SimError::Config { name, value, reason });
        if self.n < 3 || self.n % 2 == 0 {
            return bad("N", self.n as f64, "site count must be odd and at least 3");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt, "time step must be positive");
        }
        if !(self.total_time >= 0.0 && self.total_time.is_finite()) {
            return bad("totalTime", self.total_time, "total time must be non-negative");
        }
        if !(2..=500).contains(&self.krylov_dim) {
            return bad(
                "krylovDim",
                self.krylov_dim as f64,
                "Krylov dimension must lie in 2..=500",
            );
        }
        if !(self.step_tolerance > 0.0) {
            return bad("stepTolerance", self.step_tolerance, "must be positive");
        }
        if !(self.flux_tolerance > 0.0) {
            return bad("fluxTolerance", self.flux_tolerance, "must be positive");
        }
        if !(self.quiet_window > 0.0) {
            return bad("quietWindow", self.quiet_window, "must be positive");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sampleInterval", self.sample_interval, "must be positive");
        }
        if self.split.unsigned_abs() as usize > self.n / 2 {
            return bad("split", self.split as f64, "split point lies outside the chain");
        }
        Ok(())
    }

    /// Wall echoes travel at most `2J`; they must not reach the split point
    /// again within the total time.
    pub fn check_wall_echo(&self, params: &ModelParams) -> Result<()> {
        if self.boundary == Boundary::Periodic {
            return Ok(());
        }
        let half = (self.n / 2) as f64 - self.split.unsigned_abs() as f64;
        let reach = params.j().abs() * self.total_time;
        if reach > half {
            let need = (reach + self.split.unsigned_abs() as f64).ceil() as usize;
            return Err(SimError::Clearance {
                what: "wall echo within the total time",
                n: self.n,
                required: 2 * need + 1,
            });
        }
        Ok(())
    }

    /// `dt * ||H||` has to stay within reach of the Krylov dimension.
    pub fn check_step(&self, spectral_bound: f64) -> Result<()> {
        if self.dt * spectral_bound > self.krylov_dim as f64 {
            return Err(SimError::Config {
                name: "dt",
                value: self.dt,
                reason: "dt times the spectral radius exceeds the Krylov dimension",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
    pub up_left: f64,
    pub up_right: f64,
    pub up_all: f64,
    pub down: f64,
    /// Largest rate of change of the region probabilities since the previous sample.
    pub flux: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub const HEADER: &'static str = "time,norm,energy,up_left,up_right,up_all,down,flux";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.time, s.norm, s.energy, s.up_left, s.up_right, s.up_all, s.down, s.flux
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Largest `|norm - 1|` along the run.
    pub fn norm_drift(&self) -> f64 {
        self.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest deviation of `<H>` from its initial value.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples.first().map_or(0.0, |s| s.energy);
        self.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub complete: bool,
    pub time: f64,
    /// Flux at the last sample.
    pub flux: f64,
}

impl Completion {
    pub fn require(&self) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(SimError::Incomplete {
                t: self.time,
                flux: self.flux,
            })
        }
    }
}

pub struct Simulation {
    config: SimConfig,
    h: SparseHamiltonian,
    state: LatticeState,
    propagator: LanczosPropagator,
    trajectory: Trajectory,
    last_observables: Vec<f64>,
    max_step_error: f64,
}

impl Simulation {
    pub fn new(params: &ModelParams, config: SimConfig, initial: LatticeState) -> Result<Self> {
        config.validate()?;
        config.check_wall_echo(params)?;
        if initial.basis().sites() != config.n {
            return Err(SimError::Config {
                name: "N",
                value: config.n as f64,
                reason: "initial state lives on a lattice of different size",
            });
        }
        let norm = initial.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(SimError::Config {
                name: "initialNorm",
                value: norm,
                reason: "initial state must be normalised",
            });
        }
        let h = build_hamiltonian(params, initial.basis(), config.boundary);
        config.check_step(h.spectral_bound())?;
        let propagator = LanczosPropagator::new(config.krylov_dim, config.step_tolerance)?;
        let mut sim = Self {
            last_observables: flux_observables(&initial, config.split),
            config,
            h,
            state: initial,
            propagator,
            trajectory: Trajectory::default(),
            max_step_error: 0.0,
        };
        sim.record(0.0);
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &LatticeState {
        &self.state
    }

    pub fn into_state(self) -> LatticeState {
        self.state
    }

    pub fn hamiltonian(&self) -> &SparseHamiltonian {
        &self.h
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn max_step_error(&self) -> f64 {
        self.max_step_error
    }

    fn record(&mut self, flux: f64) {
        let st = &self.state;
        let split = self.config.split;
        self.trajectory.samples.push(Sample {
            time: st.time(),
            norm: st.norm_sqr(),
            energy: self.h.expectation(st.amplitudes()),
            up_left: up_sector_probability(st, Region::Left, split),
            up_right: up_sector_probability(st, Region::Right, split),
            up_all: up_sector_probability(st, Region::All, split),
            down: down_sector_norm(st),
            flux,
        });
    }

    /// Propagates by `dt` exactly (with internal sub-steps if needed).
    pub fn step_by(&mut self, dt: f64) -> Result<StepReport> {
        let t = self.state.time();
        let rep = self.propagator.step(&self.h, self.state.amplitudes_mut(), dt)?;
        self.state.set_time(t + dt);
        self.max_step_error = self.max_step_error.max(rep.error_estimate);
        Ok(rep)
    }

    /// Propagates to time `t` in steps of at most `dt`, without sampling.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while self.state.time() < t - 1e-12 {
            let h = self.config.dt.min(t - self.state.time());
            self.step_by(h)?;
        }
        Ok(())
    }

    /// Advances one sample interval and records a sample; returns the flux.
    pub fn advance_sample(&mut self) -> Result<f64> {
        let t0 = self.state.time();
        let target = (t0 + self.config.sample_interval).min(self.config.total_time);
        self.advance_to(target)?;
        let obs = flux_observables(&self.state, self.config.split);
        let dt = (self.state.time() - t0).max(f64::MIN_POSITIVE);
        let flux = obs
            .iter()
            .zip(&self.last_observables)
            .map(|(a, b)| (a - b).abs() / dt)
            .fold(0.0, f64::max);
        self.last_observables = obs;
        self.record(flux);
        Ok(flux)
    }

    /// Runs to the configured total time, recording samples.
    pub fn run(&mut self) -> Result<&Trajectory> {
        while self.state.time() < self.config.total_time - 1e-12 {
            self.advance_sample()?;
        }
        Ok(&self.trajectory)
    }

    /// Runs until the flux has stayed below tolerance for the quiet window,
    /// or until the total time is exhausted. The quiet window only opens once
    /// the flux has exceeded the tolerance, so the lull before an incoming
    /// packet reaches the emitter does not count as completion.
    pub fn run_to_completion(&mut self) -> Result<Completion> {
        let mut quiet_since: Option<f64> = None;
        let mut armed = false;
        let mut flux = f64::INFINITY;
        while self.state.time() < self.config.total_time - 1e-12 {
            flux = self.advance_sample()?;
            let t = self.state.time();
            if !armed {
                armed = flux >= self.config.flux_tolerance;
                continue;
            }
            if flux < self.config.flux_tolerance {
                let since = *quiet_since.get_or_insert(t - self.config.sample_interval);
                if t - since >= self.config.quiet_window - 1e-12 {
                    return Ok(Completion {
                        complete: true,
                        time: t,
                        flux,
                    });
                }
            } else {
                quiet_since = None;
            }
        }
        Ok(Completion {
            complete: false,
            time: self.state.time(),
            flux,
        })
    }
}

/// Evolves `initial` over the configured total time and returns the sampled trajectory
/// together with the final state.
pub fn evolve(params: &ModelParams, initial: LatticeState, config: SimConfig) -> Result<(Trajectory, LatticeState)> {
    let mut sim = Simulation::new(params, config, initial)?;
    sim.run()?;
    let traj = sim.trajectory.clone();
    Ok((traj, sim.into_state()))
}
