//! Execution of a validated [`ExperimentConfig`].
//!
//! Everything is computed before the first byte is written, and files already
//! written are removed again if a later write fails, so an experiment leaves
//! either all of its artifacts or none.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wqed_core::emission::EmissionCurve;
use wqed_core::resolvent::{bound_state_energies, BoundState, Branch};
use wqed_core::smatrix::{one_photon_rt, FreeToFreeEvaluator, TwoPhotonPacket};
use wqed_core::ModelParams;
use wqed_krylovsim::snapshot::save_snapshot;
use wqed_krylovsim::state::{prepare_bound_product, prepare_excited_emitter, prepare_one_photon, prepare_two_photon};
use wqed_krylovsim::{LatticeBasis, LatticeState, Sector, Simulation, Trajectory};

use crate::config::{Channel, ExperimentConfig, Initial, Scan};
use crate::csv::{col, Table};
use crate::error::{Context, HarnessError, Result};
use crate::report::{ComparisonPoint, ComparisonReport, Provenance};
use crate::scenarios::{
    analytic_bound_to_bound, analytic_free_to_bound, one_photon_reflectance, simulate_bound_to_bound,
    simulate_free_to_bound, simulate_one_photon, LatticeSettings,
};

/// Files produced by an experiment, plus its report for `compare`.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub report: Option<ComparisonReport>,
}

enum Output {
    Table(String, Table),
    Report(String, ComparisonReport),
    Snapshot(String, LatticeState),
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Minus => "minus",
        Branch::Plus => "plus",
    }
}

fn provenance(cfg: &ExperimentConfig, analytic: bool, sim: Option<&LatticeSettings>) -> Provenance {
    let mut p = Provenance::default();
    if analytic {
        p.eta = Some(cfg.quadrature.eta);
        p.order = Some(cfg.order.0);
    }
    if let Some(s) = sim {
        p.dt = Some(s.dt);
        p.n = Some(s.n);
        p.krylov_dim = Some(s.krylov_dim);
    }
    let mut p = p
        .with("J", cfg.params.j())
        .with("Omega", cfg.params.omega())
        .with("g_prime", cfg.params.g_prime());
    if analytic {
        p = p
            .with("rel_tol", cfg.quadrature.rel_tol)
            .with("abs_tol", cfg.quadrature.abs_tol)
            .with("principal_value", cfg.quadrature.principal_value);
    }
    if let Some(s) = sim {
        p = p
            .with("step_tolerance", s.step_tolerance)
            .with("flux_tolerance", s.flux_tolerance)
            .with("quiet_window", s.quiet_window);
    }
    if let Some(first) = cfg.packets.first() {
        p = p.with("s", first.s).with("xc", first.xc);
    }
    p
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(
        "lattice trajectory: norm, energy and sector probabilities against time",
        vec![
            col("t", "1/J"),
            col("norm", "1"),
            col("energy", "J"),
            col("up_left", "1"),
            col("up_right", "1"),
            col("up_all", "1"),
            col("down", "1"),
            col("flux", "J"),
        ],
    );
    for s in &traj.samples {
        t.push(vec![
            s.time, s.norm, s.energy, s.up_left, s.up_right, s.up_all, s.down, s.flux,
        ]);
    }
    t
}

fn compute(cfg: &ExperimentConfig) -> Result<(Vec<Output>, Option<ComparisonReport>, Provenance)> {
    let p = &cfg.params;
    let id = &cfg.id;
    match &cfg.scan {
        Scan::BoundEnergies {
            g_primes,
            omega_min,
            omega_max,
            points,
        } => {
            let mut t = Table::new(
                "bound-state energies omega_plus, omega_minus against detuning Omega",
                vec![
                    col("g_prime", "J^(1/2)"),
                    col("Omega", "J"),
                    col("omega_plus", "J"),
                    col("omega_minus", "J"),
                    col("p_b_plus", "1"),
                    col("p_b_minus", "1"),
                ],
            );
            for &g in g_primes {
                for i in 0..*points {
                    let omega = omega_min + (omega_max - omega_min) * i as f64 / (*points - 1) as f64;
                    let q = ModelParams::new(p.j(), omega, g).at("scan.g_prime_list")?;
                    let (wp, wm) = bound_state_energies(&q).at("scan")?;
                    let bp = BoundState::new(&q, Branch::Plus).at("scan")?.p_b;
                    let bm = BoundState::new(&q, Branch::Minus).at("scan")?.p_b;
                    t.push(vec![g, omega, wp, wm, bp, bm]);
                }
            }
            let prov = provenance(cfg, false, None);
            Ok((vec![Output::Table(format!("{id}.csv"), t)], None, prov))
        }
        Scan::BoundProfile { x_max } => {
            let bp = BoundState::new(p, Branch::Plus).at("model")?;
            let bm = BoundState::new(p, Branch::Minus).at("model")?;
            let mut t = Table::new(
                "real-space photon amplitude of the bound states",
                vec![col("x", "sites"), col("psi_minus", "1"), col("psi_plus", "1")],
            );
            for x in -x_max..=*x_max {
                t.push(vec![x as f64, bm.amplitude_x(x), bp.amplitude_x(x)]);
            }
            let prov = provenance(cfg, false, None)
                .with("omega_minus", bm.omega_b)
                .with("omega_plus", bp.omega_b)
                .with("p_b_minus", bm.p_b)
                .with("p_b_plus", bp.p_b);
            Ok((vec![Output::Table(format!("{id}.csv"), t)], None, prov))
        }
        Scan::Emission { t_max, points } => {
            let curve = EmissionCurve::uniform(p, *t_max, *points).at("model")?;
            let mut t = Table::new(
                "survival amplitude e(t) of the initially excited emitter",
                vec![
                    col("t", "1/J"),
                    col("re_e", "1"),
                    col("im_e", "1"),
                    col("abs_e_sqr", "1"),
                ],
            );
            for (&time, a) in curve.times.iter().zip(&curve.amplitudes) {
                t.push(vec![time, a.re, a.im, a.norm_sqr()]);
            }
            Ok((
                vec![Output::Table(format!("{id}.csv"), t)],
                None,
                provenance(cfg, false, None),
            ))
        }
        Scan::OnePhotonRt { points } => {
            let mut t = Table::new(
                "one-photon reflection and transmission against wavevector",
                vec![
                    col("k", "1/site"),
                    col("R", "1"),
                    col("T", "1"),
                    col("re_r", "1"),
                    col("im_r", "1"),
                ],
            );
            for i in 0..*points {
                let k = PI * (i as f64 + 0.5) / *points as f64;
                let rt = one_photon_rt(p, k).at("model")?;
                t.push(vec![k, rt.reflectance(), rt.transmittance(), rt.r.re, rt.r.im]);
            }
            Ok((
                vec![Output::Table(format!("{id}.csv"), t)],
                None,
                provenance(cfg, false, None),
            ))
        }
        Scan::B2b { branch } => {
            let rows = cfg
                .packets
                .iter()
                .map(|spec| analytic_bound_to_bound(p, spec, *branch, cfg.order, &cfg.quadrature).at("packet.k0_list"))
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(
                format!(
                    "bound-to-bound reflection and transmission against k0, bound state {}",
                    branch_name(*branch)
                ),
                vec![
                    col("k0", "1/site"),
                    col("order", "1"),
                    col("R", "1"),
                    col("T", "1"),
                    col("loss", "1"),
                ],
            );
            for (spec, rates) in cfg.packets.iter().zip(rows) {
                for r in rates {
                    t.push(vec![spec.k0, r.order as f64, r.reflection, r.transmission, r.loss()]);
                }
            }
            let prov = provenance(cfg, true, None).with("branch", branch_name(*branch));
            Ok((vec![Output::Table(format!("{id}.csv"), t)], None, prov))
        }
        Scan::F2b { grid } => {
            let mut t = Table::new(
                "free-to-bound trapping rate of two identical packets against k0",
                vec![
                    col("k0", "1/site"),
                    col("trap_minus", "1"),
                    col("trap_plus", "1"),
                    col("trap_total", "1"),
                ],
            );
            for spec in &cfg.packets {
                let packet = TwoPhotonPacket::identical(*spec).at("packet")?;
                let tr = analytic_free_to_bound(p, &packet, cfg.order, &cfg.quadrature, grid).at("packet.k0_list")?;
                t.push(vec![spec.k0, tr.minus, tr.plus, tr.total()]);
            }
            let prov = provenance(cfg, true, None)
                .with("energy_nodes", grid.energy_nodes)
                .with("delta_nodes", grid.delta_nodes)
                .with("momentum_nodes", grid.momentum_nodes);
            Ok((vec![Output::Table(format!("{id}.csv"), t)], None, prov))
        }
        Scan::F2f { p_min, p_max, points } => {
            let spec = cfg
                .packets
                .first()
                .copied()
                .ok_or_else(|| HarnessError::config("packet.k0", "missing"))?;
            if cfg.packets.len() > 1 {
                return Err(HarnessError::config("packet.k0_list", "f2f takes a single k0"));
            }
            let packet = TwoPhotonPacket::identical(spec).at("packet")?;
            let momenta: Vec<f64> = (0..*points)
                .map(|i| p_min + (p_max - p_min) * i as f64 / (*points - 1) as f64)
                .collect();
            let out = FreeToFreeEvaluator::new(p, &packet, cfg.order, &cfg.quadrature)
                .and_then(|e| e.on_grid(&momenta))
                .at("packet")?;
            let mut t = Table::new(
                "two-photon out-state intensity |F(p1,p2)|^2 in the free channel",
                vec![col("p1", "1/site"), col("p2", "1/site"), col("intensity", "1")],
            );
            let n = momenta.len();
            for (idx, a) in out.amplitudes.iter().enumerate() {
                t.push(vec![momenta[idx / n], momenta[idx % n], a.norm_sqr()]);
            }
            Ok((
                vec![Output::Table(format!("{id}.csv"), t)],
                None,
                provenance(cfg, true, None),
            ))
        }
        Scan::Simulate { initial, branch } => {
            let settings = cfg.sim.as_ref().expect("validated");
            let sector = if matches!(initial, Initial::Emitter | Initial::OnePhoton) {
                Sector::One
            } else {
                Sector::Two
            };
            let basis = LatticeBasis::new(settings.n, sector).at("sim.N")?;
            let init = match initial {
                Initial::Emitter => prepare_excited_emitter(&basis),
                Initial::OnePhoton => prepare_one_photon(&basis, &cfg.packets[0]),
                Initial::TwoPhoton => prepare_two_photon(&basis, &cfg.packets[0], &cfg.packets[0]),
                Initial::BoundProduct => prepare_bound_product(&basis, p, &cfg.packets[0], *branch),
            }
            .at("sim.N")?;
            let mut sim = Simulation::new(p, settings.sim_config(p), init).at("sim")?;
            sim.run().at("sim")?;
            let table = trajectory_table(sim.trajectory());
            let prov = provenance(cfg, false, Some(settings)).with("max_step_error", sim.max_step_error());
            Ok((
                vec![
                    Output::Table(format!("{id}.csv"), table),
                    Output::Snapshot(format!("{id}.state"), sim.into_state()),
                ],
                None,
                prov,
            ))
        }
        Scan::Compare {
            channel,
            branch,
            tolerance,
            grid,
        } => {
            let settings = cfg.sim.as_ref().expect("validated");
            let points = match channel {
                Channel::OnePhoton => cfg
                    .packets
                    .par_iter()
                    .map(|spec| {
                        let a = one_photon_reflectance(p, spec).at("packet")?;
                        let (s, _) = simulate_one_photon(p, spec, settings).at("sim")?;
                        Ok(vec![ComparisonPoint {
                            label: format!("R(k0={})", spec.k0),
                            analytic: a,
                            simulated: s,
                        }])
                    })
                    .collect::<Result<Vec<_>>>()?,
                Channel::B2b => cfg
                    .packets
                    .iter()
                    .map(|spec| {
                        let rates =
                            analytic_bound_to_bound(p, spec, *branch, cfg.order, &cfg.quadrature).at("packet")?;
                        let a = rates.last().expect("order 0 is always present");
                        let s = simulate_bound_to_bound(p, spec, *branch, settings).at("sim")?;
                        Ok(vec![
                            ComparisonPoint {
                                label: format!("R(k0={})", spec.k0),
                                analytic: a.reflection,
                                simulated: s.reflection,
                            },
                            ComparisonPoint {
                                label: format!("T(k0={})", spec.k0),
                                analytic: a.transmission,
                                simulated: s.transmission,
                            },
                        ])
                    })
                    .collect::<Result<Vec<_>>>()?,
                Channel::F2b => cfg
                    .packets
                    .iter()
                    .map(|spec| {
                        let packet = TwoPhotonPacket::identical(*spec).at("packet")?;
                        let a = analytic_free_to_bound(p, &packet, cfg.order, &cfg.quadrature, grid).at("packet")?;
                        let (s, _, _) = simulate_free_to_bound(p, spec, settings).at("sim")?;
                        Ok(vec![ComparisonPoint {
                            label: format!("trap(k0={})", spec.k0),
                            analytic: a.total(),
                            simulated: s,
                        }])
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut prov = provenance(cfg, true, Some(settings));
            if matches!(channel, Channel::B2b) {
                prov = prov.with("branch", branch_name(*branch));
            }
            let report = ComparisonReport {
                experiment: id.clone(),
                points: points.into_iter().flatten().collect(),
                tolerance: *tolerance,
                provenance: prov.clone(),
            };
            let mut t = Table::new(
                "analytic against lattice values per packet",
                vec![
                    col("index", "1"),
                    col("analytic", "1"),
                    col("simulated", "1"),
                    col("abs_deviation", "1"),
                ],
            );
            for (i, pt) in report.points.iter().enumerate() {
                t.push(vec![i as f64, pt.analytic, pt.simulated, pt.abs_deviation()]);
            }
            Ok((
                vec![
                    Output::Table(format!("{id}.csv"), t),
                    Output::Report(format!("{id}.report"), report.clone()),
                ],
                Some(report),
                prov,
            ))
        }
    }
}

fn write_all(dir: &Path, id: &str, outputs: &[Output], prov: &Provenance) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for out in outputs {
        let (name, res) = match out {
            Output::Table(name, t) => (name, t.save(&dir.join(name), id, prov)),
            Output::Report(name, r) => (name, r.save(&dir.join(name))),
            Output::Snapshot(name, st) => (name, save_snapshot(st, &dir.join(name)).map_err(HarnessError::from)),
        };
        let path = dir.join(name);
        if let Err(e) = res {
            let _ = std::fs::remove_file(&path);
            for w in &written {
                let _ = std::fs::remove_file(w);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

/// Runs an experiment and writes its artifacts into `out_dir`.
///
/// A `compare` whose report fails still writes its artifacts and then
/// returns [`HarnessError::Tolerance`].
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Artifacts> {
    let (outputs, report, prov) = compute(cfg)?;
    let files = write_all(out_dir, &cfg.id, &outputs, &prov)?;
    if let Some(r) = &report {
        r.require()?;
    }
    Ok(Artifacts { files, report })
}
