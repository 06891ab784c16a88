//! The acceptance suite: twelve numbered criteria, run in dependency order
//! (closed-form identities, then oracles, then analytic-versus-lattice
//! cross-validations) with one machine-readable line per criterion.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wqed_core::emission::SurvivalAmplitude;
use wqed_core::quadrature::AdaptiveGk;
use wqed_core::resolvent::{bound_state_energies, self_energy, BoundState, Branch};
use wqed_core::smatrix::{one_photon_rt, FreeToFreeEvaluator, ShellGrid, TwoPhotonPacket};
use wqed_core::vertex::{resolvent_g5, QuadratureConfig, VertexKernel, VertexOrder};
use wqed_core::ModelParams;
use wqed_krylovsim::oracle::{dense_bound_states, LatticeG5};
use wqed_krylovsim::spectrum::spectrum_down_sector;
use wqed_krylovsim::state::prepare_excited_emitter;
use wqed_krylovsim::{LatticeBasis, Sector, SimConfig, Simulation};

use crate::error::Result;
use crate::scenarios::{
    analytic_bound_to_bound, analytic_free_to_bound, local_maxima, packet_at, packet_for, simulate_bound_to_bound,
    simulate_free_to_bound, zncc, LatticeSettings,
};

/// Result of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed value of the criterion's metric.
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    /// `criterion=<id> status=PASS|FAIL deviation=<x> tolerance=<y> seconds=<t> name=<n> detail=<...>`
    pub fn line(&self) -> String {
        format!(
            "criterion={} status={} deviation={:.6e} tolerance={:.3e} seconds={:.1} name={} detail={}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.deviation,
            self.tolerance,
            self.seconds,
            self.name,
            self.detail
        )
    }
}

/// Lattice sizes and solver settings of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    /// Seeds the random sample points of criteria 3, 4 and 6.
    pub seed: u64,
    pub dense_n: usize,
    pub emission_n: usize,
    pub g5_n: usize,
    pub b2b_n: usize,
    pub f2b_n: usize,
    pub f2f_n: usize,
    pub dt: f64,
    pub krylov_dim: usize,
    /// Bound-to-bound packets start this many widths away, clear of the cloud.
    pub b2b_offset: f64,
    /// Step of the `k0` scan of criterion 10.
    pub f2b_step: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            seed: 20_160_901,
            dense_n: 2001,
            emission_n: 201,
            g5_n: 201,
            b2b_n: 1001,
            f2b_n: 601,
            f2f_n: 601,
            dt: 4.0,
            krylov_dim: 45,
            b2b_offset: 8.0,
            f2b_step: PI / 24.0,
        }
    }
}

impl SuiteSettings {
    fn lattice(&self, n: usize) -> LatticeSettings {
        let mut s = LatticeSettings::new(n);
        s.dt = self.dt;
        s.krylov_dim = self.krylov_dim;
        s
    }
}

/// Criteria in the order they run; each inner group may run in parallel.
pub const GROUPS: [&[u8]; 4] = [&[1, 3, 4], &[2, 5, 6, 7], &[8, 9, 10, 11], &[12]];

pub const NAMES: [&str; 12] = [
    "bound-state-closed-forms",
    "dense-lattice-bound-states",
    "self-energy-identity",
    "one-photon-unitarity",
    "emission-cross-check",
    "vertex-series-consistency",
    "two-excitation-resolvent",
    "bound-to-bound-order-1",
    "bound-to-bound-order-2",
    "free-to-bound-trapping",
    "free-to-free-spectrum",
    "unitarity-budget",
];

/// Records `|free + trapped - 1|` of every two-excitation run for criterion 12.
#[derive(Debug, Default)]
pub struct Budget {
    errors: Mutex<Vec<f64>>,
}

impl Budget {
    fn record(&self, e: f64) {
        self.errors.lock().expect("poisoned").push(e);
    }

    fn worst(&self) -> Option<(f64, usize)> {
        let v = self.errors.lock().expect("poisoned");
        if v.is_empty() {
            None
        } else {
            Some((v.iter().copied().fold(0.0, f64::max), v.len()))
        }
    }
}

struct Check {
    pass: bool,
    deviation: f64,
    tolerance: f64,
    detail: String,
}

fn finish(id: u8, start: Instant, res: Result<Check>) -> Outcome {
    let seconds = start.elapsed().as_secs_f64();
    let name = NAMES[id as usize - 1];
    match res {
        Ok(c) => Outcome {
            id,
            name,
            pass: c.pass,
            deviation: c.deviation,
            tolerance: c.tolerance,
            detail: c.detail,
            seconds,
        },
        Err(e) => Outcome {
            id,
            name,
            pass: false,
            deviation: f64::NAN,
            tolerance: f64::NAN,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

/// Runs a single criterion.
pub fn run_criterion(id: u8, s: &SuiteSettings, budget: &Budget) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => c1_closed_forms(),
        2 => c2_dense_lattice(s),
        3 => c3_self_energy(s.seed, 50, |z| self_energy(&ModelParams::with_coupling(1.0)?, z)),
        4 => c4_one_photon(s.seed),
        5 => c5_emission(s),
        6 => c6_vertex(s.seed),
        7 => c7_resolvent(s),
        8 => c8_b2b(s, budget),
        9 => c9_b2b_order(s, budget),
        10 => c10_f2b(s, budget),
        11 => c11_f2f(s, budget).map(|(c, _)| c),
        12 => c12_budget(s, budget),
        _ => panic!("no criterion {id}"),
    };
    finish(id, start, res)
}

/// Runs the selected criteria (all when `only` is empty) group by group and
/// reports each outcome as soon as it is known.
pub fn validate_suite(s: &SuiteSettings, only: &[u8], mut report: impl FnMut(&Outcome) + Send) -> Vec<Outcome> {
    let budget = Budget::default();
    let sink = Mutex::new((&mut report, Vec::new()));
    for group in GROUPS {
        let ids: Vec<u8> = group
            .iter()
            .copied()
            .filter(|i| only.is_empty() || only.contains(i))
            .collect();
        ids.par_iter().for_each(|&id| {
            let o = run_criterion(id, s, &budget);
            let mut g = sink.lock().expect("poisoned");
            (g.0)(&o);
            g.1.push(o);
        });
    }
    let mut out = sink.into_inner().expect("poisoned").1;
    out.sort_by_key(|o| o.id);
    out
}

/// `summary passed=<p> failed=<f> total=<n>`.
pub fn summary_line(outcomes: &[Outcome]) -> String {
    let passed = outcomes.iter().filter(|o| o.pass).count();
    format!(
        "summary passed={} failed={} total={}",
        passed,
        outcomes.len() - passed,
        outcomes.len()
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// -- closed-form identities -------------------------------------------------

fn c1_closed_forms() -> Result<Check> {
    let p = ModelParams::with_coupling(2.0)?;
    let (wp, wm) = bound_state_energies(&p)?;
    let exact_w = (2.0 + 20f64.sqrt()).sqrt();
    let exact_pb = (5.0 - 5f64.sqrt()) / 10.0;
    let pb_p = BoundState::new(&p, Branch::Plus)?.p_b;
    let pb_m = BoundState::new(&p, Branch::Minus)?.p_b;
    let dev = [
        (wp - exact_w).abs(),
        (wm + exact_w).abs(),
        (pb_p - exact_pb).abs(),
        (pb_m - exact_pb).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    // reference values carry seven decimals
    let reference = (wp - 2.5440393).abs().max((pb_p - 0.2763932).abs());
    Ok(Check {
        pass: dev <= 1e-9 && reference <= 5e-8,
        deviation: dev,
        tolerance: 1e-9,
        detail: format!("omega_plus={wp:.10} omega_minus={wm:.10} p_b={pb_p:.10} reference_dev={reference:.2e}"),
    })
}

/// Criterion 3 with a caller-supplied `I(z)` (`J = 1`), for fault injection.
pub fn self_energy_criterion(seed: u64, samples: usize, eval: impl Fn(C64) -> wqed_core::Result<C64>) -> Outcome {
    let start = Instant::now();
    finish(3, start, c3_self_energy(seed, samples, eval))
}

/// `I(z)` from `eval` against `∫ dk / (z + 2J cos k)` by adaptive quadrature
/// at `samples` random points on both sides of the real axis.
fn c3_self_energy(seed: u64, samples: usize, eval: impl Fn(C64) -> wqed_core::Result<C64>) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gk = AdaptiveGk::new(1e-13, 1e-15);
    let mut worst: f64 = 0.0;
    let mut at = C64::new(0.0, 0.0);
    for _ in 0..samples {
        let re = rng.gen_range(-4.0..4.0);
        let im = rng.gen_range(0.05..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let z = C64::new(re, im);
        let cos_k = (z.re.abs() / 2.0).clamp(-1.0, 1.0).acos();
        let direct = gk
            .integrate(|k| 1.0 / (z + 2.0 * k.cos()), -PI, PI, &[-cos_k, cos_k])?
            .value;
        let d = (eval(z)? - direct).norm() / direct.norm();
        if d > worst {
            worst = d;
            at = z;
        }
    }
    Ok(Check {
        pass: worst <= 1e-8,
        deviation: worst,
        tolerance: 1e-8,
        detail: format!("samples={samples} worst_z={at}"),
    })
}

fn c4_one_photon(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let mut worst: f64 = 0.0;
    let mut resonant_ok = true;
    for _ in 0..1000 {
        let k = rng.gen_range(1e-3..PI - 1e-3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let gp = rng.gen_range(0.05..3.0);
        let omega = rng.gen_range(-3.0..3.0);
        let rt = one_photon_rt(&ModelParams::new(1.0, omega, gp)?, k)?;
        worst = worst.max((rt.reflectance() + rt.transmittance() - 1.0).abs());
        let on = one_photon_rt(&ModelParams::new(1.0, -(2.0 * k.cos()), gp)?, k)?;
        resonant_ok &= on.r == C64::new(-1.0, 0.0);
    }
    Ok(Check {
        pass: worst <= 1e-12 && resonant_ok,
        deviation: worst,
        tolerance: 1e-12,
        detail: format!("samples=1000 resonant_r_is_minus_one={resonant_ok}"),
    })
}

// -- oracles ----------------------------------------------------------------

fn c2_dense_lattice(s: &SuiteSettings) -> Result<Check> {
    let p = ModelParams::with_coupling(2.0)?;
    let (wp, wm) = bound_state_energies(&p)?;
    let pb = BoundState::new(&p, Branch::Plus)?.p_b;
    let states = dense_bound_states(&p, s.dense_n)?;
    if states.len() != 2 {
        return Ok(Check {
            pass: false,
            deviation: f64::INFINITY,
            tolerance: 1e-6,
            detail: format!("found {} out-of-band states, expected 2", states.len()),
        });
    }
    let de = (states[0].energy - wm).abs().max((states[1].energy - wp).abs());
    let dp = (states[0].p_b - pb).abs().max((states[1].p_b - pb).abs());
    Ok(Check {
        pass: de <= 1e-6 && dp <= 1e-4,
        deviation: de,
        tolerance: 1e-6,
        detail: format!("N={} energy_dev={de:.3e} p_b_dev={dp:.3e} (tol 1e-4)", s.dense_n),
    })
}

fn c5_emission(s: &SuiteSettings) -> Result<Check> {
    let p = ModelParams::with_coupling(2.0)?;
    let e = SurvivalAmplitude::new(&p)?;
    let limit = 4.0 * BoundState::new(&p, Branch::Plus)?.p_b.powi(2);
    let basis = LatticeBasis::new(s.emission_n, Sector::One)?;
    let mut cfg = SimConfig::new(s.emission_n, 60.0);
    cfg.dt = 0.5;
    cfg.sample_interval = 0.05;
    cfg.krylov_dim = s.krylov_dim;
    let mut sim = Simulation::new(&p, cfg, prepare_excited_emitter(&basis)?)?;
    let up = basis.up_index(0);
    let mut amp_dev: f64 = 0.0;
    let (mut times, mut sim_pop, mut an_pop) = (Vec::new(), Vec::new(), Vec::new());
    while sim.state().time() < 60.0 - 1e-9 {
        sim.advance_sample()?;
        let t = sim.state().time();
        let lattice = sim.state().amplitudes()[up];
        let exact = e.at(t)?;
        if t <= 30.0 + 1e-9 {
            amp_dev = amp_dev.max((lattice - exact).norm());
        }
        if t >= 40.0 - 1e-9 {
            times.push(t);
            sim_pop.push(lattice.norm_sqr());
            an_pop.push(exact.norm_sqr());
        }
    }
    let peak_dev = |pop: &[f64]| {
        local_maxima(pop)
            .into_iter()
            .map(|i| rel(pop[i], limit))
            .fold(0.0, f64::max)
    };
    let (peaks_an, peaks_sim) = (local_maxima(&an_pop).len(), local_maxima(&sim_pop).len());
    let (dev_an, dev_sim) = (peak_dev(&an_pop), peak_dev(&sim_pop));
    Ok(Check {
        pass: amp_dev < 1e-3 && peaks_an > 0 && peaks_sim > 0 && dev_an <= 0.02 && dev_sim <= 0.02,
        deviation: amp_dev,
        tolerance: 1e-3,
        detail: format!(
            "N={} peaks_analytic={peaks_an} peak_dev_analytic={dev_an:.3e} peaks_lattice={peaks_sim} peak_dev_lattice={dev_sim:.3e} (tol 2e-2, limit {limit:.7})",
            s.emission_n
        ),
    })
}

fn c6_vertex(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let p = ModelParams::with_coupling(0.7)?;
    let qc = QuadratureConfig::default().with_eta(1e-3);
    let (mut rec_dev, mut sym_dev): (f64, f64) = (0.0, 0.0);
    for _ in 0..4 {
        let z = C64::new(rng.gen_range(-3.0..3.0), qc.eta);
        let kern = VertexKernel::new(&p, z, &qc)?;
        let wp = p.dispersion(rng.gen_range(-PI..PI));
        let wk = p.dispersion(rng.gen_range(-PI..PI));
        for n in [1, 2] {
            let explicit = kern.v(n, wp, wk)?;
            let generic = kern.v_recursive(n, wp, wk)?;
            let swapped = kern.v(n, wk, wp)?;
            let scale = explicit.norm();
            rec_dev = rec_dev.max((explicit - generic).norm() / scale);
            sym_dev = sym_dev.max((explicit - swapped).norm() / scale);
        }
    }
    // bound-to-bound packet rates at two regulators
    let p = ModelParams::with_coupling(0.5)?;
    let mut eta_dev: f64 = 0.0;
    for k0 in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        let spec = packet_for(k0, 12.0)?;
        let a = analytic_bound_to_bound(
            &p,
            &spec,
            Branch::Minus,
            VertexOrder(1),
            &QuadratureConfig::default().with_eta(1e-5),
        )?;
        let b = analytic_bound_to_bound(
            &p,
            &spec,
            Branch::Minus,
            VertexOrder(1),
            &QuadratureConfig::default().with_eta(1e-7),
        )?;
        let (a, b) = (a[1], b[1]);
        eta_dev = eta_dev
            .max(rel(a.reflection, b.reflection))
            .max(rel(a.transmission, b.transmission));
    }
    let dev = rec_dev.max(sym_dev);
    Ok(Check {
        pass: rec_dev <= 1e-8 && sym_dev <= 1e-8 && eta_dev < 0.01,
        deviation: dev,
        tolerance: 1e-8,
        detail: format!("recursion_dev={rec_dev:.3e} symmetry_dev={sym_dev:.3e} eta_dev={eta_dev:.3e} (tol 1e-2)"),
    })
}

fn c7_resolvent(s: &SuiteSettings) -> Result<Check> {
    let p = ModelParams::with_coupling(1.0)?;
    let z = C64::new(5.0, 1e-2);
    let n = s.g5_n;
    let k_index = 20;
    let lattice = LatticeG5::solve(&p, n, z, k_index, 1e-12)?;
    let qc = QuadratureConfig::default().with_eta(1e-2);
    let mut worst: f64 = 0.0;
    for p_index in [-70, -33, 5, 47, 90] {
        let pm = LatticeG5::momentum(n, p_index);
        let analytic = resolvent_g5(&p, z, pm, lattice.k, VertexOrder(3), &qc)?.smooth;
        worst = worst.max((lattice.element(p_index) - analytic).norm() / analytic.norm());
    }
    Ok(Check {
        pass: worst <= 0.01,
        deviation: worst,
        tolerance: 0.01,
        detail: format!("N={n} z={z} order=3 cocg_iterations={}", lattice.iterations),
    })
}

// -- cross-validations ------------------------------------------------------

/// `k0` values of the bound-to-bound scans.
pub const B2B_K0: [f64; 7] = [
    PI / 6.0,
    PI / 4.0,
    PI / 3.0,
    PI / 2.0,
    2.0 * PI / 3.0,
    3.0 * PI / 4.0,
    5.0 * PI / 6.0,
];

fn c8_b2b(s: &SuiteSettings, budget: &Budget) -> Result<Check> {
    let p = ModelParams::with_coupling(0.5)?;
    let qc = QuadratureConfig::default().with_eta(1e-6);
    let settings = s.lattice(s.b2b_n);
    let (mut dr, mut dtt) = (0.0f64, 0.0f64);
    let (mut an_loss, mut sim_loss) = (f64::INFINITY, f64::INFINITY);
    let mut rows = Vec::new();
    for k0 in B2B_K0 {
        let spec = packet_at(k0, 12.0, s.b2b_offset)?;
        let a = analytic_bound_to_bound(&p, &spec, Branch::Minus, VertexOrder(1), &qc)?[1];
        let sim = simulate_bound_to_bound(&p, &spec, Branch::Minus, &settings)?;
        budget.record(sim.info.budget_error);
        dr = dr.max((a.reflection - sim.reflection).abs());
        dtt = dtt.max((a.transmission - sim.transmission).abs());
        an_loss = an_loss.min(a.loss());
        sim_loss = sim_loss.min(sim.loss());
        rows.push(format!(
            "k0={k0:.4}:R={:.4}/{:.4},T={:.4}/{:.4},loss={:.2e}/{:.2e}",
            a.reflection,
            sim.reflection,
            a.transmission,
            sim.transmission,
            a.loss(),
            sim.loss()
        ));
    }
    let dev = dr.max(dtt);
    Ok(Check {
        pass: dev <= 0.02 && an_loss.min(sim_loss) >= -1e-6,
        deviation: dev,
        tolerance: 0.02,
        detail: format!(
            "N={} min_loss analytic={an_loss:.3e} lattice={sim_loss:.3e} (tol -1e-6) {}",
            s.b2b_n,
            rows.join(" ")
        ),
    })
}

fn c9_b2b_order(s: &SuiteSettings, budget: &Budget) -> Result<Check> {
    let p = ModelParams::with_coupling(1.0)?;
    let qc = QuadratureConfig::default().with_eta(1e-4);
    let settings = s.lattice(s.b2b_n);
    let mut all_better = true;
    let mut worst_ratio: f64 = 0.0;
    let mut rows = Vec::new();
    for k0 in B2B_K0 {
        let spec = packet_at(k0, 12.0, s.b2b_offset)?;
        let a = analytic_bound_to_bound(&p, &spec, Branch::Minus, VertexOrder(2), &qc)?;
        let sim = simulate_bound_to_bound(&p, &spec, Branch::Minus, &settings)?;
        budget.record(sim.info.budget_error);
        let dev = |n: usize| {
            (a[n].reflection - sim.reflection)
                .abs()
                .max((a[n].transmission - sim.transmission).abs())
        };
        let (d1, d2) = (dev(1), dev(2));
        all_better &= d2 < d1;
        worst_ratio = worst_ratio.max(d2 / d1);
        rows.push(format!("k0={k0:.4}:dev1={d1:.3e},dev2={d2:.3e}"));
    }
    Ok(Check {
        pass: all_better,
        deviation: worst_ratio,
        tolerance: 1.0,
        detail: format!("N={} deviation=max(dev2/dev1) {}", s.b2b_n, rows.join(" ")),
    })
}

/// `k0` at which `2 omega_k0` equals `energy`.
fn resonant_k0(p: &ModelParams, energy: f64) -> f64 {
    (-energy / (2.0 * p.band_edge())).acos()
}

fn c10_f2b(s: &SuiteSettings, budget: &Budget) -> Result<Check> {
    let p = ModelParams::with_coupling(0.5)?;
    let qc = QuadratureConfig::default().with_eta(1e-6);
    let settings = s.lattice(s.f2b_n);
    let steps = ((2.0 * PI / 3.0) / s.f2b_step).round() as usize;
    let k0s: Vec<f64> = (0..=steps).map(|i| PI / 6.0 + i as f64 * s.f2b_step).collect();
    let (mut analytic, mut lattice) = (Vec::new(), Vec::new());
    for &k0 in &k0s {
        let spec = packet_for(k0, 12.0)?;
        let packet = TwoPhotonPacket::identical(spec)?;
        analytic.push(analytic_free_to_bound(&p, &packet, VertexOrder(1), &qc, &ShellGrid::default())?.total());
        let (rate, _, info) = simulate_free_to_bound(&p, &spec, &settings)?;
        budget.record(info.budget_error);
        lattice.push(rate);
    }
    let worst_factor = analytic
        .iter()
        .zip(&lattice)
        .map(|(a, l)| (a / l).max(l / a))
        .fold(0.0, f64::max);
    let (wp, wm) = bound_state_energies(&p)?;
    let (max_a, max_l) = (local_maxima(&analytic), local_maxima(&lattice));
    let step = s.f2b_step * (1.0 + 1e-9);
    let mut peaks_ok = true;
    let mut peak_notes = Vec::new();
    for energy in [wm, 0.0, wp] {
        let kr = resonant_k0(&p, energy);
        let near = |m: &[usize], k: f64| {
            m.iter()
                .map(|&i| k0s[i])
                .filter(|x| (x - k).abs() <= step)
                .collect::<Vec<_>>()
        };
        let ka = near(&max_a, kr);
        let shared = ka.iter().any(|&x| !near(&max_l, x).is_empty());
        peaks_ok &= shared;
        peak_notes.push(format!("E={energy:.4}:k*={kr:.4},analytic={ka:.4?},shared={shared}"));
    }
    let curve: Vec<String> = k0s
        .iter()
        .zip(analytic.iter().zip(&lattice))
        .map(|(k, (a, l))| format!("{k:.4}:{a:.3e}/{l:.3e}"))
        .collect();
    Ok(Check {
        pass: worst_factor <= 1.5 && peaks_ok,
        deviation: worst_factor,
        tolerance: 1.5,
        detail: format!(
            "N={} peaks[{}] curve[{}]",
            s.f2b_n,
            peak_notes.join(" "),
            curve.join(" ")
        ),
    })
}

/// Configuration of criteria 11 and 12.
fn f2f_setup() -> Result<(ModelParams, wqed_core::smatrix::WavepacketSpec)> {
    Ok((ModelParams::with_coupling(0.5)?, packet_for(2.0 * PI / 5.0, 12.0)?))
}

/// Returns the check and the simulated budget error.
fn c11_f2f(s: &SuiteSettings, budget: &Budget) -> Result<(Check, f64)> {
    let (p, spec) = f2f_setup()?;
    let qc = QuadratureConfig::default().with_eta(1e-6);
    let settings = s.lattice(s.f2f_n);
    let (_, state, info) = simulate_free_to_bound(&p, &spec, &settings)?;
    budget.record(info.budget_error);
    let spectrum = spectrum_down_sector(&state)?;
    let n = spectrum.len();
    let (lo, hi) = spec.momentum_support();
    let keep: Vec<usize> = (0..n)
        .filter(|&i| {
            let a = spectrum.momenta[i].abs();
            a >= lo && a <= hi
        })
        .collect();
    let grid: Vec<f64> = keep.iter().map(|&i| spectrum.momenta[i]).collect();
    let m = grid.len();
    let lattice: Vec<f64> = keep
        .iter()
        .flat_map(|&a| keep.iter().map(move |&b| (a, b)))
        .map(|(a, b)| spectrum.at(a, b).norm_sqr())
        .collect();
    let packet = TwoPhotonPacket::identical(spec)?;
    let analytic = FreeToFreeEvaluator::new(&p, &packet, VertexOrder(0), &qc)?
        .on_grid(&grid)?
        .intensity();
    let corr = zncc(&analytic, &lattice);

    let cell = 2.0 * PI / n as f64;
    let target = 2.0 * p.dispersion(spec.k0);
    let contour_dev = |intensity: &[f64]| -> f64 {
        let top = intensity.iter().copied().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 1..m - 1 {
            for j in 1..m - 1 {
                let v = intensity[i * m + j];
                let neighbours = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
                if v < 0.1 * top || neighbours.iter().any(|&(a, b)| intensity[a * m + b] >= v) {
                    continue;
                }
                let (p1, p2) = (grid[i], grid[j]);
                let grad = (p.group_speed(p1).powi(2) + p.group_speed(p2).powi(2)).sqrt();
                let dist = (p.dispersion(p1) + p.dispersion(p2) - target).abs() / grad;
                worst = worst.max(dist / cell);
            }
        }
        worst
    };
    let (ca, cl) = (contour_dev(&analytic), contour_dev(&lattice));
    Ok((
        Check {
            pass: corr >= 0.95 && ca <= 1.0 && cl <= 1.0,
            deviation: corr,
            tolerance: 0.95,
            detail: format!(
                "N={} grid={m}x{m} zncc={corr:.6} contour_dist_cells analytic={ca:.3} lattice={cl:.3} (tol 1)",
                s.f2f_n
            ),
        },
        info.budget_error,
    ))
}

fn c12_budget(s: &SuiteSettings, budget: &Budget) -> Result<Check> {
    if budget.worst().is_none() {
        c11_f2f(s, budget)?;
    }
    let (worst, runs) = budget.worst().expect("at least one run recorded");
    let (p, spec) = f2f_setup()?;
    let qc = QuadratureConfig::default().with_eta(1e-6);
    let packet = TwoPhotonPacket::identical(spec)?;
    let grid = ShellGrid::default();
    let free = FreeToFreeEvaluator::new(&p, &packet, VertexOrder(0), &qc)?.norm(&grid)?;
    let trapped = analytic_free_to_bound(&p, &packet, VertexOrder(0), &qc, &grid)?.total();
    let total = free + trapped;
    Ok(Check {
        pass: worst <= 1e-9 && (total - 1.0).abs() <= 0.02,
        deviation: worst,
        tolerance: 1e-9,
        detail: format!("runs={runs} analytic out_norm={free:.6} trapping={trapped:.3e} sum={total:.6} (tol 2e-2)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonances_are_on_the_scan() {
        let p = ModelParams::with_coupling(0.5).unwrap();
        let (wp, wm) = bound_state_energies(&p).unwrap();
        for e in [wm, 0.0, wp] {
            let k = resonant_k0(&p, e);
            assert!((PI / 6.0..=5.0 * PI / 6.0).contains(&k));
            assert!((2.0 * p.dispersion(k) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn outcome_line_is_parseable() {
        let o = Outcome {
            id: 4,
            name: NAMES[3],
            pass: true,
            deviation: 1e-16,
            tolerance: 1e-12,
            detail: "x".into(),
            seconds: 0.0,
        };
        let line = o.line();
        assert!(line.starts_with("criterion=4 status=PASS "));
        assert!(line.contains("name=one-photon-unitarity"));
    }
}
