//! One-excitation resolvent: the band self-energy, the matrix elements
//! `G1..G4` and the two atom–photon bound states.
//!
//! Bound-state energies are reported as excitation energies measured from
//! the emitter ground state, `omega = z + Omega/2` where `z` is the pole of
//! `G1`. For `Omega = 0` the two coincide; in general this is the quantity
//! that sits outside the band `[-2J, 2J]` and tends to `Omega` for a far
//! detuned emitter.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which of the two bound states: above (`Plus`) or below (`Minus`) the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

/// A distribution `delta * δ(p - k) + smooth`; the delta is never sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSplit {
    pub delta: C64,
    pub smooth: C64,
}

/// `sqrt(z^2 - 4J^2)` with the cut on `[-2J, 2J]`, as the product of two
/// principal roots. Behaves like `z` at infinity.
fn band_root(j: f64, z: C64) -> C64 {
    // a signed zero imaginary part would flip one principal root but not the
    // other; normalise it away
    let z = if z.im == 0.0 { C64::new(z.re, 0.0) } else { z };
    (z - 2.0 * j).sqrt() * (z + 2.0 * j).sqrt()
}

/// `I(z) = ∫ dk / (z - omega_k) = 2 pi / sqrt(z^2 - 4J^2)`.
///
/// Real `z` inside the band is rejected: the caller must choose the side of
/// the cut by giving `z` an imaginary part.
pub fn self_energy(params: &ModelParams, z: C64) -> Result<C64> {
    let e = params.band_edge();
    if z.im == 0.0 && z.re.abs() <= e {
        return Err(Error::RealInBand { re: z.re });
    }
    Ok(2.0 * PI / band_root(params.j(), z))
}

/// Same as [`self_energy`] without the domain check. For hot loops whose
/// arguments always carry `Im z > 0`.
#[inline]
pub fn self_energy_unchecked(j: f64, z: C64) -> C64 {
    2.0 * PI / band_root(j, z)
}

/// `dI/dz = -2 pi z / (z^2 - 4J^2)^{3/2}`.
pub fn self_energy_derivative(params: &ModelParams, z: C64) -> Result<C64> {
    let i = self_energy(params, z)?;
    let j = params.j();
    Ok(-i * z / ((z - 2.0 * j) * (z + 2.0 * j)))
}

/// `G1(z) = <up| G(z) |up> = 1 / (z - Omega/2 - g^2 I(z + Omega/2))`.
pub fn resolvent_g1(params: &ModelParams, z: C64) -> Result<C64> {
    let w = z + params.omega() / 2.0;
    let denom = z - params.omega() / 2.0 - params.g2() * self_energy(params, w)?;
    if denom == C64::new(0.0, 0.0) {
        let omega_b = w.re;
        return Err(Error::Pole { z: z.re, omega_b });
    }
    Ok(1.0 / denom)
}

fn photon_denominator(params: &ModelParams, z: C64, k: f64) -> Result<C64> {
    let d = z + params.omega() / 2.0 - params.dispersion(k);
    if d.im == 0.0 && d.re == 0.0 {
        return Err(Error::RealInBand { re: z.re });
    }
    Ok(d)
}

/// `G2(z;k) = G3(z;k) = g G1(z) / (z + Omega/2 - omega_k)`.
pub fn resolvent_g2(params: &ModelParams, z: C64, k: f64) -> Result<C64> {
    let d = photon_denominator(params, z, k)?;
    Ok(params.g() * resolvent_g1(params, z)? / d)
}

/// `G3(z;k)`, identical to [`resolvent_g2`].
pub fn resolvent_g3(params: &ModelParams, z: C64, k: f64) -> Result<C64> {
    resolvent_g2(params, z, k)
}

/// `G4(z;p,k)`: coefficient of `δ(k-p)` and the smooth remainder
/// `g^2 G1 / ((z + Omega/2 - omega_k)(z + Omega/2 - omega_p))`.
pub fn resolvent_g4(params: &ModelParams, z: C64, p: f64, k: f64) -> Result<DeltaSplit> {
    let dk = photon_denominator(params, z, k)?;
    let dp = photon_denominator(params, z, p)?;
    Ok(DeltaSplit {
        delta: 1.0 / dk,
        smooth: params.g2() * resolvent_g1(params, z)? / (dk * dp),
    })
}

/// Pole function in the excitation-energy variable,
/// `f(w) = w - Omega - g^2 I(w)`, real for `|w| > 2J`.
fn pole_function(params: &ModelParams, w: f64) -> f64 {
    let e = params.band_edge();
    let i = 2.0 * PI * w.signum() / ((w - e) * (w + e)).sqrt();
    w - params.omega() - params.g2() * i
}

fn pole_function_derivative(params: &ModelParams, w: f64) -> f64 {
    let e = params.band_edge();
    let d = (w - e) * (w + e);
    let i_prime = -2.0 * PI * w.signum() * w / (d * d.sqrt());
    1.0 - params.g2() * i_prime
}

/// Closed forms for `Omega = 0`: `omega_+ = -omega_- = sqrt(2J^2 + sqrt(4J^4 + g'^4))`.
pub fn bound_energy_closed_form(params: &ModelParams) -> f64 {
    let j2 = params.j() * params.j();
    let g4 = params.g_prime().powi(4);
    (2.0 * j2 + (4.0 * j2 * j2 + g4).sqrt()).sqrt()
}

/// Bound-state excitation energies `(omega_+, omega_-)`.
///
/// `Omega = 0` uses the closed form; otherwise bisection followed by Newton on
/// each out-of-band half line, where the pole function is monotone.
pub fn bound_state_energies(params: &ModelParams) -> Result<(f64, f64)> {
    if !(params.g_prime() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "g'",
            value: params.g_prime(),
            reason: "bound states need a nonzero coupling",
        });
    }
    if params.omega() == 0.0 {
        let w = bound_energy_closed_form(params);
        return Ok((w, -w));
    }
    let e = params.band_edge();
    let far = e + params.omega().powi(2) + params.g_prime().powi(2) + 10.0;
    let plus = solve_pole(params, e * (1.0 + 1e-12), far)?;
    let minus = solve_pole(params, -far, -e * (1.0 + 1e-12))?;
    Ok((plus, minus))
}

fn solve_pole(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (pole_function(params, a), pole_function(params, b));
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding { lo, hi, iterations: 0 });
    }
    // f is increasing on both half lines
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if pole_function(params, m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if (b - a) < 1e-6 * (1.0 + a.abs()) {
            break;
        }
    }
    let mut w = 0.5 * (a + b);
    for _ in 0..50 {
        let step = pole_function(params, w) / pole_function_derivative(params, w);
        if step.abs() < 1e-15 * (1.0 + w.abs()) {
            return Ok(w - step);
        }
        let next = w - step;
        // stay inside the bracket
        w = if next > a && next < b { next } else { 0.5 * (a + b) };
        if pole_function(params, w) < 0.0 {
            a = w;
        } else {
            b = w;
        }
        if b - a < 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Err(Error::RootFinding {
        lo,
        hi,
        iterations: 110,
    })
}

/// Residue of `G1` at a bound state, i.e. the emitter weight `p_b`:
/// `1 / (1 - g^2 I'(omega))`.
pub fn bound_residue_at(params: &ModelParams, omega_b: f64) -> f64 {
    1.0 / pole_function_derivative(params, omega_b)
}

/// `p_b = g'^4 / (2 omega^2 (omega^2 - 2J^2))`, valid for `Omega = 0`.
pub fn bound_residue_closed_form(params: &ModelParams, omega_b: f64) -> f64 {
    let w2 = omega_b * omega_b;
    params.g_prime().powi(4) / (2.0 * w2 * (w2 - 2.0 * params.j() * params.j()))
}

/// An atom–photon bound state `|Psi>` with energy outside the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub branch: Branch,
    pub omega_b: f64,
    pub p_b: f64,
    pub params: ModelParams,
}

impl BoundState {
    pub fn new(params: &ModelParams, branch: Branch) -> Result<Self> {
        let (plus, minus) = bound_state_energies(params)?;
        let omega_b = match branch {
            Branch::Plus => plus,
            Branch::Minus => minus,
        };
        let p_b = if params.omega() == 0.0 {
            bound_residue_closed_form(params, omega_b)
        } else {
            bound_residue_at(params, omega_b)
        };
        Ok(Self {
            branch,
            omega_b,
            p_b,
            params: *params,
        })
    }

    /// Photon amplitude `<k down|Psi> = sqrt(p_b) g / (omega_b - omega_k)`.
    pub fn amplitude_k(&self, k: f64) -> C64 {
        let w = self.omega_b - self.params.dispersion(k);
        C64::new(self.p_b.sqrt() * self.params.g() / w, 0.0)
    }

    /// Signed ratio between successive sites, `|ratio| < 1`.
    pub fn decay_ratio(&self) -> f64 {
        let e = self.params.band_edge();
        let w = self.omega_b;
        (-w + w.signum() * ((w - e) * (w + e)).sqrt()) / e
    }

    /// Real-space photon amplitude on lattice site `x` (emitter at `x = 0`).
    pub fn amplitude_x(&self, x: i64) -> f64 {
        let e = self.params.band_edge();
        let w = self.omega_b;
        let pref = w.signum() * self.params.g_prime() * self.p_b.sqrt() / ((w - e) * (w + e)).sqrt();
        pref * self.decay_ratio().powi(x.unsigned_abs() as i32)
    }

    /// Distance (in sites) beyond which `|<x|Psi>|` stays below `threshold`.
    pub fn extent(&self, threshold: f64) -> usize {
        let a0 = self.amplitude_x(0).abs();
        if a0 <= threshold {
            return 0;
        }
        let r = self.decay_ratio().abs();
        ((threshold / a0).ln() / r.ln()).ceil() as usize
    }

    /// `g^2 ∫ dk (omega_b - omega_k)^{-2}` in closed form, so that
    /// `p_b (1 + weight) = 1`.
    pub fn photon_weight_integral(&self) -> f64 {
        let e = self.params.band_edge();
        let w = self.omega_b;
        // ∫ dk (w - omega_k)^{-2} = -I'(w) = 2 pi |w| / (w^2 - 4J^2)^{3/2}
        let d = (w - e) * (w + e);
        self.params.g2() * 2.0 * PI * w.abs() / (d * d.sqrt())
    }
}
