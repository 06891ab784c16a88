//! Survival amplitude `e(t) = <up| exp(-iHt) |up>` of an initially excited
//! emitter with `Omega = 0`, built from the inverse Laplace transform of
//! `G1`: a partial-fraction part plus a convolution with `J0(2J tau)`.
//!
//! Written naively the result is `A cosh(s1 t) + B cos(s2 t)` plus a
//! convolution containing `sinh(s1 (t - tau))`; both grow like `exp(s1 t)`
//! and cancel. Using `∫_0^∞ J0(2J tau) exp(-s1 tau) dtau = 1 / s2` the
//! growing pieces are removed analytically, leaving
//!
//! ```text
//! e(t) = A/2 exp(-s1 t) + B cos(s2 t)
//!      + C s1^2/s2 ∫_0^t J0(2J tau) sin(s2 (t - tau)) dtau
//!      - C s2^2/(2 s1) ∫_0^t J0(2J tau) exp(-s1 (t - tau)) dtau
//!      - C s2^2/(2 s1) ∫_0^∞ J0(2J (t + u)) exp(-s1 u) du
//! ```
//!
//! with `R = sqrt(4J^4 + g'^4)`, `s1 = sqrt(R - 2J^2)`, `s2 = sqrt(R + 2J^2)`,
//! `A = (R + 2J^2)/2R`, `B = (R - 2J^2)/2R`, `C = -g'^2/2R`. Every term is
//! bounded, so no extended precision is needed.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::AdaptiveGk;
use crate::special::{bessel_j0, bessel_j0_zero};

/// Default time horizon in units of `1/J`.
pub const DEFAULT_HORIZON: f64 = 1.0e4;

const MAGNITUDE_SLACK: f64 = 1e-6;

/// Evaluator for `e(t)` at fixed parameters.
#[derive(Debug, Clone)]
pub struct SurvivalAmplitude {
    params: ModelParams,
    s1: f64,
    s2: f64,
    a: f64,
    b: f64,
    c: f64,
    horizon: f64,
    gk: AdaptiveGk,
}

impl SurvivalAmplitude {
    pub fn new(params: &ModelParams) -> Result<Self> {
        if params.omega() != 0.0 {
            return Err(Error::NonzeroOmega { omega: params.omega() });
        }
        let j2 = params.j() * params.j();
        let gp2 = params.g_prime() * params.g_prime();
        let r = (4.0 * j2 * j2 + gp2 * gp2).sqrt();
        Ok(Self {
            params: *params,
            s1: (r - 2.0 * j2).max(0.0).sqrt(),
            s2: (r + 2.0 * j2).sqrt(),
            a: (r + 2.0 * j2) / (2.0 * r),
            b: (r - 2.0 * j2) / (2.0 * r),
            c: -gp2 / (2.0 * r),
            horizon: DEFAULT_HORIZON / params.j(),
            gk: AdaptiveGk::new(1e-11, 1e-14),
        })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `J0(2J tau)` zeros inside `(lo, hi)` in the `tau` variable.
    fn bessel_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let scale = 2.0 * self.params.j();
        let mut out = Vec::new();
        let mut m = 1;
        loop {
            let tau = bessel_j0_zero(m) / scale;
            if tau >= hi {
                break;
            }
            if tau > lo {
                out.push(tau);
            }
            m += 1;
        }
        out
    }

    pub fn at(&self, t: f64) -> Result<C64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "time must be non-negative",
            });
        }
        if t > self.horizon {
            return Err(Error::Horizon {
                t,
                horizon: self.horizon,
            });
        }
        if t == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        if self.c == 0.0 {
            // decoupled emitter
            return Ok(C64::new(1.0, 0.0));
        }
        let (s1, s2, c) = (self.s1, self.s2, self.c);
        let jj = 2.0 * self.params.j();
        let breaks = self.bessel_breaks(0.0, t);

        let conv = self.gk.integrate(
            |tau| {
                let j0 = bessel_j0(jj * tau);
                let d = t - tau;
                C64::new(
                    j0 * ((s1 * s1 / s2) * (s2 * d).sin() - (s2 * s2 / (2.0 * s1)) * (-s1 * d).exp()),
                    0.0,
                )
            },
            0.0,
            t,
            &breaks,
        )?;

        // tail ∫_0^∞ J0(2J(t+u)) exp(-s1 u) du, truncated where exp(-s1 u) < 1e-18
        let u_max = 42.0 / s1;
        let tail_breaks: Vec<f64> = self.bessel_breaks(t, t + u_max).into_iter().map(|x| x - t).collect();
        let tail = self.gk.integrate(
            |u| C64::new(bessel_j0(jj * (t + u)) * (-s1 * u).exp(), 0.0),
            0.0,
            u_max,
            &tail_breaks,
        )?;

        let value = 0.5 * self.a * (-s1 * t).exp() + self.b * (s2 * t).cos() + c * conv.value.re
            - c * s2 * s2 / (2.0 * s1) * tail.value.re;
        if value.abs() > 1.0 + MAGNITUDE_SLACK {
            return Err(Error::Cancellation {
                t,
                magnitude: value.abs(),
            });
        }
        Ok(C64::new(value, 0.0))
    }
}

/// One-shot convenience for [`SurvivalAmplitude::at`].
pub fn survival_amplitude(params: &ModelParams, t: f64) -> Result<C64> {
    SurvivalAmplitude::new(params)?.at(t)
}

/// `e(t)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionCurve {
    pub times: Vec<f64>,
    pub amplitudes: Vec<C64>,
    pub params: ModelParams,
}

impl EmissionCurve {
    /// Evaluates the grid in parallel; the first failing time aborts the curve.
    pub fn compute(params: &ModelParams, times: &[f64]) -> Result<Self> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "times",
                value: f64::NAN,
                reason: "time grid must be strictly increasing",
            });
        }
        let eval = SurvivalAmplitude::new(params)?;
        let amplitudes = times.par_iter().map(|&t| eval.at(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            amplitudes,
            params: *params,
        })
    }

    /// Uniform grid `0, dt, ..., t_max`.
    pub fn uniform(params: &ModelParams, t_max: f64, points: usize) -> Result<Self> {
        let n = points.max(2);
        let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        Self::compute(params, &times)
    }

    /// Excited-state population `|e(t)|^2`.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{BoundState, Branch};
    use approx::assert_abs_diff_eq;

    fn params(gp: f64) -> ModelParams {
        ModelParams::with_coupling(gp).unwrap()
    }

    /// Independent route: spectral representation of `G1`,
    /// `e(t) = sum_b p_b exp(-i w_b t) - (1/pi) ∫ Im G1(w + i0) exp(-i w t) dw`.
    fn e_spectral(gp: f64, t: f64) -> C64 {
        let p = params(gp);
        let mut acc = C64::new(0.0, 0.0);
        for br in Branch::BOTH {
            let b = BoundState::new(&p, br).unwrap();
            acc += C64::from_polar(b.p_b, -b.omega_b * t);
        }
        let gk = AdaptiveGk::new(1e-12, 1e-15);
        let bps: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.05).collect();
        let cont = gk
            .integrate(
                |w| {
                    let root = (4.0 - w * w).max(0.0).sqrt();
                    let g1 = 1.0 / C64::new(w, gp * gp / root);
                    -g1.im / std::f64::consts::PI * C64::from_polar(1.0, -w * t)
                },
                -2.0,
                2.0,
                &bps,
            )
            .unwrap();
        acc + cont.value
    }

    #[test]
    fn starts_at_one() {
        assert_eq!(survival_amplitude(&params(2.0), 0.0).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn short_time_expansion() {
        // e(t) = 1 - g'^2 t^2 / 2 + O(t^4)
        let t = 1e-3;
        let e = survival_amplitude(&params(2.0), t).unwrap();
        assert_abs_diff_eq!(e.re, 1.0 - 4.0 * t * t / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_spectral_representation() {
        for &gp in &[0.5, 1.0, 2.0] {
            let p = params(gp);
            let eval = SurvivalAmplitude::new(&p).unwrap();
            for &t in &[0.5, 2.0, 7.5, 15.0] {
                let a = eval.at(t).unwrap();
                let b = e_spectral(gp, t);
                assert!((a - b).norm() < 1e-8, "g'={gp} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn late_time_limit() {
        // e(t) -> p_b (exp(-i w+ t) + exp(-i w- t)) = 2 p_b cos(w+ t)
        let p = params(2.0);
        let b = BoundState::new(&p, Branch::Plus).unwrap();
        let eval = SurvivalAmplitude::new(&p).unwrap();
        for &t in &[200.0, 400.5] {
            let e = eval.at(t).unwrap().re;
            assert_abs_diff_eq!(e, 2.0 * b.p_b * (b.omega_b * t).cos(), epsilon = 5e-3);
        }
    }

    #[test]
    fn bounded_and_real() {
        let curve = EmissionCurve::uniform(&params(2.0), 60.0, 601).unwrap();
        assert!(curve.populations().iter().all(|&x| x <= 1.0 + 1e-9));
        assert!(curve.amplitudes.iter().all(|a| a.im == 0.0));
    }

    #[test]
    fn horizon_and_omega_errors() {
        let eval = SurvivalAmplitude::new(&params(2.0)).unwrap().with_horizon(10.0);
        assert_eq!(eval.at(11.0).unwrap_err(), Error::Horizon { t: 11.0, horizon: 10.0 });
        let p = ModelParams::new(1.0, 0.3, 1.0).unwrap();
        assert!(matches!(SurvivalAmplitude::new(&p), Err(Error::NonzeroOmega { .. })));
    }

    #[test]
    fn decoupled_emitter_stays_excited() {
        assert_eq!(survival_amplitude(&params(0.0), 3.0).unwrap(), C64::new(1.0, 0.0));
    }
}
