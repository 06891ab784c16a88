//! Two-photon kernel of the emitter problem.
//!
//! With `H(z;p) = z - Omega - omega_p - g^2 I(z - omega_p)` the vertex function
//! `U(z;p,k)` obeys
//!
//! ```text
//! U(z;p,k) = 1/(z - omega_p - omega_k) + g^2 ∫ dv U(z;v,k) / (H(z;v) (z - omega_p - omega_v))
//! ```
//!
//! whose Neumann series is `U = V0 + V1 + V2 + ...`. Every quantity depends on
//! momenta only through band energies, so integrals over `v in [-pi, pi]` are
//! evaluated as `2 ∫_0^pi dtheta` with `omega_v = -2J cos theta`, split at every
//! energy where an integrand factor is singular for `eta -> 0`.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{AdaptiveGk, GaussLegendre};
use crate::resolvent::{bound_state_energies, self_energy, self_energy_unchecked, DeltaSplit};

/// Regulator and tolerances for the singular integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// `z` is taken at `Re z + i eta` when evaluating on shell.
    pub eta: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    /// Symmetric-node principal values when true, finite-`eta` otherwise.
    pub principal_value: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_depth: 60,
            principal_value: true,
        }
    }
}

impl QuadratureConfig {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_tolerance(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [("eta", self.eta), ("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Integrator for outermost integrals.
    pub fn adaptive(&self) -> AdaptiveGk {
        AdaptiveGk {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_depth: self.max_depth,
            max_panels: 20_000,
        }
    }

    /// Integrator for nested inner integrals, ten times tighter.
    pub fn inner(&self) -> AdaptiveGk {
        AdaptiveGk {
            rel_tol: self.rel_tol / 10.0,
            abs_tol: self.abs_tol / 10.0,
            ..self.adaptive()
        }
    }

    /// `Re z + i eta`.
    pub fn on_shell(&self, energy: f64) -> C64 {
        C64::new(energy, self.eta)
    }
}

/// Truncation order of the series `U ≈ V0 + ... + V_order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VertexOrder(pub usize);

impl VertexOrder {
    pub fn value(self) -> usize {
        self.0
    }
}

impl From<usize> for VertexOrder {
    fn from(n: usize) -> Self {
        Self(n)
    }
}

/// `H(z;p)` for a momentum `p`.
pub fn h_function(params: &ModelParams, z: C64, p: f64) -> Result<C64> {
    h_energy(params, z, params.dispersion(p))
}

/// `H` in terms of the photon energy `omega_p`.
pub fn h_energy(params: &ModelParams, z: C64, omega_p: f64) -> Result<C64> {
    let w = z - omega_p;
    Ok(w - params.omega() - params.g2() * self_energy(params, w)?)
}

fn band_theta(j: f64, energy: f64) -> Option<f64> {
    let c = -energy / (2.0 * j);
    (c.abs() < 1.0).then(|| c.acos())
}

/// All integrals at one complex energy `z`. Construction is cheap; the bound
/// energies are computed once and reused for every breakpoint list.
#[derive(Debug, Clone)]
pub struct VertexKernel {
    params: ModelParams,
    z: C64,
    bound: Vec<f64>,
    qc: QuadratureConfig,
}

impl VertexKernel {
    pub fn new(params: &ModelParams, z: C64, qc: &QuadratureConfig) -> Result<Self> {
        qc.validate()?;
        let bound = if params.g_prime() > 0.0 {
            let (a, b) = bound_state_energies(params)?;
            vec![a, b]
        } else {
            Vec::new()
        };
        Ok(Self {
            params: *params,
            z,
            bound,
            qc: *qc,
        })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn require_regulated(&self) -> Result<()> {
        if self.z.im < self.qc.eta * (1.0 - 1e-9) {
            return Err(Error::InvalidParameter {
                name: "Im z",
                value: self.z.im,
                reason: "vertex corrections need Im z >= eta",
            });
        }
        Ok(())
    }

    /// `H(z; v)` as a function of `omega_v`; only for `Im z > 0`.
    #[inline]
    pub fn h(&self, omega_v: f64) -> C64 {
        let w = self.z - omega_v;
        w - self.params.omega() - self.params.g2() * self_energy_unchecked(self.params.j(), w)
    }

    #[inline]
    fn energy(&self, theta: f64) -> f64 {
        -2.0 * self.params.j() * theta.cos()
    }

    /// Breakpoints in `theta` for integrals whose factors are singular at the
    /// listed band energies, at the zeros of `H` and at the branch points of
    /// `I(z - omega_v)`.
    fn breaks(&self, energies: &[f64]) -> Vec<f64> {
        let x = self.z.re;
        let e = self.params.band_edge();
        let mut list: Vec<f64> = energies.to_vec();
        list.extend(self.bound.iter().map(|b| x - b));
        list.extend([x - e, x + e]);
        let mut out: Vec<f64> = list
            .into_iter()
            .filter_map(|w| band_theta(self.params.j(), w))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    fn integrate<F: FnMut(f64) -> C64>(&self, gk: &AdaptiveGk, mut f: F, energies: &[f64]) -> Result<C64> {
        let bps = self.breaks(energies);
        let est = gk.integrate(|th| f(self.energy(th)), 0.0, PI, &bps)?;
        Ok(2.0 * est.value)
    }

    /// `V0 = 1 / (z - omega_p - omega_k)`.
    pub fn v0(&self, wp: f64, wk: f64) -> C64 {
        1.0 / (self.z - wp - wk)
    }

    fn v1_with(&self, gk: &AdaptiveGk, wp: f64, wk: f64) -> Result<C64> {
        if self.params.g2() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let z = self.z;
        let x = z.re;
        let val = self.integrate(
            gk,
            |w| 1.0 / ((z - wp - w) * self.h(w) * (z - w - wk)),
            &[x - wp, x - wk],
        )?;
        Ok(self.params.g2() * val)
    }

    /// Explicit one-dimensional `V1`.
    pub fn v1(&self, wp: f64, wk: f64) -> Result<C64> {
        self.require_regulated()?;
        self.v1_with(&self.qc.adaptive(), wp, wk)
    }

    /// Explicit two-dimensional `V2`: outer variable `v1` next to `k`, inner
    /// `v2` next to `p`.
    pub fn v2(&self, wp: f64, wk: f64) -> Result<C64> {
        self.require_regulated()?;
        if self.params.g2() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let z = self.z;
        let x = z.re;
        let inner = self.qc.inner();
        let failure = RefCell::new(None);
        let val = self.integrate(
            &self.qc.adaptive(),
            |w1| match self.v1_with(&inner, wp, w1) {
                Ok(v) => v / (self.h(w1) * (z - w1 - wk)),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    C64::new(0.0, 0.0)
                }
            },
            &[x - wk, x - wp, wp, wk],
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(self.params.g2() * val)
    }

    /// `V_n` by the recursion
    /// `V_{n+1}(z;p,k) = g^2 ∫ dv V_n(z;v,k) / (H(z;v) (z - omega_p - omega_v))`.
    pub fn v_recursive(&self, n: usize, wp: f64, wk: f64) -> Result<C64> {
        if n == 0 {
            return Ok(self.v0(wp, wk));
        }
        self.require_regulated()?;
        let depth_tol = 10f64.powi(n as i32 - 1);
        let gk = AdaptiveGk {
            rel_tol: self.qc.rel_tol / depth_tol,
            abs_tol: self.qc.abs_tol / depth_tol,
            ..self.qc.adaptive()
        };
        self.v_recursive_with(n, wp, wk, &gk)
    }

    fn v_recursive_with(&self, n: usize, wp: f64, wk: f64, gk: &AdaptiveGk) -> Result<C64> {
        if n == 0 {
            return Ok(self.v0(wp, wk));
        }
        if self.params.g2() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let z = self.z;
        let x = z.re;
        let inner = AdaptiveGk {
            rel_tol: gk.rel_tol * 10.0,
            abs_tol: gk.abs_tol * 10.0,
            ..*gk
        };
        let failure = RefCell::new(None);
        let val = self.integrate(
            gk,
            |w| match self.v_recursive_with(n - 1, w, wk, &inner) {
                Ok(v) => v / (self.h(w) * (z - wp - w)),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    C64::new(0.0, 0.0)
                }
            },
            &[x - wp, x - wk, wk, wp],
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(self.params.g2() * val)
    }

    /// `V_n` with the explicit forms for `n <= 2` and the recursion beyond.
    pub fn v(&self, n: usize, wp: f64, wk: f64) -> Result<C64> {
        match n {
            0 => Ok(self.v0(wp, wk)),
            1 => self.v1(wp, wk),
            2 => self.v2(wp, wk),
            _ => self.v_recursive(n, wp, wk),
        }
    }

    /// Terms `V0 ..= V_order`.
    pub fn u_partial(&self, order: usize, wp: f64, wk: f64) -> Result<PartialSums> {
        let terms = (0..=order).map(|n| self.v(n, wp, wk)).collect::<Result<Vec<_>>>()?;
        Ok(PartialSums { terms })
    }
}

/// Vertex-series terms; `terms[n] = V_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    pub terms: Vec<C64>,
}

impl PartialSums {
    /// `sum_n V_n`.
    pub fn value(&self) -> C64 {
        self.terms.iter().sum()
    }

    /// Running sums `V0, V0 + V1, ...`.
    pub fn sums(&self) -> Vec<C64> {
        self.terms
            .iter()
            .scan(C64::new(0.0, 0.0), |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }

    /// Magnitude of the last term relative to the total; a truncation proxy.
    pub fn last_relative_increment(&self) -> f64 {
        match self.terms.last() {
            Some(t) if self.terms.len() > 1 => t.norm() / self.value().norm(),
            _ => 0.0,
        }
    }
}

/// `V_n(z;p,k)` for momenta `p`, `k`.
pub fn vertex_v(params: &ModelParams, n: usize, z: C64, p: f64, k: f64, qc: &QuadratureConfig) -> Result<C64> {
    VertexKernel::new(params, z, qc)?.v(n, params.dispersion(p), params.dispersion(k))
}

/// Partial sums of `U(z;p,k)` through `order`.
pub fn u_partial(
    params: &ModelParams,
    z: C64,
    p: f64,
    k: f64,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<PartialSums> {
    VertexKernel::new(params, z, qc)?.u_partial(order.0, params.dispersion(p), params.dispersion(k))
}

/// `<p up| G(z - Omega/2) |k up>` split as `delta(p - k) / H(z;p)` plus
/// `g^2 U / (H(z;k) H(z;p))`, with `U` truncated at `order`.
pub fn resolvent_g5(
    params: &ModelParams,
    z: C64,
    p: f64,
    k: f64,
    order: VertexOrder,
    qc: &QuadratureConfig,
) -> Result<DeltaSplit> {
    let hp = h_function(params, z, p)?;
    let hk = h_function(params, z, k)?;
    if params.g2() == 0.0 {
        return Ok(DeltaSplit {
            delta: 1.0 / hp,
            smooth: C64::new(0.0, 0.0),
        });
    }
    let u = u_partial(params, z, p, k, order, qc)?.value();
    Ok(DeltaSplit {
        delta: 1.0 / hp,
        smooth: params.g2() * u / (hk * hp),
    })
}

/// Nyström solution of the kernel equation at fixed `z` and `k`.
#[derive(Debug, Clone)]
pub struct NystromSolution {
    pub z: C64,
    pub k: f64,
    /// Quadrature nodes in `theta in [0, pi]` and their weights.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `U(z; theta_i, k)` at the nodes.
    pub values: Vec<C64>,
    /// `||A u - b|| / ||b||` of the discrete system.
    pub residual: f64,
    /// 1-norm condition number of the system matrix.
    pub condition: f64,
    h_nodes: Vec<C64>,
    params: ModelParams,
}

impl NystromSolution {
    /// Nyström interpolant at an arbitrary momentum `p`.
    pub fn at(&self, p: f64) -> C64 {
        self.at_energy(self.params.dispersion(p))
    }

    pub fn at_energy(&self, wp: f64) -> C64 {
        let j = self.params.j();
        let wk = self.params.dispersion(self.k);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.nodes.len() {
            let wv = -2.0 * j * self.nodes[i].cos();
            acc += 2.0 * self.weights[i] * self.values[i] / (self.h_nodes[i] * (self.z - wp - wv));
        }
        1.0 / (self.z - wp - wk) + self.params.g2() * acc
    }
}

/// Solves the kernel equation by Nyström discretisation with roughly
/// `grid_size` Gauss–Legendre nodes, distributed over panels split at the
/// zeros of `H`, the branch points of `I` and the pole of the inhomogeneous
/// term. The kernel's own pole is sampled directly, which is only meaningful
/// because `eta > 0`.
pub fn u_nystrom(
    params: &ModelParams,
    z: C64,
    k: f64,
    grid_size: usize,
    qc: &QuadratureConfig,
) -> Result<NystromSolution> {
    let kernel = VertexKernel::new(params, z, qc)?;
    kernel.require_regulated()?;
    let wk = params.dispersion(k);
    let mut cuts = vec![0.0];
    cuts.extend(kernel.breaks(&[z.re - wk]));
    cuts.push(PI);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let n = ((grid_size as f64 * len / PI).round() as usize).max(4);
        for (x, wt) in GaussLegendre::new(n).mapped(w[0], w[1]) {
            nodes.push(x);
            weights.push(wt);
        }
    }
    let m = nodes.len();
    let energies: Vec<f64> = nodes.iter().map(|&t| params.dispersion(t)).collect();
    let h_nodes: Vec<C64> = energies.iter().map(|&w| kernel.h(w)).collect();
    let g2 = params.g2();

    let a = DMatrix::from_fn(m, m, |i, j| {
        let kij = g2 * 2.0 * weights[j] / (h_nodes[j] * (z - energies[i] - energies[j]));
        if i == j {
            C64::new(1.0, 0.0) - kij
        } else {
            -kij
        }
    });
    let b = DVector::from_fn(m, |i, _| 1.0 / (z - energies[i] - wk));

    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let norm1 = |mat: &DMatrix<C64>| {
        (0..mat.ncols())
            .map(|c| mat.column(c).iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = norm1(&a) * norm1(&inv);
    if !(condition <= 1e12) {
        return Err(Error::IllConditioned { condition });
    }
    let u = &inv * &b;
    let residual = (&a * &u - &b).norm() / b.norm();

    Ok(NystromSolution {
        z,
        k,
        nodes,
        weights,
        values: u.iter().copied().collect(),
        residual,
        condition,
        h_nodes,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{BoundState, Branch};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(gp: f64) -> ModelParams {
        ModelParams::with_coupling(gp).unwrap()
    }

    #[test]
    fn h_examples() {
        let p = params(1.0);
        let h = h_function(&p, C64::new(5.0, 0.0), PI / 2.0).unwrap();
        assert_abs_diff_eq!(h.re, 5.0 - 1.0 / 21f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(h.re, 4.781_782_1, epsilon = 1e-7);

        let b = BoundState::new(&p, Branch::Plus).unwrap();
        for &k in &[0.3, 1.1, 2.5] {
            let z = C64::new(b.omega_b + p.dispersion(k), 0.0);
            assert!(h_function(&p, z, k).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn h_residue_is_bound_weight() {
        let p = params(1.0);
        for br in Branch::BOTH {
            let b = BoundState::new(&p, br).unwrap();
            let k = 0.9;
            let z0 = b.omega_b + p.dispersion(k);
            let d = 1e-6;
            let z = C64::new(z0 + d, 0.0);
            let r = d / h_function(&p, z, k).unwrap();
            assert_abs_diff_eq!(r.re, b.p_b, epsilon = 1e-5);
        }
    }

    #[test]
    fn v0_example() {
        let p = params(1.0);
        let v = vertex_v(
            &p,
            0,
            C64::new(5.0, 0.0),
            PI / 2.0,
            PI / 2.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v.re, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn decoupled_series_is_bare_vertex() {
        let p = params(0.0);
        let qc = QuadratureConfig::default();
        let z = C64::new(0.4, 1e-6);
        let s = u_partial(&p, z, 0.7, 1.9, VertexOrder(3), &qc).unwrap();
        assert_eq!(s.value(), 1.0 / (z - p.dispersion(0.7) - p.dispersion(1.9)));
        let g5 = resolvent_g5(&p, z, 0.7, 1.9, VertexOrder(2), &qc).unwrap();
        assert_eq!(g5.smooth, C64::new(0.0, 0.0));
        assert!((g5.delta - 1.0 / (z - p.dispersion(0.7))).norm() < 1e-15);
    }

    #[test]
    fn regulator_is_required() {
        let p = params(1.0);
        let qc = QuadratureConfig::default();
        assert!(vertex_v(&p, 1, C64::new(1.0, 1e-9), 0.3, 0.4, &qc).is_err());
        assert!(vertex_v(&p, 0, C64::new(1.0, 1e-9), 0.3, 0.4, &qc).is_ok());
    }

    /// Brute-force oracle: periodic trapezoid rule on [-pi, pi], which
    /// converges geometrically for eta well above the node spacing.
    fn v1_trapezoid(p: &ModelParams, z: C64, wp: f64, wk: f64, n: usize) -> C64 {
        let kern = VertexKernel::new(p, z, &QuadratureConfig::default().with_eta(z.im)).unwrap();
        let h = 2.0 * PI / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let w = p.dispersion(-PI + i as f64 * h);
            acc += 1.0 / ((z - wp - w) * kern.h(w) * (z - w - wk));
        }
        p.g2() * acc * h
    }

    #[test]
    fn v1_matches_trapezoid_oracle() {
        let p = params(1.0);
        let qc = QuadratureConfig::default().with_eta(2e-2);
        for &(re, kp, kk) in &[(0.5, 0.4, 1.3), (-1.2, 2.0, 2.9), (3.1, 1.0, 1.0)] {
            let z = C64::new(re, 2e-2);
            let a = VertexKernel::new(&p, z, &qc)
                .unwrap()
                .v1(p.dispersion(kp), p.dispersion(kk))
                .unwrap();
            let b = v1_trapezoid(&p, z, p.dispersion(kp), p.dispersion(kk), 200_000);
            assert!((a - b).norm() < 1e-8 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn on_shell_v1_is_finite_and_converged() {
        // bound-to-bound kinematics at g' = 1, k = pi/3
        let p = params(1.0);
        let b = BoundState::new(&p, Branch::Plus).unwrap();
        let k = PI / 3.0;
        let wk = p.dispersion(k);
        let qc = QuadratureConfig::default();
        let v_small = VertexKernel::new(&p, C64::new(wk + b.omega_b, 1e-6), &qc)
            .unwrap()
            .v1(wk, wk)
            .unwrap();
        let qc2 = qc.with_eta(1e-8);
        let v_smaller = VertexKernel::new(&p, C64::new(wk + b.omega_b, 1e-8), &qc2)
            .unwrap()
            .v1(wk, wk)
            .unwrap();
        assert!(v_small.norm().is_finite());
        assert!((v_small - v_smaller).norm() < 1e-4 * v_small.norm());
    }

    #[test]
    fn v1_symmetry() {
        let p = params(1.0);
        let qc = QuadratureConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let z = C64::new(rng.gen_range(-4.0..4.0), 1e-6);
            let kern = VertexKernel::new(&p, z, &qc).unwrap();
            let wp = p.dispersion(rng.gen_range(-PI..PI));
            let wk = p.dispersion(rng.gen_range(-PI..PI));
            let a = kern.v1(wp, wk).unwrap();
            let b = kern.v1(wk, wp).unwrap();
            assert!((a - b).norm() < 1e-8 * a.norm().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn recursion_matches_explicit_forms() {
        let p = params(0.7);
        let qc = QuadratureConfig::default().with_eta(1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let z = C64::new(rng.gen_range(-3.0..3.0), 1e-3);
            let kern = VertexKernel::new(&p, z, &qc).unwrap();
            let wp = p.dispersion(rng.gen_range(-PI..PI));
            let wk = p.dispersion(rng.gen_range(-PI..PI));
            let a1 = kern.v1(wp, wk).unwrap();
            let b1 = kern.v_recursive(1, wp, wk).unwrap();
            assert!((a1 - b1).norm() < 1e-8 * a1.norm().max(1e-3));
            let a2 = kern.v2(wp, wk).unwrap();
            let b2 = kern.v_recursive(2, wp, wk).unwrap();
            assert!((a2 - b2).norm() < 1e-8 * a2.norm().max(1e-3), "{a2} {b2}");
        }
    }

    #[test]
    fn series_decays_on_shell() {
        let p = params(0.5);
        let b = BoundState::new(&p, Branch::Minus).unwrap();
        let wk = p.dispersion(PI / 2.0);
        let qc = QuadratureConfig::default();
        let kern = VertexKernel::new(&p, C64::new(wk + b.omega_b, qc.eta), &qc).unwrap();
        let s = kern.u_partial(2, wk, wk).unwrap();
        let [v0, v1, v2] = [s.terms[0].norm(), s.terms[1].norm(), s.terms[2].norm()];
        assert!(v2 / v1 < v1 / v0, "|V0|={v0} |V1|={v1} |V2|={v2}");
    }

    #[test]
    fn g5_smooth_part_is_symmetric() {
        let p = params(1.0);
        let qc = QuadratureConfig::default();
        let z = C64::new(5.0, 1e-2);
        let a = resolvent_g5(&p, z, 0.4, 2.2, VertexOrder(2), &qc).unwrap();
        let b = resolvent_g5(&p, z, 2.2, 0.4, VertexOrder(2), &qc).unwrap();
        assert!((a.smooth - b.smooth).norm() < 1e-10 * a.smooth.norm());
    }

    #[test]
    fn nystrom_decoupled_is_exact() {
        let p = params(0.0);
        let qc = QuadratureConfig::default();
        let z = C64::new(0.3, 1e-3);
        let sol = u_nystrom(&p, z, 1.0, 64, &qc).unwrap();
        for (i, &t) in sol.nodes.iter().enumerate() {
            let expect = 1.0 / (z - p.dispersion(t) - p.dispersion(1.0));
            assert!((sol.values[i] - expect).norm() < 1e-14 * expect.norm());
        }
    }

    #[test]
    fn nystrom_residual_and_series_agreement_off_shell() {
        let p = params(0.5);
        let qc = QuadratureConfig::default().with_eta(1e-2);
        let z = C64::new(4.5, 1e-2);
        let k = 1.2;
        let sol = u_nystrom(&p, z, k, 200, &qc).unwrap();
        assert!(sol.residual < 1e-8);
        let series = u_partial(&p, z, 0.5, k, VertexOrder(2), &qc).unwrap().value();
        let nys = sol.at(0.5);
        assert!((nys - series).norm() < 1e-3 * series.norm(), "{nys} {series}");
    }
}
