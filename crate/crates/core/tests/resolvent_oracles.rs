use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wqed_core::resolvent::{resolvent_g1, self_energy, self_energy_derivative, BoundState, Branch};
use wqed_core::ModelParams;

/// Trapezoid rule on the periodic integrand; exponentially accurate off the axis.
fn trapezoid_self_energy(j: f64, z: C64, n: usize) -> C64 {
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let k = -PI + i as f64 * h;
            1.0 / (z + 2.0 * j * k.cos())
        })
        .sum::<C64>()
        * h
}

#[test]
fn self_energy_matches_trapezoid() {
    let p = ModelParams::new(1.3, 0.0, 1.0).unwrap();
    for z in [
        C64::new(0.4, 0.3),
        C64::new(-2.0, 0.1),
        C64::new(3.5, -0.2),
        C64::new(-4.0, 0.0),
        C64::new(1.0, -2.0),
    ] {
        let exact = self_energy(&p, z).unwrap();
        let numeric = trapezoid_self_energy(1.3, z, 20_000);
        assert!(
            (exact - numeric).norm() < 1e-10 * exact.norm(),
            "{z}: {exact} vs {numeric}"
        );
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let p = ModelParams::with_coupling(1.0).unwrap();
    let z = C64::new(0.8, 0.5);
    let h = 1e-5;
    let fd = (self_energy(&p, z + h).unwrap() - self_energy(&p, z - h).unwrap()) / (2.0 * h);
    assert!((fd - self_energy_derivative(&p, z).unwrap()).norm() < 1e-8);
}

#[test]
fn g1_residue_is_p_b() {
    for &(omega, gp) in &[(0.0, 0.5), (0.0, 2.0), (0.6, 1.1)] {
        let p = ModelParams::new(1.0, omega, gp).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let b = BoundState::new(&p, branch).unwrap();
            // G1 takes the energy measured from -Omega/2
            let pole = b.omega_b - omega / 2.0;
            let eps = 1e-6;
            let residue = eps * resolvent_g1(&p, C64::new(pole + eps, 0.0)).unwrap();
            assert!(
                (residue.re - b.p_b).abs() < 1e-5,
                "{branch:?} {omega} {gp}: {residue} vs {}",
                b.p_b
            );
        }
    }
}

#[test]
fn bound_state_is_normalised_on_the_lattice() {
    for gp in [0.5, 1.0, 2.0] {
        let p = ModelParams::with_coupling(gp).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let b = BoundState::new(&p, branch).unwrap();
            let cloud: f64 = (-2000..=2000).map(|x| b.amplitude_x(x).powi(2)).sum();
            assert!((b.p_b + cloud - 1.0).abs() < 1e-12, "g'={gp}: {}", b.p_b + cloud);
            assert!((b.photon_weight_integral() - cloud / b.p_b).abs() < 1e-10);
        }
    }
}

#[test]
fn bound_state_is_a_lattice_eigenvector() {
    // E psi_x = -J (psi_{x+1} + psi_{x-1}) + g' a delta_x0, (E - Omega) a = g' psi_0
    let p = ModelParams::with_coupling(0.8).unwrap();
    for branch in [Branch::Plus, Branch::Minus] {
        let b = BoundState::new(&p, branch).unwrap();
        let a = b.p_b.sqrt();
        let psi = |x: i64| b.amplitude_x(x);
        for x in -5..=5i64 {
            let coupling = if x == 0 { 0.8 * a } else { 0.0 };
            let lhs = b.omega_b * psi(x);
            let rhs = -(psi(x + 1) + psi(x - 1)) + coupling;
            assert!((lhs - rhs).abs() < 1e-12, "{branch:?} x={x}: {lhs} vs {rhs}");
        }
        assert!((b.omega_b * a - 0.8 * psi(0)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_energy_is_herglotz(re in -6.0..6.0f64, im in 1e-3..3.0f64, j in 0.2..2.0f64) {
        let p = ModelParams::new(j, 0.0, 1.0).unwrap();
        let up = self_energy(&p, C64::new(re, im)).unwrap();
        let down = self_energy(&p, C64::new(re, -im)).unwrap();
        // maps the upper half plane to the lower one, with reflection symmetry
        prop_assert!(up.im < 0.0);
        prop_assert!((up - down.conj()).norm() <= 1e-12 * up.norm());
    }

    #[test]
    fn self_energy_decays_like_two_pi_over_z(re in 20.0..200.0f64, sign in prop::bool::ANY) {
        let p = ModelParams::with_coupling(1.0).unwrap();
        let x = if sign { re } else { -re };
        let z = C64::new(x, 0.0);
        let v = self_energy(&p, z).unwrap();
        // 2 pi / z (1 + 2/z^2 + ...)
        prop_assert!((v.re * x / (2.0 * PI) - 1.0 - 2.0 / (x * x)).abs() < 10.0 / x.powi(4));
    }
}
