use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wqed_core::quadrature::GaussLegendre;
use wqed_core::smatrix::{one_photon_rt, WavepacketSpec};
use wqed_core::ModelParams;

/// Reflection amplitude from the stationary lattice equations with
/// `psi_x = e^{ikx} + r e^{-ikx}` for `x <= 0` and `t e^{ikx}` for `x >= 0`.
fn stationary_r(j: f64, omega: f64, gp: f64, k: f64) -> C64 {
    let eps = -2.0 * j * k.cos();
    let e = C64::from_polar(1.0, k);
    // site 0 with t = 1 + r and the emitter eliminated:
    // eps (1 + r) = -J ((1 + r) e + 1/e + r e) + g'^2 (1 + r) / (eps - Omega)
    let self_term = gp * gp / (eps - omega);
    let constant = eps + j * (e + 1.0 / e) - self_term;
    let linear = eps + 2.0 * j * e - self_term;
    -constant / linear
}

#[test]
fn one_photon_matches_stationary_scattering() {
    for &(omega, gp) in &[(0.0, 0.5), (0.0, 1.0), (0.8, 1.5), (-1.2, 0.3)] {
        let p = ModelParams::new(1.0, omega, gp).unwrap();
        for i in 1..40 {
            let k = PI * i as f64 / 40.0;
            let rt = one_photon_rt(&p, k).unwrap();
            let oracle = stationary_r(1.0, omega, gp, k);
            assert!(
                (rt.r - oracle).norm() < 1e-12,
                "Omega={omega} g'={gp} k={k}: {} vs {oracle}",
                rt.r
            );
            // left-incoming photons see the mirror image
            assert!((one_photon_rt(&p, -k).unwrap().r - rt.r).norm() < 1e-15);
        }
    }
}

#[test]
fn resonance_reflects_fully() {
    let p = ModelParams::new(1.0, 0.6, 0.9).unwrap();
    let k = (-0.6f64 / 2.0).acos();
    let rt = one_photon_rt(&p, k).unwrap();
    assert!((rt.r + 1.0).norm() < 1e-15);
    assert!(rt.t.norm() < 1e-15);
}

#[test]
fn packet_is_the_lattice_fourier_series() {
    let spec = WavepacketSpec::new(1.1, 9.0, -37.4).unwrap();
    let total: f64 = (-400..=400).map(|x| spec.amplitude_x(x as f64).norm_sqr()).sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    let norm_k: f64 = GaussLegendre::new(64)
        .composite(-PI, PI, 32)
        .into_iter()
        .map(|(k, w)| w * spec.amplitude_k(k).norm_sqr())
        .sum();
    assert!((norm_k - 1.0).abs() < 1e-12, "{norm_k}");
    for k in [0.3, 1.0, 1.1, 1.4, -2.0] {
        let series: C64 = (-400..=400)
            .map(|x| spec.amplitude_x(x as f64) * C64::from_polar(1.0, -k * x as f64))
            .sum::<C64>()
            / (2.0 * PI).sqrt();
        assert!((series - spec.amplitude_k(k)).norm() < 1e-12, "k={k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn one_photon_is_unitary(k in 0.01..3.13f64, omega in -3.0..3.0f64, gp in 0.0..3.0f64, j in 0.3..2.0f64) {
        let p = ModelParams::new(j, omega, gp).unwrap();
        let rt = one_photon_rt(&p, k).unwrap();
        prop_assert!((rt.reflectance() + rt.transmittance() - 1.0).abs() < 1e-12);
        prop_assert!((rt.t - 1.0 - rt.r).norm() < 1e-15);
    }
}
