use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wqed_core::ModelParams;
use wqed_krylovsim::lanczos::LanczosPropagator;
use wqed_krylovsim::snapshot::{load_snapshot, save_snapshot};
use wqed_krylovsim::spectrum::spectrum_down_sector;
use wqed_krylovsim::{build_hamiltonian, Boundary, LatticeBasis, LatticeState, Sector};

fn random_state(basis: LatticeBasis, seed: u64) -> LatticeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..basis.dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut st = LatticeState::new(basis, amps, 0.0).unwrap();
    st.normalize();
    st
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian(
        half in 1usize..12,
        omega in -3.0f64..3.0,
        gp in 0.0f64..3.0,
        two in any::<bool>(),
        periodic in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let p = ModelParams::new(1.0, omega, gp).unwrap();
        let sector = if two { Sector::Two } else { Sector::One };
        let boundary = if periodic { Boundary::Periodic } else { Boundary::HardWall };
        let b = LatticeBasis::new(2 * half + 1, sector).unwrap();
        let h = build_hamiltonian(&p, &b, boundary);
        let u = random_state(b, seed);
        let v = random_state(b, seed ^ 0x5555);
        let mut hu = vec![C64::new(0.0, 0.0); b.dim()];
        let mut hv = hu.clone();
        h.apply(u.amplitudes(), &mut hu);
        h.apply(v.amplitudes(), &mut hv);
        prop_assert!((dot(u.amplitudes(), &hv) - dot(&hu, v.amplitudes())).norm() < 1e-12);
    }

    #[test]
    fn propagation_preserves_norm_and_energy(
        omega in -2.0f64..2.0,
        gp in 0.1f64..2.5,
        dt in 0.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let p = ModelParams::new(1.0, omega, gp).unwrap();
        let b = LatticeBasis::new(25, Sector::Two).unwrap();
        let h = build_hamiltonian(&p, &b, Boundary::HardWall);
        let mut st = random_state(b, seed);
        let e0 = h.expectation(st.amplitudes());
        let mut prop = LanczosPropagator::new(30, 1e-11).unwrap();
        prop.step(&h, st.amplitudes_mut(), dt).unwrap();
        prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-10 * dt.max(1.0));
        prop_assert!((h.expectation(st.amplitudes()) - e0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_obeys_parseval(half in 2usize..20, seed in any::<u64>()) {
        let b = LatticeBasis::new(2 * half + 1, Sector::Two).unwrap();
        let st = random_state(b, seed);
        let down: f64 = st.amplitudes()[..b.pair_count()].iter().map(|a| a.norm_sqr()).sum();
        let sp = spectrum_down_sector(&st).unwrap();
        prop_assert!((sp.power() - down).abs() < 1e-10);
    }

    #[test]
    fn snapshot_round_trip(half in 1usize..10, two in any::<bool>(), seed in any::<u64>(), t in 0.0f64..1e3) {
        let sector = if two { Sector::Two } else { Sector::One };
        let mut st = random_state(LatticeBasis::new(2 * half + 1, sector).unwrap(), seed);
        st.set_time(t);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        save_snapshot(&st, &path).unwrap();
        prop_assert_eq!(load_snapshot(&path).unwrap(), st);
    }
}
