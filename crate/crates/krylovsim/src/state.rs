//! Lattice states and their preparation.

use num_complex::Complex64 as C64;
use wqed_core::resolvent::{BoundState, Branch};
use wqed_core::smatrix::WavepacketSpec;
use wqed_core::ModelParams;

use crate::basis::{LatticeBasis, Sector};
use crate::error::{Result, SimError};

/// Packets sit at least this many widths from the walls and from the emitter.
pub const PACKET_CLEARANCE: f64 = 3.0;

/// Bound-state clouds must decay below this amplitude before the wall.
pub const CLOUD_TAIL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    basis: LatticeBasis,
    amplitudes: Vec<C64>,
    time: f64,
}

impl LatticeState {
    pub fn new(basis: LatticeBasis, amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(SimError::Dimension {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            basis,
            amplitudes,
            time,
        })
    }

    pub fn zeros(basis: LatticeBasis) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); basis.dim()],
            basis,
            time: 0.0,
        }
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn overlap(&self, other: &LatticeState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// First-quantised two-photon wavefunction `psi(i, j)` on sites (see [`crate::basis`]).
    pub fn pair_wavefunction(&self, i: usize, j: usize) -> C64 {
        let a = self.amplitudes[self.basis.pair_index(i, j)];
        if i == j {
            a
        } else {
            a * std::f64::consts::FRAC_1_SQRT_2
        }
    }

    /// Mirror image `x -> -x` of the state.
    pub fn mirrored(&self) -> Self {
        let b = &self.basis;
        let n = b.sites();
        let mut out = Self::zeros(*b);
        out.time = self.time;
        match b.sector() {
            Sector::One => {
                for s in 0..n {
                    out.amplitudes[n - 1 - s] = self.amplitudes[s];
                }
                out.amplitudes[n] = self.amplitudes[n];
            }
            Sector::Two => {
                for idx in 0..b.pair_count() {
                    let (i, j) = b.pair_sites(idx);
                    out.amplitudes[b.pair_index(n - 1 - j, n - 1 - i)] = self.amplitudes[idx];
                }
                for s in 0..n {
                    out.amplitudes[b.up_index(n - 1 - s)] = self.amplitudes[b.up_index(s)];
                }
            }
        }
        out
    }
}

fn require_sector(basis: &LatticeBasis, sector: Sector) -> Result<()> {
    if basis.sector() != sector {
        return Err(SimError::WrongSector {
            expected: sector,
            found: basis.sector(),
        });
    }
    Ok(())
}

/// Smallest odd `N` whose half width is at least `half`.
fn odd_sites_for(half: f64) -> usize {
    2 * half.ceil().max(1.0) as usize + 1
}

/// Checks that a packet keeps `PACKET_CLEARANCE` widths from the walls and the emitter.
pub fn check_packet_clearance(basis: &LatticeBasis, spec: &WavepacketSpec) -> Result<()> {
    let margin = PACKET_CLEARANCE * spec.s;
    if spec.xc.abs() < margin {
        return Err(SimError::Clearance {
            what: "packet overlaps the emitter",
            n: basis.sites(),
            required: basis.sites(),
        });
    }
    let need = spec.xc.abs() + margin;
    if need > basis.half_width() as f64 {
        return Err(SimError::Clearance {
            what: "packet",
            n: basis.sites(),
            required: odd_sites_for(need),
        });
    }
    Ok(())
}

/// Checks that the bound cloud has decayed below `CLOUD_TAIL` at the walls.
pub fn check_cloud_clearance(basis: &LatticeBasis, bound: &BoundState) -> Result<()> {
    let need = bound.extent(CLOUD_TAIL);
    if need as i64 > basis.half_width() {
        return Err(SimError::Clearance {
            what: "bound-state cloud",
            n: basis.sites(),
            required: 2 * need + 1,
        });
    }
    Ok(())
}

fn packet_on_sites(basis: &LatticeBasis, spec: &WavepacketSpec) -> Vec<C64> {
    (0..basis.sites())
        .map(|s| spec.amplitude_x(basis.position(s) as f64))
        .collect()
}

/// Emitter up, no photons.
pub fn prepare_excited_emitter(basis: &LatticeBasis) -> Result<LatticeState> {
    require_sector(basis, Sector::One)?;
    let mut st = LatticeState::zeros(*basis);
    st.amplitudes[basis.up_index(0)] = C64::new(1.0, 0.0);
    Ok(st)
}

/// Single photon packet `f(x)` with the emitter down.
pub fn prepare_one_photon(basis: &LatticeBasis, spec: &WavepacketSpec) -> Result<LatticeState> {
    require_sector(basis, Sector::One)?;
    check_packet_clearance(basis, spec)?;
    let mut st = LatticeState::zeros(*basis);
    st.amplitudes[..basis.sites()].copy_from_slice(&packet_on_sites(basis, spec));
    st.normalize();
    Ok(st)
}

/// Two photons in the symmetrised product `f1(x1) f2(x2) + f2(x1) f1(x2)`.
pub fn prepare_two_photon(
    basis: &LatticeBasis,
    first: &WavepacketSpec,
    second: &WavepacketSpec,
) -> Result<LatticeState> {
    require_sector(basis, Sector::Two)?;
    check_packet_clearance(basis, first)?;
    check_packet_clearance(basis, second)?;
    let f1 = packet_on_sites(basis, first);
    let f2 = packet_on_sites(basis, second);
    let mut st = LatticeState::zeros(*basis);
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..basis.sites() {
        for j in i..basis.sites() {
            let psi = f1[i] * f2[j] + f2[i] * f1[j];
            st.amplitudes[basis.pair_index(i, j)] = if i == j { psi } else { psi * s2 };
        }
    }
    st.normalize();
    Ok(st)
}

/// The lattice bound state `|Psi_b>` in the one-excitation sector.
pub fn prepare_bound_state(basis: &LatticeBasis, params: &ModelParams, branch: Branch) -> Result<LatticeState> {
    require_sector(basis, Sector::One)?;
    let bound = BoundState::new(params, branch)?;
    check_cloud_clearance(basis, &bound)?;
    let mut st = LatticeState::zeros(*basis);
    for s in 0..basis.sites() {
        st.amplitudes[s] = C64::new(bound.amplitude_x(basis.position(s)), 0.0);
    }
    st.amplitudes[basis.up_index(0)] = C64::new(bound.p_b.sqrt(), 0.0);
    st.normalize();
    Ok(st)
}

/// A photon packet `f` in front of the bound state: `sum_x f(x) a_x^† |Psi_b>`.
pub fn prepare_bound_product(
    basis: &LatticeBasis,
    params: &ModelParams,
    spec: &WavepacketSpec,
    branch: Branch,
) -> Result<LatticeState> {
    require_sector(basis, Sector::Two)?;
    let bound = BoundState::new(params, branch)?;
    check_packet_clearance(basis, spec)?;
    check_cloud_clearance(basis, &bound)?;
    let f = packet_on_sites(basis, spec);
    let c: Vec<f64> = (0..basis.sites())
        .map(|s| bound.amplitude_x(basis.position(s)))
        .collect();
    let mut st = LatticeState::zeros(*basis);
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..basis.sites() {
        for j in i..basis.sites() {
            st.amplitudes[basis.pair_index(i, j)] = if i == j {
                f[i] * c[i] * s2
            } else {
                f[i] * c[j] + f[j] * c[i]
            };
        }
        st.amplitudes[basis.up_index(i)] = f[i] * bound.p_b.sqrt();
    }
    st.normalize();
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_two_photon_norm() {
        let b = LatticeBasis::new(201, Sector::Two).unwrap();
        let spec = WavepacketSpec::new(1.2, 8.0, -50.0).unwrap();
        let st = prepare_two_photon(&b, &spec, &spec).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-14);
        // continuum norm of the symmetrised identical product is 4, so the
        // normalised first-quantised wavefunction is f(x1) f(x2)
        let (i, j) = (b.site(-50).unwrap(), b.site(-47).unwrap());
        let f = |x: f64| spec.amplitude_x(x);
        assert!((st.pair_wavefunction(i, j) - f(-50.0) * f(-47.0)).norm() < 1e-10);
    }

    #[test]
    fn clearance_errors_name_required_size() {
        let b = LatticeBasis::new(101, Sector::One).unwrap();
        let spec = WavepacketSpec::new(1.0, 12.0, -40.0).unwrap();
        match prepare_one_photon(&b, &spec) {
            Err(SimError::Clearance { required, .. }) => assert_eq!(required, 153),
            other => panic!("{other:?}"),
        }
        let near = WavepacketSpec::new(1.0, 12.0, -20.0).unwrap();
        assert!(prepare_one_photon(&LatticeBasis::new(401, Sector::One).unwrap(), &near).is_err());
    }

    #[test]
    fn bound_product_up_weight() {
        let p = ModelParams::with_coupling(0.5).unwrap();
        let b = LatticeBasis::new(701, Sector::Two).unwrap();
        let spec = WavepacketSpec::new(std::f64::consts::FRAC_PI_2, 12.0, -60.0).unwrap();
        let st = prepare_bound_product(&b, &p, &spec, Branch::Minus).unwrap();
        let up: f64 = (0..b.sites()).map(|s| st.amplitudes()[b.up_index(s)].norm_sqr()).sum();
        let pb = BoundState::new(&p, Branch::Minus).unwrap().p_b;
        assert!((up - pb).abs() < 1e-8 * pb, "{up} vs {pb}");
    }

    #[test]
    fn mirror_is_involution() {
        let b = LatticeBasis::new(61, Sector::Two).unwrap();
        let spec = WavepacketSpec::new(0.8, 3.0, -15.0).unwrap();
        let other = WavepacketSpec::new(-0.4, 4.0, 16.0).unwrap();
        let st = prepare_two_photon(&b, &spec, &other).unwrap();
        assert_eq!(st.mirrored().mirrored(), st);
        assert!((st.mirrored().norm_sqr() - 1.0).abs() < 1e-14);
    }
}
