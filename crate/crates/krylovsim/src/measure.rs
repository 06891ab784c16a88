//! Sector- and region-resolved probabilities.
//!
//! Regions are taken relative to a split position: `Left` is `x < split`,
//! `Right` is `x > split`, `All` is the whole chain. In the two-excitation
//! sector the `up` probabilities refer to the position of the single photon
//! that accompanies the excited emitter.

use crate::basis::Sector;
use crate::state::LatticeState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Left,
    Right,
    All,
}

impl Region {
    pub fn contains(self, x: i64, split: i64) -> bool {
        match self {
            Region::Left => x < split,
            Region::Right => x > split,
            Region::All => true,
        }
    }
}

/// Raw emitter-up probability with the photon in `region`. In the one-excitation
/// sector there is no photon, so only `All` is non-zero.
pub fn up_sector_probability(state: &LatticeState, region: Region, split: i64) -> f64 {
    let b = state.basis();
    let a = state.amplitudes();
    match b.sector() {
        Sector::One => match region {
            Region::All => a[b.up_index(0)].norm_sqr(),
            _ => 0.0,
        },
        Sector::Two => (0..b.sites())
            .filter(|&s| region.contains(b.position(s), split))
            .map(|s| a[b.up_index(s)].norm_sqr())
            .sum(),
    }
}

/// Up-sector probability divided by the bound-state emitter weight `p_b`.
pub fn measure_up_sector(state: &LatticeState, region: Region, split: i64, p_b: f64) -> f64 {
    up_sector_probability(state, region, split) / p_b
}

/// Total up-sector probability divided by `p_b`: the probability that a
/// photon ended up bound to the emitter.
pub fn trapping_rate(state: &LatticeState, p_b: f64) -> f64 {
    up_sector_probability(state, Region::All, 0) / p_b
}

/// Probability of the emitter being down.
pub fn down_sector_norm(state: &LatticeState) -> f64 {
    let b = state.basis();
    state.amplitudes()[..b.up_offset()].iter().map(|a| a.norm_sqr()).sum()
}

/// Emitter-down probability with every photon in `region`.
pub fn photon_probability(state: &LatticeState, region: Region, split: i64) -> f64 {
    let b = state.basis();
    let a = state.amplitudes();
    match b.sector() {
        Sector::One => (0..b.sites())
            .filter(|&s| region.contains(b.position(s), split))
            .map(|s| a[s].norm_sqr())
            .sum(),
        Sector::Two => (0..b.pair_count())
            .filter(|&idx| {
                let (i, j) = b.pair_sites(idx);
                region.contains(b.position(i), split) && region.contains(b.position(j), split)
            })
            .map(|idx| a[idx].norm_sqr())
            .sum(),
    }
}

/// Emitter-down probability with one photon on each side of `split`.
pub fn photon_probability_split(state: &LatticeState, split: i64) -> f64 {
    let b = state.basis();
    if b.sector() == Sector::One {
        return 0.0;
    }
    let a = state.amplitudes();
    (0..b.pair_count())
        .filter(|&idx| {
            let (i, j) = b.pair_sites(idx);
            b.position(i) < split && b.position(j) > split
        })
        .map(|idx| a[idx].norm_sqr())
        .sum()
}

/// Bookkeeping of a two-excitation state in terms of asymptotic channels:
/// the trapped share `up / p_b` carries a photon cloud of weight
/// `(1 - p_b) / p_b * up` in the down sector, and the rest of the down sector
/// is free photons. `free + trapped` equals the norm identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBudget {
    pub down: f64,
    pub up: f64,
    pub trapped: f64,
    pub free: f64,
}

impl ChannelBudget {
    pub fn new(state: &LatticeState, p_b: f64) -> Self {
        let down = down_sector_norm(state);
        let up = up_sector_probability(state, Region::All, 0);
        let trapped = up / p_b;
        Self {
            down,
            up,
            trapped,
            free: down - (1.0 - p_b) * trapped,
        }
    }

    pub fn total(&self) -> f64 {
        self.free + self.trapped
    }
}

/// Quantities whose rate of change defines the residual flux.
pub fn flux_observables(state: &LatticeState, split: i64) -> Vec<f64> {
    match state.basis().sector() {
        Sector::One => vec![
            photon_probability(state, Region::Left, split),
            photon_probability(state, Region::Right, split),
            up_sector_probability(state, Region::All, split),
        ],
        Sector::Two => vec![
            up_sector_probability(state, Region::Left, split),
            up_sector_probability(state, Region::Right, split),
            up_sector_probability(state, Region::All, split),
            photon_probability(state, Region::Left, split),
            photon_probability(state, Region::Right, split),
            photon_probability_split(state, split),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LatticeBasis;
    use num_complex::Complex64 as C64;

    #[test]
    fn regions_partition_the_up_sector() {
        let b = LatticeBasis::new(11, Sector::Two).unwrap();
        let mut st = LatticeState::zeros(b);
        for s in 0..11 {
            st.amplitudes_mut()[b.up_index(s)] = C64::new(0.1 * s as f64, 0.0);
        }
        let l = up_sector_probability(&st, Region::Left, 0);
        let r = up_sector_probability(&st, Region::Right, 0);
        let c = st.amplitudes()[b.up_index(b.center())].norm_sqr();
        assert!((l + r + c - up_sector_probability(&st, Region::All, 0)).abs() < 1e-15);
        assert_eq!(down_sector_norm(&st), 0.0);
    }

    #[test]
    fn budget_is_the_norm() {
        let b = LatticeBasis::new(9, Sector::Two).unwrap();
        let mut st = LatticeState::zeros(b);
        st.amplitudes_mut()
            .iter_mut()
            .enumerate()
            .for_each(|(i, a)| *a = C64::new(i as f64, 1.0));
        st.normalize();
        let budget = ChannelBudget::new(&st, 0.3);
        assert!((budget.total() - 1.0).abs() < 1e-14);
    }
}
