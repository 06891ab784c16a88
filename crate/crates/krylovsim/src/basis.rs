//! Site bases of the open chain in the one- and two-excitation sectors.
//!
//! Sites are indexed `0..N` with the emitter on the central site; positions
//! `x = site - N/2` put the emitter at `x = 0`.
//!
//! Two-excitation states are packed as all photon pairs `i <= j` in row-major
//! upper-triangular order, followed by the `N` states `|x, up>`. A pair
//! amplitude `a(i, j)` with `i < j` multiplies `a_i^† a_j^† |0>`, which is the
//! normalised symmetric state `(|ij> + |ji>)/sqrt 2`; on the diagonal it
//! multiplies the normalised Fock state `(a_i^†)^2 / sqrt 2 |0>`. The
//! first-quantised wavefunction is therefore `psi(i, j) = a(i, j) / sqrt 2`
//! off the diagonal and `psi(i, i) = a(i, i)`, with `sum |psi|^2 = sum |a|^2`.

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    One,
    Two,
}

/// A basis state in readable form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisState {
    /// One photon on a site, emitter down.
    Photon(usize),
    /// No photon, emitter up.
    Up,
    /// Two photons on sites `i <= j`, emitter down.
    Pair(usize, usize),
    /// One photon on a site, emitter up.
    PhotonUp(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBasis {
    n: usize,
    sector: Sector,
}

impl LatticeBasis {
    pub fn new(n: usize, sector: Sector) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(SimError::Config {
                name: "N",
                value: n as f64,
                reason: "site count must be odd and at least 3",
            });
        }
        Ok(Self { n, sector })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// Site index of the emitter.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Largest `|x|` on the lattice.
    pub fn half_width(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn position(&self, site: usize) -> i64 {
        site as i64 - self.center() as i64
    }

    pub fn site(&self, x: i64) -> Option<usize> {
        let s = x + self.center() as i64;
        (0..self.n as i64).contains(&s).then_some(s as usize)
    }

    pub fn pair_count(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn dim(&self) -> usize {
        match self.sector {
            Sector::One => self.n + 1,
            Sector::Two => self.pair_count() + self.n,
        }
    }

    fn row_start(&self, i: usize) -> usize {
        i * self.n - i * (i.saturating_sub(1)) / 2
    }

    /// Packed index of the pair `{i, j}` in either order.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.row_start(i) + (j - i)
    }

    /// Inverse of [`pair_index`](Self::pair_index).
    pub fn pair_sites(&self, idx: usize) -> (usize, usize) {
        // largest i with row_start(i) <= idx
        let (mut lo, mut hi) = (0, self.n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.row_start(mid) <= idx {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, lo + idx - self.row_start(lo))
    }

    /// Index of `|site, down>` (one sector) or `|site, up>` (two sector).
    pub fn photon_index(&self, site: usize) -> usize {
        site
    }

    /// Index of the emitter-up state with a photon on `site` (two sector) or
    /// of the bare `|up>` (one sector, `site` ignored).
    pub fn up_index(&self, site: usize) -> usize {
        match self.sector {
            Sector::One => self.n,
            Sector::Two => self.pair_count() + site,
        }
    }

    /// First index of the emitter-up block.
    pub fn up_offset(&self) -> usize {
        match self.sector {
            Sector::One => self.n,
            Sector::Two => self.pair_count(),
        }
    }

    pub fn decode(&self, idx: usize) -> BasisState {
        match self.sector {
            Sector::One if idx < self.n => BasisState::Photon(idx),
            Sector::One => BasisState::Up,
            Sector::Two if idx < self.pair_count() => {
                let (i, j) = self.pair_sites(idx);
                BasisState::Pair(i, j)
            }
            Sector::Two => BasisState::PhotonUp(idx - self.pair_count()),
        }
    }

    pub fn encode(&self, state: BasisState) -> usize {
        match state {
            BasisState::Photon(s) => s,
            BasisState::Up => self.n,
            BasisState::Pair(i, j) => self.pair_index(i, j),
            BasisState::PhotonUp(s) => self.pair_count() + s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(LatticeBasis::new(7, Sector::One).unwrap().dim(), 8);
        assert_eq!(LatticeBasis::new(7, Sector::Two).unwrap().dim(), 28 + 7);
        assert!(LatticeBasis::new(8, Sector::One).is_err());
    }

    #[test]
    fn pair_index_round_trip() {
        let b = LatticeBasis::new(11, Sector::Two).unwrap();
        let mut expected = 0;
        for i in 0..11 {
            for j in i..11 {
                assert_eq!(b.pair_index(i, j), expected);
                assert_eq!(b.pair_index(j, i), expected);
                assert_eq!(b.pair_sites(expected), (i, j));
                expected += 1;
            }
        }
        for idx in 0..b.dim() {
            assert_eq!(b.encode(b.decode(idx)), idx);
        }
    }

    #[test]
    fn positions() {
        let b = LatticeBasis::new(9, Sector::One).unwrap();
        assert_eq!(b.position(b.center()), 0);
        assert_eq!(b.site(-4), Some(0));
        assert_eq!(b.site(5), None);
    }
}
