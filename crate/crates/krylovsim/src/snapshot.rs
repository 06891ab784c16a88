//! Flat binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! | offset | type  | content                               |
//! |--------|-------|---------------------------------------|
//! | 0      | u64   | site count `N`                        |
//! | 8      | u64   | sector (`1` or `2` excitations)       |
//! | 16     | f64   | time                                  |
//! | 24     | f64×2 | `re, im` of each amplitude, basis order |
//!
//! The amplitude count is implied by `N` and the sector.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::basis::{LatticeBasis, Sector};
use crate::error::{Result, SimError};
use crate::state::LatticeState;

pub fn write_snapshot<W: Write>(state: &LatticeState, mut w: W) -> Result<()> {
    let b = state.basis();
    let sector: u64 = match b.sector() {
        Sector::One => 1,
        Sector::Two => 2,
    };
    let mut buf = Vec::with_capacity(24 + 16 * b.dim());
    buf.extend_from_slice(&(b.sites() as u64).to_le_bytes());
    buf.extend_from_slice(&sector.to_le_bytes());
    buf.extend_from_slice(&state.time().to_le_bytes());
    for a in state.amplitudes() {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<LatticeState> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 24 {
        return Err(SimError::Snapshot(format!("truncated header ({} bytes)", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("slice of 8") };
    let n = u64::from_le_bytes(word(0)) as usize;
    let sector = match u64::from_le_bytes(word(8)) {
        1 => Sector::One,
        2 => Sector::Two,
        s => return Err(SimError::Snapshot(format!("unknown sector tag {s}"))),
    };
    let time = f64::from_le_bytes(word(16));
    let basis = LatticeBasis::new(n, sector)?;
    let expected = 24 + 16 * basis.dim();
    if bytes.len() != expected {
        return Err(SimError::Snapshot(format!(
            "expected {expected} bytes for N = {n}, found {}",
            bytes.len()
        )));
    }
    let amplitudes = (0..basis.dim())
        .map(|i| {
            let o = 24 + 16 * i;
            C64::new(f64::from_le_bytes(word(o)), f64::from_le_bytes(word(o + 8)))
        })
        .collect();
    LatticeState::new(basis, amplitudes, time)
}

pub fn save_snapshot(state: &LatticeState, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(state, std::io::BufWriter::new(file))
}

pub fn load_snapshot(path: &Path) -> Result<LatticeState> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let b = LatticeBasis::new(3, Sector::One).unwrap();
        let mut st = LatticeState::zeros(b);
        st.amplitudes_mut()[3] = C64::new(0.5, -0.25);
        st.set_time(2.0);
        let mut buf = Vec::new();
        write_snapshot(&st, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 16 * 4);
        assert_eq!(&buf[0..8], &3u64.to_le_bytes());
        assert_eq!(&buf[8..16], &1u64.to_le_bytes());
        assert_eq!(&buf[16..24], &2.0f64.to_le_bytes());
        assert_eq!(&buf[72..80], &0.5f64.to_le_bytes());
        assert_eq!(read_snapshot(&buf[..]).unwrap(), st);
        assert!(read_snapshot(&buf[..40]).is_err());
    }
}
