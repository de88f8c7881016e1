//! The `PGRID1` binary grid format.
//!
//! Layout, all little endian: 8-byte magic `b"PGRID1\0\0"`, `u32` rows,
//! `u32` cols, `u32` component count, `f64` Re τ, `f64` Im τ, then
//! `rows * cols * components` `f64` samples in row-major order with the
//! components of each node interleaved.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{check_shape, Lattice, Mark, PeriodicField};
use crate::error::{Error, Result};

pub const PGRID_MAGIC: [u8; 8] = *b"PGRID1\0\0";

const HEADER_LEN: usize = 8 + 3 * 4 + 2 * 8;

/// A multi-component real grid on a torus with mark `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct PGrid {
    pub rows: usize,
    pub cols: usize,
    pub components: usize,
    pub tau: Complex64,
    pub data: Vec<f64>,
}

impl PGrid {
    pub fn new(rows: usize, cols: usize, components: usize, tau: Complex64, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if components == 0 {
            return Err(Error::Size("a grid needs at least one component".into()));
        }
        if data.len() != rows * cols * components {
            return Err(Error::Size(format!(
                "expected {} samples for {rows}x{cols}x{components}, got {}",
                rows * cols * components,
                data.len()
            )));
        }
        Mark::new(tau)?;
        Ok(PGrid { rows, cols, components, tau, data })
    }

    /// Packs a complex field as two components (real, imaginary).
    pub fn from_complex(field: &PeriodicField) -> Self {
        let data = field.data().iter().flat_map(|z| [z.re, z.im]).collect();
        PGrid {
            rows: field.rows(),
            cols: field.cols(),
            components: 2,
            tau: field.lattice().omega2(),
            data,
        }
    }

    /// Reads component `k` of every node.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.data.iter().skip(k).step_by(self.components).copied().collect()
    }

    /// Interprets a one- or two-component grid as a complex field.
    pub fn to_complex(&self) -> Result<PeriodicField> {
        let lattice = Lattice::new(Mark::new(self.tau)?);
        let data = match self.components {
            1 => self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            2 => self.data.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect(),
            k => return Err(Error::Size(format!("cannot read a {k}-component grid as a complex field"))),
        };
        PeriodicField::new(lattice, self.rows, self.cols, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(&PGRID_MAGIC);
        for n in [self.rows, self.cols, self.components] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.tau.re.to_le_bytes());
        out.extend_from_slice(&self.tau.im.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let bad = |message: String| Error::Format { path: origin.into(), message };
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("file is {} bytes, shorter than the header", bytes.len())));
        }
        if bytes[..8] != PGRID_MAGIC {
            return Err(bad("missing PGRID1 magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (rows, cols, components) = (u32_at(8), u32_at(12), u32_at(16));
        let tau = Complex64::new(f64_at(20), f64_at(28));
        let count = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(components))
            .ok_or_else(|| bad("grid dimensions overflow".into()))?;
        if bytes.len() != HEADER_LEN + 8 * count {
            return Err(bad(format!(
                "expected {} bytes for {rows}x{cols}x{components}, found {}",
                HEADER_LEN + 8 * count,
                bytes.len()
            )));
        }
        let data = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        PGrid::new(rows, cols, components, tau, data).map_err(|e| bad(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = PGrid::new(8, 16, 3, Complex64::new(0.25, 1.5), vec![0.5; 8 * 16 * 3]).unwrap();
        let b = g.to_bytes();
        assert_eq!(&b[..8], b"PGRID1\0\0");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 0.25);
        assert_eq!(f64::from_le_bytes(b[28..36].try_into().unwrap()), 1.5);
        assert_eq!(b.len(), 36 + 8 * 8 * 16 * 3);
        assert_eq!(PGrid::from_bytes(&b, "mem").unwrap(), g);
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let g = PGrid::new(8, 8, 1, Complex64::new(0.0, 1.0), vec![1.0; 64]).unwrap();
        let mut b = g.to_bytes();
        b.pop();
        assert!(matches!(PGrid::from_bytes(&b, "t"), Err(Error::Format { .. })));
        b[0] = b'X';
        assert!(matches!(PGrid::from_bytes(&b, "t"), Err(Error::Format { .. })));
    }
}
