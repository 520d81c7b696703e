//! Binary snapshot files.
//!
//! Layout (little-endian):
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `EULSPEC1`                         |
//! | 8      | 4    | `u32` version = 1                        |
//! | 12     | 4    | `u32` n                                  |
//! | 16     | 8    | `f64` time                               |
//! | 24     | 8    | `f64` box length                         |
//! | 32     | 8    | `u64` FNV-1a checksum of the payload     |
//! | 40     | …    | three `n³` `f64` arrays, x-fastest order |
//!
//! Velocity snapshots store `(v₁, v₂, v₃)`. Eigenvalue files share the layout
//! under magic `EULLAMB1` and store `(λ₁, λ₂, λ₃)`.

use std::path::Path;

use crate::deformation::SpectraField;
use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::grid::Grid;

pub const VELOCITY_MAGIC: [u8; 8] = *b"EULSPEC1";
pub const SPECTRA_MAGIC: [u8; 8] = *b"EULLAMB1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Velocity,
    Spectra,
}

impl SnapshotKind {
    fn magic(self) -> [u8; 8] {
        match self {
            SnapshotKind::Velocity => VELOCITY_MAGIC,
            SnapshotKind::Spectra => SPECTRA_MAGIC,
        }
    }
}

/// A decoded file: three arrays on a grid at time `t`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub grid: Grid,
    pub time: f64,
    pub arrays: [Field; 3],
}

impl Snapshot {
    pub fn velocity(v: &VectorField, time: f64) -> Self {
        Self {
            kind: SnapshotKind::Velocity,
            grid: v.grid(),
            time,
            arrays: v.components().clone(),
        }
    }

    pub fn spectra(s: &SpectraField, time: f64) -> Self {
        Self {
            kind: SnapshotKind::Spectra,
            grid: s.grid(),
            time,
            arrays: [0, 1, 2].map(|c| s.lambda(c).clone()),
        }
    }

    pub fn into_velocity(self) -> Result<(VectorField, f64)> {
        if self.kind != SnapshotKind::Velocity {
            return Err(Error::Format {
                field: "magic",
                detail: "expected a velocity snapshot".into(),
            });
        }
        Ok((VectorField::new(self.arrays)?, self.time))
    }

    pub fn into_spectra(self) -> Result<(SpectraField, f64)> {
        if self.kind != SnapshotKind::Spectra {
            return Err(Error::Format {
                field: "magic",
                detail: "expected an eigenvalue file".into(),
            });
        }
        Ok((SpectraField::new(self.arrays)?, self.time))
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.grid.n();
        let mut payload = Vec::with_capacity(3 * self.grid.len() * 8);
        for a in &self.arrays {
            for v in a.values() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&self.kind.magic());
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&self.grid.box_length().to_le_bytes());
        out.extend_from_slice(&fnv1a64(&payload).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let fmt = |field, detail: String| Error::Format { field, detail };
        if bytes.len() < HEADER_LEN {
            return Err(fmt(
                "header",
                format!("file is {} bytes, header needs {HEADER_LEN}", bytes.len()),
            ));
        }
        let magic: [u8; 8] = bytes[0..8].try_into().unwrap();
        let kind = match magic {
            VELOCITY_MAGIC => SnapshotKind::Velocity,
            SPECTRA_MAGIC => SnapshotKind::Spectra,
            other => {
                return Err(fmt(
                    "magic",
                    format!("unrecognized magic {:?}", String::from_utf8_lossy(&other)),
                ))
            }
        };
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(fmt("version", format!("unsupported version {version}")));
        }
        let n = u32_at(12) as usize;
        let time = f64_at(16);
        if !time.is_finite() {
            return Err(fmt("time", format!("non-finite time {time}")));
        }
        let box_length = f64_at(24);
        let checksum = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let grid = Grid::with_box_length(n, box_length).map_err(|e| {
            let field = if box_length.is_finite() && box_length > 0.0 {
                "n"
            } else {
                "box_length"
            };
            fmt(field, e.to_string())
        })?;

        let payload = &bytes[HEADER_LEN..];
        let expected = 3 * grid.len() * 8;
        if payload.len() != expected {
            return Err(fmt(
                "n",
                format!(
                    "header n = {n} needs {expected} payload bytes, found {}",
                    payload.len()
                ),
            ));
        }
        let actual = fnv1a64(payload);
        if actual != checksum {
            return Err(fmt(
                "payload_checksum",
                format!("header says {checksum:#018x}, payload hashes to {actual:#018x}"),
            ));
        }
        let arrays = [0, 1, 2].map(|c| {
            let chunk = &payload[c * grid.len() * 8..(c + 1) * grid.len() * 8];
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Field::from_vec(grid, values).expect("length checked")
        });
        Ok(Self {
            kind,
            grid,
            time,
            arrays,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

/// Writes a velocity snapshot.
pub fn write_snapshot(path: &Path, v: &VectorField, time: f64) -> Result<()> {
    Snapshot::velocity(v, time).write(path)
}

/// Reads a velocity snapshot, verifying header and checksum.
pub fn load_snapshot(path: &Path) -> Result<(VectorField, f64)> {
    Snapshot::read(path)?.into_velocity()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let g = Grid::new(8).unwrap();
        let v = VectorField::from_fn(g, |[x, y, z]| [x.sin(), y.cos() * z, 0.25]);
        Snapshot::velocity(&v, 0.125)
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode();
        assert_eq!(&bytes[0..8], b"EULSPEC1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.125);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 512 * 8);
        // first payload value is v1 at the origin: sin(0) = 0
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 0.0);
        // second is v1 at x = dx (x-fastest)
        let dx = 2.0 * std::f64::consts::PI / 8.0;
        assert_eq!(
            f64::from_le_bytes(bytes[48..56].try_into().unwrap()),
            dx.sin()
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let back = Snapshot::decode(&s.encode()).unwrap();
        assert_eq!(back.time, s.time);
        for c in 0..3 {
            let a = s.arrays[c].values().iter().map(|v| v.to_bits());
            let b = back.arrays[c].values().iter().map(|v| v.to_bits());
            assert!(a.eq(b));
        }
    }

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file() {
        let bytes = sample().encode();
        assert_eq!(
            field_of(Snapshot::decode(&bytes[..20]).unwrap_err()),
            "header"
        );
        assert_eq!(
            field_of(Snapshot::decode(&bytes[..bytes.len() - 8]).unwrap_err()),
            "n"
        );
    }

    #[test]
    fn header_n_disagrees_with_payload() {
        let mut bytes = sample().encode();
        bytes[12..16].copy_from_slice(&16u32.to_le_bytes());
        assert_eq!(field_of(Snapshot::decode(&bytes).unwrap_err()), "n");
    }

    #[test]
    fn corrupted_fields() {
        let good = sample().encode();
        let mut bytes = good.clone();
        bytes[0] = b'X';
        assert_eq!(field_of(Snapshot::decode(&bytes).unwrap_err()), "magic");
        let mut bytes = good.clone();
        bytes[8] = 2;
        assert_eq!(field_of(Snapshot::decode(&bytes).unwrap_err()), "version");
        let mut bytes = good.clone();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert_eq!(
            field_of(Snapshot::decode(&bytes).unwrap_err()),
            "payload_checksum"
        );
        let mut bytes = good;
        bytes[24..32].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert_eq!(
            field_of(Snapshot::decode(&bytes).unwrap_err()),
            "box_length"
        );
    }

    #[test]
    fn kind_mismatch() {
        assert!(sample().into_spectra().is_err());
    }
}
