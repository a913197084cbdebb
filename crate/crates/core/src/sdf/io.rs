//! SDFG binary grid files.
//!
//! Layout, all little-endian:
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0-3    | magic `SDFG`                              |
//! | 4-7    | version `1` (u32)                         |
//! | 8-19   | `nx`, `ny`, `nz` (u32 each)               |
//! | 20-31  | origin x, y, z (f32)                      |
//! | 32-35  | spacing (f32)                             |
//! | 36-47  | original size x, y, z in meters (f32)     |
//! | 48-    | `nx * ny * nz` values (f32), x fastest    |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::Vec3;

use super::{SdfError, SdfGrid};

pub const MAGIC: &[u8; 4] = b"SDFG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 48;

pub fn write_sdfg<W: Write>(grid: &SdfGrid, mut w: W) -> Result<(), SdfError> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    for n in grid.dims() {
        header.extend_from_slice(&(n as u32).to_le_bytes());
    }
    let (origin, size) = (grid.origin(), grid.original_size());
    let f32s = origin.iter().copied().chain([grid.spacing()]).chain(size.iter().copied());
    for v in f32s {
        header.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(grid.len() * 4);
    for v in grid.values() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_sdfg<R: Read>(mut r: R) -> Result<SdfGrid, SdfError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| SdfError::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(SdfError::Format("bad magic, expected SDFG".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as f64;
    let version = u32_at(4);
    if version != VERSION {
        return Err(SdfError::Format(format!("unsupported version {version}")));
    }
    let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let origin = Vec3::new(f32_at(20), f32_at(24), f32_at(28));
    let spacing = f32_at(32);
    let original_size = Vec3::new(f32_at(36), f32_at(40), f32_at(44));
    let count =
        dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).ok_or_else(|| SdfError::Format(format!("dims {dims:?} overflow")))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 4 {
        return Err(SdfError::Format(format!("expected {} value bytes, found {}", count * 4, body.len())));
    }
    let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    SdfGrid::new(dims, origin, spacing, original_size, values)
}

pub fn save_sdfg(grid: &SdfGrid, path: impl AsRef<Path>) -> Result<(), SdfError> {
    write_sdfg(grid, BufWriter::new(File::create(path)?))
}

pub fn load_sdfg(path: impl AsRef<Path>) -> Result<SdfGrid, SdfError> {
    read_sdfg(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let g = SdfGrid::new([2, 3, 2], Vec3::new(-1.0, -0.5, 0.25), 0.5, Vec3::new(0.1, 0.2, 0.3), (0..12).map(|i| i as f32).collect())
            .unwrap();
        let mut bytes = Vec::new();
        write_sdfg(&g, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 48 + 12 * 4);
        assert_eq!(&bytes[0..4], b"SDFG");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[12..16], 3u32.to_le_bytes());
        assert_eq!(bytes[24..28], (-0.5f32).to_le_bytes());
        assert_eq!(bytes[32..36], 0.5f32.to_le_bytes());
        assert_eq!(bytes[44..48], 0.3f32.to_le_bytes());
        assert_eq!(bytes[48 + 4 * 5..48 + 4 * 6], 5.0f32.to_le_bytes());
        let back = read_sdfg(&bytes[..]).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!(back.dims(), g.dims());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_sdfg(&b"SDFX"[..]), Err(SdfError::Format(_))));
        let g = SdfGrid::new([2; 3], Vec3::zeros(), 1.0, Vec3::zeros(), vec![1.0; 8]).unwrap();
        let mut bytes = Vec::new();
        write_sdfg(&g, &mut bytes).unwrap();
        bytes.pop();
        assert!(matches!(read_sdfg(&bytes[..]), Err(SdfError::Format(_))));
        bytes.truncate(4);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.resize(48, 0);
        assert!(matches!(read_sdfg(&bytes[..]), Err(SdfError::Format(_))));
    }
}
