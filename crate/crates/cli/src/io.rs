//! On-disk array format.
//!
//! Layout: an 8-byte magic tag, one element-width byte (4 or 8), a 64-bit
//! little-endian element count, then the raw little-endian bit patterns of
//! the elements. Bit patterns, not decimal text, so files round-trip
//! exactly and transfer between machines without re-rounding.

use anyhow::{bail, Context, Result};
use fnorm::{Real, RealArray};
use std::fs;
use std::path::Path;

pub const MAGIC: [u8; 8] = *b"FNORMARR";
const HEADER_LEN: usize = 17;

/// An array read back from disk, in whichever precision it was written.
#[derive(Debug)]
pub enum LoadedArray {
    Single(RealArray<f32>),
    Double(RealArray<f64>),
}

pub fn write_array<R: Real>(path: &Path, x: &[R]) -> Result<()> {
    let width = R::PRECISION.byte_width();
    let mut bytes = Vec::with_capacity(HEADER_LEN + x.len() * width);
    bytes.extend_from_slice(&MAGIC);
    bytes.push(width as u8);
    bytes.extend_from_slice(&(x.len() as u64).to_le_bytes());
    for v in x {
        let b = v.bits_u64().to_le_bytes();
        bytes.extend_from_slice(&b[..width]);
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_array(path: &Path) -> Result<LoadedArray> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < HEADER_LEN {
        bail!("{}: truncated header", path.display());
    }
    if bytes[..8] != MAGIC {
        bail!("{}: not an fnorm array file", path.display());
    }
    let width = bytes[8] as usize;
    let count = u64::from_le_bytes(bytes[9..HEADER_LEN].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    let expected = (count as usize).checked_mul(width);
    if expected != Some(payload.len()) {
        bail!(
            "{}: payload is {} bytes, expected {} elements of {} bytes",
            path.display(),
            payload.len(),
            count,
            width
        );
    }
    match width {
        4 => {
            let mut arr = RealArray::<f32>::zeroed(count as usize);
            for (chunk, v) in payload.chunks_exact(4).zip(arr.as_mut_slice()) {
                *v = f32::from_bits(u32::from_le_bytes(chunk.try_into().unwrap()));
            }
            Ok(LoadedArray::Single(arr))
        }
        8 => {
            let mut arr = RealArray::<f64>::zeroed(count as usize);
            for (chunk, v) in payload.chunks_exact(8).zip(arr.as_mut_slice()) {
                *v = f64::from_bits(u64::from_le_bytes(chunk.try_into().unwrap()));
            }
            Ok(LoadedArray::Double(arr))
        }
        w => bail!("{}: unsupported element width {w}", path.display()),
    }
}
