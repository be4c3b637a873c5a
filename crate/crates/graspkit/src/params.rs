//! Binary file format for refinement head parameters.
//!
//! Layout, all little-endian:
//! - magic `b"GRMP"` (4 bytes)
//! - version u32 (currently 1)
//! - d_in u32, d_hidden u32
//! - leaky slope f64, then w1 (d_hidden * d_in), b1 (d_hidden),
//!   w2 (5 * d_hidden), b2 (5) as f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use graspkit_core::refine::MlpParams;

pub const MAGIC: [u8; 4] = *b"GRMP";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ParamsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, not a refinement parameter file")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("truncated parameter file")]
    Truncated,
}

pub fn write_params(path: &Path, params: &MlpParams) -> Result<(), ParamsError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.d_in as u32).to_le_bytes())?;
    w.write_all(&(params.d_hidden as u32).to_le_bytes())?;
    let values = std::iter::once(params.leaky_slope)
        .chain(params.w1.iter().copied())
        .chain(params.b1.iter().copied())
        .chain(params.w2.iter().copied())
        .chain(params.b2.iter().copied());
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_params(path: &Path) -> Result<MlpParams, ParamsError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if magic != MAGIC {
        return Err(ParamsError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(ParamsError::BadVersion(version));
    }
    let d_in = read_u32(&mut r)? as usize;
    let d_hidden = read_u32(&mut r)? as usize;
    let leaky_slope = read_f64(&mut r)?;
    let mut read_vec = |n: usize| -> Result<Vec<f64>, ParamsError> {
        (0..n).map(|_| read_f64(&mut r)).collect()
    };
    let w1 = read_vec(d_hidden * d_in)?;
    let b1 = read_vec(d_hidden)?;
    let w2 = read_vec(5 * d_hidden)?;
    let b2v = read_vec(5)?;
    let mut b2 = [0.0; 5];
    b2.copy_from_slice(&b2v);
    Ok(MlpParams {
        d_in,
        d_hidden,
        w1,
        b1,
        w2,
        b2,
        leaky_slope,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), ParamsError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ParamsError::Truncated
        } else {
            ParamsError::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32, ParamsError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, ParamsError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
