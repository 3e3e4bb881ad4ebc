//! Binary checkpoint layout, little-endian:
//! magic `SCIC`, version u32, scalar width u32 (4 or 8), dimension u32,
//! config JSON (u32 length + bytes), tensor count u32, then per tensor
//! rank u32, dims u32 x rank, values at the scalar width.

use std::io::{Read, Write};
use std::path::Path;

use super::{RemapConfig, RemapParams, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SCIC";
pub const CHECKPOINT_VERSION: u32 = 1;

fn width<T>() -> u32 {
    std::mem::size_of::<T>() as u32
}

pub fn write_checkpoint<T: Scalar>(params: &RemapParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let config = serde_json::to_vec(&params.config)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    for v in [CHECKPOINT_VERSION, width::<T>(), params.dim as u32, config.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&config)?;
    w.write_all(&(params.tensors.len() as u32).to_le_bytes())?;
    for t in &params.tensors {
        w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
        for &d in &t.shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in &t.data {
            // f32 widens to f64 losslessly, so narrowing back is exact
            match width::<T>() {
                4 => w.write_all(&(v.to_f64_lossy() as f32).to_le_bytes())?,
                _ => w.write_all(&v.to_f64_lossy().to_le_bytes())?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::BadHeader(format!("checkpoint truncated while reading {what}")),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn u32_(r: &mut impl Read, what: &str) -> Result<u32> {
    take::<4>(r, what).map(u32::from_le_bytes)
}

pub fn read_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<RemapParams<T>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    if &take::<4>(&mut r, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::BadHeader("magic bytes are not SCIC".into()));
    }
    let version = u32_(&mut r, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::BadHeader(format!("unsupported checkpoint version {version}")));
    }
    let w = u32_(&mut r, "scalar width")?;
    if w != width::<T>() {
        return Err(Error::BadHeader(format!("checkpoint stores {w}-byte scalars, reader expects {}", width::<T>())));
    }
    let dim = u32_(&mut r, "dimension")? as usize;
    let len = u32_(&mut r, "config length")? as usize;
    let mut config = vec![0u8; len];
    r.read_exact(&mut config).map_err(|_| Error::BadHeader("checkpoint truncated in config".into()))?;
    let config: RemapConfig = serde_json::from_slice(&config)?;
    let count = u32_(&mut r, "tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = u32_(&mut r, "tensor rank")? as usize;
        let shape = (0..rank).map(|_| u32_(&mut r, "tensor shape").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| match w {
                4 => take::<4>(&mut r, "tensor data").map(|b| T::lit(f32::from_le_bytes(b) as f64)),
                _ => take::<8>(&mut r, "tensor data").map(|b| T::lit(f64::from_le_bytes(b))),
            })
            .collect::<Result<Vec<_>>>()?;
        tensors.push(Tensor { shape, data });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::BadHeader("trailing bytes after checkpoint".into()));
    }
    RemapParams::from_tensors(dim, config, tensors)
}
