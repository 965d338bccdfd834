//! Binary checkpoint format.
//!
//! | bytes            | content                                         |
//! |------------------|-------------------------------------------------|
//! | 5                | magic `LNTM1`                                   |
//! | 4                | H, u32 little-endian                            |
//! | 4                | K, u32 little-endian                            |
//! | 1                | activation: 0 = sigmoid, 1 = tanh               |
//! | 4                | task-name length N in bytes, u32 little-endian  |
//! | N                | task name, UTF-8                                |
//! | 8·H·K            | W, row-major (H rows of K), f64 little-endian   |
//! | 8·K·H            | U, row-major (K rows of H), f64 little-endian   |
//! | 8·K              | b, f64 little-endian                            |
//! | 8·H              | c, f64 little-endian                            |
//!
//! Parameters are always stored as `f64`; `f32` models widen losslessly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::scalar::{Activation, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"LNTM1";

pub fn write_checkpoint<T: Scalar, W: Write>(params: &ModelParams<T>, task: &str, mut out: W) -> std::io::Result<()> {
    let (h, k) = params.w.dim();
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(h as u32).to_le_bytes())?;
    out.write_all(&(k as u32).to_le_bytes())?;
    out.write_all(&[params.activation.code()])?;
    out.write_all(&(task.len() as u32).to_le_bytes())?;
    out.write_all(task.as_bytes())?;
    let arrays = params.w.iter().chain(params.u.iter()).chain(params.b.iter()).chain(params.c.iter());
    for x in arrays {
        out.write_all(&x.wide().to_le_bytes())?;
    }
    out.flush()
}

pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, task: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    params.check_shapes()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(params, task, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parse a checkpoint from raw bytes; `origin` names the source in errors.
pub fn read_checkpoint<T: Scalar>(bytes: &[u8], origin: &Path) -> Result<(ModelParams<T>, String)> {
    let mut cur = Cursor { bytes, pos: 0, origin };
    if cur.take(5)? != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{} is not an LNTM1 checkpoint", origin.display())));
    }
    let h = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let code = cur.take(1)?[0];
    let activation = Activation::from_code(code)
        .ok_or_else(|| Error::Format(format!("unknown activation code {code} in {}", origin.display())))?;
    let name_len = cur.u32()? as usize;
    let name = std::str::from_utf8(cur.take(name_len)?)
        .map_err(|_| Error::Format(format!("task name in {} is not UTF-8", origin.display())))?
        .to_string();
    let w = Array2::from_shape_vec((h, k), cur.floats(h * k)?).expect("length checked");
    let u = Array2::from_shape_vec((k, h), cur.floats(k * h)?).expect("length checked");
    let b = Array1::from_vec(cur.floats(k)?);
    let c = Array1::from_vec(cur.floats(h)?);
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} has {} trailing bytes",
            origin.display(),
            bytes.len() - cur.pos
        )));
    }
    Ok((ModelParams { w, u, b, c, activation }, name))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<(ModelParams<T>, String)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes, path)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated(self.origin.to_path_buf())),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn floats<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Truncated(self.origin.to_path_buf()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect())
    }
}
