//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field      | type           |
//! |------------|----------------|
//! | magic      | `b"NCLF"`      |
//! | version    | `u32` (= 1)    |
//! | kind       | `u8` (0 bias, 1 cp, 2 primitive-nclf, 3 nclf) |
//! | dims       | `3 × u64`      |
//! | ranks      | `u64` each; 0 for bias, `R` for cp, `R_mu, R_A` for primitive-nclf, `R_S, R_A, R_31-, R_31+, R_23-, R_23+` for nclf |
//! | tables     | `f64` each, table by table in model order (U, V, W per component, then ζ/α) |
//! | biases     | `f64`: `b0`, then `b1[I]`, `b2[J]`, `b3[K]` |
//!
//! Reading is all-or-nothing: trailing or missing bytes are a format error.

use std::io::{Read, Write};

use super::{LatentModel, Model, ModelKind, ModelShape};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NCLF";
pub const FORMAT_VERSION: u32 = 1;

pub fn serialize_params(model: &Model) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(model.kind().code());
    for d in model.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for r in model.shape().ranks() {
        out.extend_from_slice(&(r as u64).to_le_bytes());
    }
    for t in model.tables() {
        for x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let b = model.biases();
    out.extend_from_slice(&b.b0.to_le_bytes());
    for x in b.b1.iter().chain(&b.b2).chain(&b.b3) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn write_model<W: Write>(model: &Model, mut w: W) -> Result<()> {
    w.write_all(&serialize_params(model))?;
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated stream while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, out: &mut [f64], what: &str) -> Result<()> {
        let bytes = self.take(8 * out.len(), what)?;
        for (x, chunk) in out.iter_mut().zip(bytes.chunks_exact(8)) {
            *x = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(())
    }
}

// Refuses sizes that cannot possibly fit in the remaining bytes before allocating.
fn checked_size(value: u64, what: &str, remaining: usize) -> Result<usize> {
    let v = usize::try_from(value).map_err(|_| Error::Format(format!("{what} {value} too large")))?;
    if v > remaining {
        return Err(Error::Format(format!(
            "{what} {value} exceeds the {remaining} bytes left in the stream"
        )));
    }
    Ok(v)
}

pub fn deserialize_params(bytes: &[u8]) -> Result<Model> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic bytes (not an NCLF model file)".into()));
    }
    let version = u32::from_le_bytes(c.take(4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let code = c.take(1, "model kind")?[0];
    let kind = ModelKind::from_code(code)
        .ok_or_else(|| Error::Format(format!("unknown model kind byte {code}")))?;
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = checked_size(c.u64("dims")?, "dimension", bytes.len())?;
    }
    let n_ranks = ModelShape::default_for(kind).ranks().len();
    let mut ranks = Vec::with_capacity(n_ranks);
    for _ in 0..n_ranks {
        ranks.push(checked_size(c.u64("ranks")?, "rank", bytes.len())?);
    }
    let shape = ModelShape::from_ranks(kind, &ranks).map_err(|e| Error::Format(e.to_string()))?;
    let mut model = Model::zeros(shape, dims).map_err(|e| Error::Format(e.to_string()))?;
    let expected = model.num_params() + 1 + dims.iter().sum::<usize>();
    if bytes.len() - c.pos != 8 * expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {} for {shape} with dims {dims:?}",
            bytes.len() - c.pos,
            8 * expected
        )));
    }
    for t in model.tables_mut() {
        c.f64s(&mut t.data, "table")?;
    }
    let b = model.biases_mut();
    b.b0 = c.f64("b0")?;
    c.f64s(&mut b.b1, "b1")?;
    c.f64s(&mut b.b2, "b2")?;
    c.f64s(&mut b.b3, "b3")?;
    Ok(model)
}

pub fn read_model<R: Read>(mut r: R) -> Result<Model> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    deserialize_params(&bytes)
}

/// Reads a model and checks its kind.
pub fn read_model_of_kind<R: Read>(r: R, expected: ModelKind) -> Result<Model> {
    let model = read_model(r)?;
    if model.kind() != expected {
        return Err(Error::KindMismatch {
            expected: expected.to_string(),
            found: model.kind().to_string(),
        });
    }
    Ok(model)
}
