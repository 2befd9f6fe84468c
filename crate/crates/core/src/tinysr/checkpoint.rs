//! Binary checkpoints.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic     8 bytes  "PSPLCKPT"
//! version   u32      1
//! scale     u32
//! layers    u32
//! per layer in_channels u32, out_channels u32, kernel u32, relu u8
//! per layer weights then biases as f64 LE
//! ```

use std::fs;
use std::path::Path;

use super::{Architecture, ConvSpec, LayerParams, SrModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PSPLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &SrModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

/// Load whatever architecture the checkpoint describes.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SrModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| match reason {
        DecodeError::Malformed(r) => Error::malformed(path, r),
        DecodeError::Invalid(e) => e,
    })
}

/// Load a checkpoint and require it to match `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &Architecture) -> Result<SrModel> {
    let model = load_checkpoint(path)?;
    if model.architecture() != expected {
        return Err(Error::ArchitectureMismatch(format!(
            "checkpoint has {:?}, expected {:?}",
            model.architecture(),
            expected
        )));
    }
    Ok(model)
}

pub(crate) fn encode(model: &SrModel) -> Vec<u8> {
    let arch = model.architecture();
    let mut out = Vec::with_capacity(32 + arch.parameter_count() * 8);
    out.extend_from_slice(MAGIC);
    let put = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put(&mut out, CHECKPOINT_VERSION as usize);
    put(&mut out, arch.scale);
    put(&mut out, arch.layers.len());
    for l in &arch.layers {
        put(&mut out, l.in_channels);
        put(&mut out, l.out_channels);
        put(&mut out, l.kernel);
        out.push(l.relu as u8);
    }
    for v in model.parameter_values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Debug)]
pub(crate) enum DecodeError {
    Malformed(String),
    Invalid(Error),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(DecodeError::Malformed("truncated checkpoint".into())),
        }
    }

    fn u32(&mut self) -> std::result::Result<usize, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> std::result::Result<f64, DecodeError> {
        let b = self.take(8)?;
        let mut raw = [0u8; 8];
        raw.copy_from_slice(b);
        Ok(f64::from_le_bytes(raw))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> std::result::Result<SrModel, DecodeError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(MAGIC.len())? != MAGIC {
        return Err(DecodeError::Malformed(
            "not a checkpoint (bad magic)".into(),
        ));
    }
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(DecodeError::Malformed(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let scale = cur.u32()?;
    let count = cur.u32()?;
    if count == 0 || count > 1024 {
        return Err(DecodeError::Malformed(format!(
            "implausible layer count {count}"
        )));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let in_channels = cur.u32()?;
        let out_channels = cur.u32()?;
        let kernel = cur.u32()?;
        let relu = match cur.take(1)?[0] {
            0 => false,
            1 => true,
            other => return Err(DecodeError::Malformed(format!("bad relu flag {other}"))),
        };
        layers.push(ConvSpec {
            in_channels,
            out_channels,
            kernel,
            relu,
        });
    }
    let arch = Architecture { layers, scale };
    arch.validate().map_err(DecodeError::Invalid)?;
    let expected = arch.parameter_count() * 8;
    if bytes.len() - cur.pos != expected {
        return Err(DecodeError::Malformed(format!(
            "parameter payload is {} bytes, expected {expected}",
            bytes.len() - cur.pos
        )));
    }
    let mut params = Vec::with_capacity(arch.layers.len());
    for spec in &arch.layers {
        let weight = (0..spec.weight_len())
            .map(|_| cur.f64())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let bias = (0..spec.out_channels)
            .map(|_| cur.f64())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(DecodeError::Malformed("non-finite parameter".into()));
        }
        params.push(LayerParams { weight, bias });
    }
    Ok(SrModel { arch, params })
}
