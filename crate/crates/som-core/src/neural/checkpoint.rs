//! Checkpoint container: named tensors plus string metadata in a small
//! binary format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "SOMTNSR\0"
//! version u32
//! nmeta   u32, then per entry: klen u32, key, vlen u32, value (UTF-8)
//! ntensor u32, then per entry: nlen u32, name, rank u32,
//!                              dims u64 x rank, data f64-LE x prod(dims)
//! ```
//!
//! Entries are written in insertion order and read back in file order,
//! so save/load round-trips are byte-identical.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::autodiff::{ParamSet, Tensor};

pub const FORMAT_MAGIC: &[u8; 8] = b"SOMTNSR\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint tensor {name:?} has shape {got:?}, parameter wants {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("checkpoint is missing tensor {0:?}")]
    MissingTensor(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    /// Capture every parameter of `params`, insertion order.
    pub fn from_params(params: &ParamSet) -> Self {
        let tensors = params
            .iter()
            .map(|(_, p)| (p.name().to_string(), p.value().clone()))
            .collect();
        Self {
            meta: Vec::new(),
            tensors,
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.push((key.into(), value.into()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    /// Copy values into `params`. Every parameter must be present in the
    /// checkpoint with a matching shape; extra checkpoint tensors are
    /// ignored.
    pub fn apply_to(&self, params: &mut ParamSet) -> Result<(), CheckpointError> {
        // Validate everything before touching any value.
        let mut updates: Vec<(crate::autodiff::ParamId, &Tensor)> = Vec::new();
        for (id, p) in params.iter() {
            let t = self
                .tensor(p.name())
                .ok_or_else(|| CheckpointError::MissingTensor(p.name().to_string()))?;
            if t.shape() != p.value().shape() {
                return Err(CheckpointError::ShapeMismatch {
                    name: p.name().to_string(),
                    expected: p.value().shape().to_vec(),
                    got: t.shape().to_vec(),
                });
            }
            updates.push((id, t));
        }
        for (id, t) in updates {
            params.value_mut(id).data_mut().copy_from_slice(t.data());
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(FORMAT_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.meta.len() as u32).to_le_bytes())?;
        for (k, v) in &self.meta {
            write_str(w, k)?;
            write_str(w, v)?;
        }
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            write_str(w, name)?;
            w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
            for &d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for &x in t.data() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        read_exact(r, &mut magic, "magic")?;
        if &magic != FORMAT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(r, "version")?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let nmeta = read_u32(r, "meta count")?;
        let mut meta = Vec::with_capacity(nmeta as usize);
        for _ in 0..nmeta {
            let k = read_str(r, "meta key")?;
            let v = read_str(r, "meta value")?;
            meta.push((k, v));
        }
        let ntensor = read_u32(r, "tensor count")?;
        let mut tensors = Vec::with_capacity(ntensor as usize);
        for _ in 0..ntensor {
            let name = read_str(r, "tensor name")?;
            let rank = read_u32(r, "tensor rank")? as usize;
            if rank > 8 {
                return Err(CheckpointError::Corrupt(format!(
                    "tensor {name:?} claims rank {rank}"
                )));
            }
            let mut shape = Vec::with_capacity(rank);
            let mut total: u64 = 1;
            for _ in 0..rank {
                let mut b = [0u8; 8];
                read_exact(r, &mut b, "tensor dim")?;
                let d = u64::from_le_bytes(b);
                total = total.saturating_mul(d.max(1));
                shape.push(d as usize);
            }
            if total > 1 << 28 {
                return Err(CheckpointError::Corrupt(format!(
                    "tensor {name:?} claims {total} elements"
                )));
            }
            let count: usize = shape.iter().product();
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                let mut b = [0u8; 8];
                read_exact(r, &mut b, "tensor data")?;
                data.push(f64::from_le_bytes(b));
            }
            tensors.push((name, Tensor::from_shape(shape, data)));
        }
        Ok(Self { meta, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn write_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<(), CheckpointError> {
    r.read_exact(buf)
        .map_err(|e| CheckpointError::Corrupt(format!("truncated while reading {what}: {e}")))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_str(r: &mut impl Read, what: &str) -> Result<String, CheckpointError> {
    let len = read_u32(r, what)?;
    if len > 1 << 20 {
        return Err(CheckpointError::Corrupt(format!(
            "{what} claims length {len}"
        )));
    }
    let mut buf = vec![0u8; len as usize];
    read_exact(r, &mut buf, what)?;
    String::from_utf8(buf).map_err(|_| CheckpointError::Corrupt(format!("{what} is not UTF-8")))
}
