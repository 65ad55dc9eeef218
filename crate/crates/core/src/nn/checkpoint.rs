//! `RPCKPT01` checkpoints.
//!
//! ```text
//! magic    8 bytes  "RPCKPT01"
//! version  u32      1
//! count    u32
//! count x { name_len u32, name utf-8, trainable u8, ndims u32,
//!           dims u32 x ndims, data f64 x prod(dims) }
//! crc32    u32      over every preceding byte
//! ```
//!
//! Little-endian throughout.

use std::fs;
use std::path::Path;

use super::{ParamStore, Tensor};
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RPCKPT01";
const VERSION: u32 = 1;

pub fn encode_checkpoint<T: Scalar>(store: &ParamStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for id in store.ids() {
        let name = store.name(id).as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.push(store.is_trainable(id) as u8);
        let t = store.get(id);
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in t.data() {
            out.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Truncated(format!("checkpoint ends at byte {}", self.bytes.len())));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<ParamStore<T>> {
    if bytes.len() >= 8 && &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::VersionMismatch("not an RPCKPT01 checkpoint".into()));
    }
    if bytes.len() < 20 {
        return Err(Error::Truncated("checkpoint header".into()));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    let mut r = Reader { bytes: body, at: 8 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch(format!("checkpoint version {version}")));
    }
    let count = r.u32()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::format("checkpoint", 0, "parameter name is not utf-8"))?;
        let trainable = r.take(1)?[0] != 0;
        let ndims = r.u32()? as usize;
        let shape = (0..ndims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let data = r
            .take(len * 8)?
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        store.add(name, Tensor::new(shape, data)?, trainable);
    }
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    if r.at != body.len() {
        return Err(Error::format("checkpoint", 0, "trailing bytes"));
    }
    Ok(store)
}

pub fn write_checkpoint<T: Scalar>(store: &ParamStore<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(store))?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ParamStore<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Ingestion {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&bytes)
}
