//! `RPFEAT01` feature files.
//!
//! ```text
//! magic    8 bytes  "RPFEAT01"
//! version  u32      1
//! K, L, C  u32 x 3
//! count    u32
//! count x { label u32, mask K*L bytes (0/1), data K*L*5 f64 }
//! crc32    u32      over every preceding byte, magic included
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::{FeatureDataset, FeatureTensor, POINT_WIDTH};
use crate::{Error, Result, Scalar};

pub const FEATURE_MAGIC: &[u8; 8] = b"RPFEAT01";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 5 * 4;

pub fn encode_features<T: Scalar>(fd: &FeatureDataset<T>) -> Vec<u8> {
    let cells = fd.scales() * fd.slots();
    let mut out = Vec::with_capacity(HEADER_LEN + fd.len() * (4 + cells * 41) + 4);
    out.extend_from_slice(FEATURE_MAGIC);
    for x in [
        VERSION,
        fd.scales() as u32,
        fd.slots() as u32,
        fd.num_classes() as u32,
        fd.len() as u32,
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for t in fd.tensors() {
        out.extend_from_slice(&(t.label() as u32).to_le_bytes());
        out.extend(t.mask().iter().map(|&m| m as u8));
        for &x in t.data() {
            out.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_features<T: Scalar>(bytes: &[u8]) -> Result<FeatureDataset<T>> {
    if bytes.len() < FEATURE_MAGIC.len() {
        return Err(Error::Truncated("missing magic".into()));
    }
    if &bytes[..8] != FEATURE_MAGIC {
        return Err(Error::VersionMismatch(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(FEATURE_MAGIC),
            String::from_utf8_lossy(&bytes[..8])
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated("incomplete header".into()));
    }
    let version = u32_at(bytes, 8);
    if version != VERSION {
        return Err(Error::VersionMismatch(format!("feature file version {version}")));
    }
    let [scales, slots, classes, count] =
        [12, 16, 20, 24].map(|at| u32_at(bytes, at) as usize);
    let cells = scales * slots;
    let record = 4 + cells + cells * POINT_WIDTH * 8;
    let expected = HEADER_LEN + count * record + 4;
    if bytes.len() < expected {
        return Err(Error::Truncated(format!(
            "{} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::format("feature file", 0, "trailing bytes after checksum"));
    }
    let stored = u32_at(bytes, expected - 4);
    let computed = crc32fast::hash(&bytes[..expected - 4]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut tensors = Vec::with_capacity(count);
    let mut at = HEADER_LEN;
    for _ in 0..count {
        let label = u32_at(bytes, at) as usize;
        at += 4;
        let mask = bytes[at..at + cells]
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::format("feature file", 0, format!("mask byte {b}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        at += cells;
        let data = bytes[at..at + cells * POINT_WIDTH * 8]
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        at += cells * POINT_WIDTH * 8;
        tensors.push(FeatureTensor::from_raw(scales, slots, data, mask, label)?);
    }
    FeatureDataset::new(tensors, scales, slots, classes)
}

pub fn write_features<T: Scalar>(fd: &FeatureDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_features(fd))?;
    Ok(())
}

pub fn read_features<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureDataset<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Ingestion {
        path: path.to_path_buf(),
        source,
    })?;
    decode_features(&bytes)
}
