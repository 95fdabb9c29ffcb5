//! `.sfnw` layout, all integers little-endian:
//!
//! ```text
//! "SFNW" | u32 version | u64 manifest length | manifest JSON | f32 payload | u32 CRC32(payload)
//! ```
//!
//! The manifest is canonical JSON (keys sorted, no whitespace) holding the
//! engine configuration and a directory of `{name, shape, offset}` entries,
//! offsets in bytes from the start of the payload. Tensors are stored in name
//! order, so saving the same set twice gives identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeightsError};
use crate::graph::EngineConfig;
use crate::weights::{WeightSet, WeightTensor};

pub const MAGIC: [u8; 4] = *b"SFNW";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 16;

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: EngineConfig,
    format_version: u32,
    tensors: Vec<Entry>,
}

fn manifest_err(msg: impl Into<String>) -> WeightsError {
    WeightsError::Manifest(msg.into())
}

pub fn to_bytes(ws: &WeightSet) -> Result<Vec<u8>> {
    let mut offset = 0u64;
    let mut entries = Vec::with_capacity(ws.tensors().len());
    for (name, t) in ws.tensors() {
        entries.push(Entry {
            name: name.clone(),
            shape: t.shape.clone(),
            offset,
        });
        offset += 4 * t.data.len() as u64;
    }
    let manifest = Manifest {
        config: ws.config().clone(),
        format_version: FORMAT_VERSION,
        tensors: entries,
    };
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(&manifest).map_err(|e| manifest_err(e.to_string()))?;
    let json = serde_json::to_vec(&value).map_err(|e| manifest_err(e.to_string()))?;

    let mut payload = Vec::with_capacity(offset as usize);
    for t in ws.tensors().values() {
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + json.len() + payload.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<WeightSet> {
    let truncated = |what: &str| WeightsError::Truncated(format!("{what} ({} bytes in file)", bytes.len()));
    let magic: [u8; 4] = bytes
        .get(..4)
        .ok_or_else(|| truncated("no magic bytes"))?
        .try_into()
        .expect("4 bytes");
    if magic != MAGIC {
        return Err(WeightsError::BadMagic(magic).into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated("incomplete header").into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(WeightsError::UnsupportedVersion(version).into());
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let manifest_end = usize::try_from(manifest_len)
        .ok()
        .and_then(|n| n.checked_add(HEADER_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| truncated("manifest runs past the end"))?;
    let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..manifest_end])
        .map_err(|e| manifest_err(e.to_string()))?;
    if manifest.format_version != version {
        return Err(manifest_err(format!(
            "manifest says version {}, header says {version}",
            manifest.format_version
        ))
        .into());
    }

    let mut payload_len = 0usize;
    for e in &manifest.tensors {
        if e.offset != payload_len as u64 {
            return Err(manifest_err(format!(
                "tensor {} at offset {}, expected {payload_len}",
                e.name, e.offset
            ))
            .into());
        }
        let numel = e
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| manifest_err(format!("tensor {} is too large", e.name)))?;
        payload_len = payload_len
            .checked_add(numel)
            .ok_or_else(|| manifest_err("payload is too large"))?;
    }
    let payload_end = manifest_end
        .checked_add(payload_len)
        .ok_or_else(|| manifest_err("payload is too large"))?;
    if bytes.len() < payload_end + 4 {
        return Err(truncated("payload or checksum missing").into());
    }
    if bytes.len() > payload_end + 4 {
        return Err(manifest_err(format!(
            "{} trailing bytes after the checksum",
            bytes.len() - payload_end - 4
        ))
        .into());
    }
    let payload = &bytes[manifest_end..payload_end];
    let stored = u32::from_le_bytes(bytes[payload_end..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(WeightsError::Checksum { stored, computed }.into());
    }

    let mut tensors = BTreeMap::new();
    for e in manifest.tensors {
        let start = e.offset as usize;
        let n: usize = e.shape.iter().product();
        let data = payload[start..start + 4 * n]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        if tensors
            .insert(e.name.clone(), WeightTensor { shape: e.shape, data })
            .is_some()
        {
            return Err(manifest_err(format!("tensor {} listed twice", e.name)).into());
        }
    }
    WeightSet::new(manifest.config, tensors)
}

pub fn write_to(ws: &WeightSet, mut w: impl Write) -> Result<()> {
    w.write_all(&to_bytes(ws)?)?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<WeightSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

pub fn save(ws: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_bytes(ws)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<WeightSet> {
    from_bytes(&fs::read(path)?)
}
