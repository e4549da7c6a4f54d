//! Binary model bundle.
//!
//! Layout: 8-byte magic `CRWDBNDL`, u32 LE format version, 32-byte SHA-256
//! of the payload, 32-byte SHA-256 of the feature registry, u64 LE payload
//! length, then the bincode payload: the producing crate version followed by
//! the trained pipeline. No timestamps, so equal models give byte-identical
//! files.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureRegistry;
use crate::pipeline::TrainedPipeline;

pub const MAGIC: &[u8; 8] = b"CRWDBNDL";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 32 + 32 + 8;

pub fn producer() -> String {
    format!("crowdcast-core {}", env!("CARGO_PKG_VERSION"))
}

pub fn registry_hash(registry: &FeatureRegistry) -> [u8; 32] {
    let bytes = bincode::serialize(registry).expect("registry serializes");
    Sha256::digest(bytes).into()
}

fn encode(pipeline: &TrainedPipeline, registry_digest: [u8; 32]) -> Result<Vec<u8>> {
    let payload = bincode::serialize(&(producer(), pipeline)).map_err(|e| Error::Bundle(e.to_string()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&registry_digest);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn to_bytes(pipeline: &TrainedPipeline) -> Result<Vec<u8>> {
    encode(pipeline, registry_hash(&pipeline.featurizer.registry()))
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedPipeline> {
    from_bytes_with_producer(bytes).map(|(_, p)| p)
}

/// Also returns the producer string recorded at save time.
pub fn from_bytes_with_producer(bytes: &[u8]) -> Result<(String, TrainedPipeline)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Bundle(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Bundle("not a model bundle (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Bundle(format!("unsupported bundle version {version}")));
    }
    let checksum = &bytes[12..44];
    let stored_registry = &bytes[44..76];
    let len = u64::from_le_bytes(bytes[76..84].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len {
        return Err(Error::Bundle(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    let actual = Sha256::digest(payload);
    if actual.as_slice() != checksum {
        return Err(Error::HashMismatch {
            expected: hex::encode(checksum),
            actual: hex::encode(actual),
        });
    }
    let (producer, pipeline): (String, TrainedPipeline) =
        bincode::deserialize(payload).map_err(|e| Error::Bundle(e.to_string()))?;
    let recomputed = registry_hash(&pipeline.featurizer.registry());
    if recomputed != stored_registry {
        return Err(Error::HashMismatch {
            expected: hex::encode(stored_registry),
            actual: hex::encode(recomputed),
        });
    }
    Ok((producer, pipeline))
}

pub fn save_bundle(pipeline: &TrainedPipeline, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(pipeline)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<TrainedPipeline> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
