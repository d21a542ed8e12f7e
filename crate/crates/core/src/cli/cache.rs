//! On-disk cache of assembled operators keyed by content hash.
//!
//! The key is the SHA-256 of the tool version, the operator label, the
//! atlas descriptor hash and the raw bytes of the metric and weight. An
//! entry lives at `<dir>/operators/<key[..2]>/<key>.op`:
//!
//! * magic `SKOPER01`,
//! * little-endian `u32` header length and a JSON [`EntryHeader`],
//! * `indptr` and `indices` as `u64`, `data` as `f64`, all little-endian,
//! * a SHA-256 digest of everything before it.
//!
//! Matrices round-trip bit for bit, so cached and fresh runs agree exactly.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sprs::CsMat;

use crate::discrete_ops::assembly::hex;
use crate::discrete_ops::{AssembledOperator, Space, Symmetry};
use crate::error::{Error, Result};
use crate::soliton_core::SolitonPair;

pub const CACHE_ENV: &str = "SOLITONKIT_CACHE_DIR";
pub const DEFAULT_DIR: &str = ".solitonkit-cache";
const MAGIC: &[u8; 8] = b"SKOPER01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryHeader {
    pub label: String,
    pub domain: Space,
    pub codomain: Space,
    pub symmetry: Symmetry,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

/// One cache lookup, for the report's provenance section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub label: String,
    pub key: String,
    pub hit: bool,
}

pub struct OperatorCache {
    dir: PathBuf,
    records: Mutex<Vec<CacheRecord>>,
}

/// The environment variable, then `configured`, then [`DEFAULT_DIR`].
pub fn resolve_dir(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_DIR)),
    }
}

/// Content key of an operator built from `pair`.
pub fn operator_key(label: &str, pair: &SolitonPair) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update([0]);
    h.update(label.as_bytes());
    h.update([0]);
    h.update(pair.geometry().atlas().descriptor_hash());
    for x in pair.metric().field().data().iter().chain(pair.f().data()) {
        h.update(x.to_le_bytes());
    }
    hex(&h.finalize())
}

pub fn encode(op: &AssembledOperator) -> Vec<u8> {
    let m = if op.matrix.is_csr() { op.matrix.clone() } else { op.matrix.to_csr() };
    let header = EntryHeader {
        label: op.label.clone(),
        domain: op.domain.clone(),
        codomain: op.codomain.clone(),
        symmetry: op.symmetry,
        rows: m.rows(),
        cols: m.cols(),
        nnz: m.nnz(),
    };
    let json = serde_json::to_vec(&header).expect("serializable header");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * (m.rows() + 1 + 2 * m.nnz()) + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let (indptr, indices, data) = (m.indptr(), m.indices(), m.data());
    for p in indptr.as_slice().expect("contiguous indptr") {
        out.extend_from_slice(&(*p as u64).to_le_bytes());
    }
    for i in indices {
        out.extend_from_slice(&(*i as u64).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8]) -> Result<AssembledOperator> {
    let bad = |m: &str| Error::Format(format!("operator cache entry: {m}"));
    if bytes.len() < 12 + 32 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(bad("checksum mismatch"));
    }
    let len = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let header: EntryHeader = serde_json::from_slice(body.get(12..12 + len).ok_or_else(|| bad("truncated header"))?)?;
    let mut at = 12 + len;
    let expected = at + 8 * (header.rows + 1 + 2 * header.nnz);
    if body.len() != expected {
        return Err(bad("payload length"));
    }
    let mut word = || {
        let w: [u8; 8] = body[at..at + 8].try_into().unwrap();
        at += 8;
        w
    };
    let indptr: Vec<usize> = (0..=header.rows).map(|_| u64::from_le_bytes(word()) as usize).collect();
    let indices: Vec<usize> = (0..header.nnz).map(|_| u64::from_le_bytes(word()) as usize).collect();
    let data: Vec<f64> = (0..header.nnz).map(|_| f64::from_le_bytes(word())).collect();
    let matrix = CsMat::try_new((header.rows, header.cols), indptr, indices, data).map_err(|e| bad(&e.3.to_string()))?;
    if header.domain.len() != header.cols || header.codomain.len() != header.rows {
        return Err(bad("spaces do not match the matrix"));
    }
    Ok(AssembledOperator::new(matrix, header.domain, header.codomain, header.label).with_symmetry(header.symmetry))
}

impl OperatorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        OperatorCache { dir: dir.into(), records: Mutex::new(Vec::new()) }
    }

    /// Cache at [`resolve_dir`].
    pub fn from_env(configured: Option<&Path>) -> Self {
        Self::new(resolve_dir(configured))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join("operators").join(&key[..2]).join(format!("{key}.op"))
    }

    /// Loads the operator for `(label, pair)` or builds and stores it.
    /// Unreadable entries are rebuilt and overwritten.
    pub fn get_or_build(
        &self,
        label: &str,
        pair: &SolitonPair,
        build: impl Fn(&SolitonPair) -> Result<AssembledOperator>,
    ) -> Result<AssembledOperator> {
        let key = operator_key(label, pair);
        let path = self.entry_path(&key);
        let cached = std::fs::read(&path).ok().and_then(|b| decode(&b).ok());
        let hit = cached.is_some();
        let op = match cached {
            Some(op) => op,
            None => {
                let op = build(pair)?;
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                // Write then rename so concurrent readers never see a partial entry.
                let tmp = path.with_extension(format!("tmp{}", std::process::id()));
                std::fs::write(&tmp, encode(&op))?;
                std::fs::rename(&tmp, &path)?;
                op
            }
        };
        self.records.lock().expect("cache log").push(CacheRecord { label: label.into(), key, hit });
        Ok(op)
    }

    /// Lookups so far, in order.
    pub fn records(&self) -> Vec<CacheRecord> {
        self.records.lock().expect("cache log").clone()
    }
}
