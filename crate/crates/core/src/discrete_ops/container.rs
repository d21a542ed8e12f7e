//! Flat binary container for fields.
//!
//! Layout: the magic `SKFIELD1`, a little-endian `u32` header length, a
//! JSON header, the values as little-endian `f64` (chart-major, node-major,
//! component-minor), and a SHA-256 digest of all preceding bytes.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::atlas::{AtlasDescriptor, ChartAtlas, FieldKind};
use super::field::Field;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SKFIELD1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub atlas: AtlasDescriptor,
    pub kind: FieldKind,
    pub components: usize,
    pub nodes: usize,
}

pub fn encode(field: &Field) -> Vec<u8> {
    let header = ContainerHeader {
        atlas: field.atlas().descriptor(),
        kind: field.kind(),
        components: field.kind().components(),
        nodes: field.node_count(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + 4 + json.len() + 8 * field.data().len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in field.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Parses a container, rebuilding the atlas from its descriptor.
pub fn decode(bytes: &[u8]) -> Result<Field> {
    let (header, data) = decode_raw(bytes)?;
    let atlas = Arc::new(ChartAtlas::from_descriptor(&header.atlas)?);
    Field::new(atlas, header.kind, data)
}

/// Parses a container onto an existing atlas, which must match.
pub fn decode_on(bytes: &[u8], atlas: &Arc<ChartAtlas>) -> Result<Field> {
    let (header, data) = decode_raw(bytes)?;
    if header.atlas != atlas.descriptor() {
        return Err(Error::AtlasMismatch(format!("container atlas {:?} differs from {:?}", header.atlas, atlas.descriptor())));
    }
    Field::new(atlas.clone(), header.kind, data)
}

pub fn decode_raw(bytes: &[u8]) -> Result<(ContainerHeader, Vec<f64>)> {
    if bytes.len() < 8 + 4 + 32 || &bytes[..8] != MAGIC {
        return Err(Error::Format("not a field container".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Integrity("field container checksum mismatch".into()));
    }
    let hlen = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    if 12 + hlen > body.len() {
        return Err(Error::Format("truncated container header".into()));
    }
    let header: ContainerHeader = serde_json::from_slice(&body[12..12 + hlen])?;
    if header.components != header.kind.components() {
        return Err(Error::Format(format!("{} fields have {} components, header says {}", header.kind.name(), header.kind.components(), header.components)));
    }
    let raw = &body[12 + hlen..];
    let want = header.nodes * header.components;
    if raw.len() != 8 * want {
        return Err(Error::Format(format!("expected {want} values, found {} bytes", raw.len())));
    }
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, data))
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let atlas = Arc::new(ChartAtlas::sphere(12).unwrap());
        let f = Field::from_fn(atlas.clone(), FieldKind::Sym2, |c, u| [u[0], c as f64, u[1] * u[1]]);
        let bytes = encode(&f);
        let g = decode(&bytes).unwrap();
        assert_eq!(g.data(), f.data());
        assert_eq!(g.kind(), FieldKind::Sym2);
        assert!(g.atlas().same_as(&atlas));
        let mut bad = bytes.clone();
        bad[40] ^= 1;
        assert!(matches!(decode(&bad), Err(Error::Integrity(_))));
        let other = Arc::new(ChartAtlas::sphere(14).unwrap());
        assert!(matches!(decode_on(&bytes, &other), Err(Error::AtlasMismatch(_))));
    }
}
