//! Binary STL reader: 80-byte header, little-endian `u32` triangle count,
//! then 50-byte records (normal, three corners, attribute word).

use std::collections::HashMap;

use glam::DVec3;

use crate::error::{Error, Result};

const HEADER: usize = 80;
const RECORD: usize = 50;

fn malformed(offset: usize, message: impl Into<String>) -> Error {
    Error::MalformedMesh {
        location: format!("byte offset {offset}"),
        message: message.into(),
    }
}

pub(super) fn looks_binary(bytes: &[u8]) -> bool {
    bytes.len() >= HEADER + 4 && {
        let n = u32::from_le_bytes(bytes[HEADER..HEADER + 4].try_into().unwrap()) as usize;
        bytes.len() == HEADER + 4 + n * RECORD
    }
}

fn read_f32(bytes: &[u8], offset: usize) -> Result<f64> {
    let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
    if !v.is_finite() {
        return Err(malformed(offset, "non-finite coordinate"));
    }
    Ok(v as f64)
}

/// Corners are welded on exact coordinate equality so adjacent facets share
/// vertex indices.
pub(super) fn parse(bytes: &[u8]) -> Result<(Vec<DVec3>, Vec<[u32; 3]>)> {
    if bytes.len() < HEADER + 4 {
        return Err(malformed(bytes.len(), "file shorter than the 84-byte STL preamble"));
    }
    let count = u32::from_le_bytes(bytes[HEADER..HEADER + 4].try_into().unwrap()) as usize;
    let expected = HEADER + 4 + count * RECORD;
    if bytes.len() < expected {
        let record = (bytes.len() - HEADER - 4) / RECORD;
        let msg = if bytes.starts_with(b"solid") {
            "truncated record (ASCII STL is not supported)"
        } else {
            "truncated record"
        };
        return Err(malformed(HEADER + 4 + record * RECORD, msg));
    }
    if bytes.len() > expected {
        return Err(malformed(expected, format!("trailing data after {count} triangles")));
    }

    let mut vertices = Vec::new();
    let mut lookup: HashMap<[u64; 3], u32> = HashMap::new();
    let mut triangles = Vec::with_capacity(count);
    for r in 0..count {
        let base = HEADER + 4 + r * RECORD;
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let off = base + 12 + 12 * k;
            let p = DVec3::new(
                read_f32(bytes, off)?,
                read_f32(bytes, off + 4)?,
                read_f32(bytes, off + 8)?,
            );
            // +0.0 so that -0.0 and 0.0 weld together
            let key = [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
            *slot = *lookup.entry(key).or_insert_with(|| {
                vertices.push(p);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(tri);
    }
    Ok((vertices, triangles))
}
