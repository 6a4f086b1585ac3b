//! Wavefront OBJ reader. Only `v` and `f` records are interpreted.

use glam::DVec3;

use crate::error::{Error, Result};

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedMesh {
        location: format!("line {line}"),
        message: message.into(),
    }
}

pub(super) fn parse(bytes: &[u8]) -> Result<(Vec<DVec3>, Vec<Vec<u32>>)> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedMesh {
        location: format!("byte offset {}", e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;

    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    let mut polygon_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0f64; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| malformed(line_no, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| malformed(line_no, format!("bad coordinate {tok:?}")))?;
                    if !c.is_finite() {
                        return Err(malformed(line_no, "non-finite coordinate"));
                    }
                }
                vertices.push(DVec3::from_array(xyz));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| malformed(line_no, format!("bad face index {tok:?}")))?;
                    let resolved = match idx {
                        0 => return Err(malformed(line_no, "face index 0")),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved > u32::MAX as i64 {
                        return Err(malformed(line_no, format!("face index {idx} out of range")));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(malformed(line_no, "face needs at least 3 vertices"));
                }
                polygons.push(poly);
                polygon_lines.push(line_no);
            }
            _ => {}
        }
    }

    for (poly, &line_no) in polygons.iter().zip(&polygon_lines) {
        if let Some(&idx) = poly.iter().find(|&&i| i as usize >= vertices.len()) {
            return Err(malformed(
                line_no,
                format!("vertex {} referenced but only {} defined", idx + 1, vertices.len()),
            ));
        }
    }
    Ok((vertices, polygons))
}
