//! PLY point clouds with `x y z intensity bounce ray_id [red green blue]`
//! vertex properties, in ASCII or binary little-endian encoding.

use std::fmt::Write as _;
use std::io::Write as _;

use sarprior_core::{DVec3, PointCloud, ScatterPoint};

use crate::args::PlyEncoding;

/// Bounce colors: single blue, double yellow, triple red, more purple.
pub fn bounce_color(bounce: u8) -> [u8; 3] {
    match bounce {
        0 | 1 => [0, 0, 255],
        2 => [255, 255, 0],
        3 => [255, 0, 0],
        _ => [128, 0, 128],
    }
}

pub fn encode(cloud: &PointCloud, encoding: PlyEncoding, colors: bool) -> Result<Vec<u8>, String> {
    let points = cloud.points();
    if let Some(p) = points.iter().find(|p| p.ray_id > u64::from(u32::MAX)) {
        return Err(format!("ray id {} does not fit the uint ray_id property", p.ray_id));
    }
    let mut header = String::from("ply\n");
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::Binary => "binary_little_endian",
    };
    let _ = writeln!(header, "format {format} 1.0");
    let _ = writeln!(header, "comment generated by sarprior {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(header, "comment azimuth_deg {}", cloud.azimuth_deg);
    let _ = writeln!(header, "comment depression_deg {}", cloud.depression_deg);
    let _ = writeln!(header, "element vertex {}", points.len());
    for prop in [
        "float x",
        "float y",
        "float z",
        "float intensity",
        "uchar bounce",
        "uint ray_id",
    ] {
        let _ = writeln!(header, "property {prop}");
    }
    if colors {
        for c in ["red", "green", "blue"] {
            let _ = writeln!(header, "property uchar {c}");
        }
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    for p in points {
        let [x, y, z] = p.position.as_vec3().to_array();
        let rgb = bounce_color(p.bounce);
        match encoding {
            PlyEncoding::Ascii => {
                let _ = write!(
                    out,
                    "{x:?} {y:?} {z:?} {:?} {} {}",
                    p.intensity as f32, p.bounce, p.ray_id
                );
                if colors {
                    let _ = write!(out, " {} {} {}", rgb[0], rgb[1], rgb[2]);
                }
                out.push(b'\n');
            }
            PlyEncoding::Binary => {
                for v in [x, y, z, p.intensity as f32] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.push(p.bounce);
                out.extend_from_slice(&(p.ray_id as u32).to_le_bytes());
                if colors {
                    out.extend_from_slice(&rgb);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    /// Floats are rounded to the declared width, integers must be exact.
    fn parse_ascii(self, word: &str) -> Option<f64> {
        match self {
            Self::F32 => word.parse::<f32>().ok().map(f64::from),
            Self::F64 => word.parse().ok(),
            _ => word.parse::<i64>().ok().map(|v| v as f64),
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

struct Element {
    name: String,
    count: usize,
    props: Vec<(String, Scalar)>,
}

/// Point cloud parsed from PLY, with the view angles found in its comments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCloud {
    pub points: Vec<ScatterPoint>,
    pub azimuth_deg: Option<f64>,
    pub depression_deg: Option<f64>,
}

impl ParsedCloud {
    pub fn into_cloud(self, azimuth_deg: f64, depression_deg: f64) -> PointCloud {
        let k_max = self.points.iter().map(|p| u32::from(p.bounce)).max().unwrap_or(1);
        PointCloud::new(self.points, k_max, azimuth_deg, depression_deg)
    }
}

pub fn decode(bytes: &[u8]) -> Result<ParsedCloud, String> {
    const END: &[u8] = b"end_header\n";
    let header_end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or("missing end_header line")?
        + END.len();
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| "header is not UTF-8")?;
    let mut lines = header.lines().enumerate();
    if lines.next().map(|(_, l)| l.trim()) != Some("ply") {
        return Err("not a PLY file (missing magic line)".into());
    }

    let mut binary = None;
    let mut azimuth_deg = None;
    let mut depression_deg = None;
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in lines {
        let at = |msg: &str| format!("header line {}: {msg}", i + 1);
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", "1.0"] => binary = Some(false),
            ["format", "binary_little_endian", "1.0"] => binary = Some(true),
            ["format", other, ..] => return Err(at(&format!("unsupported format {other}"))),
            ["comment", "azimuth_deg", v] => azimuth_deg = Some(v.parse().map_err(|_| at("bad azimuth"))?),
            ["comment", "depression_deg", v] => depression_deg = Some(v.parse().map_err(|_| at("bad depression"))?),
            ["comment", ..] | ["obj_info", ..] | ["end_header"] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| at("bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ..] => return Err(at("list properties are not supported")),
            ["property", ty, name] => {
                let ty = Scalar::parse(ty).ok_or_else(|| at(&format!("unknown type {ty}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| at("property before any element"))?
                    .props
                    .push((name.to_string(), ty));
            }
            _ => return Err(at(&format!("unrecognized line {line:?}"))),
        }
    }
    let binary = binary.ok_or("missing format line")?;

    let vertex_index = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or("no vertex element")?;
    let vertex = &elements[vertex_index];
    let col = |name: &str| vertex.props.iter().position(|(n, _)| n == name);
    let required = |name: &str| col(name).ok_or(format!("vertex element lacks property {name}"));
    let (cx, cy, cz, ci, cb) = (
        required("x")?,
        required("y")?,
        required("z")?,
        required("intensity")?,
        required("bounce")?,
    );
    let cid = col("ray_id");

    let body = &bytes[header_end..];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(vertex.count);
    if binary {
        let mut offset = 0;
        for (ei, element) in elements.iter().enumerate() {
            let stride: usize = element.props.iter().map(|(_, t)| t.size()).sum();
            for _ in 0..element.count {
                let record = body
                    .get(offset..offset + stride)
                    .ok_or_else(|| format!("binary body truncated at byte offset {}", header_end + offset))?;
                if ei == vertex_index {
                    let mut at = 0;
                    let mut row = Vec::with_capacity(element.props.len());
                    for (_, t) in &element.props {
                        row.push(t.read_le(&record[at..]));
                        at += t.size();
                    }
                    rows.push(row);
                }
                offset += stride;
            }
        }
        if offset != body.len() {
            return Err(format!("{} trailing bytes after the last element", body.len() - offset));
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|_| "ASCII body is not UTF-8")?;
        let mut data = text.lines().filter(|l| !l.trim().is_empty());
        for (ei, element) in elements.iter().enumerate() {
            for r in 0..element.count {
                let line = data
                    .next()
                    .ok_or_else(|| format!("element {} ends after {r} of {} rows", element.name, element.count))?;
                if ei != vertex_index {
                    continue;
                }
                let words: Vec<&str> = line.split_whitespace().collect();
                if words.len() != element.props.len() {
                    return Err(format!(
                        "vertex row {r}: expected {} values, got {}",
                        element.props.len(),
                        words.len()
                    ));
                }
                let row: Vec<f64> = words
                    .iter()
                    .zip(&element.props)
                    .map(|(w, (_, t))| t.parse_ascii(w))
                    .collect::<Option<_>>()
                    .ok_or_else(|| format!("vertex row {r}: unparsable value in {line:?}"))?;
                rows.push(row);
            }
        }
        if data.next().is_some() {
            return Err("extra rows after the last element".into());
        }
    }

    let mut points = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let position = DVec3::new(row[cx], row[cy], row[cz]);
        let intensity = row[ci];
        if !position.is_finite() || !intensity.is_finite() {
            return Err(format!("vertex row {r}: non-finite value"));
        }
        let bounce = row[cb];
        if !(1.0..=255.0).contains(&bounce) || bounce.fract() != 0.0 {
            return Err(format!("vertex row {r}: bounce {bounce} outside 1..=255"));
        }
        let ray_id = match cid {
            Some(c) if row[c] >= 0.0 && row[c].fract() == 0.0 => row[c] as u64,
            Some(_) => return Err(format!("vertex row {r}: invalid ray_id")),
            None => r as u64,
        };
        points.push(ScatterPoint {
            position,
            intensity,
            bounce: bounce as u8,
            ray_id,
        });
    }
    Ok(ParsedCloud {
        points,
        azimuth_deg,
        depression_deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PointCloud {
        let pts = vec![
            ScatterPoint {
                position: DVec3::new(0.1, -2.0, 3.3),
                intensity: 0.7,
                bounce: 1,
                ray_id: 4,
            },
            ScatterPoint {
                position: DVec3::new(1.0, 2.0, -3.0),
                intensity: 0.25,
                bounce: 2,
                ray_id: 4,
            },
            ScatterPoint {
                position: DVec3::new(5.5, 0.0, 1e-3),
                intensity: 1.5,
                bounce: 5,
                ray_id: 9,
            },
        ];
        PointCloud::new(pts, 5, 302.5, 30.0)
    }

    #[test]
    fn round_trip_both_encodings() {
        for encoding in [PlyEncoding::Ascii, PlyEncoding::Binary] {
            for colors in [false, true] {
                let bytes = encode(&sample(), encoding, colors).unwrap();
                let parsed = decode(&bytes).unwrap();
                assert_eq!(parsed.azimuth_deg, Some(302.5));
                assert_eq!(parsed.depression_deg, Some(30.0));
                for (a, b) in parsed.points.iter().zip(sample().points()) {
                    assert_eq!(a.position, b.position.as_vec3().as_dvec3());
                    assert_eq!(a.intensity, b.intensity as f32 as f64);
                    assert_eq!((a.bounce, a.ray_id), (b.bounce, b.ray_id));
                }
                let again = encode(&parsed.into_cloud(302.5, 30.0), encoding, colors).unwrap();
                assert_eq!(again, bytes);
            }
        }
    }

    #[test]
    fn colors_follow_bounce() {
        let text = String::from_utf8(encode(&sample(), PlyEncoding::Ascii, true).unwrap()).unwrap();
        let body: Vec<&str> = text.lines().skip_while(|l| *l != "end_header").skip(1).collect();
        assert!(body[0].ends_with("0 0 255"));
        assert!(body[1].ends_with("255 255 0"));
        assert!(body[2].ends_with("128 0 128"));
    }

    #[test]
    fn empty_cloud() {
        let cloud = PointCloud::new(vec![], 4, 0.0, 30.0);
        let parsed = decode(&encode(&cloud, PlyEncoding::Binary, false).unwrap()).unwrap();
        assert!(parsed.points.is_empty());
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"not a ply").is_err());
        assert!(decode(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n").is_err());
        let mut bytes = encode(&sample(), PlyEncoding::Binary, false).unwrap();
        bytes.pop();
        assert!(decode(&bytes).unwrap_err().contains("truncated"));
        let bad_bounce = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nproperty uchar bounce\nend_header\n0 0 0 1 0\n";
        assert!(decode(bad_bounce.as_bytes()).is_err());
        assert!(decode(b"ply\nformat binary_big_endian 1.0\nend_header\n").is_err());
    }

    #[test]
    fn oversized_ray_id_is_rejected() {
        let pts = vec![ScatterPoint {
            position: DVec3::ZERO,
            intensity: 1.0,
            bounce: 1,
            ray_id: 1 << 33,
        }];
        assert!(encode(&PointCloud::new(pts, 1, 0.0, 30.0), PlyEncoding::Binary, false).is_err());
    }
}
