//! Slant-range rasterization of scatter points.
//!
//! Points are expressed in the line-of-sight frame of
//! [`geometry::los_frame`]: the image column follows cross-range and the
//! image row follows slant range, with near range in row 0. Each point is
//! splatted bilinearly onto the four nearest pixel centers.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ViewGeometry};
use crate::scatter::PointCloud;

/// Relative padding added on each side of an auto-fitted window.
pub const AUTO_FIT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    #[default]
    Sum,
    Max,
}

/// Physical window of the slant plane, in LOS-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub cross_min: f64,
    pub cross_max: f64,
    pub range_min: f64,
    pub range_max: f64,
}

impl Extent {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.cross_min, self.cross_max, self.range_min, self.range_max]
            .iter()
            .all(|v| v.is_finite())
            && self.cross_max > self.cross_min
            && self.range_max > self.range_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("degenerate projection extent {self:?}")))
        }
    }

    fn contains(&self, cross: f64, range: f64) -> bool {
        (self.cross_min..=self.cross_max).contains(&cross) && (self.range_min..=self.range_max).contains(&range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSettings {
    pub width: usize,
    pub height: usize,
    pub mode: ProjectionMode,
    pub log_compress: bool,
    /// Fixed window; auto-fitted to the points when `None`.
    pub extent: Option<Extent>,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            mode: ProjectionMode::Sum,
            log_compress: false,
            extent: None,
        }
    }
}

/// Row-major grayscale map; row index grows with slant range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityMap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub extent: Extent,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
}

impl IntensityMap {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn total(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }
}

fn fit_axis(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let pad = (hi - lo) * AUTO_FIT_MARGIN;
    (lo - pad, hi + pad)
}

/// Splat weights of a clamped continuous pixel coordinate.
#[inline]
fn taps(x: f64, n: usize) -> [(usize, f64); 2] {
    let x = x.clamp(0.0, (n - 1) as f64);
    let i0 = (x.floor() as usize).min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    let f = x - i0 as f64;
    [(i0, 1.0 - f), (i1, f)]
}

fn project_points<'a>(
    points: impl Iterator<Item = &'a crate::scatter::ScatterPoint> + Clone,
    geom: &ViewGeometry,
    settings: &ProjectionSettings,
) -> Result<IntensityMap> {
    if settings.width == 0 || settings.height == 0 {
        return Err(Error::Parameter(format!(
            "image size {}x{} must be at least 1x1",
            settings.width, settings.height
        )));
    }
    let frame = geometry::los_frame(geom.azimuth_deg, geom.depression_deg)?;
    let coords: Vec<(f64, f64, f64)> = points
        .map(|p| {
            let q = frame.apply(p.position);
            (q.x, q.y, p.intensity)
        })
        .collect();

    let extent = match settings.extent {
        Some(e) => {
            e.validate()?;
            e
        }
        None if coords.is_empty() => Extent {
            cross_min: -0.5,
            cross_max: 0.5,
            range_min: -0.5,
            range_max: 0.5,
        },
        None => {
            let (mut c0, mut c1, mut r0, mut r1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for &(c, r, _) in &coords {
                c0 = c0.min(c);
                c1 = c1.max(c);
                r0 = r0.min(r);
                r1 = r1.max(r);
            }
            let (cross_min, cross_max) = fit_axis(c0, c1);
            let (range_min, range_max) = fit_axis(r0, r1);
            Extent {
                cross_min,
                cross_max,
                range_min,
                range_max,
            }
        }
    };

    let (w, h) = (settings.width, settings.height);
    let sx = w as f64 / (extent.cross_max - extent.cross_min);
    let sy = h as f64 / (extent.range_max - extent.range_min);
    let mut pixels = vec![0.0; w * h];
    for &(c, r, intensity) in &coords {
        if !extent.contains(c, r) {
            continue;
        }
        let xs = taps((c - extent.cross_min) * sx - 0.5, w);
        let ys = taps((r - extent.range_min) * sy - 0.5, h);
        for &(row, wy) in &ys {
            for &(col, wx) in &xs {
                let v = intensity * wx * wy;
                let px = &mut pixels[row * w + col];
                match settings.mode {
                    ProjectionMode::Sum => *px += v,
                    ProjectionMode::Max => *px = px.max(v),
                }
            }
        }
    }

    if settings.log_compress {
        for p in &mut pixels {
            *p = p.ln_1p();
        }
        let max = pixels.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for p in &mut pixels {
                *p /= max;
            }
        }
    }

    Ok(IntensityMap {
        width: w,
        height: h,
        pixels,
        extent,
        azimuth_deg: geom.azimuth_deg,
        depression_deg: geom.depression_deg,
    })
}

/// Rasterizes `cloud` onto the slant-range plane of `geom`.
pub fn project(cloud: &PointCloud, geom: &ViewGeometry, settings: &ProjectionSettings) -> Result<IntensityMap> {
    project_points(cloud.points().iter(), geom, settings)
}

/// One map per bounce order `1..=bounces`, all on the window of the full cloud.
pub fn project_by_bounce(
    cloud: &PointCloud,
    geom: &ViewGeometry,
    settings: &ProjectionSettings,
    bounces: u8,
) -> Result<Vec<IntensityMap>> {
    let shared = ProjectionSettings {
        extent: Some(project(cloud, geom, settings)?.extent),
        ..*settings
    };
    (1..=bounces)
        .map(|k| project_points(cloud.points().iter().filter(|p| p.bounce == k), geom, &shared))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Pgm => "pgm",
            Self::Png => "png",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BitDepth {
    #[default]
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    fn max_level(&self) -> f64 {
        match self {
            Self::Eight => 255.0,
            Self::Sixteen => 65535.0,
        }
    }
}

/// Max-normalized levels, rounded half up.
pub fn quantize(map: &IntensityMap, depth: BitDepth) -> Vec<u16> {
    let max = map.max_value();
    let top = depth.max_level();
    map.pixels
        .iter()
        .map(|&p| {
            if max > 0.0 {
                ((p / max) * top + 0.5).floor().clamp(0.0, top) as u16
            } else {
                0
            }
        })
        .collect()
}

/// Encodes the map as a binary PGM (P5) or grayscale PNG.
pub fn encode_image(map: &IntensityMap, format: ImageFormat, depth: BitDepth) -> Result<Vec<u8>> {
    let levels = quantize(map, depth);
    let samples: Vec<u8> = match depth {
        BitDepth::Eight => levels.iter().map(|&v| v as u8).collect(),
        BitDepth::Sixteen => levels.iter().flat_map(|v| v.to_be_bytes()).collect(),
    };
    let mut out = Vec::new();
    match format {
        ImageFormat::Pgm => {
            write!(out, "P5\n{} {}\n{}\n", map.width, map.height, depth.max_level() as u32).expect("write to Vec");
            out.extend_from_slice(&samples);
        }
        ImageFormat::Png => {
            let mut encoder = png::Encoder::new(&mut out, map.width as u32, map.height as u32);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(match depth {
                BitDepth::Eight => png::BitDepth::Eight,
                BitDepth::Sixteen => png::BitDepth::Sixteen,
            });
            let mut writer = encoder.write_header().map_err(|e| Error::Image(e.to_string()))?;
            writer
                .write_image_data(&samples)
                .map_err(|e| Error::Image(e.to_string()))?;
            writer.finish().map_err(|e| Error::Image(e.to_string()))?;
        }
    }
    Ok(out)
}

pub fn write_image(map: &IntensityMap, path: impl AsRef<Path>, format: ImageFormat, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(map, format, depth)?;
    std::fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use glam::DVec3;

    use super::*;
    use crate::scatter::ScatterPoint;

    fn geom() -> ViewGeometry {
        ViewGeometry::new(300.0, 30.0, 100.0, 0.2).unwrap()
    }

    fn cloud(points: Vec<(DVec3, f64)>) -> PointCloud {
        let pts = points
            .into_iter()
            .enumerate()
            .map(|(i, (position, intensity))| ScatterPoint {
                position,
                intensity,
                bounce: 1,
                ray_id: i as u64,
            })
            .collect();
        PointCloud::new(pts, 4, 300.0, 30.0)
    }

    #[test]
    fn empty_cloud_gives_zero_map() {
        let settings = ProjectionSettings {
            width: 7,
            height: 5,
            ..Default::default()
        };
        let map = project(&cloud(vec![]), &geom(), &settings).unwrap();
        assert_eq!((map.width, map.height), (7, 5));
        assert!(map.pixels.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn single_point_mass() {
        let settings = ProjectionSettings {
            width: 32,
            height: 32,
            ..Default::default()
        };
        let map = project(&cloud(vec![(DVec3::new(1.0, 2.0, 3.0), 2.0)]), &geom(), &settings).unwrap();
        assert!((map.total() - 2.0).abs() < 1e-9);
        assert!(map.pixels.iter().filter(|&&p| p > 0.0).count() <= 4);
        // auto-fit centers the lone point between the four middle pixels
        for (c, r) in [(15, 15), (16, 15), (15, 16), (16, 16)] {
            assert!((map.get(c, r) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_zero_size() {
        let settings = ProjectionSettings {
            width: 0,
            height: 3,
            ..Default::default()
        };
        assert!(project(&cloud(vec![]), &geom(), &settings).is_err());
    }

    #[test]
    fn near_range_is_at_top() {
        let g = geom();
        let toward_sensor = g.sensor_direction();
        let settings = ProjectionSettings {
            width: 8,
            height: 8,
            ..Default::default()
        };
        let map = project(
            &cloud(vec![(toward_sensor * 2.0, 1.0), (-toward_sensor * 2.0, 3.0)]),
            &g,
            &settings,
        )
        .unwrap();
        let top: f64 = map.pixels[..8].iter().sum();
        let bottom: f64 = map.pixels[56..].iter().sum();
        assert!((top - 1.0).abs() < 1e-12 && (bottom - 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_mode_bounded_by_point_max() {
        let pts: Vec<_> = (0..50)
            .map(|i| {
                (
                    DVec3::new((i % 7) as f64 * 0.1, (i % 5) as f64 * 0.2, 0.0),
                    1.0 + i as f64 * 0.01,
                )
            })
            .collect();
        let settings = ProjectionSettings {
            width: 6,
            height: 6,
            mode: ProjectionMode::Max,
            ..Default::default()
        };
        let map = project(&cloud(pts), &geom(), &settings).unwrap();
        assert!(map.max_value() <= 1.49 + 1e-12);
        assert!(map.max_value() > 0.0);
    }

    #[test]
    fn log_compression_normalizes() {
        let settings = ProjectionSettings {
            width: 4,
            height: 4,
            log_compress: true,
            ..Default::default()
        };
        let map = project(
            &cloud(vec![(DVec3::ZERO, 5.0), (DVec3::new(1.0, 1.0, 0.0), 0.5)]),
            &geom(),
            &settings,
        )
        .unwrap();
        assert_eq!(map.max_value(), 1.0);
        assert!(map.pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn explicit_extent_drops_outside_points() {
        let settings = ProjectionSettings {
            width: 4,
            height: 4,
            extent: Some(Extent {
                cross_min: -1.0,
                cross_max: 1.0,
                range_min: -1.0,
                range_max: 1.0,
            }),
            ..Default::default()
        };
        let map = project(
            &cloud(vec![(DVec3::ZERO, 1.0), (DVec3::new(50.0, 0.0, 0.0), 9.0)]),
            &geom(),
            &settings,
        )
        .unwrap();
        assert!((map.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounce_channels_partition_the_mass() {
        let mut pts = Vec::new();
        for i in 0..30u64 {
            pts.push(ScatterPoint {
                position: DVec3::new(i as f64 * 0.1, 0.0, (i % 4) as f64),
                intensity: 1.0,
                bounce: (i % 3 + 1) as u8,
                ray_id: i,
            });
        }
        let c = PointCloud::new(pts, 3, 300.0, 30.0);
        let settings = ProjectionSettings {
            width: 10,
            height: 10,
            ..Default::default()
        };
        let whole = project(&c, &geom(), &settings).unwrap();
        let parts = project_by_bounce(&c, &geom(), &settings, 3).unwrap();
        let sum: f64 = parts.iter().map(|m| m.total()).sum();
        assert!((sum - whole.total()).abs() < 1e-9);
        assert_eq!(parts[0].extent, whole.extent);
    }

    #[test]
    fn image_encoding() {
        let zero = IntensityMap {
            width: 3,
            height: 2,
            pixels: vec![0.0; 6],
            extent: Extent {
                cross_min: 0.0,
                cross_max: 1.0,
                range_min: 0.0,
                range_max: 1.0,
            },
            azimuth_deg: 0.0,
            depression_deg: 30.0,
        };
        let pgm = encode_image(&zero, ImageFormat::Pgm, BitDepth::Eight).unwrap();
        assert_eq!(&pgm[..11], b"P5\n3 2\n255\n");
        assert!(pgm[11..].iter().all(|&b| b == 0));

        let map = IntensityMap {
            pixels: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            ..zero
        };
        let levels = quantize(&map, BitDepth::Eight);
        // 255/16 = 15.94 → 16, 255/8 = 31.875 → 32, half-up at .5
        assert_eq!(levels, vec![0, 16, 32, 64, 128, 255]);
        let png1 = encode_image(&map, ImageFormat::Png, BitDepth::Sixteen).unwrap();
        let png2 = encode_image(&map, ImageFormat::Png, BitDepth::Sixteen).unwrap();
        assert_eq!(png1, png2);
        assert_eq!(&png1[..8], b"\x89PNG\r\n\x1a\n");
        assert_eq!(*quantize(&map, BitDepth::Sixteen).iter().max().unwrap(), 65535);
    }

    #[test]
    fn write_to_unwritable_path() {
        let map = IntensityMap {
            width: 1,
            height: 1,
            pixels: vec![1.0],
            extent: Extent {
                cross_min: 0.0,
                cross_max: 1.0,
                range_min: 0.0,
                range_max: 1.0,
            },
            azimuth_deg: 0.0,
            depression_deg: 30.0,
        };
        let err = write_image(&map, "/nonexistent-dir/x.pgm", ImageFormat::Pgm, BitDepth::Eight);
        assert!(matches!(err, Err(Error::Write { .. })));
    }
}
