//! WebAssembly bindings for the browser demo in `www/`.
//!
//! [`Viewer`] holds the scene and the last traced view and is usable from
//! native code; [`Demo`] wraps it for JavaScript.

use sarprior_core::fusion::{guide_tau, FusionScalars};
use sarprior_core::geometry::los_frame;
use sarprior_core::mesh::{parse_mesh, MeshFormat};
use sarprior_core::projection::{self, ProjectionSettings};
use sarprior_core::scatter::{simulate, PointCloud};
use sarprior_core::{MonteCarloSpec, ProjectionMode, ScatterParams, Scene, ViewGeometry};
use wasm_bindgen::prelude::*;

const AIRCRAFT_OBJ: &str = include_str!("../../../fixtures/aircraft.obj");
const STRUCTURAL_TOLERANCE_DEG: f64 = 10.0;

/// Parameters of one traced view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewRequest {
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub mc_rays: usize,
    pub zeta: f64,
    pub k_max: u32,
    pub seed: u64,
}

impl Default for ViewRequest {
    fn default() -> Self {
        Self {
            azimuth_deg: 30.0,
            depression_deg: 30.0,
            mc_rays: 20_000,
            zeta: 0.1,
            k_max: 4,
            seed: 0,
        }
    }
}

pub struct Viewer {
    scene: Scene,
    last: Option<(ViewGeometry, PointCloud)>,
}

impl Viewer {
    pub fn from_obj(text: &str) -> Result<Self, String> {
        let mut mesh = parse_mesh(text.as_bytes(), MeshFormat::Obj).map_err(|e| e.to_string())?;
        mesh.flag_structural_faces(STRUCTURAL_TOLERANCE_DEG)
            .map_err(|e| e.to_string())?;
        Ok(Self {
            scene: Scene::new(mesh),
            last: None,
        })
    }

    pub fn aircraft() -> Self {
        Self::from_obj(AIRCRAFT_OBJ).expect("bundled mesh parses")
    }

    pub fn face_count(&self) -> usize {
        self.scene.mesh.face_count()
    }

    /// Traces one view with a coarse grid and returns the number of points.
    pub fn trace(&mut self, req: &ViewRequest) -> Result<usize, String> {
        let range = 10.0 * self.scene.mesh.bounding_radius();
        let geom = ViewGeometry::new(req.azimuth_deg, req.depression_deg, range, 0.5).map_err(|e| e.to_string())?;
        let params = ScatterParams {
            zeta: req.zeta,
            k_max: req.k_max,
            ..Default::default()
        };
        let mc = MonteCarloSpec {
            count: req.mc_rays,
            seed: req.seed,
            ..Default::default()
        };
        let sim = simulate(&self.scene, &geom, None, &mc, &params, 1).map_err(|e| e.to_string())?;
        let n = sim.cloud.len();
        self.last = Some((geom, sim.cloud));
        Ok(n)
    }

    fn last(&self) -> Result<&(ViewGeometry, PointCloud), String> {
        self.last
            .as_ref()
            .ok_or_else(|| "no view has been traced yet".to_string())
    }

    /// Points of the last view as `(cross, height, intensity, bounce)`
    /// quadruples: cross-range and height above the slant plane as seen
    /// from the sensor.
    pub fn points(&self) -> Result<Vec<f32>, String> {
        let (geom, cloud) = self.last()?;
        let frame = los_frame(geom.azimuth_deg, geom.depression_deg).map_err(|e| e.to_string())?;
        let mut out = Vec::with_capacity(4 * cloud.len());
        for p in cloud.points() {
            let q = frame.apply(p.position);
            out.extend_from_slice(&[q.x as f32, q.z as f32, p.intensity as f32, f32::from(p.bounce)]);
        }
        Ok(out)
    }

    /// Slant-range image of the last view as RGBA bytes, row 0 at near range.
    pub fn image_rgba(
        &self,
        width: usize,
        height: usize,
        log_compress: bool,
        max_mode: bool,
    ) -> Result<Vec<u8>, String> {
        let (geom, cloud) = self.last()?;
        let settings = ProjectionSettings {
            width,
            height,
            mode: if max_mode {
                ProjectionMode::Max
            } else {
                ProjectionMode::Sum
            },
            log_compress,
            extent: None,
        };
        let map = projection::project(cloud, geom, &settings).map_err(|e| e.to_string())?;
        let levels = projection::quantize(&map, projection::BitDepth::Eight);
        Ok(levels.iter().flat_map(|&v| [v as u8, v as u8, v as u8, 255]).collect())
    }
}

/// Guide weight τ at `samples` evenly spaced cosine similarities in [-1, 1].
pub fn tau_curve(tau_target: f64, tau_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let scalars = FusionScalars {
        tau_target,
        tau_max,
        ..Default::default()
    };
    scalars.validate().map_err(|e| e.to_string())?;
    if samples < 2 {
        return Err("need at least 2 samples".into());
    }
    Ok((0..samples)
        .map(|i| guide_tau(-1.0 + 2.0 * i as f64 / (samples - 1) as f64, &scalars))
        .collect())
}

#[wasm_bindgen]
pub struct Demo {
    viewer: Viewer,
}

#[wasm_bindgen]
impl Demo {
    /// Starts with the bundled aircraft mesh.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo {
            viewer: Viewer::aircraft(),
        }
    }

    /// Replaces the target with an OBJ mesh.
    #[wasm_bindgen(js_name = loadObj)]
    pub fn load_obj(&mut self, text: &str) -> Result<usize, JsError> {
        self.viewer = Viewer::from_obj(text).map_err(|e| JsError::new(&e))?;
        Ok(self.viewer.face_count())
    }

    pub fn trace(
        &mut self,
        azimuth_deg: f64,
        depression_deg: f64,
        mc_rays: usize,
        zeta: f64,
        k_max: u32,
        seed: u32,
    ) -> Result<usize, JsError> {
        let req = ViewRequest {
            azimuth_deg,
            depression_deg,
            mc_rays,
            zeta,
            k_max,
            seed: u64::from(seed),
        };
        self.viewer.trace(&req).map_err(|e| JsError::new(&e))
    }

    pub fn points(&self) -> Result<Vec<f32>, JsError> {
        self.viewer.points().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = imageRgba)]
    pub fn image_rgba(
        &self,
        width: usize,
        height: usize,
        log_compress: bool,
        max_mode: bool,
    ) -> Result<Vec<u8>, JsError> {
        self.viewer
            .image_rgba(width, height, log_compress, max_mode)
            .map_err(|e| JsError::new(&e))
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen(js_name = tauCurve)]
pub fn tau_curve_js(tau_target: f64, tau_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    tau_curve(tau_target, tau_max, samples).map_err(|e| JsError::new(&e))
}
