//! WebAssembly bindings for a single-page demo.
//!
//! The page generates a synthetic object, optionally degrades its frames, and
//! runs the OBB candidate search. [`Scene`] holds the logic and is usable from
//! native code; [`Demo`] is the thin JavaScript-facing wrapper.

use artic_core::geometry::{MotionAxis, MotionKind, Part, PointCloud};
use artic_core::metrics::{angular_error, position_error};
use artic_core::report::axis_polyline;
use artic_core::search::{search, Hypothesis};
use artic_core::sequence::ObservedSequence;
use artic_core::synth::{degrade, generate, DegradeConfig, GeneratedObject, ObjectTemplate, TemplateName};
use artic_core::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bound on points per part; the search runs single-threaded in the browser.
pub const MAX_POINTS: usize = 4096;
pub const MAX_FRAMES: usize = 32;

/// Outcome of one search, shaped for the page.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateView {
    pub kind: &'static str,
    pub direction: [f64; 3],
    pub origin: [f64; 3],
    pub magnitudes: Vec<f64>,
    pub residual: f64,
    pub angle_error_deg: f64,
    /// Line distance for revolute axes, zero for prismatic ones.
    pub position_error: f64,
    pub diagonal: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    object: GeneratedObject,
    observed: ObservedSequence,
    estimate: Option<Hypothesis>,
}

impl Scene {
    pub fn generate(template: &str, seed: u64, points: usize, frames: usize) -> Result<Self> {
        let name: TemplateName = template.parse().map_err(Error::InvalidConfig)?;
        if points > MAX_POINTS || frames > MAX_FRAMES {
            return Err(Error::InvalidConfig(format!(
                "demo limits are {MAX_POINTS} points per part and {MAX_FRAMES} frames"
            )));
        }
        let t = ObjectTemplate::random(name, seed, frames, 0.0)?;
        let object = generate(&t, points, frames, seed)?;
        Ok(Self {
            observed: object.sequence.clone(),
            object,
            estimate: None,
        })
    }

    /// Replaces the observed frames with degraded copies of the clean ones.
    pub fn degrade(&mut self, jitter: f64, dropout: f64, outliers: f64, seed: u64) -> Result<()> {
        let cfg = DegradeConfig {
            jitter_sigma: jitter,
            dropout_rate: dropout,
            outlier_rate: outliers,
            seed,
        };
        self.observed = degrade(&self.object.sequence, &cfg)?;
        self.estimate = None;
        Ok(())
    }

    /// Runs the search over the given kind, or both kinds for `"auto"`.
    pub fn estimate(&mut self, kind: &str) -> Result<EstimateView> {
        let kinds = match kind {
            "auto" => MotionKind::ALL.to_vec(),
            k => vec![k.parse::<MotionKind>().map_err(Error::InvalidConfig)?],
        };
        let report = search(&self.observed, &kinds)?;
        let gt = &self.object.ground_truth;
        let axis = &report.best.axis;
        let position = match position_error(axis, gt) {
            Ok(p) if p.identifiable => p.line_distance,
            _ => 0.0,
        };
        let view = EstimateView {
            kind: axis.kind.as_str(),
            direction: axis.direction.into_inner().into(),
            origin: axis.origin.coords.into(),
            magnitudes: report.best.magnitudes.clone(),
            residual: report.best.residual,
            angle_error_deg: angular_error(axis, gt)?,
            position_error: position,
            diagonal: self.observed.diagonal(),
        };
        self.estimate = Some(report.best);
        Ok(view)
    }

    pub fn observed(&self) -> &ObservedSequence {
        &self.observed
    }

    pub fn ground_truth(&self) -> &MotionAxis {
        &self.object.ground_truth
    }

    pub fn estimated(&self) -> Option<&MotionAxis> {
        self.estimate.as_ref().map(|h| &h.axis)
    }

    /// Endpoints of an axis segment anchored at the rest moving part's centroid.
    pub fn segment(&self, axis: &MotionAxis) -> [f32; 6] {
        let anchor = self
            .observed
            .rest
            .part(Part::Dynamic)
            .map(|c| c.centroid())
            .unwrap_or_else(|| self.observed.rest.centroid());
        let line = axis_polyline(axis, &anchor, self.observed.diagonal());
        let (a, b) = (line[0], line[line.len() - 1]);
        [a.x, a.y, a.z, b.x, b.y, b.z].map(|v| v as f32)
    }
}

/// Interleaved xyz coordinates.
pub fn flatten(cloud: &PointCloud) -> Vec<f32> {
    cloud.points().iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
}

#[wasm_bindgen]
impl Demo {
    /// Template is one of door, drawer, lid, laptop, trashcan_lid.
    #[wasm_bindgen(constructor)]
    pub fn new(template: &str, seed: u32, points: u32, frames: u32) -> std::result::Result<Demo, JsError> {
        let scene = Scene::generate(template, u64::from(seed), points as usize, frames as usize).map_err(js)?;
        Ok(Demo { scene })
    }

    pub fn degrade(&mut self, jitter: f64, dropout: f64, outliers: f64, seed: u32) -> std::result::Result<(), JsError> {
        self.scene.degrade(jitter, dropout, outliers, u64::from(seed)).map_err(js)
    }

    /// JSON-encoded estimate; `kind` is revolute, prismatic or auto.
    pub fn estimate(&mut self, kind: &str) -> std::result::Result<String, JsError> {
        let view = self.scene.estimate(kind).map_err(js)?;
        serde_json::to_string(&view).map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(js_name = frameCount)]
    pub fn frame_count(&self) -> usize {
        self.scene.observed.frames.len()
    }

    #[wasm_bindgen(js_name = restPoints)]
    pub fn rest_points(&self) -> Vec<f32> {
        flatten(&self.scene.observed.rest)
    }

    /// 1 for points on the moving part, 0 elsewhere.
    #[wasm_bindgen(js_name = restLabels)]
    pub fn rest_labels(&self) -> Vec<u8> {
        match self.scene.observed.rest.labels() {
            Some(labels) => labels.iter().map(|l| u8::from(*l == Part::Dynamic)).collect(),
            None => vec![0; self.scene.observed.rest.len()],
        }
    }

    #[wasm_bindgen(js_name = framePoints)]
    pub fn frame_points(&self, index: usize) -> Vec<f32> {
        self.scene.observed.frames.get(index).map(flatten).unwrap_or_default()
    }

    #[wasm_bindgen(js_name = truthSegment)]
    pub fn truth_segment(&self) -> Vec<f32> {
        self.scene.segment(self.scene.ground_truth()).to_vec()
    }

    /// Empty until `estimate` has run.
    #[wasm_bindgen(js_name = estimateSegment)]
    pub fn estimate_segment(&self) -> Vec<f32> {
        self.scene.estimated().map(|a| self.scene.segment(a).to_vec()).unwrap_or_default()
    }
}
