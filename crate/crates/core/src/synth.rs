//! Synthetic articulated objects with known joints, plus a noise model that
//! mimics sparse, noisy reconstructions.
//!
//! Every template is a static body box and one moving box. Hinges sit on a face
//! center of the moving box so the true axis is exactly one of the bounding-box
//! candidates (unless `hinge_offset` moves it).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, UnitQuaternion, Vector3, Vector4};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{aabb, apply_motion, centroid, MotionAxis, MotionKind, Part, Point3, PointCloud, Vec3};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sequence::ObservedSequence;

/// Default samples per part.
pub const DEFAULT_POINTS_PER_PART: usize = 2048;
/// Default number of articulation states.
pub const DEFAULT_FRAMES: usize = 10;
/// Fewest points a degraded frame may keep.
pub const MIN_DEGRADED_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Door,
    Drawer,
    Lid,
    Laptop,
    TrashcanLid,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::Door,
        TemplateName::Drawer,
        TemplateName::Lid,
        TemplateName::Laptop,
        TemplateName::TrashcanLid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Door => "door",
            TemplateName::Drawer => "drawer",
            TemplateName::Lid => "lid",
            TemplateName::Laptop => "laptop",
            TemplateName::TrashcanLid => "trashcan_lid",
        }
    }

    pub fn kind(self) -> MotionKind {
        match self {
            TemplateName::Drawer => MotionKind::Prismatic,
            _ => MotionKind::Revolute,
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template {s:?} (expected door, drawer, lid, laptop or trashcan_lid)"))
    }
}

/// Axis-aligned box in the template's local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalBox {
    pub center: [f64; 3],
    pub dims: [f64; 3],
}

/// A parametric articulated object: static body, one moving part, and its
/// ground-truth joint and motion profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTemplate {
    pub name: TemplateName,
    pub body: LocalBox,
    pub panel: LocalBox,
    /// Ground truth in the local frame.
    pub gt_axis: MotionAxis,
    pub gt_profile: Vec<f64>,
    /// Local-to-world rotation and translation applied after sampling.
    pub rotation: Rotation3<f64>,
    pub translation: Vec3,
}

/// Evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ObjectTemplate {
    /// Builds a template in its local frame from explicit dimensions.
    ///
    /// `body_dims` are (width, depth, height) of the static part, `panel_dims`
    /// the moving part's (x, y, z) extents. `hinge_offset` slides a revolute
    /// hinge toward the panel center by that fraction of the panel's extent
    /// perpendicular to the axis (0 keeps it on the face center).
    pub fn new(
        name: TemplateName,
        body_dims: [f64; 3],
        panel_dims: [f64; 3],
        frames: usize,
        hinge_offset: f64,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Construction("need at least one frame".into()));
        }
        if body_dims.iter().chain(&panel_dims).any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::Construction(format!(
                "dimensions must be positive and finite: body {body_dims:?}, panel {panel_dims:?}"
            )));
        }
        if !(0.0..=0.1).contains(&hinge_offset) {
            return Err(Error::Construction(format!("hinge offset {hinge_offset} outside [0, 0.1]")));
        }
        let [_, bd, bh] = body_dims;
        let [pw, pd, ph] = panel_dims;
        let body = LocalBox {
            center: [0.0, 0.0, 0.0],
            dims: body_dims,
        };
        let (panel_center, axis, profile) = match name {
            TemplateName::Door => {
                let c = [0.0, -bd / 2.0 - pd / 2.0, 0.0];
                let origin = Point3::new(-pw / 2.0 + hinge_offset * pw, c[1], 0.0);
                (c, MotionAxis::revolute(-Vec3::z(), origin)?, linspace(0.0, PI / 2.0, frames))
            }
            TemplateName::Drawer => {
                let c = [0.0, -bd / 2.0 + pd / 2.0 - 0.02 * bd, bh / 4.0];
                let origin = Point3::from(c);
                (c, MotionAxis::prismatic(-Vec3::y(), origin)?, linspace(0.0, 0.4 * pd, frames))
            }
            TemplateName::Lid => {
                let c = [0.0, 0.0, bh / 2.0 + ph / 2.0];
                let origin = Point3::new(0.0, pd / 2.0 - hinge_offset * pd, c[2]);
                (c, MotionAxis::revolute(-Vec3::x(), origin)?, linspace(0.0, 100f64.to_radians(), frames))
            }
            TemplateName::Laptop => {
                // body is the base slab; the screen stands on its back edge
                let c = [0.0, bd / 2.0 - pd / 2.0, bh / 2.0 + ph / 2.0];
                let origin = Point3::new(0.0, c[1], bh / 2.0 + hinge_offset * ph);
                (c, MotionAxis::revolute(-Vec3::x(), origin)?, linspace(0.0, 60f64.to_radians(), frames))
            }
            TemplateName::TrashcanLid => {
                let c = [0.0, 0.0, bh / 2.0 + ph / 2.0];
                let origin = Point3::new(pw / 2.0 - hinge_offset * pw, 0.0, c[2]);
                (c, MotionAxis::revolute(Vec3::y(), origin)?, linspace(0.0, 80f64.to_radians(), frames))
            }
        };
        Ok(Self {
            name,
            body,
            panel: LocalBox {
                center: panel_center,
                dims: panel_dims,
            },
            gt_axis: axis,
            gt_profile: profile,
            rotation: Rotation3::identity(),
            translation: Vec3::zeros(),
        })
    }

    /// Random dimensions and pose for `name`, drawn from the generation stream of `seed`.
    pub fn random(name: TemplateName, seed: u64, frames: usize, hinge_offset: f64) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Generation);
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
        let (body, panel) = match name {
            TemplateName::Door => {
                let (w, d, h) = (u(0.6, 1.0), u(0.35, 0.6), u(1.3, 2.0));
                ([w, d, h], [w, u(0.02, 0.05), h])
            }
            TemplateName::Drawer => {
                let (w, d, h) = (u(0.7, 1.0), u(0.35, 0.5), u(0.5, 0.9));
                ([w, d, h], [0.85 * w, 0.9 * d, u(0.12, 0.22)])
            }
            TemplateName::Lid => {
                let (w, d, h) = (u(0.75, 1.0), u(0.35, 0.55), u(0.4, 0.8));
                ([w, d, h], [w, d, u(0.02, 0.05)])
            }
            TemplateName::Laptop => {
                let (w, d, t) = (u(0.33, 0.4), u(0.2, 0.25), u(0.015, 0.025));
                ([w, d, t], [w, u(0.006, 0.012), 0.95 * d])
            }
            TemplateName::TrashcanLid => {
                let (w, d, h) = (u(0.42, 0.5), u(0.25, 0.32), u(0.5, 0.8));
                ([w, d, h], [w, d, u(0.03, 0.05)])
            }
        };
        let mut t = Self::new(name, body, panel, frames, hinge_offset)?;
        t.rotation = random_rotation(&mut rng);
        t.translation = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        Ok(t)
    }

    fn to_world(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    /// Ground-truth axis in world coordinates.
    pub fn world_axis(&self) -> MotionAxis {
        MotionAxis {
            kind: self.gt_axis.kind,
            direction: self.rotation * self.gt_axis.direction,
            origin: self.to_world(&self.gt_axis.origin),
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let q = Vector4::from_fn(|_, _| normal.sample(rng));
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q)).to_rotation_matrix()
}

/// A generated object: observations plus everything needed to score an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedObject {
    pub sequence: ObservedSequence,
    pub ground_truth: MotionAxis,
    pub profile: Vec<f64>,
}

/// Samples both parts, then plays the ground-truth motion on the moving part.
///
/// Prismatic ground truth takes the sampled moving part's centroid as origin.
pub fn generate(template: &ObjectTemplate, points_per_part: usize, frames: usize, seed: u64) -> Result<GeneratedObject> {
    if points_per_part < 100 {
        return Err(Error::Construction(format!("points per part {points_per_part} < 100")));
    }
    if frames == 0 || frames != template.gt_profile.len() {
        return Err(Error::Construction(format!(
            "{frames} frames requested but the template profile has {}",
            template.gt_profile.len()
        )));
    }
    let mut rng = stream_rng(seed, Stream::Generation);
    // skip past the draws used for dimensions/pose by sampling on a fresh word position
    rng.set_word_pos(1 << 20);

    let body: Vec<Point3> = sample_box_surface(&template.body, points_per_part, &mut rng)
        .iter()
        .map(|p| template.to_world(p))
        .collect();
    let panel: Vec<Point3> = sample_box_surface(&template.panel, points_per_part, &mut rng)
        .iter()
        .map(|p| template.to_world(p))
        .collect();

    let mut gt = template.world_axis();
    if gt.kind == MotionKind::Prismatic {
        gt.origin = centroid(&panel);
    }

    let mut points = body.clone();
    points.extend_from_slice(&panel);
    let mut labels = vec![Part::Static; body.len()];
    labels.extend(std::iter::repeat_n(Part::Dynamic, panel.len()));
    let rest = PointCloud::with_labels(points, labels)?;
    let dynamic = PointCloud::new(panel)?;

    let frames = template
        .gt_profile
        .iter()
        .map(|&m| apply_motion(&dynamic, &gt, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratedObject {
        sequence: ObservedSequence::new(rest, frames)?,
        ground_truth: gt,
        profile: template.gt_profile.clone(),
    })
}

/// Area-weighted stratified samples on the six faces of `b`.
///
/// Face counts follow the largest-remainder split of `n` by area. Within a face,
/// sample `j` of `k` sits at `u = (j + ξ)/k`, `v = frac(s + j·φ)` (a shifted
/// golden-ratio lattice with per-point jitter `ξ` along `u`).
/// Area-weighted surface sample of `b`. Each drawn point is mirrored across
/// the face's two in-plane axes and onto the opposite face, so the sample has
/// the box's reflection symmetry and its covariance is diagonal in the box
/// frame. Only the `n % 8` leftover points (placed on the largest faces) break
/// this.
fn sample_box_surface(b: &LocalBox, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    // (normal axis, u axis, v axis)
    const PAIRS: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 0, 2), (2, 0, 1)];
    let areas: Vec<f64> = PAIRS.iter().map(|&(_, u, v)| b.dims[u] * b.dims[v]).collect();
    let total: f64 = areas.iter().sum();
    let units = n / 8;

    let quotas: Vec<f64> = areas.iter().map(|a| a / total * units as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest = units - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..PAIRS.len()).collect();
    order.sort_by(|&i, &j| (quotas[j] - quotas[j].floor()).total_cmp(&(quotas[i] - quotas[i].floor())).then(i.cmp(&j)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }

    const PHI: f64 = 0.618_033_988_749_894_9;
    let place = |a: usize, ua: usize, va: usize, sign: f64, u: f64, v: f64| {
        let mut local = [0.0; 3];
        local[a] = 0.5 * sign * b.dims[a];
        local[ua] = u * b.dims[ua];
        local[va] = v * b.dims[va];
        Point3::new(b.center[0] + local[0], b.center[1] + local[1], b.center[2] + local[2])
    };
    let mut out = Vec::with_capacity(n);
    for (&(a, ua, va), &k) in PAIRS.iter().zip(&counts) {
        let shift: f64 = rng.random();
        for j in 0..k {
            let jitter: f64 = rng.random();
            // quadrant coordinates in (0, 0.5)
            let u = 0.5 * (j as f64 + jitter) / k as f64;
            let v = 0.5 * (shift + j as f64 * PHI).fract();
            for sign in [1.0, -1.0] {
                for (su, sv) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                    out.push(place(a, ua, va, sign, su * u, sv * v));
                }
            }
        }
    }
    let largest = (0..3).max_by(|&i, &j| areas[i].total_cmp(&areas[j]).then(j.cmp(&i))).unwrap_or(0);
    let (a, ua, va) = PAIRS[largest];
    for j in 0..n % 8 {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(place(a, ua, va, sign, u - 0.5, v - 0.5));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeConfig {
    /// Gaussian jitter standard deviation as a fraction of the object diagonal.
    pub jitter_sigma: f64,
    pub dropout_rate: f64,
    pub outlier_rate: f64,
    pub seed: u64,
}

impl DegradeConfig {
    pub fn none() -> Self {
        Self {
            jitter_sigma: 0.0,
            dropout_rate: 0.0,
            outlier_rate: 0.0,
            seed: 0,
        }
    }

    /// Whether any of the rates is nonzero.
    pub fn is_noisy(&self) -> bool {
        self.jitter_sigma > 0.0 || self.dropout_rate > 0.0 || self.outlier_rate > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("jitter sigma {} must be >= 0", self.jitter_sigma)));
        }
        for (name, r) in [("dropout", self.dropout_rate), ("outlier", self.outlier_rate)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidConfig(format!("{name} rate {r} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Jitters, thins, and pollutes every observed frame; the rest cloud is untouched.
///
/// Per frame: isotropic Gaussian jitter with σ = `jitter_sigma`·diagonal, then a
/// uniformly chosen `dropout_rate` fraction removed, then `outlier_rate`·(original
/// count) outliers drawn uniformly in the object's bounding box (rest static part
/// plus the frame) inflated 1.2× about its center.
pub fn degrade(seq: &ObservedSequence, cfg: &DegradeConfig) -> Result<ObservedSequence> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, Stream::Degradation);
    let sigma = cfg.jitter_sigma * seq.diagonal();
    let static_pts = seq.rest_static().map(PointCloud::into_points).unwrap_or_default();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut frames = Vec::with_capacity(seq.frames.len());
    for (t, frame) in seq.frames.iter().enumerate() {
        let n = frame.len();
        let mut pts: Vec<Point3> = frame.points().to_vec();
        if sigma > 0.0 {
            for p in pts.iter_mut() {
                let e = Vector3::from_fn(|_, _| normal.sample(&mut rng));
                *p += e * sigma;
            }
        }
        let drop = (cfg.dropout_rate * n as f64).round() as usize;
        if drop > 0 {
            if n - drop < MIN_DEGRADED_POINTS {
                return Err(Error::OverDegraded {
                    frame: t,
                    remaining: n - drop,
                });
            }
            let mut removed = vec![false; n];
            for i in sample(&mut rng, n, drop).iter() {
                removed[i] = true;
            }
            pts = pts.into_iter().zip(removed).filter(|(_, r)| !r).map(|(p, _)| p).collect();
        }
        let outliers = (cfg.outlier_rate * n as f64).round() as usize;
        if outliers > 0 {
            let mut all = static_pts.clone();
            all.extend_from_slice(frame.points());
            let (lo, hi) = aabb(&all);
            let mid = nalgebra::center(&lo, &hi);
            let half = (hi - lo) * 0.6;
            for _ in 0..outliers {
                let r = Vector3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
                pts.push(mid + half.component_mul(&r));
            }
        }
        frames.push(PointCloud::new(pts)?);
    }
    Ok(ObservedSequence {
        rest: seq.rest.clone(),
        frames,
    })
}

/// Parameters for a seeded batch of objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Cycled in order: object `i` uses `templates[i % len]`.
    pub templates: Vec<TemplateName>,
    pub count: usize,
    pub points_per_part: usize,
    pub frames: usize,
    pub hinge_offset: f64,
    /// Its `seed` is ignored; each object degrades with its own seed.
    pub degrade: DegradeConfig,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            templates: TemplateName::ALL.to_vec(),
            count: 10,
            points_per_part: DEFAULT_POINTS_PER_PART,
            frames: DEFAULT_FRAMES,
            hinge_offset: 0.0,
            degrade: DegradeConfig::none(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteObject {
    /// `NNNN_template`, zero-padded so ids sort in generation order.
    pub id: String,
    pub template: ObjectTemplate,
    /// Seed shared by the object's generation and degradation streams.
    pub seed: u64,
    /// Sequence already degraded per the suite config.
    pub object: GeneratedObject,
}

/// Generates `cfg.count` objects. Object `i` draws everything from
/// `derive_seed(cfg.seed, i)`, so a suite is a prefix of any longer suite
/// with the same seed, and suites differing only in degradation share their
/// clean objects.
pub fn generate_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteObject>> {
    if cfg.templates.is_empty() {
        return Err(Error::InvalidConfig("suite needs at least one template".into()));
    }
    cfg.degrade.validate()?;
    (0..cfg.count)
        .map(|i| {
            let name = cfg.templates[i % cfg.templates.len()];
            let seed = derive_seed(cfg.seed, i as u64);
            let template = ObjectTemplate::random(name, seed, cfg.frames, cfg.hinge_offset)?;
            let mut object = generate(&template, cfg.points_per_part, cfg.frames, seed)?;
            if cfg.degrade.is_noisy() {
                let noise = DegradeConfig { seed, ..cfg.degrade };
                object.sequence = degrade(&object.sequence, &noise)?;
            }
            Ok(SuiteObject {
                id: format!("{i:04}_{name}"),
                template,
                seed,
                object,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obb::fit_obb;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn surface_samples_lie_on_box() {
        let b = LocalBox {
            center: [1.0, 2.0, 3.0],
            dims: [0.8, 0.05, 2.0],
        };
        let mut rng = stream_rng(1, Stream::Generation);
        let pts = sample_box_surface(&b, 2048, &mut rng);
        assert_eq!(pts.len(), 2048);
        for p in &pts {
            let rel = [p.x - 1.0, p.y - 2.0, p.z - 3.0];
            let on_face = (0..3).any(|k| (rel[k].abs() - b.dims[k] / 2.0).abs() < 1e-12);
            let inside = (0..3).all(|k| rel[k].abs() <= b.dims[k] / 2.0 + 1e-12);
            assert!(on_face && inside);
        }
    }

    #[test]
    fn stratified_panel_gives_accurate_principal_axes() {
        for seed in 0..10 {
            let t = ObjectTemplate::random(TemplateName::Door, seed, 10, 0.0).unwrap();
            let g = generate(&t, 2048, 10, seed).unwrap();
            let dyn_cloud = g.sequence.rest_dynamic().unwrap();
            let obb = fit_obb(dyn_cloud.points()).unwrap();
            let best = obb
                .frame
                .iter()
                .map(|a| a.dot(&g.ground_truth.direction).abs())
                .fold(0.0, f64::max);
            assert!(best.min(1.0).acos().to_degrees() < 0.1, "seed {seed}: {}", best.acos().to_degrees());
        }
    }

    #[test]
    fn single_zero_frame_equals_rest_dynamic() {
        let mut t = ObjectTemplate::random(TemplateName::Lid, 3, 1, 0.0).unwrap();
        t.gt_profile = vec![0.0];
        let g = generate(&t, 200, 1, 3).unwrap();
        assert_eq!(g.sequence.frames[0], g.sequence.rest_dynamic().unwrap());
    }

    #[test]
    fn drawer_frames_are_translations() {
        let t = ObjectTemplate::random(TemplateName::Drawer, 4, 10, 0.0).unwrap();
        let g = generate(&t, 300, 10, 4).unwrap();
        let rest = g.sequence.rest_dynamic().unwrap();
        let d = g.ground_truth.direction.into_inner();
        for (frame, m) in g.sequence.frames.iter().zip(&g.profile) {
            for (a, b) in rest.points().iter().zip(frame.points()) {
                assert!(((b - a) - d * *m).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_templates_rejected() {
        assert!(ObjectTemplate::new(TemplateName::Door, [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], 10, 0.0).is_err());
        assert!(ObjectTemplate::new(TemplateName::Door, [1.0, 1.0, 1.0], [1.0, f64::NAN, 1.0], 10, 0.0).is_err());
        assert!(ObjectTemplate::new(TemplateName::Door, [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], 0, 0.0).is_err());
        let t = ObjectTemplate::random(TemplateName::Door, 0, 10, 0.0).unwrap();
        assert!(generate(&t, 50, 10, 0).is_err());
        assert!(generate(&t, 200, 9, 0).is_err());
    }

    #[test]
    fn template_kinds() {
        for name in TemplateName::ALL {
            let t = ObjectTemplate::random(name, 1, 10, 0.0).unwrap();
            assert_eq!(t.gt_axis.kind, name.kind());
            assert_eq!(name.as_str().parse::<TemplateName>().unwrap(), name);
        }
    }

    #[test]
    fn zero_degradation_is_identity() {
        let t = ObjectTemplate::random(TemplateName::Door, 2, 10, 0.0).unwrap();
        let g = generate(&t, 200, 10, 2).unwrap();
        let out = degrade(&g.sequence, &DegradeConfig::none()).unwrap();
        assert_eq!(out, g.sequence);
    }

    #[test]
    fn degradation_is_seeded_and_keeps_rest() {
        let t = ObjectTemplate::random(TemplateName::Door, 2, 10, 0.0).unwrap();
        let g = generate(&t, 400, 10, 2).unwrap();
        let cfg = DegradeConfig {
            jitter_sigma: 0.01,
            dropout_rate: 0.5,
            outlier_rate: 0.05,
            seed: 17,
        };
        let a = degrade(&g.sequence, &cfg).unwrap();
        let b = degrade(&g.sequence, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rest, g.sequence.rest);
        for f in &a.frames {
            assert_eq!(f.len(), 400 - 200 + 20);
        }
        let c = degrade(&g.sequence, &DegradeConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn over_degradation_rejected() {
        let t = ObjectTemplate::random(TemplateName::Door, 2, 2, 0.0).unwrap();
        let g = generate(&t, 100, 2, 2).unwrap();
        let cfg = DegradeConfig {
            jitter_sigma: 0.0,
            dropout_rate: 0.95,
            outlier_rate: 0.0,
            seed: 0,
        };
        assert!(matches!(degrade(&g.sequence, &cfg), Err(Error::OverDegraded { .. })));
        assert!(degrade(&g.sequence, &DegradeConfig { dropout_rate: 1.0, ..cfg }).is_err());
        assert!(degrade(&g.sequence, &DegradeConfig { jitter_sigma: -1.0, ..cfg }).is_err());
    }
}
