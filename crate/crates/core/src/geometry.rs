//! Core 3D types and the piecewise-rigid part motion model.
//!
//! A part moves either by a rotation about a 3D line (revolute) or by a
//! translation along a direction (prismatic). Angles are radians here; degree
//! conversion happens only at the file/CLI boundary.

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type UnitVec3 = Unit<Vector3<f64>>;

/// Allowed deviation of a direction's norm from 1.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Static,
    Dynamic,
}

impl Part {
    pub fn code(self) -> u8 {
        match self {
            Part::Static => 0,
            Part::Dynamic => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Part::Static),
            1 => Some(Part::Dynamic),
            _ => None,
        }
    }
}

/// An ordered, non-empty set of finite 3D points with optional per-point part labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<Part>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<Part>) -> Result<Self> {
        Self::build(points, Some(labels))
    }

    fn build(points: Vec<Point3>, labels: Option<Vec<Part>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud has no points"));
        }
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidCloud(format!("point {i} has a non-finite coordinate")));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::InvalidCloud(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Part]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.points)
    }

    /// Length of the diagonal of the axis-aligned bounding box.
    pub fn diagonal(&self) -> f64 {
        aabb_diagonal(&self.points)
    }

    /// Points carrying the given label, or `None` if the cloud is unlabeled
    /// or has no such points.
    pub fn part(&self, part: Part) -> Option<PointCloud> {
        let labels = self.labels.as_ref()?;
        let pts: Vec<Point3> = self
            .points
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == part)
            .map(|(p, _)| *p)
            .collect();
        if pts.is_empty() {
            None
        } else {
            Some(PointCloud { points: pts, labels: None })
        }
    }

    /// Applies `f` to every point, keeping labels.
    pub fn map_points(&self, f: impl Fn(&Point3) -> Point3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(f).collect(),
            labels: self.labels.clone(),
        }
    }
}

impl AsRef<[Point3]> for PointCloud {
    fn as_ref(&self) -> &[Point3] {
        &self.points
    }
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let n = points.len().max(1) as f64;
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / n)
}

pub fn aabb(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

pub fn aabb_diagonal(points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = aabb(points);
    (hi - lo).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Revolute,
    Prismatic,
}

impl MotionKind {
    pub const ALL: [MotionKind; 2] = [MotionKind::Revolute, MotionKind::Prismatic];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionKind::Revolute => "revolute",
            MotionKind::Prismatic => "prismatic",
        }
    }
}

impl std::str::FromStr for MotionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "revolute" => Ok(MotionKind::Revolute),
            "prismatic" => Ok(MotionKind::Prismatic),
            other => Err(format!("unknown motion kind {other:?}")),
        }
    }
}

/// Motion type plus the joint line.
///
/// For prismatic joints the origin does not influence the transform; it is
/// carried (conventionally the moving part's centroid) so both kinds report
/// the same fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionAxis {
    pub kind: MotionKind,
    pub direction: UnitVec3,
    pub origin: Point3,
}

impl MotionAxis {
    /// Builds an axis, normalizing `direction`. Fails on a zero or non-finite vector.
    pub fn new(kind: MotionKind, direction: Vec3, origin: Point3) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidAxis { norm });
        }
        Ok(Self {
            kind,
            direction: Unit::new_normalize(direction),
            origin,
        })
    }

    pub fn revolute(direction: Vec3, origin: Point3) -> Result<Self> {
        Self::new(MotionKind::Revolute, direction, origin)
    }

    pub fn prismatic(direction: Vec3, origin: Point3) -> Result<Self> {
        Self::new(MotionKind::Prismatic, direction, origin)
    }

    /// Checks the stored direction is unit to within [`UNIT_TOLERANCE`].
    pub fn validate(&self) -> Result<()> {
        let norm = self.direction.as_ref().norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
            return Err(Error::InvalidAxis { norm });
        }
        if !self.origin.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidAxis { norm });
        }
        Ok(())
    }

    /// Same line with the direction negated.
    pub fn flipped(&self) -> Self {
        Self {
            direction: -self.direction,
            ..*self
        }
    }
}

/// A single rigid transform for one (axis, magnitude) pair.
///
/// Rotation uses the Rodrigues form
/// `v' = v cos θ + (k × v) sin θ + k (k · v)(1 − cos θ)` applied to `v = p − origin`.
#[derive(Debug, Clone, Copy)]
pub struct PartMotion {
    kind: MotionKind,
    k: Vec3,
    origin: Vec3,
    sin: f64,
    cos: f64,
    magnitude: f64,
}

impl PartMotion {
    /// Builds the transform without checking the direction norm.
    pub(crate) fn new_unchecked(axis: &MotionAxis, magnitude: f64) -> Self {
        let (sin, cos) = magnitude.sin_cos();
        Self {
            kind: axis.kind,
            k: axis.direction.into_inner(),
            origin: axis.origin.coords,
            sin,
            cos,
            magnitude,
        }
    }

    pub fn new(axis: &MotionAxis, magnitude: f64) -> Result<Self> {
        axis.validate()?;
        if !magnitude.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite magnitude {magnitude}")));
        }
        Ok(Self::new_unchecked(axis, magnitude))
    }

    pub fn is_identity(&self) -> bool {
        self.magnitude == 0.0
    }

    #[inline]
    pub fn apply(&self, p: &Point3) -> Point3 {
        if self.magnitude == 0.0 {
            return *p;
        }
        match self.kind {
            MotionKind::Revolute => {
                let v = p.coords - self.origin;
                let k = &self.k;
                let rotated = v * self.cos + k.cross(&v) * self.sin + k * (k.dot(&v) * (1.0 - self.cos));
                Point3::from(rotated + self.origin)
            }
            MotionKind::Prismatic => p + self.k * self.magnitude,
        }
    }

    /// The transform undoing this one.
    pub fn inverse(&self) -> Self {
        Self {
            sin: -self.sin,
            magnitude: -self.magnitude,
            ..*self
        }
    }
}

/// Rotates every point by `angle` radians about the axis line (right-hand rule).
pub fn apply_revolute(cloud: &PointCloud, axis: &MotionAxis, angle: f64) -> Result<PointCloud> {
    if axis.kind != MotionKind::Revolute {
        return Err(Error::KindMismatch {
            expected: MotionKind::Revolute,
            found: axis.kind,
        });
    }
    transform(cloud, axis, angle)
}

/// Translates every point by `displacement` along the axis direction.
pub fn apply_prismatic(cloud: &PointCloud, axis: &MotionAxis, displacement: f64) -> Result<PointCloud> {
    if axis.kind != MotionKind::Prismatic {
        return Err(Error::KindMismatch {
            expected: MotionKind::Prismatic,
            found: axis.kind,
        });
    }
    transform(cloud, axis, displacement)
}

pub fn apply_motion(cloud: &PointCloud, axis: &MotionAxis, magnitude: f64) -> Result<PointCloud> {
    match axis.kind {
        MotionKind::Revolute => apply_revolute(cloud, axis, magnitude),
        MotionKind::Prismatic => apply_prismatic(cloud, axis, magnitude),
    }
}

fn transform(cloud: &PointCloud, axis: &MotionAxis, magnitude: f64) -> Result<PointCloud> {
    let motion = PartMotion::new(axis, magnitude)?;
    if motion.is_identity() {
        return Ok(cloud.clone());
    }
    Ok(cloud.map_points(|p| motion.apply(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    #[test]
    fn quarter_turn_about_z() {
        let axis = MotionAxis::revolute(Vec3::z(), Point3::origin()).unwrap();
        let out = apply_revolute(&cloud(&[[1.0, 0.0, 0.0]]), &axis, FRAC_PI_2).unwrap();
        assert_relative_eq!(out.points()[0], Point3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let c = cloud(&[[0.3, -1.2, 5.0], [1e3, 2.0, -7.5]]);
        let rev = MotionAxis::revolute(Vec3::new(1.0, 2.0, 3.0), Point3::new(0.1, 0.2, 0.3)).unwrap();
        let pri = MotionAxis::prismatic(Vec3::new(1.0, 2.0, 3.0), Point3::new(0.1, 0.2, 0.3)).unwrap();
        assert_eq!(apply_motion(&c, &rev, 0.0).unwrap(), c);
        assert_eq!(apply_motion(&c, &pri, 0.0).unwrap(), c);
        assert_eq!(apply_revolute(&c, &rev, 0.0).unwrap(), c);
        assert_eq!(apply_prismatic(&c, &pri, 0.0).unwrap(), c);
    }

    #[test]
    fn point_on_axis_is_fixed() {
        let origin = Point3::new(1.0, 2.0, 3.0);
        let d = Vec3::new(0.0, 1.0, 1.0);
        let axis = MotionAxis::revolute(d, origin).unwrap();
        let on_axis = origin + axis.direction.into_inner() * 2.5;
        let c = PointCloud::new(vec![on_axis]).unwrap();
        for angle in [0.3, -2.0, 3.1] {
            let out = apply_revolute(&c, &axis, angle).unwrap();
            assert!((out.points()[0] - on_axis).norm() < 1e-12);
        }
    }

    #[test]
    fn prismatic_translation() {
        let axis = MotionAxis::prismatic(Vec3::z(), Point3::origin()).unwrap();
        let out = apply_prismatic(&cloud(&[[0.0, 0.0, 0.0]]), &axis, 2.0).unwrap();
        assert_eq!(out.points()[0], Point3::new(0.0, 0.0, 2.0));
        let moved = MotionAxis { origin: Point3::new(9.0, -4.0, 1.0), ..axis };
        assert_eq!(apply_prismatic(&cloud(&[[0.0, 0.0, 0.0]]), &moved, 2.0).unwrap(), out);
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let c = cloud(&[[0.5, 0.1, -0.2], [0.0, 1.0, 2.0]]);
        let rev = MotionAxis::revolute(Vec3::new(0.2, -1.0, 0.4), Point3::new(1.0, 0.0, 0.0)).unwrap();
        let pri = MotionAxis { kind: MotionKind::Prismatic, ..rev };
        assert_eq!(apply_motion(&c, &rev, 0.7).unwrap(), apply_revolute(&c, &rev, 0.7).unwrap());
        assert_eq!(apply_motion(&c, &pri, 0.7).unwrap(), apply_prismatic(&c, &pri, 0.7).unwrap());
    }

    #[test]
    fn non_unit_direction_rejected() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        let mut axis = MotionAxis::revolute(Vec3::x(), Point3::origin()).unwrap();
        axis.direction = Unit::new_unchecked(Vec3::new(1.0, 1e-3, 0.0));
        assert!(matches!(apply_revolute(&c, &axis, 0.1), Err(Error::InvalidAxis { .. })));
        axis.kind = MotionKind::Prismatic;
        assert!(matches!(apply_prismatic(&c, &axis, 0.1), Err(Error::InvalidAxis { .. })));
    }

    #[test]
    fn kind_mismatch_rejected() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        let axis = MotionAxis::prismatic(Vec3::x(), Point3::origin()).unwrap();
        assert!(matches!(apply_revolute(&c, &axis, 0.1), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn labels_preserved_and_validated() {
        let pts = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        let c = PointCloud::with_labels(pts.clone(), vec![Part::Static, Part::Dynamic]).unwrap();
        let axis = MotionAxis::revolute(Vec3::z(), Point3::origin()).unwrap();
        let out = apply_revolute(&c, &axis, 1.0).unwrap();
        assert_eq!(out.labels(), c.labels());
        assert!(PointCloud::with_labels(pts, vec![Part::Static]).is_err());
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn inverse_undoes_motion() {
        let axis = MotionAxis::revolute(Vec3::new(0.3, 0.4, -1.0), Point3::new(0.5, -0.5, 2.0)).unwrap();
        let m = PartMotion::new(&axis, 1.234).unwrap();
        let p = Point3::new(3.0, -1.0, 0.25);
        assert!((m.inverse().apply(&m.apply(&p)) - p).norm() < 1e-14);
    }
}
