//! Static visual artifacts: axis overlays as colored PLY, loss traces as CSV.

use std::fs;
use std::path::Path;

use crate::direct::OptTrace;
use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, Part, Point3, PointCloud};
use crate::io::{encode_ply, PlyExtras, PlyFormat};
use crate::sequence::ObservedSequence;

pub const STATIC_COLOR: [u8; 3] = [150, 150, 150];
pub const DYNAMIC_COLOR: [u8; 3] = [40, 90, 230];
pub const PREDICTED_COLOR: [u8; 3] = [230, 30, 30];
pub const GROUND_TRUTH_COLOR: [u8; 3] = [30, 200, 60];

/// Samples per axis polyline.
pub const AXIS_SAMPLES: usize = 64;
/// Polyline half-length as a fraction of the object diagonal.
pub const AXIS_HALF_LENGTH: f64 = 0.6;

/// Points along `axis`, centered on the line point closest to `anchor`.
pub fn axis_polyline(axis: &MotionAxis, anchor: &Point3, diagonal: f64) -> Vec<Point3> {
    let d = axis.direction.into_inner();
    let center = axis.origin + d * (anchor - axis.origin).dot(&d);
    let half = AXIS_HALF_LENGTH * diagonal;
    (0..AXIS_SAMPLES)
        .map(|k| center + d * (-half + 2.0 * half * k as f64 / (AXIS_SAMPLES - 1) as f64))
        .collect()
}

/// Rest cloud (static gray, dynamic blue) plus the predicted axis in red and,
/// when given, the ground-truth axis in green, as one colored PLY.
pub fn overlay_ply(seq: &ObservedSequence, pred: &MotionAxis, gt: Option<&MotionAxis>, format: PlyFormat) -> Result<Vec<u8>> {
    let diagonal = seq.diagonal();
    let anchor = seq.rest_dynamic()?.centroid();
    let mut points = seq.rest.points().to_vec();
    let mut colors: Vec<[u8; 3]> = match seq.rest.labels() {
        Some(labels) => labels
            .iter()
            .map(|l| match l {
                Part::Static => STATIC_COLOR,
                Part::Dynamic => DYNAMIC_COLOR,
            })
            .collect(),
        None => vec![STATIC_COLOR; points.len()],
    };
    for (axis, color) in std::iter::once((pred, PREDICTED_COLOR)).chain(gt.map(|g| (g, GROUND_TRUTH_COLOR))) {
        axis.validate()?;
        points.extend(axis_polyline(axis, &anchor, diagonal));
        colors.resize(points.len(), color);
    }
    let cloud = PointCloud::new(points)?;
    encode_ply(&cloud, format, PlyExtras { colors: Some(&colors) })
}

pub fn export_overlay(seq: &ObservedSequence, pred: &MotionAxis, gt: Option<&MotionAxis>, path: &Path) -> Result<()> {
    let bytes = overlay_ply(seq, pred, gt, PlyFormat::BinaryLittleEndian)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `iteration,loss` rows, one per trace entry (entry 0 is the starting loss).
pub fn trace_csv(trace: &OptTrace) -> String {
    let mut out = String::from("iteration,loss\n");
    for (i, loss) in trace.losses.iter().enumerate() {
        out.push_str(&format!("{i},{loss:?}\n"));
    }
    out
}

pub fn export_trace(trace: &OptTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_csv(trace)).map_err(|e| Error::io(path, e))
}

/// Loss column of a CSV written by [`export_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut offset = 0;
    let mut losses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let at = offset;
        offset += line.len() + 1;
        if i == 0 {
            if line != "iteration,loss" {
                return Err(Error::parse(at, "trace CSV must start with 'iteration,loss'"));
            }
            continue;
        }
        let (_, loss) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(at, format!("malformed trace row {line:?}")))?;
        losses.push(loss.parse().map_err(|_| Error::parse(at, format!("bad loss {loss:?}")))?);
    }
    Ok(losses)
}
