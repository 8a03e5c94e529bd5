use std::fs;

use nalgebra::{Rotation3, Unit};

use artic_core::direct::{optimize, OptTrace, OptimizerConfig};
use artic_core::geometry::{MotionAxis, MotionKind, Point3, Vec3};
use artic_core::report::{
    export_overlay, export_trace, read_trace, trace_csv, AXIS_SAMPLES, GROUND_TRUTH_COLOR, PREDICTED_COLOR,
};
use artic_core::search::Hypothesis;
use artic_core::synth::{generate, GeneratedObject, ObjectTemplate, TemplateName};

fn door() -> GeneratedObject {
    let t = ObjectTemplate::random(TemplateName::Door, 11, 4, 0.0).unwrap();
    generate(&t, 200, 4, 11).unwrap()
}

/// Minimal binary little-endian PLY reader: vertex positions and colors.
fn read_colored(bytes: &[u8]) -> Vec<(Point3, [u8; 3])> {
    let end = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
    let header = std::str::from_utf8(&bytes[..end]).unwrap();
    assert!(header.contains("format binary_little_endian 1.0"));
    let mut count = 0;
    let mut props = Vec::new();
    for line in header.lines() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["element", "vertex", n] => count = n.parse().unwrap(),
            ["property", ty, name] => props.push((ty.to_string(), name.to_string())),
            _ => {}
        }
    }
    let mut at = end;
    let mut out = Vec::new();
    for _ in 0..count {
        let mut xyz = [0.0; 3];
        let mut rgb = [0u8; 3];
        for (ty, name) in &props {
            let value = match ty.as_str() {
                "double" => {
                    let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
                    at += 8;
                    v
                }
                "uchar" => {
                    at += 1;
                    f64::from(bytes[at - 1])
                }
                other => panic!("unexpected type {other}"),
            };
            match name.as_str() {
                "x" => xyz[0] = value,
                "y" => xyz[1] = value,
                "z" => xyz[2] = value,
                "red" => rgb[0] = value as u8,
                "green" => rgb[1] = value as u8,
                "blue" => rgb[2] = value as u8,
                _ => {}
            }
        }
        out.push((Point3::from(xyz), rgb));
    }
    assert_eq!(at, bytes.len());
    out
}

fn colored(points: &[(Point3, [u8; 3])], color: [u8; 3]) -> Vec<Point3> {
    points.iter().filter(|(_, c)| *c == color).map(|(p, _)| *p).collect()
}

#[test]
fn identical_axes_coincide() {
    let g = door();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlay.ply");
    export_overlay(&g.sequence, &g.ground_truth, Some(&g.ground_truth), &path).unwrap();
    let points = read_colored(&fs::read(&path).unwrap());
    let red = colored(&points, PREDICTED_COLOR);
    let green = colored(&points, GROUND_TRUTH_COLOR);
    assert_eq!(red.len(), AXIS_SAMPLES);
    assert_eq!(green.len(), AXIS_SAMPLES);
    for (r, g) in red.iter().zip(&green) {
        assert!((r - g).norm() <= 1e-9);
    }
    assert_eq!(points.len(), g.sequence.rest.len() + 2 * AXIS_SAMPLES);
}

#[test]
fn thirty_degree_error_is_visible_in_the_file() {
    let g = door();
    let gt = g.ground_truth;
    let d = gt.direction.into_inner();
    let perpendicular = d.cross(&if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();
    let tilted = Rotation3::from_axis_angle(&Unit::new_normalize(perpendicular), 30f64.to_radians()) * d;
    let pred = MotionAxis::revolute(tilted, gt.origin).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlay.ply");
    export_overlay(&g.sequence, &pred, Some(&gt), &path).unwrap();
    let points = read_colored(&fs::read(&path).unwrap());
    let line = |pts: Vec<Point3>| (pts[pts.len() - 1] - pts[0]).normalize();
    let (r, gr) = (line(colored(&points, PREDICTED_COLOR)), line(colored(&points, GROUND_TRUTH_COLOR)));
    let angle = r.dot(&gr).abs().min(1.0).acos().to_degrees();
    assert!((angle - 30.0).abs() <= 0.1, "{angle}");
}

#[test]
fn no_ground_truth_means_no_green() {
    let g = door();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlay.ply");
    export_overlay(&g.sequence, &g.ground_truth, None, &path).unwrap();
    let points = read_colored(&fs::read(&path).unwrap());
    assert!(colored(&points, GROUND_TRUTH_COLOR).is_empty());
    assert_eq!(colored(&points, PREDICTED_COLOR).len(), AXIS_SAMPLES);
}

#[test]
fn overlay_polyline_spans_the_configured_length() {
    let g = door();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlay.ply");
    export_overlay(&g.sequence, &g.ground_truth, None, &path).unwrap();
    let red = colored(&read_colored(&fs::read(&path).unwrap()), PREDICTED_COLOR);
    let span = (red[red.len() - 1] - red[0]).norm();
    assert!((span - 1.2 * g.sequence.diagonal()).abs() <= 1e-9 * span);
}

#[test]
fn re_export_is_bitwise_identical() {
    let g = door();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ply"), dir.path().join("b.ply"));
    export_overlay(&g.sequence, &g.ground_truth, Some(&g.ground_truth), &a).unwrap();
    export_overlay(&g.sequence, &g.ground_truth, Some(&g.ground_truth), &b).unwrap();
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

fn dummy_trace(losses: Vec<f64>) -> OptTrace {
    let last = *losses.last().unwrap();
    OptTrace {
        losses,
        restart: 0,
        restart_losses: vec![last],
        final_hypothesis: Hypothesis {
            axis: MotionAxis::revolute(Vec3::z(), Point3::origin()).unwrap(),
            magnitudes: vec![0.0],
            residual: last,
            candidate: None,
        },
    }
}

#[test]
fn single_entry_trace_is_two_lines() {
    let csv = trace_csv(&dummy_trace(vec![0.5]));
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next(), Some("iteration,loss"));
}

#[test]
fn trace_round_trips() {
    let losses = vec![3.0, 1.0 / 3.0, 1e-17, 2.5e-300, 0.0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    export_trace(&dummy_trace(losses.clone()), &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back.len(), losses.len());
    for (a, b) in back.iter().zip(&losses) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn trace_ends_at_the_returned_residual() {
    let g = door();
    let cfg = OptimizerConfig {
        restarts: 2,
        max_iters: 40,
        ..OptimizerConfig::default()
    };
    let (h, trace) = optimize(&g.sequence, MotionKind::Revolute, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    export_trace(&trace, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(*back.last().unwrap(), h.residual);
    assert!(back.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn malformed_trace_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "iteration,loss\n0,abc\n").unwrap();
    assert!(read_trace(&path).is_err());
    fs::write(&path, "loss\n0.1\n").unwrap();
    assert!(read_trace(&path).is_err());
}
