//! PLY point clouds and JSON sidecar files.
//!
//! PLY support covers what point-cloud tools commonly emit: ASCII or binary
//! little-endian, `float`/`double` coordinates, an optional `uchar part`
//! label (0 static, 1 dynamic) and any other scalar vertex properties, which
//! are skipped. Elements other than `vertex` (faces, say) are parsed and
//! ignored. Every parse error carries the byte offset where it was detected.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::Unit;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, MotionKind, Part, Point3, PointCloud, Vec3};
use crate::chamfer::CHAMFER_CONVENTION;
use crate::direct::{OptTrace, OptimizerConfig};
use crate::metrics::{Method, MetricRow, MAE_CONVENTION, MPE_CONVENTION};
use crate::search::{CandidateId, Hypothesis};
use crate::sequence::ObservedSequence;

/// Version tag written into every JSON file.
pub const FORMAT_VERSION: &str = "artic/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

/// Extra per-vertex data for [`write_ply_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PlyExtras<'a> {
    pub colors: Option<&'a [[u8; 3]]>,
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    write_ply_with(path, cloud, format, PlyExtras::default())
}

pub fn write_ply_with(path: &Path, cloud: &PointCloud, format: PlyFormat, extras: PlyExtras<'_>) -> Result<()> {
    let bytes = encode_ply(cloud, format, extras)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_ply(cloud: &PointCloud, format: PlyFormat, extras: PlyExtras<'_>) -> Result<Vec<u8>> {
    if let Some(colors) = extras.colors {
        if colors.len() != cloud.len() {
            return Err(Error::InvalidCloud(format!(
                "{} colors for {} points",
                colors.len(),
                cloud.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(cloud.len() * 28 + 256);
    let format_name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut header = format!("ply\nformat {format_name} 1.0\nelement vertex {}\n", cloud.len());
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.labels().is_some() {
        header.push_str("property uchar part\n");
    }
    if extras.colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");
    out.extend_from_slice(header.as_bytes());

    for (i, p) in cloud.points().iter().enumerate() {
        let label = cloud.labels().map(|l| l[i].code());
        let color = extras.colors.map(|c| c[i]);
        match format {
            PlyFormat::Ascii => {
                let mut line = format!("{} {} {}", p.x, p.y, p.z);
                if let Some(l) = label {
                    line.push_str(&format!(" {l}"));
                }
                if let Some([r, g, b]) = color {
                    line.push_str(&format!(" {r} {g} {b}"));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            PlyFormat::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(l) = label {
                    out.push(l);
                }
                if let Some(c) = color {
                    out.extend_from_slice(&c);
                }
            }
        }
    }
    Ok(out)
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
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
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }

    /// Parses an ASCII token, enforcing the integer range of the type.
    fn parse_token(self, tok: &str) -> Option<f64> {
        if self.is_float() {
            let v: f64 = tok.parse().ok()?;
            return Some(if self == Scalar::F32 { v as f32 as f64 } else { v });
        }
        let v: i64 = tok.parse().ok()?;
        let (lo, hi) = match self {
            Scalar::I8 => (i8::MIN as i64, i8::MAX as i64),
            Scalar::U8 => (0, u8::MAX as i64),
            Scalar::I16 => (i16::MIN as i64, i16::MAX as i64),
            Scalar::U16 => (0, u16::MAX as i64),
            Scalar::I32 => (i32::MIN as i64, i32::MAX as i64),
            _ => (0, u32::MAX as i64),
        };
        (lo..=hi).contains(&v).then_some(v as f64)
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(Error::parse(offset, "header ends without end_header"));
        };
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::parse(offset, "header is not valid text"))?
            .trim_end_matches('\r');
        let line_offset = offset;
        offset += nl + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        if first {
            if line != "ply" {
                return Err(Error::parse(0, "missing 'ply' magic line"));
            }
            first = false;
            continue;
        }
        match words.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, version] => {
                if format.is_some() {
                    return Err(Error::parse(line_offset, "duplicate format line"));
                }
                if *version != "1.0" {
                    return Err(Error::parse(line_offset, format!("unsupported PLY version {version}")));
                }
                format = Some(match *kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::parse(line_offset, "big-endian PLY is not supported"));
                    }
                    other => return Err(Error::parse(line_offset, format!("unknown format {other:?}"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(line_offset, format!("element {name}: bad count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", count, item, _name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_offset, "property before any element"))?;
                let parse = |t: &str| {
                    Scalar::parse(t).ok_or_else(|| Error::parse(line_offset, format!("unknown property type {t:?}")))
                };
                let (count, item) = (parse(count)?, parse(item)?);
                if count.is_float() {
                    return Err(Error::parse(line_offset, "list count type must be an integer"));
                }
                element.props.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_offset, "property before any element"))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse(line_offset, format!("unknown property type {ty:?}")))?;
                element.props.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            ["end_header"] => break,
            _ => return Err(Error::parse(line_offset, format!("unrecognized header line {line:?}"))),
        }
    }
    let format = format.ok_or_else(|| Error::parse(offset, "header has no format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: offset,
    })
}

/// Column positions of the fields we keep within a vertex row.
struct VertexLayout {
    xyz: [usize; 3],
    part: Option<usize>,
}

fn vertex_layout(element: &Element, header_end: usize) -> Result<VertexLayout> {
    let mut xyz = [None; 3];
    let mut part = None;
    for (i, p) in element.props.iter().enumerate() {
        match p {
            Property::List { .. } => {
                return Err(Error::parse(header_end, "list properties on the vertex element are not supported"));
            }
            Property::Scalar { name, ty } => {
                let axis = match name.as_str() {
                    "x" => Some(0),
                    "y" => Some(1),
                    "z" => Some(2),
                    _ => None,
                };
                if let Some(k) = axis {
                    if !ty.is_float() {
                        return Err(Error::parse(
                            header_end,
                            format!("vertex property {name} must be float or double"),
                        ));
                    }
                    xyz[k] = Some(i);
                } else if name == "part" {
                    if *ty != Scalar::U8 {
                        return Err(Error::parse(header_end, "vertex property part must be uchar"));
                    }
                    part = Some(i);
                }
            }
        }
    }
    let [Some(x), Some(y), Some(z)] = xyz else {
        return Err(Error::parse(header_end, "vertex element lacks x, y or z"));
    };
    Ok(VertexLayout { xyz: [x, y, z], part })
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let at = header.body_offset;
    let vertex_index = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(at, "no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_index], at)?;
    let mut points = Vec::with_capacity(header.elements[vertex_index].count.min(1 << 24));
    let mut labels = layout.part.map(|_| Vec::with_capacity(points.capacity()));

    let mut sink = |row: &[f64], offset: usize| -> Result<()> {
        let [x, y, z] = layout.xyz.map(|k| row[k]);
        points.push(Point3::new(x, y, z));
        if let (Some(k), Some(labels)) = (layout.part, labels.as_mut()) {
            let code = row[k] as u8;
            labels.push(
                Part::from_code(code)
                    .ok_or_else(|| Error::parse(offset, format!("part label {code} is neither 0 nor 1")))?,
            );
        }
        Ok(())
    };
    match header.format {
        PlyFormat::BinaryLittleEndian => read_binary(bytes, &header, vertex_index, &mut sink)?,
        PlyFormat::Ascii => read_ascii(bytes, &header, vertex_index, &mut sink)?,
    }
    match labels {
        Some(labels) => PointCloud::with_labels(points, labels),
        None => PointCloud::new(points),
    }
}

fn truncated(element: &Element, row: usize, offset: usize) -> Error {
    Error::parse(
        offset,
        format!(
            "element {} declares {} rows but data ends in row {}",
            element.name, element.count, row
        ),
    )
}

fn read_binary(
    bytes: &[u8],
    header: &Header,
    vertex_index: usize,
    sink: &mut impl FnMut(&[f64], usize) -> Result<()>,
) -> Result<()> {
    let mut pos = header.body_offset;
    let mut row = Vec::new();
    let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
        let slice = bytes.get(*pos..pos.checked_add(n)?)?;
        *pos += n;
        Some(slice)
    };
    for (ei, element) in header.elements.iter().enumerate() {
        for r in 0..element.count {
            let row_start = pos;
            row.clear();
            for prop in &element.props {
                match *prop {
                    Property::Scalar { ty, .. } => {
                        let b = take(&mut pos, ty.size()).ok_or_else(|| truncated(element, r, bytes.len()))?;
                        row.push(ty.decode(b));
                    }
                    Property::List { count, item } => {
                        let b = take(&mut pos, count.size()).ok_or_else(|| truncated(element, r, bytes.len()))?;
                        let n = count.decode(b);
                        if n < 0.0 {
                            return Err(Error::parse(row_start, format!("negative list length in {}", element.name)));
                        }
                        let len = (n as usize)
                            .checked_mul(item.size())
                            .ok_or_else(|| truncated(element, r, bytes.len()))?;
                        take(&mut pos, len).ok_or_else(|| truncated(element, r, bytes.len()))?;
                    }
                }
            }
            if ei == vertex_index {
                sink(&row, row_start)?;
            }
        }
    }
    Ok(())
}

fn read_ascii(
    bytes: &[u8],
    header: &Header,
    vertex_index: usize,
    sink: &mut impl FnMut(&[f64], usize) -> Result<()>,
) -> Result<()> {
    let body = &bytes[header.body_offset..];
    let text = std::str::from_utf8(body).map_err(|e| Error::parse(header.body_offset + e.valid_up_to(), "ASCII body is not valid text"))?;
    let mut lines = text.split('\n').scan(header.body_offset, |offset, line| {
        let start = *offset;
        *offset += line.len() + 1;
        Some((start, line))
    });
    let end = bytes.len();
    let mut row = Vec::new();
    for (ei, element) in header.elements.iter().enumerate() {
        for r in 0..element.count {
            let (offset, line) = loop {
                match lines.next() {
                    Some((_, l)) if l.trim().is_empty() => continue,
                    Some(found) => break found,
                    None => return Err(truncated(element, r, end)),
                }
            };
            let mut tokens = line.split_whitespace();
            row.clear();
            let mut next = |ty: Scalar| -> Result<f64> {
                let tok = tokens.next().ok_or_else(|| {
                    Error::parse(offset, format!("row {r} of {} has too few values", element.name))
                })?;
                ty.parse_token(tok)
                    .ok_or_else(|| Error::parse(offset, format!("bad value {tok:?} in row {r} of {}", element.name)))
            };
            for prop in &element.props {
                match *prop {
                    Property::Scalar { ty, .. } => row.push(next(ty)?),
                    Property::List { count, item } => {
                        let n = next(count)?;
                        for _ in 0..n as usize {
                            next(item)?;
                        }
                    }
                }
            }
            if tokens.next().is_some() {
                return Err(Error::parse(offset, format!("row {r} of {} has extra values", element.name)));
            }
            if ei == vertex_index {
                sink(&row, offset)?;
            }
        }
    }
    Ok(())
}

/// Interchange form of a motion axis plus per-frame magnitudes.
/// Revolute magnitudes are in degrees, prismatic ones in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRecord {
    pub kind: MotionKind,
    pub direction: [f64; 3],
    pub origin: [f64; 3],
    #[serde(default)]
    pub magnitudes: Vec<f64>,
}

impl AxisRecord {
    /// `magnitudes` in radians (revolute) or model units.
    pub fn from_axis(axis: &MotionAxis, magnitudes: &[f64]) -> Self {
        let d = axis.direction;
        Self {
            kind: axis.kind,
            direction: [d.x, d.y, d.z],
            origin: [axis.origin.x, axis.origin.y, axis.origin.z],
            magnitudes: magnitudes
                .iter()
                .map(|&m| match axis.kind {
                    MotionKind::Revolute => m.to_degrees(),
                    MotionKind::Prismatic => m,
                })
                .collect(),
        }
    }

    /// The axis (direction re-normalized) and magnitudes in radians or model
    /// units. Warns when the stored direction is off unit length by more than 1e-3.
    pub fn to_axis(&self) -> Result<(MotionAxis, Vec<f64>)> {
        let d = Vec3::from(self.direction);
        let norm = d.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidAxis { norm });
        }
        if (norm - 1.0).abs() > 1e-3 {
            warn!("axis direction has norm {norm}; re-normalizing");
        }
        let origin = Point3::from(self.origin);
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("axis origin is not finite".into()));
        }
        // Directions already unit to rounding keep their exact bits.
        let direction = if (norm - 1.0).abs() <= 1e-12 {
            Unit::new_unchecked(d)
        } else {
            Unit::new_normalize(d)
        };
        let axis = MotionAxis {
            kind: self.kind,
            direction,
            origin,
        };
        let magnitudes = self
            .magnitudes
            .iter()
            .map(|&m| match self.kind {
                MotionKind::Revolute => m.to_radians(),
                MotionKind::Prismatic => m,
            })
            .collect();
        Ok((axis, magnitudes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub axis: AxisRecord,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateId>,
}

impl From<&Hypothesis> for HypothesisRecord {
    fn from(h: &Hypothesis) -> Self {
        Self {
            axis: AxisRecord::from_axis(&h.axis, &h.magnitudes),
            residual: h.residual,
            candidate: h.candidate,
        }
    }
}

impl HypothesisRecord {
    pub fn to_hypothesis(&self) -> Result<Hypothesis> {
        let (axis, magnitudes) = self.axis.to_axis()?;
        Ok(Hypothesis {
            axis,
            magnitudes,
            residual: self.residual,
            candidate: self.candidate,
        })
    }
}

/// Definitions every report carries so it can be read without this code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub chamfer: String,
    pub mae: String,
    pub mpe: String,
    pub magnitudes: String,
}

impl Conventions {
    pub fn current() -> Self {
        Self {
            chamfer: CHAMFER_CONVENTION.into(),
            mae: MAE_CONVENTION.into(),
            mpe: MPE_CONVENTION.into(),
            magnitudes: "revolute in degrees, prismatic in model units, one per frame relative to rest".into(),
        }
    }
}

/// Settings an estimate was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSettings {
    pub input: String,
    pub methods: Vec<Method>,
    /// `auto`, `revolute` or `prismatic`.
    pub kind: String,
    pub optimizer: OptimizerConfig,
}

/// Short form of an optimizer trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub restart: usize,
    pub restart_losses: Vec<f64>,
}

impl From<&OptTrace> for TraceSummary {
    fn from(t: &OptTrace) -> Self {
        Self {
            iterations: t.losses.len().saturating_sub(1),
            initial_loss: t.losses.first().copied().unwrap_or(f64::NAN),
            final_loss: t.losses.last().copied().unwrap_or(f64::NAN),
            restart: t.restart,
            restart_losses: t.restart_losses.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub best: HypothesisRecord,
    /// Every candidate hypothesis, best first (discrete search only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranked: Vec<HypothesisRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    /// Scores against the input's ground truth, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub version: String,
    pub conventions: Conventions,
    pub settings: EstimateSettings,
    pub results: Vec<MethodResult>,
}

/// How a sequence was produced; informational.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectMetadata {
    pub name: String,
    /// Bounding-box diagonal of the rest-state object.
    pub diagonal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub version: String,
    /// Paths relative to the manifest's directory.
    pub rest: String,
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<AxisRecord>,
    pub metadata: ObjectMetadata,
}

#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub manifest: SequenceManifest,
    pub sequence: ObservedSequence,
    pub ground_truth: Option<(MotionAxis, Vec<f64>)>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `rest.ply`, `frame_NNN.ply` (binary) and `manifest.json` into `dir`.
pub fn write_sequence(
    dir: &Path,
    seq: &ObservedSequence,
    ground_truth: Option<(&MotionAxis, &[f64])>,
    metadata: ObjectMetadata,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_ply(&dir.join("rest.ply"), &seq.rest, PlyFormat::BinaryLittleEndian)?;
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let name = format!("frame_{i:03}.ply");
        write_ply(&dir.join(&name), frame, PlyFormat::BinaryLittleEndian)?;
        frames.push(name);
    }
    let manifest = SequenceManifest {
        version: FORMAT_VERSION.to_string(),
        rest: "rest.ply".into(),
        frames,
        ground_truth: ground_truth.map(|(a, m)| AxisRecord::from_axis(a, m)),
        metadata,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Accepts a manifest path or a directory containing `manifest.json`.
pub fn load_sequence(path: &Path) -> Result<LoadedSequence> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let manifest: SequenceManifest = read_json(&manifest_path)?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: manifest.version.clone(),
            supported: FORMAT_VERSION,
        });
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let rest = read_ply(&base.join(&manifest.rest))?;
    let frames = manifest
        .frames
        .iter()
        .map(|f| read_ply(&base.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let sequence = ObservedSequence::new(rest, frames)?;
    let ground_truth = manifest.ground_truth.as_ref().map(|r| r.to_axis()).transpose()?;
    Ok(LoadedSequence {
        manifest,
        sequence,
        ground_truth,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes rows as CSV with a header line. Fields must not contain commas.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    fs::write(path, out).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled() -> PointCloud {
        PointCloud::with_labels(
            vec![Point3::new(0.1, -2.5, 3e-7), Point3::new(1.0 / 3.0, 0.0, -0.0), Point3::new(1e10, 2.0, 7.25)],
            vec![Part::Static, Part::Dynamic, Part::Dynamic],
        )
        .unwrap()
    }

    #[test]
    fn round_trips_both_formats() {
        let c = labeled();
        for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let back = parse_ply(&encode_ply(&c, format, PlyExtras::default()).unwrap()).unwrap();
            assert_eq!(back, c, "{format:?}");
        }
    }

    #[test]
    fn colors_are_skipped_on_read() {
        let c = labeled();
        let colors = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];
        let bytes = encode_ply(&c, PlyFormat::BinaryLittleEndian, PlyExtras { colors: Some(&colors) }).unwrap();
        assert_eq!(parse_ply(&bytes).unwrap(), c);
    }

    #[test]
    fn float32_and_faces_accepted() {
        let text = "ply\r\nformat ascii 1.0\r\ncomment x\r\nelement vertex 2\r\nproperty float x\r\nproperty float y\r\n\
                    property float z\r\nproperty int flags\r\nelement face 1\r\nproperty list uchar int vertex_indices\r\n\
                    end_header\r\n0.5 1 2 7\r\n3 4 5 -1\r\n3 0 1 1\r\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.labels().is_none());
        assert_eq!(c.points()[1], Point3::new(3.0, 4.0, 5.0));
    }

    #[test]
    fn axis_record_degrees() {
        let axis = MotionAxis::revolute(Vec3::new(0.0, 0.0, 2.0), Point3::new(1.0, 2.0, 3.0)).unwrap();
        let rec = AxisRecord::from_axis(&axis, &[std::f64::consts::FRAC_PI_2]);
        assert_eq!(rec.direction, [0.0, 0.0, 1.0]);
        assert!((rec.magnitudes[0] - 90.0).abs() < 1e-12);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"revolute\""));
        let (back, mags) = rec.to_axis().unwrap();
        assert_eq!(back, axis);
        assert!((mags[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn axis_record_renormalizes_and_rejects_zero() {
        let rec = AxisRecord {
            kind: MotionKind::Prismatic,
            direction: [0.0, 3.0, 4.0],
            origin: [0.0; 3],
            magnitudes: vec![],
        };
        let (axis, _) = rec.to_axis().unwrap();
        assert!((axis.direction.norm() - 1.0).abs() < 1e-15);
        let zero = AxisRecord {
            direction: [0.0; 3],
            ..rec
        };
        assert!(matches!(zero.to_axis(), Err(Error::InvalidAxis { .. })));
    }
}
