//! Axis error metrics and the batch benchmark harness.

use std::fmt;
use std::str::FromStr;
use crate::clock::Stopwatch;

use serde::{Deserialize, Serialize};

use crate::direct::{optimize_kinds, OptimizerConfig};
use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, MotionKind, UNIT_TOLERANCE};
use crate::par;
use crate::rng::derive_seed;
use crate::search::{search, Hypothesis};
use crate::sequence::ObservedSequence;
use crate::synth::{generate_suite, DegradeConfig, SuiteConfig, TemplateName};

pub const MAE_CONVENTION: &str =
    "angle between axis directions in degrees, folded to [0, 90] so d and -d agree; unfolded value reported alongside";
pub const MPE_CONVENTION: &str =
    "distance between predicted and ground-truth origins divided by the object diagonal; line distance reported alongside";

fn check_unit(axis: &MotionAxis) -> Result<()> {
    let norm = axis.direction.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
        return Err(Error::InvalidAxis { norm });
    }
    Ok(())
}

/// Angle between the axis directions in degrees, folded to `[0, 90]` so that
/// `d` and `-d` count as the same axis.
pub fn angular_error(pred: &MotionAxis, gt: &MotionAxis) -> Result<f64> {
    check_unit(pred)?;
    check_unit(gt)?;
    Ok(pred.direction.dot(&gt.direction).abs().min(1.0).acos().to_degrees())
}

/// Angle between the axis directions in degrees, in `[0, 180]`.
pub fn angular_error_unfolded(pred: &MotionAxis, gt: &MotionAxis) -> Result<f64> {
    check_unit(pred)?;
    check_unit(gt)?;
    Ok(pred.direction.dot(&gt.direction).clamp(-1.0, 1.0).acos().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionError {
    /// `|o_pred - o_gt|`.
    pub origin_distance: f64,
    /// Smallest distance between the two axis lines.
    pub line_distance: f64,
    /// False for prismatic joints, whose origin carries no information.
    pub identifiable: bool,
}

pub fn position_error(pred: &MotionAxis, gt: &MotionAxis) -> Result<PositionError> {
    if pred.kind != gt.kind {
        return Err(Error::KindMismatch {
            expected: gt.kind,
            found: pred.kind,
        });
    }
    check_unit(pred)?;
    check_unit(gt)?;
    Ok(PositionError {
        origin_distance: (pred.origin - gt.origin).norm(),
        line_distance: line_distance(pred, gt),
        identifiable: gt.kind == MotionKind::Revolute,
    })
}

/// Smallest distance between the infinite lines through the two axes.
pub fn line_distance(a: &MotionAxis, b: &MotionAxis) -> f64 {
    let w = b.origin - a.origin;
    let cross = a.direction.cross(&b.direction);
    let sin = cross.norm();
    if sin < 1e-9 {
        // parallel: distance from b's origin to a's line
        w.cross(&a.direction).norm()
    } else {
        w.dot(&cross).abs() / sin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Algo,
    Direct,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Algo, Method::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Algo => "algo",
            Method::Direct => "direct",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algo" => Ok(Method::Algo),
            "direct" => Ok(Method::Direct),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?} (expected algo or direct)"))),
        }
    }
}

/// Which motion kinds an estimator may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindPolicy {
    /// Both kinds; the lower residual wins.
    #[default]
    Auto,
    /// Only the ground-truth kind.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub object_id: String,
    pub method: Method,
    pub gt_kind: MotionKind,
    pub pred_kind: MotionKind,
    /// Folded angular error, degrees.
    pub mae_deg: f64,
    pub mae_unfolded_deg: f64,
    /// Origin distance divided by the object diagonal.
    pub mpe: f64,
    /// Axis line distance divided by the object diagonal.
    pub line_distance: f64,
    pub mpe_identifiable: bool,
    pub residual: f64,
    /// Wall-clock seconds; absent unless timings were requested.
    pub runtime_s: Option<f64>,
}

/// Scores `pred` against `gt`. Position errors are normalized by `diagonal`.
/// A kind mismatch is scored geometrically rather than rejected, and the
/// row's kinds record it.
pub fn score(object_id: &str, method: Method, pred: &Hypothesis, gt: &MotionAxis, diagonal: f64) -> Result<MetricRow> {
    let diagonal = if diagonal > 0.0 { diagonal } else { 1.0 };
    Ok(MetricRow {
        object_id: object_id.to_string(),
        method,
        gt_kind: gt.kind,
        pred_kind: pred.axis.kind,
        mae_deg: angular_error(&pred.axis, gt)?,
        mae_unfolded_deg: angular_error_unfolded(&pred.axis, gt)?,
        mpe: (pred.axis.origin - gt.origin).norm() / diagonal,
        line_distance: line_distance(&pred.axis, gt) / diagonal,
        mpe_identifiable: gt.kind == MotionKind::Revolute && pred.axis.kind == gt.kind,
        residual: pred.residual,
        runtime_s: None,
    })
}

#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub id: String,
    pub sequence: ObservedSequence,
    pub ground_truth: MotionAxis,
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub kind_policy: KindPolicy,
    /// Its `seed` is mixed with each case's index.
    pub optimizer: OptimizerConfig,
    pub record_timings: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            kind_policy: KindPolicy::Auto,
            optimizer: OptimizerConfig::default(),
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub object_id: String,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub rows: usize,
    pub failed: usize,
    pub mean_mae_deg: f64,
    pub mean_mpe: f64,
    /// Over rows where the origin is identifiable (revolute, kind correct).
    pub mean_line_distance: f64,
    pub identifiable_rows: usize,
    pub kind_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<RowFailure>,
    pub summary: Vec<MethodSummary>,
}

impl BenchmarkReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

/// Runs an estimator on one sequence, honoring the kind policy.
pub fn estimate(
    seq: &ObservedSequence,
    method: Method,
    kinds: &[MotionKind],
    optimizer: &OptimizerConfig,
) -> Result<Hypothesis> {
    match method {
        Method::Algo => Ok(search(seq, kinds)?.best),
        Method::Direct => Ok(optimize_kinds(seq, kinds, optimizer)?.0),
    }
}

/// Every method on every case. Rows come out in (case, method) order whatever
/// the execution order; failed estimations are listed and left out of the means.
pub fn run_benchmark(suite: &[BenchmarkCase], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if suite.is_empty() {
        return Err(Error::EmptyInput("benchmark suite is empty"));
    }
    if cfg.methods.is_empty() {
        return Err(Error::EmptyInput("no methods to benchmark"));
    }
    cfg.optimizer.validate()?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();

    let jobs: Vec<(usize, Method)> = (0..suite.len()).flat_map(|i| methods.iter().map(move |&m| (i, m))).collect();
    let outcomes = par::map(&jobs, |&(i, method)| {
        let case = &suite[i];
        let kinds = match cfg.kind_policy {
            KindPolicy::Auto => MotionKind::ALL.to_vec(),
            KindPolicy::GroundTruth => vec![case.ground_truth.kind],
        };
        let optimizer = OptimizerConfig {
            seed: derive_seed(cfg.optimizer.seed, i as u64),
            ..cfg.optimizer.clone()
        };
        let started = Stopwatch::start();
        let pred = estimate(&case.sequence, method, &kinds, &optimizer)?;
        let elapsed = started.seconds();
        let mut row = score(&case.id, method, &pred, &case.ground_truth, case.sequence.diagonal())?;
        if cfg.record_timings {
            row.runtime_s = Some(elapsed);
        }
        Ok::<_, Error>(row)
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(i, method), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(RowFailure {
                object_id: suite[i].id.clone(),
                method,
                error: e.to_string(),
            }),
        }
    }
    let summary = methods.iter().map(|&m| summarize(m, &rows, &failures)).collect();
    Ok(BenchmarkReport {
        rows,
        failures,
        summary,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn summarize(method: Method, rows: &[MetricRow], failures: &[RowFailure]) -> MethodSummary {
    let mine: Vec<&MetricRow> = rows.iter().filter(|r| r.method == method).collect();
    let identifiable: Vec<&&MetricRow> = mine.iter().filter(|r| r.mpe_identifiable).collect();
    MethodSummary {
        method,
        rows: mine.len(),
        failed: failures.iter().filter(|f| f.method == method).count(),
        mean_mae_deg: mean(mine.iter().map(|r| r.mae_deg)),
        mean_mpe: mean(mine.iter().map(|r| r.mpe)),
        mean_line_distance: mean(identifiable.iter().map(|r| r.line_distance)),
        identifiable_rows: identifiable.len(),
        kind_accuracy: mean(mine.iter().map(|r| f64::from(u8::from(r.pred_kind == r.gt_kind)))),
    }
}

/// Algo against Direct over increasing jitter, with fixed dropout and outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    /// Jitter sigmas as fractions of the object diagonal.
    pub jitter_levels: Vec<f64>,
    /// Objects per level, cycling through all templates.
    pub seeds: usize,
    pub dropout_rate: f64,
    pub outlier_rate: f64,
    pub points_per_part: usize,
    pub frames: usize,
    pub kind_policy: KindPolicy,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            jitter_levels: vec![0.0, 0.005, 0.01, 0.02],
            seeds: 20,
            dropout_rate: 0.5,
            outlier_rate: 0.05,
            points_per_part: crate::synth::DEFAULT_POINTS_PER_PART,
            frames: crate::synth::DEFAULT_FRAMES,
            kind_policy: KindPolicy::GroundTruth,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationLevel {
    pub jitter: f64,
    pub algo: MethodSummary,
    pub direct: MethodSummary,
    pub rows: Vec<MetricRow>,
    pub failures: Vec<RowFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config: AblationConfig,
    pub levels: Vec<AblationLevel>,
    /// Means over every scored row of every level.
    pub algo: MethodSummary,
    pub direct: MethodSummary,
    /// Mean MAE of Algo below Direct's and mean MPE not above it.
    pub ordering_holds: bool,
}

/// Every level reuses the same clean objects; only the noise differs.
pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationReport> {
    if cfg.jitter_levels.is_empty() || cfg.seeds == 0 {
        return Err(Error::InvalidConfig("ablation needs at least one jitter level and one seed".into()));
    }
    let mut levels = Vec::with_capacity(cfg.jitter_levels.len());
    for &jitter in &cfg.jitter_levels {
        let suite = generate_suite(&SuiteConfig {
            templates: TemplateName::ALL.to_vec(),
            count: cfg.seeds,
            points_per_part: cfg.points_per_part,
            frames: cfg.frames,
            hinge_offset: 0.0,
            degrade: DegradeConfig {
                jitter_sigma: jitter,
                dropout_rate: cfg.dropout_rate,
                outlier_rate: cfg.outlier_rate,
                seed: 0,
            },
            seed: cfg.seed,
        })?;
        let cases: Vec<BenchmarkCase> = suite
            .into_iter()
            .map(|o| BenchmarkCase {
                id: o.id,
                sequence: o.object.sequence,
                ground_truth: o.object.ground_truth,
            })
            .collect();
        let report = run_benchmark(
            &cases,
            &BenchmarkConfig {
                methods: Method::ALL.to_vec(),
                kind_policy: cfg.kind_policy,
                optimizer: cfg.optimizer.clone(),
                record_timings: false,
            },
        )?;
        levels.push(AblationLevel {
            jitter,
            algo: summarize(Method::Algo, &report.rows, &report.failures),
            direct: summarize(Method::Direct, &report.rows, &report.failures),
            rows: report.rows,
            failures: report.failures,
        });
    }
    let rows: Vec<MetricRow> = levels.iter().flat_map(|l| l.rows.iter().cloned()).collect();
    let failures: Vec<RowFailure> = levels.iter().flat_map(|l| l.failures.iter().cloned()).collect();
    let algo = summarize(Method::Algo, &rows, &failures);
    let direct = summarize(Method::Direct, &rows, &failures);
    let ordering_holds = algo.mean_mae_deg < direct.mean_mae_deg && algo.mean_mpe <= direct.mean_mpe;
    Ok(AblationReport {
        config: cfg.clone(),
        levels,
        algo,
        direct,
        ordering_holds,
    })
}
