//! Command-line front end: generate synthetic suites, estimate axes,
//! benchmark both estimators and run the noise ablation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::json;

use artic_core::direct::{optimize_kinds, OptTrace, OptimizerConfig};
use artic_core::geometry::MotionKind;
use artic_core::io::{
    load_sequence, read_json, write_csv, write_json, write_sequence, AxisRecord, Conventions, EstimateReport,
    EstimateSettings, HypothesisRecord, MethodResult, ObjectMetadata, TraceSummary, FORMAT_VERSION,
};
use artic_core::metrics::{
    run_ablation, run_benchmark, score, AblationConfig, BenchmarkCase, BenchmarkConfig, BenchmarkReport, KindPolicy,
    Method, MetricRow,
};
use artic_core::report::{export_overlay, export_trace};
use artic_core::search::{search, Hypothesis};
use artic_core::synth::{
    generate_suite, DegradeConfig, ObjectTemplate, SuiteConfig, TemplateName, DEFAULT_FRAMES, DEFAULT_POINTS_PER_PART,
};
use artic_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "artic", version, about = "Articulation axis estimation from point-cloud sequences")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded suite of synthetic articulated objects.
    Gen(GenArgs),
    /// Estimate the articulation axis of one sequence.
    Estimate(EstimateArgs),
    /// Score estimators over a generated suite.
    Eval(EvalArgs),
    /// Compare both estimators across a jitter grid.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Template name, or `all` to cycle through every template.
    #[arg(long, default_value = "all")]
    template: String,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    frames: usize,
    /// Points per part.
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_PART)]
    points: usize,
    /// Jitter sigma as a fraction of the object diagonal.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    /// Hinge offset off the face center, as a fraction of the panel size.
    #[arg(long, default_value_t = 0.0)]
    hinge_offset: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Algo,
    Direct,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Auto,
    Revolute,
    Prismatic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindPolicyArg {
    Auto,
    GroundTruth,
}

#[derive(Args, Debug)]
struct OptimizerArgs {
    /// JSON optimizer config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Sequence manifest, or a directory containing one.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "algo")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "auto")]
    kind: KindArg,
    /// Start one Direct restart from the discrete search result.
    #[arg(long)]
    seed_from_algo: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Colored PLY with the predicted (and ground-truth) axis.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Loss trace CSV of the Direct run.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record wall-clock runtimes (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of generated objects (one subdirectory per object).
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated: algo, direct.
    #[arg(long, default_value = "algo,direct", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, value_enum, default_value = "auto")]
    kind_policy: KindPolicyArg,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct AblateArgs {
    /// Comma-separated jitter sigmas, fractions of the diagonal.
    #[arg(long, default_value = "0,0.005,0.01,0.02", value_delimiter = ',')]
    noise_grid: Vec<f64>,
    /// Objects per grid level.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_PART)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    frames: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 0.05)]
    outliers: f64,
    #[arg(long, value_enum, default_value = "ground-truth")]
    kind_policy: KindPolicyArg,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericalFailure { .. } => EXIT_NUMERICAL,
            Error::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Gen(a) => gen(a),
        Command::Estimate(a) => estimate(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Caps the worker pool at `ARTIC_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("ARTIC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("ARTIC_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot configure {threads} threads: {e}")))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Failure::from(Error::Io {
                path: dir.to_path_buf(),
                source: e,
            }))
        }
        _ => Ok(()),
    }
}

fn write_json_out<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    ensure_parent(path)?;
    Ok(write_json(path, value)?)
}

fn load_optimizer(args: &OptimizerArgs) -> CliResult<OptimizerConfig> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<OptimizerConfig>(path)?,
        None => OptimizerConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn template_metadata(t: &ObjectTemplate, hinge_offset: f64) -> serde_json::Value {
    let r = t.rotation.matrix();
    json!({
        "name": t.name,
        "body": t.body,
        "panel": t.panel,
        "hinge_offset": hinge_offset,
        "rotation": [[r[(0, 0)], r[(0, 1)], r[(0, 2)]], [r[(1, 0)], r[(1, 1)], r[(1, 2)]], [r[(2, 0)], r[(2, 1)], r[(2, 2)]]],
        "translation": [t.translation.x, t.translation.y, t.translation.z],
    })
}

fn gen(a: GenArgs) -> CliResult<()> {
    let templates = if a.template == "all" {
        TemplateName::ALL.to_vec()
    } else {
        vec![a.template.parse::<TemplateName>().map_err(usage)?]
    };
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let cfg = SuiteConfig {
        templates,
        count: a.count,
        points_per_part: a.points,
        frames: a.frames,
        hinge_offset: a.hinge_offset,
        degrade: DegradeConfig {
            jitter_sigma: a.jitter,
            dropout_rate: a.dropout,
            outlier_rate: a.outliers,
            seed: 0,
        },
        seed: a.seed,
    };
    let suite = generate_suite(&cfg).map_err(|e| match e {
        Error::Construction(m) => usage(m),
        other => other.into(),
    })?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::from(Error::Io {
        path: a.out.clone(),
        source: e,
    }))?;
    let mut ids = Vec::with_capacity(suite.len());
    for obj in &suite {
        let dir = a.out.join(&obj.id);
        let gt = &obj.object.ground_truth;
        write_sequence(
            &dir,
            &obj.object.sequence,
            Some((gt, &obj.object.profile)),
            ObjectMetadata {
                name: obj.id.clone(),
                diagonal: obj.object.sequence.diagonal(),
                template: Some(template_metadata(&obj.template, a.hinge_offset)),
            },
        )?;
        write_json(&dir.join("gt_axis.json"), &AxisRecord::from_axis(gt, &obj.object.profile))?;
        ids.push(obj.id.clone());
    }
    write_json(
        &a.out.join("suite.json"),
        &json!({ "version": FORMAT_VERSION, "config": cfg, "objects": ids }),
    )?;
    info!("wrote {} objects to {}", suite.len(), a.out.display());
    Ok(())
}

fn kinds_for(kind: KindArg) -> Vec<MotionKind> {
    match kind {
        KindArg::Auto => MotionKind::ALL.to_vec(),
        KindArg::Revolute => vec![MotionKind::Revolute],
        KindArg::Prismatic => vec![MotionKind::Prismatic],
    }
}

fn estimate(a: EstimateArgs) -> CliResult<()> {
    let methods = match a.method {
        MethodArg::Algo => vec![Method::Algo],
        MethodArg::Direct => vec![Method::Direct],
        MethodArg::Both => vec![Method::Algo, Method::Direct],
    };
    if a.trace.is_some() && !methods.contains(&Method::Direct) {
        return Err(usage("--trace needs --method direct or both"));
    }
    if a.seed_from_algo && !methods.contains(&Method::Direct) {
        return Err(usage("--seed-from-algo needs --method direct or both"));
    }
    let mut optimizer = load_optimizer(&a.optimizer)?;
    optimizer.seed_from_algo |= a.seed_from_algo;
    let loaded = load_sequence(&a.input)?;
    let seq = &loaded.sequence;
    let kinds = kinds_for(a.kind);
    let object_id = loaded.manifest.metadata.name.clone();

    let mut results = Vec::new();
    let mut best: Option<Hypothesis> = None;
    let mut direct_trace: Option<OptTrace> = None;
    for &method in &methods {
        let started = Instant::now();
        let (hypothesis, ranked, trace) = match method {
            Method::Algo => {
                let report = search(seq, &kinds)?;
                let ranked = report.ranked.iter().map(HypothesisRecord::from).collect();
                (report.best, ranked, None)
            }
            Method::Direct => {
                let (h, trace) = optimize_kinds(seq, &kinds, &optimizer)?;
                (h, Vec::new(), Some(trace))
            }
        };
        let runtime = started.elapsed().as_secs_f64();
        let metrics = loaded
            .ground_truth
            .as_ref()
            .map(|(gt, _)| score(&object_id, method, &hypothesis, gt, seq.diagonal()))
            .transpose()?
            .map(|row| MetricRow {
                runtime_s: a.timings.then_some(runtime),
                ..row
            });
        results.push(MethodResult {
            method,
            best: HypothesisRecord::from(&hypothesis),
            ranked,
            trace: trace.as_ref().map(TraceSummary::from),
            metrics,
            runtime_s: a.timings.then_some(runtime),
        });
        if best.is_none() {
            best = Some(hypothesis);
        }
        if trace.is_some() {
            direct_trace = trace;
        }
    }

    let report = EstimateReport {
        version: FORMAT_VERSION.into(),
        conventions: Conventions::current(),
        settings: EstimateSettings {
            input: a.input.display().to_string(),
            methods: methods.clone(),
            kind: format!("{:?}", a.kind).to_lowercase(),
            optimizer,
        },
        results,
    };
    match &a.out {
        Some(path) => write_json_out(path, &report)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report types always serialize")
        ),
    }
    if let Some(path) = &a.overlay {
        let best = best.expect("at least one method ran");
        ensure_parent(path)?;
        export_overlay(seq, &best.axis, loaded.ground_truth.as_ref().map(|(g, _)| g), path)?;
    }
    if let (Some(path), Some(trace)) = (&a.trace, &direct_trace) {
        ensure_parent(path)?;
        export_trace(trace, path)?;
    }
    Ok(())
}

fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    let methods = names
        .iter()
        .map(|s| s.trim().parse::<Method>().map_err(|e| usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(usage("--methods is empty"));
    }
    Ok(methods)
}

fn kind_policy(arg: KindPolicyArg) -> KindPolicy {
    match arg {
        KindPolicyArg::Auto => KindPolicy::Auto,
        KindPolicyArg::GroundTruth => KindPolicy::GroundTruth,
    }
}

/// Every subdirectory of `dir` holding a manifest, in name order.
fn load_suite(dir: &Path) -> CliResult<Vec<BenchmarkCase>> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::from(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(artic_core::io::MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(usage(format!("no object manifests under {}", dir.display())));
    }
    dirs.iter()
        .map(|d| {
            let loaded = load_sequence(d)?;
            let (ground_truth, _) = loaded.ground_truth.ok_or_else(|| Failure {
                code: EXIT_FAILURE,
                message: format!("{} has no ground truth to score against", d.display()),
            })?;
            Ok(BenchmarkCase {
                id: loaded.manifest.metadata.name,
                sequence: loaded.sequence,
                ground_truth,
            })
        })
        .collect()
}

const ROW_HEADER: [&str; 11] = [
    "object_id",
    "method",
    "gt_kind",
    "pred_kind",
    "mae_deg",
    "mae_unfolded_deg",
    "mpe",
    "line_distance",
    "mpe_identifiable",
    "residual",
    "runtime_s",
];

fn row_fields(r: &MetricRow) -> Vec<String> {
    vec![
        r.object_id.clone(),
        r.method.to_string(),
        r.gt_kind.as_str().to_string(),
        r.pred_kind.as_str().to_string(),
        format!("{:?}", r.mae_deg),
        format!("{:?}", r.mae_unfolded_deg),
        format!("{:?}", r.mpe),
        format!("{:?}", r.line_distance),
        r.mpe_identifiable.to_string(),
        format!("{:?}", r.residual),
        r.runtime_s.map(|t| format!("{t:?}")).unwrap_or_default(),
    ]
}

fn print_summary(report: &BenchmarkReport) {
    for s in &report.summary {
        println!(
            "{:<6} rows {:>4} failed {:>3}  MAE {:>8.4} deg  MPE {:>8.5}  kind acc {:.3}",
            s.method.to_string(),
            s.rows,
            s.failed,
            s.mean_mae_deg,
            s.mean_mpe,
            s.kind_accuracy
        );
    }
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let methods = parse_methods(&a.methods)?;
    let optimizer = load_optimizer(&a.optimizer)?;
    let cases = load_suite(&a.suite)?;
    let cfg = BenchmarkConfig {
        methods,
        kind_policy: kind_policy(a.kind_policy),
        optimizer,
        record_timings: a.timings,
    };
    let report = run_benchmark(&cases, &cfg)?;
    print_summary(&report);
    if let Some(path) = &a.csv {
        ensure_parent(path)?;
        let rows: Vec<Vec<String>> = report.rows.iter().map(row_fields).collect();
        write_csv(path, &ROW_HEADER, &rows)?;
    }
    if let Some(path) = &a.json {
        write_json_out(
            path,
            &json!({
                "version": FORMAT_VERSION,
                "conventions": Conventions::current(),
                "settings": {
                    "suite": a.suite.display().to_string(),
                    "methods": cfg.methods,
                    "kind_policy": cfg.kind_policy,
                    "optimizer": cfg.optimizer,
                },
                "report": report,
            }),
        )?;
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> CliResult<()> {
    if a.noise_grid.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
        return Err(usage("--noise-grid values must be finite and non-negative"));
    }
    let cfg = AblationConfig {
        jitter_levels: a.noise_grid,
        seeds: a.seeds,
        dropout_rate: a.dropout,
        outlier_rate: a.outliers,
        points_per_part: a.points,
        frames: a.frames,
        kind_policy: kind_policy(a.kind_policy),
        optimizer: load_optimizer(&a.optimizer)?,
        seed: a.optimizer.seed.unwrap_or(0),
    };
    let report = run_ablation(&cfg).map_err(|e| match e {
        Error::Construction(m) => usage(m),
        other => other.into(),
    })?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::from(Error::Io {
        path: a.out.clone(),
        source: e,
    }))?;
    let mut table = Vec::new();
    for level in &report.levels {
        for s in [&level.algo, &level.direct] {
            table.push(vec![
                format!("{:?}", level.jitter),
                s.method.to_string(),
                s.rows.to_string(),
                s.failed.to_string(),
                format!("{:?}", s.mean_mae_deg),
                format!("{:?}", s.mean_mpe),
                format!("{:?}", s.mean_line_distance),
            ]);
        }
    }
    write_csv(
        &a.out.join("table.csv"),
        &["jitter", "method", "rows", "failed", "mean_mae_deg", "mean_mpe", "mean_line_distance"],
        &table,
    )?;
    let mut rows = Vec::new();
    for level in &report.levels {
        for r in &level.rows {
            let mut fields = vec![format!("{:?}", level.jitter)];
            fields.extend(row_fields(r));
            rows.push(fields);
        }
    }
    let mut header = vec!["jitter"];
    header.extend(ROW_HEADER);
    write_csv(&a.out.join("rows.csv"), &header, &rows)?;
    write_json(
        &a.out.join("summary.json"),
        &json!({
            "version": FORMAT_VERSION,
            "conventions": Conventions::current(),
            "ablation": report,
        }),
    )?;
    println!(
        "algo MAE {:.4} MPE {:.5} | direct MAE {:.4} MPE {:.5} | ordering holds: {}",
        report.algo.mean_mae_deg,
        report.algo.mean_mpe,
        report.direct.mean_mae_deg,
        report.direct.mean_mpe,
        report.ordering_holds
    );
    Ok(())
}
