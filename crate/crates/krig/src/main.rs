//! `krig` — kriging from the command line, with singular covariance matrices
//! handled as first-class inputs rather than fatal errors.
//!
//! Exit codes are scriptable: 0 success, 1 reference-value check failure
//! (`paper-example --check`), 2 usage or parse error, 3 numeric failure
//! (ill-conditioning, non-convergence). Conditioning refusals name their own
//! fix: the rank tolerance or nugget that would bring the matrix within the
//! condition budget.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kriging::datasets;
use kriging::distwise::{group_repeated_points, DistWiseModel, SiteSummary, VarianceConvention};
use kriging::kernels::{Design, KernelSpec};
use kriging::likelihood::{
    estimate_lengthscales, estimate_nugget_cv, estimate_nugget_ml, pi_tolerance_for_condition,
    smallest_nugget_for_condition, KernelFamily,
};
use kriging::model::{KrigingModel, RegularizationPolicy};
use kriging::redundancy::{redundancy_groups, redundant_pairs, RedundancyReport, ReportGroup};
use kriging::spectral::SpectralDecomposition;
use kriging::Error;

/// Pair-coupling threshold used by the diagnostics commands.
const PAIR_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "krig",
    version,
    about = "Gaussian-process regression that keeps working on singular covariance matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on CSV data and predict mean/variance over a grid
    FitPredict(FitPredictArgs),
    /// Report redundant point pairs/groups and model-data discrepancy
    Diagnose(DiagnoseArgs),
    /// Estimate the nugget (ML/CV), length-scales, or condition-budget parameters
    Tune(TuneArgs),
    /// Print a bundled worked example; --check verifies its reference values
    PaperExample(PaperExampleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Pi,
    Nugget,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct FitPredictArgs {
    /// Input CSV with header x1,…,xd,y
    #[arg(long)]
    data: Option<PathBuf>,

    /// Kernel description: inline JSON or a path to a JSON file
    #[arg(long)]
    kernel: Option<String>,

    /// Regularization policy
    #[arg(long, value_enum, default_value_t = PolicyArg::Pi)]
    policy: PolicyArg,

    /// Rank tolerance for the pi policy (default: λ₁/κ_max)
    #[arg(long)]
    eta: Option<f64>,

    /// Nugget τ² for the nugget policy
    #[arg(long)]
    tau2: Option<f64>,

    /// Condition-number budget used in defaults and failure suggestions
    #[arg(long, default_value_t = 1e8)]
    kappa_max: f64,

    /// Prediction grid: one lo:hi:n segment per input dimension,
    /// comma-separated; the first dimension varies slowest
    #[arg(long)]
    grid: Option<String>,

    /// Output format for the prediction table
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Write the fitted model as JSON to this path
    #[arg(long)]
    save_model: Option<PathBuf>,

    /// Load a fitted model from JSON instead of fitting
    /// (replaces --data/--kernel/--policy)
    #[arg(long)]
    load_model: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Input CSV with header x1,…,xd,y
    #[arg(long)]
    data: PathBuf,

    /// Kernel description: inline JSON or a path to a JSON file
    #[arg(long)]
    kernel: String,

    /// Rank tolerance override (default: λ₁/1e8)
    #[arg(long)]
    eta: Option<f64>,

    /// Output format (this command is JSON-only)
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct TuneArgs {
    /// Input CSV with header x1,…,xd,y
    #[arg(long)]
    data: PathBuf,

    /// Kernel description: inline JSON or a path to a JSON file
    #[arg(long)]
    kernel: String,

    /// Estimate the nugget by maximum likelihood
    #[arg(long)]
    ml: bool,

    /// Estimate the nugget by leave-one-out cross-validation
    #[arg(long)]
    cv: bool,

    /// Estimate per-dimension length-scales (kernel sets the family)
    #[arg(long)]
    lengthscales: bool,

    /// Length-scale search bounds as lo:hi
    #[arg(long, default_value = "0.01:100")]
    bounds: String,

    /// Also report the smallest nugget and rank tolerance that keep the
    /// covariance condition number within this budget
    #[arg(long)]
    kappa_max: Option<f64>,

    /// Output format (this command is JSON-only)
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct PaperExampleArgs {
    /// Example identifier; use an unknown id to list the valid ones
    id: String,

    /// Verify computed values against the embedded reference values
    #[arg(long)]
    check: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure {
            code: if e.is_usage() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FitPredict(args) => cmd_fit_predict(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Tune(args) => cmd_tune(args),
        Command::PaperExample(args) => cmd_paper_example(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// Formats a float with 15 significant digits for tabular output.
fn fmt15(v: f64) -> String {
    format!("{v:.14e}")
}

fn read_data_csv(path: &PathBuf) -> Result<(Design, Vec<f64>), Failure> {
    let file = fs::File::open(path)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| usage(format!("{}: header: {e}", path.display())))?
        .clone();
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 2 {
        return Err(usage(format!(
            "{}: header needs x1,…,xd,y; got {} columns",
            path.display(),
            fields.len()
        )));
    }
    let d = fields.len() - 1;
    for (i, name) in fields.iter().take(d).enumerate() {
        let expected = format!("x{}", i + 1);
        if *name != expected {
            return Err(usage(format!(
                "{}: header column {} must be '{expected}', got '{name}'",
                path.display(),
                i + 1
            )));
        }
    }
    if fields[d] != "y" {
        return Err(usage(format!(
            "{}: last header column must be 'y', got '{}'",
            path.display(),
            fields[d]
        )));
    }

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2; // 1-based, after the header line
        let record =
            record.map_err(|e| usage(format!("{}: line {line}: {e}", path.display())))?;
        if record.len() != fields.len() {
            return Err(usage(format!(
                "{}: line {line}: expected {} fields, got {}",
                path.display(),
                fields.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for k in 0..d {
            row.push(record[k].trim().parse::<f64>().map_err(|_| {
                usage(format!(
                    "{}: line {line}: bad coordinate '{}'",
                    path.display(),
                    &record[k]
                ))
            })?);
        }
        y.push(record[d].trim().parse::<f64>().map_err(|_| {
            usage(format!(
                "{}: line {line}: bad output '{}'",
                path.display(),
                &record[d]
            ))
        })?);
        rows.push(row);
    }
    let design = Design::new(rows).map_err(Failure::from)?;
    Ok((design, y))
}

fn parse_kernel(spec: &str) -> Result<KernelSpec, Failure> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        fs::read_to_string(spec).map_err(|e| usage(format!("cannot read kernel file {spec}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("kernel JSON: {e}")))
}

/// Parses `lo:hi:n[,lo:hi:n…]` into per-dimension linearly spaced marks.
fn parse_grid(spec: &str, dim: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let segments: Vec<&str> = spec.split(',').collect();
    if segments.len() != dim {
        return Err(usage(format!(
            "grid has {} segment(s) but the data has {dim} dimension(s)",
            segments.len()
        )));
    }
    let mut axes = Vec::with_capacity(dim);
    for seg in segments {
        let parts: Vec<&str> = seg.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("grid segment '{seg}' is not lo:hi:n")));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| usage(format!("grid segment '{seg}': bad lower bound")))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| usage(format!("grid segment '{seg}': bad upper bound")))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| usage(format!("grid segment '{seg}': bad point count")))?;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(usage(format!("grid segment '{seg}': bounds must be finite with lo ≤ hi")));
        }
        let marks = if n == 0 {
            Vec::new()
        } else if n == 1 {
            vec![lo]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        axes.push(marks);
    }
    // Cartesian product, first dimension slowest.
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    if axes.iter().any(|a| a.is_empty()) {
        points.clear();
    }
    Ok(points)
}

/// Wraps a conditioning refusal with the concrete parameters that would fix
/// it under the given condition budget.
fn explain_conditioning(e: Error, kappa_max: f64) -> Failure {
    if let Error::IllConditioned {
        condition,
        limit,
        lambda_max,
        lambda_min,
    } = &e
    {
        let mut message = format!(
            "covariance matrix is ill-conditioned (condition {condition:.3e} exceeds limit {limit:.1e})"
        );
        if let Ok(eta) = pi_tolerance_for_condition(*lambda_max, kappa_max) {
            message.push_str(&format!(
                "; retry with --policy pi --eta {} (bounds the effective condition number by {kappa_max:.1e})",
                fmt15(eta)
            ));
        }
        if let Ok(tau2) = smallest_nugget_for_condition(*lambda_max, lambda_min.max(0.0), kappa_max)
        {
            message.push_str(&format!(
                " or --policy nugget --tau2 {} (smallest nugget reaching condition {kappa_max:.1e})",
                fmt15(tau2)
            ));
        }
        return Failure { code: 3, message };
    }
    Failure::from(e)
}

#[derive(Serialize)]
struct PredictionRow {
    x: Vec<f64>,
    mean: f64,
    variance: f64,
}

fn cmd_fit_predict(args: FitPredictArgs) -> Result<(), Failure> {
    let model = match (&args.load_model, &args.data, &args.kernel) {
        (Some(path), None, None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read model {}: {e}", path.display())))?;
            serde_json::from_str::<KrigingModel>(&text)
                .map_err(|e| usage(format!("model JSON: {e}")))?
        }
        (Some(_), _, _) => {
            return Err(usage("--load-model replaces --data and --kernel; pass only one side"));
        }
        (None, Some(data), Some(kernel_spec)) => {
            let (design, y) = read_data_csv(data)?;
            let kernel = parse_kernel(kernel_spec)?;
            let policy = match args.policy {
                PolicyArg::Pi => match args.eta {
                    Some(eta) => RegularizationPolicy::pi_with_tolerance(eta),
                    None => RegularizationPolicy::pi(),
                },
                PolicyArg::Nugget => {
                    if args.eta.is_some() {
                        return Err(usage("--eta applies to the pi policy only"));
                    }
                    let tau2 = args
                        .tau2
                        .ok_or_else(|| usage("--policy nugget requires --tau2"))?;
                    RegularizationPolicy::nugget(tau2)
                }
                PolicyArg::Exact => {
                    if args.eta.is_some() || args.tau2.is_some() {
                        return Err(usage("--eta/--tau2 do not apply to the exact policy"));
                    }
                    RegularizationPolicy::Exact
                }
            };
            if args.policy != PolicyArg::Nugget && args.tau2.is_some() {
                return Err(usage("--tau2 applies to the nugget policy only"));
            }
            KrigingModel::fit(design, &y, kernel, policy)
                .map_err(|e| explain_conditioning(e, args.kappa_max))?
        }
        _ => {
            return Err(usage("provide --data and --kernel, or --load-model"));
        }
    };

    if let Some(path) = &args.save_model {
        let json = serde_json::to_string_pretty(&model)
            .map_err(|e| Failure { code: 3, message: format!("model serialization: {e}") })?;
        fs::write(path, json + "\n")
            .map_err(|e| Failure { code: 3, message: format!("cannot write {}: {e}", path.display()) })?;
    }

    let dim = model.design().dim();
    let points = match &args.grid {
        Some(spec) => parse_grid(spec, dim)?,
        None => Vec::new(),
    };
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let mean = model.predict_mean(&x).map_err(Failure::from)?;
        let variance = model.predict_var(&x).map_err(Failure::from)?;
        rows.push(PredictionRow { x, mean, variance });
    }

    match args.format {
        FormatArg::Csv => {
            let header: Vec<String> = (1..=dim)
                .map(|i| format!("x{i}"))
                .chain(["mean".to_string(), "variance".to_string()])
                .collect();
            println!("{}", header.join(","));
            for row in &rows {
                let mut fields: Vec<String> = row.x.iter().map(|&v| fmt15(v)).collect();
                fields.push(fmt15(row.mean));
                fields.push(fmt15(row.variance));
                println!("{}", fields.join(","));
            }
        }
        FormatArg::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&rows)
                    .map_err(|e| Failure { code: 3, message: e.to_string() })?
            );
        }
    }
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), Failure> {
    if args.format == FormatArg::Csv {
        return Err(usage("diagnose emits structured JSON only; --format csv is not supported"));
    }
    let (design, y) = read_data_csv(&args.data)?;
    let kernel = parse_kernel(&args.kernel)?;
    let report = RedundancyReport::build(&design, &y, &kernel, args.eta, PAIR_TOLERANCE)
        .map_err(Failure::from)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report)
            .map_err(|e| Failure { code: 3, message: e.to_string() })?
    );
    Ok(())
}

#[derive(Serialize)]
struct TuneOutput {
    tau2_ml: Option<f64>,
    tau2_cv: Option<f64>,
    theta: Option<Vec<f64>>,
    sigma2: Option<f64>,
    objective: Option<f64>,
    evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau2_for_condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_for_condition: Option<f64>,
}

fn cmd_tune(args: TuneArgs) -> Result<(), Failure> {
    if args.format == FormatArg::Csv {
        return Err(usage("tune emits structured JSON only; --format csv is not supported"));
    }
    if !(args.ml || args.cv || args.lengthscales || args.kappa_max.is_some()) {
        return Err(usage(
            "nothing to tune: pass --ml, --cv, --lengthscales, and/or --kappa-max",
        ));
    }
    let (design, y) = read_data_csv(&args.data)?;
    let kernel = parse_kernel(&args.kernel)?;

    let mut out = TuneOutput {
        tau2_ml: None,
        tau2_cv: None,
        theta: None,
        sigma2: None,
        objective: None,
        evaluations: 0,
        tau2_for_condition: None,
        eta_for_condition: None,
    };

    if args.ml {
        let est = estimate_nugget_ml(&design, &y, &kernel).map_err(Failure::from)?;
        out.tau2_ml = Some(est.tau2);
        out.objective = Some(est.objective);
        out.evaluations += est.evaluations;
    }
    if args.cv {
        let est = estimate_nugget_cv(&design, &y, &kernel).map_err(Failure::from)?;
        out.tau2_cv = Some(est.tau2);
        if out.objective.is_none() {
            out.objective = Some(est.objective);
        }
        out.evaluations += est.evaluations;
    }
    if args.lengthscales {
        let family = match &kernel {
            KernelSpec::SquaredExponential { .. } => KernelFamily::SquaredExponential,
            KernelSpec::Additive { .. } => KernelFamily::Additive,
            KernelSpec::Periodic { omega, .. } => KernelFamily::Periodic { omega: *omega },
            KernelSpec::DotProduct { .. } => {
                return Err(usage("the dot-product kernel has no length-scales to estimate"));
            }
        };
        let parts: Vec<&str> = args.bounds.split(':').collect();
        if parts.len() != 2 {
            return Err(usage(format!("bounds '{}' are not lo:hi", args.bounds)));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| usage(format!("bounds '{}': bad lower bound", args.bounds)))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| usage(format!("bounds '{}': bad upper bound", args.bounds)))?;
        let est = estimate_lengthscales(&design, &y, family, (lo, hi)).map_err(Failure::from)?;
        out.theta = Some(est.theta);
        out.sigma2 = Some(est.sigma2);
    }
    if let Some(kappa_max) = args.kappa_max {
        let c = kernel.covariance_matrix(&design).map_err(Failure::from)?;
        let s = SpectralDecomposition::with_default_tolerance(&c).map_err(Failure::from)?;
        let ev = s.eigenvalues();
        let (lambda_max, lambda_min) = (ev[0], ev[ev.len() - 1].max(0.0));
        out.tau2_for_condition =
            Some(smallest_nugget_for_condition(lambda_max, lambda_min, kappa_max)
                .map_err(Failure::from)?);
        out.eta_for_condition =
            Some(pi_tolerance_for_condition(lambda_max, kappa_max).map_err(Failure::from)?);
    }

    println!(
        "{}",
        serde_json::to_string_pretty(&out)
            .map_err(|e| Failure { code: 3, message: e.to_string() })?
    );
    Ok(())
}

#[derive(Serialize)]
struct DiscrepancySection {
    residual: Vec<f64>,
    discr_sq_ratio: f64,
    discr_rms_ratio: f64,
}

#[derive(Serialize)]
struct ExampleOutput {
    id: String,
    note: String,
    design: Vec<Vec<f64>>,
    kernel: KernelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_projector: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    groups: Option<Vec<ReportGroup>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<DiscrepancySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted_means: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sites: Option<Vec<SiteSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predictions: Option<Vec<PredictionRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<String>,
}

fn cmd_paper_example(args: PaperExampleArgs) -> Result<(), Failure> {
    let Some(example) = datasets::by_id(&args.id) else {
        return Err(usage(format!(
            "unknown example '{}'; valid ids: {}",
            args.id,
            datasets::ids().join(", ")
        )));
    };

    let mut out = ExampleOutput {
        id: example.id.to_string(),
        note: example.note.to_string(),
        design: example.design.rows(),
        kernel: example.kernel.clone(),
        outputs: example.outputs.clone(),
        eigenvalues: None,
        image_projector: None,
        pairs: None,
        groups: None,
        discrepancy: None,
        fitted_means: None,
        sites: None,
        predictions: None,
        check: None,
    };
    let mut mismatches: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            mismatches.push(what);
        }
    };

    if example.site_level {
        let y = example.outputs.as_ref().expect("site-level examples carry outputs");
        let sites = group_repeated_points(&example.design, y, 1e-9, VarianceConvention::Population)
            .map_err(Failure::from)?;
        let model = DistWiseModel::fit(sites.clone(), example.kernel.clone())
            .map_err(Failure::from)?;
        let mut rows = Vec::new();
        if let Some(preds) = &example.goldens.predictions {
            for p in preds {
                let mean = model.predict_mean(&p.x).map_err(Failure::from)?;
                let variance = model.predict_var(&p.x).map_err(Failure::from)?;
                if args.check {
                    check(
                        (mean - p.mean).abs() <= 1e-8,
                        format!("{}: mean at {:?}: computed {mean}, reference {}", args.id, p.x, p.mean),
                    );
                    if let Some(v) = p.variance {
                        check(
                            (variance - v).abs() <= 1e-8,
                            format!("{}: variance at {:?}: computed {variance}, reference {v}", args.id, p.x),
                        );
                    }
                }
                rows.push(PredictionRow { x: p.x.clone(), mean, variance });
            }
        }
        out.sites = Some(sites);
        out.predictions = Some(rows);
    } else {
        let c = example.kernel.covariance_matrix(&example.design).map_err(Failure::from)?;
        let s = SpectralDecomposition::with_default_tolerance(&c).map_err(Failure::from)?;
        let n = example.design.n_points();

        out.eigenvalues = Some(s.eigenvalues().to_vec());
        let projector = s.image_projector();
        out.image_projector = Some(
            (0..n)
                .map(|i| (0..n).map(|j| projector[(i, j)]).collect())
                .collect(),
        );
        out.pairs = Some(
            redundant_pairs(&s, PAIR_TOLERANCE)
                .map_err(Failure::from)?
                .into_iter()
                .map(|(i, j)| [i + 1, j + 1])
                .collect(),
        );
        out.groups = Some(
            redundancy_groups(&s, PAIR_TOLERANCE)
                .map_err(Failure::from)?
                .into_iter()
                .map(|g| ReportGroup {
                    indices: g.indices.iter().map(|i| i + 1).collect(),
                    degree: g.degree,
                })
                .collect(),
        );

        if args.check {
            if let Some(golden) = &example.goldens.eigenvalues {
                for (i, (computed, reference)) in
                    s.eigenvalues().iter().zip(golden).enumerate()
                {
                    check(
                        (computed - reference).abs() <= datasets::PRINTED_VALUE_TOLERANCE,
                        format!("{}: eigenvalue {i}: computed {computed}, reference {reference}", args.id),
                    );
                }
            }
            if let Some(golden) = &example.goldens.image_projector {
                for i in 0..n {
                    for j in 0..n {
                        check(
                            (projector[(i, j)] - golden[i][j]).abs()
                                <= datasets::PRINTED_VALUE_TOLERANCE,
                            format!(
                                "{}: projector[{i}][{j}]: computed {}, reference {}",
                                args.id,
                                projector[(i, j)],
                                golden[i][j]
                            ),
                        );
                    }
                }
            }
            if let Some(golden) = &example.goldens.groups {
                let got: Vec<(Vec<usize>, usize)> = out
                    .groups
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|g| (g.indices.clone(), g.degree))
                    .collect();
                check(
                    &got == golden,
                    format!("{}: groups: computed {got:?}, reference {golden:?}", args.id),
                );
            }
        }

        if let Some(y) = &example.outputs {
            let d = kriging::redundancy::discrepancy(&example.design, y, &example.kernel, None)
                .map_err(Failure::from)?;
            let model = KrigingModel::fit(
                example.design.clone(),
                y,
                example.kernel.clone(),
                RegularizationPolicy::pi(),
            )
            .map_err(Failure::from)?;
            let fitted: Vec<f64> = model
                .predict_mean_at_design()
                .map_err(Failure::from)?
                .iter()
                .copied()
                .collect();

            if args.check {
                if let Some(golden) = &example.goldens.residual {
                    for (i, (computed, reference)) in d.residual.iter().zip(golden).enumerate() {
                        check(
                            (computed - reference).abs() <= 1e-8,
                            format!("{}: residual[{i}]: computed {computed}, reference {reference}", args.id),
                        );
                    }
                }
                if let Some(reference) = example.goldens.discr_sq_ratio {
                    check(
                        (d.discr_sq_ratio - reference).abs() <= 1e-6,
                        format!("{}: discr_sq_ratio: computed {}, reference {reference}", args.id, d.discr_sq_ratio),
                    );
                }
                if let Some(golden) = &example.goldens.fitted_means {
                    for (i, (computed, reference)) in fitted.iter().zip(golden).enumerate() {
                        check(
                            (computed - reference).abs() <= 1e-8,
                            format!("{}: fitted mean {i}: computed {computed}, reference {reference}", args.id),
                        );
                    }
                }
            }

            let mut rows = Vec::new();
            if let Some(preds) = &example.goldens.predictions {
                for p in preds {
                    let mean = model.predict_mean(&p.x).map_err(Failure::from)?;
                    let variance = model.predict_var(&p.x).map_err(Failure::from)?;
                    if args.check {
                        check(
                            (mean - p.mean).abs() <= 1e-8,
                            format!("{}: mean at {:?}: computed {mean}, reference {}", args.id, p.x, p.mean),
                        );
                        if let Some(v) = p.variance {
                            check(
                                (variance - v).abs() <= 1e-8,
                                format!("{}: variance at {:?}: computed {variance}, reference {v}", args.id, p.x),
                            );
                        }
                    }
                    rows.push(PredictionRow { x: p.x.clone(), mean, variance });
                }
                out.predictions = Some(rows);
            }
            out.discrepancy = Some(DiscrepancySection {
                residual: d.residual,
                discr_sq_ratio: d.discr_sq_ratio,
                discr_rms_ratio: d.discr_rms_ratio,
            });
            out.fitted_means = Some(fitted);
        }
    }

    if args.check {
        if mismatches.is_empty() {
            out.check = Some("pass".to_string());
        } else {
            return Err(Failure {
                code: 1,
                message: format!(
                    "{} reference-value mismatch(es):\n  {}",
                    mismatches.len(),
                    mismatches.join("\n  ")
                ),
            });
        }
    }

    println!(
        "{}",
        serde_json::to_string_pretty(&out)
            .map_err(|e| Failure { code: 3, message: e.to_string() })?
    );
    Ok(())
}
