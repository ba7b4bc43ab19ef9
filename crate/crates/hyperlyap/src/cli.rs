//! Command-line drivers: reproducible experiment records over the
//! simulation, exact-arithmetic, and series layers.
//!
//! * Subcommands: `simulate` (one spectrum), `table` (the 14-row catalog),
//!   `degrees` (exact parabolic Hodge data), `strata` (hyperelliptic-locus
//!   bounds), `polygon` (Harder-Narasimhan vs Lyapunov polygons),
//!   `wronskian` (power-series growth evidence).
//! * Every JSON run emits a [`RunRecord`]: tool version, command line, the
//!   fully materialized configuration, results payload, duration, RFC 3339
//!   timestamp. Records round-trip through JSON, and re-running a recorded
//!   simulation configuration reproduces the results payload bitwise. CSV
//!   mode prints the tabular payload alone.
//! * Configuration precedence: built-in defaults, then `--config` file
//!   fields, then individual flags. `--threads` (or `HYPERLYAP_THREADS`)
//!   sets the worker count; results never depend on it.
//! * Exit codes: 0 success, 2 invalid input, 3 integrability gate failure,
//!   4 numerical alarm, 5 corrupt snapshot, 1 other I/O failure.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exact::{rat_int, rat_to_f64, Rat, RatMat};
use crate::hodge::{
    cokernel_length, cy_hodge_degrees, cy_hodge_degrees_from_cokernels, hn_polygon,
    hyperelliptic_quotient_degree, large_genus_bound, lyapunov_polygon, main_bound,
    orbifold_normalize, polygon_dominates, ExponentLocation, HodgeDegrees, LocalExponentData,
    SlopePolygon, Stratum,
};
use crate::lyapunov::{
    compare_bound, estimate, estimate_resumable, LyapunovError, LyapunovEstimate,
    SimulationConfig,
};
use crate::monodromy::{
    cy_case, cy_catalog, hodge_numbers, levelt_construct, CYCase, HypergeometricParams,
    MonodromyRep, RepMatrices,
};
use crate::series::{coefficients_csv, growth_fit, inverse_f_coefficients, wronskian_series};

const EXIT_GENERAL: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_NOT_INTEGRABLE: i32 = 3;
const EXIT_PRECISION: i32 = 4;
const EXIT_CORRUPT_SNAPSHOT: i32 = 5;

/// Schema version stamped into every emitted [`RunRecord`].
pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Top-level failure of a run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Simulation(#[from] LyapunovError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Simulation(e) => match e {
                LyapunovError::NotIntegrable(_) => EXIT_NOT_INTEGRABLE,
                LyapunovError::PrecisionAlarm(_) => EXIT_PRECISION,
                LyapunovError::CorruptSnapshot(_) => EXIT_CORRUPT_SNAPSHOT,
                LyapunovError::InvalidConfig(_) => EXIT_USAGE,
                LyapunovError::SnapshotIo(_) => EXIT_GENERAL,
            },
            CliError::Io(_) => EXIT_GENERAL,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// One self-describing run: enough to reproduce the results payload from
/// the record alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool_version: String,
    /// The invoked command line, without the binary path.
    pub command: String,
    /// Fully materialized configuration: defaults, file, and flags merged.
    pub config: Value,
    pub results: Value,
    pub duration_seconds: f64,
    /// RFC 3339 wall-clock time at completion.
    pub timestamp: String,
}

#[derive(Parser)]
#[command(
    name = "hyperlyap",
    version,
    about = "Lyapunov spectra, exact Hodge-bundle degrees, and series \
             diagnostics for hypergeometric bundles over the thrice-punctured sphere"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Master seed override (applies after --config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Stdout format: full run record (json) or tabular payload (csv).
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,
    /// Snapshot file to write checkpoints to (directory for `table`).
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Snapshot file to resume from (directory for `table`); must exist,
    /// and further checkpoints are written back to it.
    #[arg(long, global = true)]
    resume: Option<PathBuf>,
    /// Worker thread count; defaults to HYPERLYAP_THREADS, then to the
    /// machine default. Results are independent of this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with simulation-config fields; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the Lyapunov spectrum of one bundle.
    Simulate(SimulateArgs),
    /// Run all 14 catalog rows and emit the summary table.
    Table(TableArgs),
    /// Exact parabolic degrees, Hodge numbers, bounds, cokernel lengths.
    Degrees(DegreesArgs),
    /// Hyperelliptic-locus quotient degrees and large-genus bounds.
    Strata(StrataArgs),
    /// Harder-Narasimhan polygon, optionally compared against exponents.
    Polygon(PolygonArgs),
    /// Wronskian coefficient growth on the mirror-quintic family.
    Wronskian(WronskianArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Catalog row id (1..=14).
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    case: Option<u32>,
    /// Comma-separated local exponents at infinity ("p/q", integers, or
    /// decimals).
    #[arg(long, requires = "beta")]
    alpha: Option<String>,
    /// Comma-separated local exponents at zero.
    #[arg(long, requires = "alpha")]
    beta: Option<String>,
    /// Self-test switch: double the monodromy at 0 so the spectrum leaves
    /// the unit circle and the integrability gate must refuse to run.
    #[arg(long)]
    expanding_variant: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args, Clone, Default)]
struct ConfigOverrides {
    /// Geodesic time advanced per step.
    #[arg(long)]
    dt: Option<f64>,
    /// Steps per trajectory.
    #[arg(long)]
    steps: Option<u64>,
    /// Leading steps discarded from the exponent averages.
    #[arg(long)]
    burn_in: Option<u64>,
    /// Steps between orthonormalizations.
    #[arg(long)]
    qr_interval: Option<u64>,
    /// Independent trajectories to average.
    #[arg(long)]
    trajectories: Option<u32>,
    /// Precision alarm threshold on the basepoint height.
    #[arg(long)]
    y_guard: Option<f64>,
}

#[derive(Args)]
struct DegreesArgs {
    /// Catalog row id (1..=14).
    #[arg(long, conflicts_with_all = ["mu1", "mu2"])]
    case: Option<u32>,
    /// First orbifold weight, 0 < mu1 <= mu2.
    #[arg(long, requires = "mu2")]
    mu1: Option<String>,
    /// Second orbifold weight, mu2 <= 1/2.
    #[arg(long, requires = "mu1")]
    mu2: Option<String>,
}

#[derive(Args)]
struct StrataArgs {
    /// Genus of the hyperelliptic locus.
    #[arg(long)]
    genus: i64,
    /// Which zero pattern the abelian differentials carry.
    #[arg(long, value_enum, default_value_t = StratumArg::Minimal)]
    stratum: StratumArg,
    /// Largest k tabulated; defaults to min(genus, 5).
    #[arg(long)]
    k_max: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StratumArg {
    /// One zero of order 2g-2.
    Minimal,
    /// Two zeros of order g-1 each.
    Bimodal,
}

impl From<StratumArg> for Stratum {
    fn from(s: StratumArg) -> Self {
        match s {
            StratumArg::Minimal => Stratum::Minimal,
            StratumArg::Bimodal => Stratum::Bimodal,
        }
    }
}

#[derive(Args)]
struct PolygonArgs {
    /// Catalog row id; pieces and chi_abs are derived from the row.
    #[arg(long, conflicts_with_all = ["pieces", "chi_abs"])]
    case: Option<u32>,
    /// Explicit quotient pieces as "rank:degree,..." with rational degrees.
    #[arg(long)]
    pieces: Option<String>,
    /// Base-curve |chi| used to scale heights in pieces mode (default 1).
    #[arg(long)]
    chi_abs: Option<String>,
    /// Comma-separated exponent estimates to lay over the polygon.
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated standard errors widening the dominance tolerance.
    #[arg(long, requires = "lambda")]
    stderr: Option<String>,
}

#[derive(Args)]
struct WronskianArgs {
    /// Truncation order N of the series (N >= 2).
    #[arg(long, default_value_t = 200)]
    order: usize,
    /// Left end of the growth-fit window.
    #[arg(long, default_value_t = 50)]
    window_start: usize,
}

/// Parses the process arguments, runs the selected command, prints the
/// record or CSV payload, and returns the process exit code.
pub fn run_main() -> i32 {
    let cli = Cli::parse();
    init_threads(&cli.global);
    let started = Instant::now();
    match dispatch(&cli) {
        Ok(out) => match cli.global.output {
            OutputFormat::Csv => {
                print!("{}", out.csv);
                0
            }
            OutputFormat::Json => {
                let record = RunRecord {
                    schema_version: RECORD_SCHEMA_VERSION,
                    tool_version: env!("CARGO_PKG_VERSION").to_string(),
                    command: std::env::args().skip(1).collect::<Vec<_>>().join(" "),
                    config: out.config,
                    results: out.results,
                    duration_seconds: started.elapsed().as_secs_f64(),
                    timestamp: chrono::Utc::now().to_rfc3339(),
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&record).expect("record serializes")
                );
                0
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Payload of a successful command before record wrapping.
struct CmdOutput {
    config: Value,
    results: Value,
    csv: String,
}

fn dispatch(cli: &Cli) -> Result<CmdOutput, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cli.global, a),
        Command::Table(a) => cmd_table(&cli.global, a),
        Command::Degrees(a) => cmd_degrees(a),
        Command::Strata(a) => cmd_strata(a),
        Command::Polygon(a) => cmd_polygon(a),
        Command::Wronskian(a) => cmd_wronskian(a),
    }
}

fn init_threads(global: &GlobalOpts) {
    let n = global.threads.or_else(|| {
        std::env::var("HYPERLYAP_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        // A second initialization (tests, repeated calls) keeps the first
        // pool; the estimate is worker-count independent either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Materializes the simulation config: defaults, then `--config` file
/// fields, then flag overrides. Unknown file keys are rejected.
fn resolve_config(
    global: &GlobalOpts,
    overrides: &ConfigOverrides,
) -> Result<SimulationConfig, CliError> {
    let mut value = serde_json::to_value(SimulationConfig::default()).expect("config serializes");
    if let Some(path) = &global.config {
        let text = fs::read_to_string(path)?;
        let file: Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("config file: {e}")))?;
        let Value::Object(fields) = file else {
            return Err(usage("config file must be a JSON object"));
        };
        let Value::Object(base) = &mut value else {
            unreachable!("default config serializes to an object");
        };
        for (k, v) in fields {
            if !base.contains_key(&k) {
                return Err(usage(format!("unknown config key `{k}`")));
            }
            base.insert(k, v);
        }
    }
    let mut cfg: SimulationConfig =
        serde_json::from_value(value).map_err(|e| usage(format!("config file: {e}")))?;
    if let Some(x) = global.seed {
        cfg.seed = x;
    }
    if let Some(x) = overrides.dt {
        cfg.dt = x;
    }
    if let Some(x) = overrides.steps {
        cfg.steps = x;
    }
    if let Some(x) = overrides.burn_in {
        cfg.burn_in = x;
    }
    if let Some(x) = overrides.qr_interval {
        cfg.qr_interval = x;
    }
    if let Some(x) = overrides.trajectories {
        cfg.trajectories = x;
    }
    if let Some(x) = overrides.y_guard {
        cfg.y_guard = x;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses "p/q", an integer, or a decimal literal into an exact rational.
fn parse_rat(s: &str) -> Result<Rat, CliError> {
    let s = s.trim();
    let bad = || usage(format!("cannot parse `{s}` as a rational number"));
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    if let Some((int_part, frac_part)) = body.split_once('.') {
        if int_part.bytes().any(|b| !b.is_ascii_digit())
            || frac_part.is_empty()
            || frac_part.bytes().any(|b| !b.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer = BigInt::from_str(&digits).map_err(|_| bad())?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Rat::new(BigInt::from(sign) * numer, denom))
    } else {
        let r = Rat::from_str(body).map_err(|_| bad())?;
        Ok(if sign < 0 { -r } else { r })
    }
}

fn parse_rat_list(s: &str) -> Result<Vec<Rat>, CliError> {
    s.split(',').map(parse_rat).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("cannot parse `{t}` as a number")))
        })
        .collect()
}

fn rat_str(r: &Rat) -> String {
    r.to_string()
}

fn rat_strings(rs: &[Rat]) -> Vec<String> {
    rs.iter().map(rat_str).collect()
}

fn csv_into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// Scales every entry of an exact matrix; used by the expanding-variant
/// self-test to push the local spectrum off the unit circle.
fn scale_exact(m: &RatMat, factor: &Rat) -> RatMat {
    let n = m.size();
    RatMat::from_rows(
        (0..n)
            .map(|i| (0..n).map(|j| factor * &m[(i, j)]).collect())
            .collect(),
    )
}

/// Resolves the simulation target to a representation plus its description.
fn build_rep(args: &SimulateArgs) -> Result<(MonodromyRep, Option<&'static CYCase>), CliError> {
    let rep = if let Some(id) = args.case {
        let case = cy_case(id).map_err(usage)?;
        let rep = crate::monodromy::cy_realization(id).map_err(usage)?;
        let rep = maybe_expand(rep, args.expanding_variant)?;
        return Ok((rep, Some(case)));
    } else if let (Some(alpha), Some(beta)) = (&args.alpha, &args.beta) {
        let params =
            HypergeometricParams::new(parse_rat_list(alpha)?, parse_rat_list(beta)?)
                .map_err(usage)?;
        levelt_construct(&params)
    } else {
        return Err(usage("provide either --case or --alpha together with --beta"));
    };
    Ok((maybe_expand(rep, args.expanding_variant)?, None))
}

fn maybe_expand(rep: MonodromyRep, inject: bool) -> Result<MonodromyRep, CliError> {
    if !inject {
        return Ok(rep);
    }
    match rep.matrices() {
        RepMatrices::Exact { h0, h1, .. } => {
            let doubled = scale_exact(h0, &rat_int(2));
            MonodromyRep::from_exact(doubled, h1.clone()).map_err(usage)
        }
        RepMatrices::Floating { .. } => Err(usage(
            "--expanding-variant needs exact-mode parameters (cyclotomic residue packets)",
        )),
    }
}

/// Picks the snapshot file for a single simulation, honoring the flag
/// semantics: `--resume` must point at an existing file and wins over
/// `--checkpoint`; `--checkpoint` alone starts fresh and writes there.
fn simulate_snapshot_path(global: &GlobalOpts) -> Result<Option<PathBuf>, CliError> {
    if let Some(p) = &global.resume {
        if !p.exists() {
            return Err(usage(format!("--resume {}: no snapshot there", p.display())));
        }
        return Ok(Some(p.clone()));
    }
    Ok(global.checkpoint.clone())
}

/// Per-case snapshot directory for `table`; created in checkpoint mode,
/// required to exist in resume mode.
fn table_snapshot_dir(global: &GlobalOpts) -> Result<Option<PathBuf>, CliError> {
    if let Some(d) = &global.resume {
        if !d.is_dir() {
            return Err(usage(format!(
                "--resume {}: no snapshot directory there",
                d.display()
            )));
        }
        return Ok(Some(d.clone()));
    }
    if let Some(d) = &global.checkpoint {
        fs::create_dir_all(d)?;
        return Ok(Some(d.clone()));
    }
    Ok(None)
}

fn run_estimate(
    rep: &MonodromyRep,
    cfg: &SimulationConfig,
    snapshot: Option<&PathBuf>,
) -> Result<LyapunovEstimate, CliError> {
    match snapshot {
        Some(path) => Ok(estimate_resumable(rep, cfg, path)?),
        None => Ok(estimate(rep, cfg)?),
    }
}

/// Catalog-row derived quantities shared by `simulate` and `table`.
struct CaseReport {
    bound: crate::lyapunov::BoundComparison,
    deg_par: Rat,
    chi_abs: Rat,
    lambda_orb: Vec<f64>,
}

fn case_report(case: &CYCase, est: &LyapunovEstimate) -> CaseReport {
    let deg_par = &case.mu1 + &case.mu2;
    let bound = compare_bound(est, 2, &deg_par, 0, 3);
    let (lambda_orb, chi_abs) = orbifold_normalize(&est.lambda, &case.mu1, &case.mu2);
    CaseReport {
        bound,
        deg_par,
        chi_abs,
        lambda_orb,
    }
}

fn cmd_simulate(global: &GlobalOpts, args: &SimulateArgs) -> Result<CmdOutput, CliError> {
    let cfg = resolve_config(global, &args.overrides)?;
    let (rep, case) = build_rep(args)?;
    let snapshot = simulate_snapshot_path(global)?;
    let est = run_estimate(&rep, &cfg, snapshot.as_ref())?;

    let target = match (case, &args.alpha, &args.beta) {
        (Some(c), _, _) => json!({ "case": c.id }),
        (None, Some(a), Some(b)) => json!({
            "alpha": rat_strings(&parse_rat_list(a)?),
            "beta": rat_strings(&parse_rat_list(b)?),
        }),
        _ => unreachable!("build_rep enforced a target"),
    };
    let config = json!({
        "simulation": serde_json::to_value(&cfg).expect("config serializes"),
        "target": target,
        "expanding_variant": args.expanding_variant,
    });

    let mut results = json!({
        "arithmetic_mode": rep.arithmetic_mode().to_string(),
        "fiber_dim": rep.fiber_dim(),
        "estimate": serde_json::to_value(&est).expect("estimate serializes"),
        "symmetry_defect": est.symmetry_defect,
    });
    if let Some(case) = case {
        let report = case_report(case, &est);
        results["case"] = json!(case.id);
        results["model"] = json!(case.label);
        results["thin_expected"] = json!(case.thin);
        results["bound_comparison"] = json!({
            "k": 2,
            "deg_par": rat_str(&report.deg_par),
            "bound": report.bound.bound,
            "partial_sum": report.bound.partial_sum,
            "slack": report.bound.slack,
        });
        results["orbifold"] = json!({
            "chi_abs": rat_str(&report.chi_abs),
            "lambda_orb": report.lambda_orb,
        });
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "lambda", "stderr"]).expect("csv");
    for (i, (l, s)) in est.lambda.iter().zip(&est.stderr).enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string(), s.to_string()])
            .expect("csv");
    }
    Ok(CmdOutput {
        config,
        results,
        csv: csv_into_string(w),
    })
}

fn cmd_table(global: &GlobalOpts, args: &TableArgs) -> Result<CmdOutput, CliError> {
    let cfg = resolve_config(global, &args.overrides)?;
    let dir = table_snapshot_dir(global)?;

    let mut rows = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "model",
        "C",
        "d",
        "mu1",
        "mu2",
        "lambda1",
        "lambda1_plus_lambda2",
        "bound",
        "slack",
        "chi_abs",
        "thin_expected",
    ])
    .expect("csv");

    for case in cy_catalog() {
        let rep = crate::monodromy::cy_realization(case.id).map_err(usage)?;
        let snapshot = dir
            .as_ref()
            .map(|d| d.join(format!("case-{:02}.snapshot.json", case.id)));
        let est = run_estimate(&rep, &cfg, snapshot.as_ref())?;
        let report = case_report(case, &est);
        let lambda12 = est.lambda[0] + est.lambda[1];
        let chi_f = rat_to_f64(&report.chi_abs);

        rows.push(json!({
            "id": case.id,
            "model": case.label,
            "C": case.c,
            "d": case.d,
            "mu1": rat_str(&case.mu1),
            "mu2": rat_str(&case.mu2),
            "lambda1": est.lambda[0],
            "lambda1_plus_lambda2": lambda12,
            "bound": report.bound.bound,
            "slack": report.bound.slack,
            "chi_abs": chi_f,
            "thin_expected": case.thin,
            "stderr": est.stderr,
            "symmetry_defect": est.symmetry_defect,
            "lambda": est.lambda,
        }));
        w.write_record([
            case.id.to_string(),
            case.label.to_string(),
            case.c.to_string(),
            case.d.to_string(),
            rat_str(&case.mu1),
            rat_str(&case.mu2),
            est.lambda[0].to_string(),
            lambda12.to_string(),
            report.bound.bound.to_string(),
            report.bound.slack.to_string(),
            chi_f.to_string(),
            case.thin.to_string(),
        ])
        .expect("csv");
    }

    Ok(CmdOutput {
        config: json!({
            "simulation": serde_json::to_value(&cfg).expect("config serializes"),
        }),
        results: json!({ "rows": rows }),
        csv: csv_into_string(w),
    })
}

/// The three cusp exponent lists of the weight-3 family with weights
/// (μ₁, μ₂): (0,0,0,0) at 0, (0,1,1,2) at 1, (μ₁, μ₂, 1−μ₂, 1−μ₁) at ∞.
fn family_cusp_data(mu1: &Rat, mu2: &Rat) -> [LocalExponentData; 3] {
    let one = Rat::one();
    [
        LocalExponentData::new("0", vec![Rat::zero(); 4], ExponentLocation::Cusp),
        LocalExponentData::new(
            "1",
            vec![Rat::zero(), Rat::one(), Rat::one(), rat_int(2)],
            ExponentLocation::Cusp,
        ),
        LocalExponentData::new(
            "inf",
            vec![
                mu1.clone(),
                mu2.clone(),
                &one - mu2,
                &one - mu1,
            ],
            ExponentLocation::Cusp,
        ),
    ]
}

fn cmd_degrees(args: &DegreesArgs) -> Result<CmdOutput, CliError> {
    let (mu1, mu2, case) = match (args.case, &args.mu1, &args.mu2) {
        (Some(id), _, _) => {
            let case = cy_case(id).map_err(usage)?;
            (case.mu1.clone(), case.mu2.clone(), Some(case))
        }
        (None, Some(a), Some(b)) => (parse_rat(a)?, parse_rat(b)?, None),
        _ => return Err(usage("provide either --case or --mu1 together with --mu2")),
    };

    let degrees = cy_hodge_degrees(&mu1, &mu2).map_err(usage)?;
    let cusp_data = family_cusp_data(&mu1, &mu2);
    let rederived = cy_hodge_degrees_from_cokernels(&cusp_data[0], &cusp_data[1], &cusp_data[2])
        .map_err(usage)?;
    let params = HypergeometricParams::new(
        vec![
            mu1.clone(),
            mu2.clone(),
            Rat::one() - &mu2,
            Rat::one() - &mu1,
        ],
        vec![Rat::zero(); 4],
    )
    .map_err(usage)?;
    let hodge = hodge_numbers(&params);
    let bound_k1 = main_bound(&degrees.e30, 0, 3).map_err(usage)?;
    let deg12 = &degrees.e30 + &degrees.e21;
    let bound_k2 = main_bound(&deg12, 0, 3).map_err(usage)?;

    let mut cokernels = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"]).expect("csv");
    for (name, d) in [
        ("e30", &degrees.e30),
        ("e21", &degrees.e21),
        ("e12", &degrees.e12),
        ("e03", &degrees.e03),
    ] {
        w.write_record([name.to_string(), rat_str(d)]).expect("csv");
    }
    w.write_record(["bound_k1".into(), rat_str(&bound_k1)])
        .expect("csv");
    w.write_record(["bound_k2".into(), rat_str(&bound_k2)])
        .expect("csv");
    for data in &cusp_data {
        let mut lengths = Vec::new();
        for tau in 0..=2usize {
            let len = cokernel_length(data, tau).map_err(usage)?;
            w.write_record([
                format!("cokernel_at_{}_tau{}", data.point(), tau),
                len.to_string(),
            ])
            .expect("csv");
            lengths.push(len);
        }
        cokernels.push(json!({ "point": data.point(), "lengths": lengths }));
    }

    let results = json!({
        "mu1": rat_str(&mu1),
        "mu2": rat_str(&mu2),
        "case": case.map(|c| c.id),
        "degrees": {
            "e30": rat_str(&degrees.e30),
            "e21": rat_str(&degrees.e21),
            "e12": rat_str(&degrees.e12),
            "e03": rat_str(&degrees.e03),
        },
        "degrees_from_cokernels_agree": rederived == degrees,
        "hodge_numbers": hodge,
        "bounds": { "k1": rat_str(&bound_k1), "k2": rat_str(&bound_k2) },
        "cokernels": cokernels,
    });
    let config = json!({ "mu1": rat_str(&mu1), "mu2": rat_str(&mu2) });
    Ok(CmdOutput {
        config,
        results,
        csv: csv_into_string(w),
    })
}

fn cmd_strata(args: &StrataArgs) -> Result<CmdOutput, CliError> {
    let g = args.genus;
    let stratum: Stratum = args.stratum.into();
    let k_max = args.k_max.unwrap_or_else(|| g.min(5)).max(1);

    let mut bounds = Vec::new();
    for k in 1..=k_max {
        let b = large_genus_bound(g, k, stratum).map_err(usage)?;
        bounds.push(json!({
            "k": k,
            "sum_bound": rat_str(&b.sum_bound),
            "sum_bound_f64": rat_to_f64(&b.sum_bound),
            "lambda_k_bound": rat_str(&b.lambda_k_bound),
            "lambda_k_bound_f64": rat_to_f64(&b.lambda_k_bound),
        }));
    }

    // Quotient degrees are the polygon's successive slopes; scaling by
    // |chi| = 2 makes hn_polygon's heights equal their partial sums.
    let mut pieces = Vec::new();
    for k in 1..=k_max {
        pieces.push((1u32, hyperelliptic_quotient_degree(g, k, stratum).map_err(usage)?));
    }
    let polygon = hn_polygon(&pieces, &rat_int(2)).map_err(usage)?;

    let results = json!({
        "genus": g,
        "stratum": match stratum {
            Stratum::Minimal => "minimal",
            Stratum::Bimodal => "bimodal",
        },
        "bounds": bounds,
        "polygon": polygon_json(&polygon),
    });
    let config = json!({
        "genus": g,
        "stratum": match stratum {
            Stratum::Minimal => "minimal",
            Stratum::Bimodal => "bimodal",
        },
        "k_max": k_max,
    });
    Ok(CmdOutput {
        config,
        results,
        csv: polygon.to_csv(),
    })
}

fn polygon_json(p: &SlopePolygon) -> Value {
    Value::Array(
        p.vertices()
            .iter()
            .map(|v| {
                json!({
                    "rank": v.rank,
                    "height": v.height,
                    "exact_height": v.exact_height.as_ref().map(rat_str),
                })
            })
            .collect(),
    )
}

/// Concave hull of the four parabolic line degrees: sorted into decreasing
/// order (Hodge-filtration order lists μ₁ before μ₂ ≥ μ₁) and with equal
/// slopes merged into one segment (needed when μ₁ = μ₂).
fn merged_pieces(degrees: &HodgeDegrees) -> Vec<(u32, Rat)> {
    let mut sorted: Vec<Rat> = degrees.as_array().into_iter().cloned().collect();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut out: Vec<(u32, Rat)> = Vec::new();
    let mut last_slope: Option<Rat> = None;
    for d in sorted {
        if last_slope.as_ref() == Some(&d) {
            let (r, total) = out.last_mut().expect("slope recorded implies a piece");
            *r += 1;
            *total += &d;
        } else {
            last_slope = Some(d.clone());
            out.push((1, d));
        }
    }
    out
}

fn parse_pieces(s: &str) -> Result<Vec<(u32, Rat)>, CliError> {
    s.split(',')
        .map(|tok| {
            let (r, d) = tok
                .split_once(':')
                .ok_or_else(|| usage(format!("piece `{tok}` is not rank:degree")))?;
            let rank: u32 = r
                .trim()
                .parse()
                .map_err(|_| usage(format!("piece rank `{r}` is not an integer")))?;
            Ok((rank, parse_rat(d)?))
        })
        .collect()
}

fn cmd_polygon(args: &PolygonArgs) -> Result<CmdOutput, CliError> {
    let (pieces, chi_abs, case_id) = match (args.case, &args.pieces) {
        (Some(id), None) => {
            let case = cy_case(id).map_err(usage)?;
            let degrees = cy_hodge_degrees(&case.mu1, &case.mu2).map_err(usage)?;
            let (_, chi) = orbifold_normalize(&[], &case.mu1, &case.mu2);
            (merged_pieces(&degrees), chi, Some(id))
        }
        (None, Some(spec)) => {
            let chi = match &args.chi_abs {
                Some(s) => parse_rat(s)?,
                None => Rat::one(),
            };
            (parse_pieces(spec)?, chi, None)
        }
        _ => return Err(usage("provide either --case or --pieces")),
    };

    let hn = hn_polygon(&pieces, &chi_abs).map_err(usage)?;

    let mut results = json!({
        "case": case_id,
        "chi_abs": rat_str(&chi_abs),
        "hn_polygon": polygon_json(&hn),
    });
    let mut lambda_cfg = Value::Null;
    let mut stderr_cfg = Value::Null;
    if let Some(spec) = &args.lambda {
        let lambda = parse_f64_list(spec)?;
        let stderr = args.stderr.as_deref().map(parse_f64_list).transpose()?;
        let lyap = lyapunov_polygon(&lambda, rat_to_f64(&chi_abs));
        let dominates = polygon_dominates(&lyap, &hn, stderr.as_deref());
        results["lyapunov_polygon"] = polygon_json(&lyap);
        results["lyapunov_dominates_hn"] = json!(dominates);
        lambda_cfg = json!(lambda);
        stderr_cfg = stderr.map_or(Value::Null, |s| json!(s));
    }

    let config = json!({
        "case": case_id,
        "pieces": pieces
            .iter()
            .map(|(r, d)| json!({ "rank": r, "degree": rat_str(d) }))
            .collect::<Vec<_>>(),
        "chi_abs": rat_str(&chi_abs),
        "lambda": lambda_cfg,
        "stderr": stderr_cfg,
    });
    Ok(CmdOutput {
        config,
        results,
        csv: hn.to_csv(),
    })
}

fn cmd_wronskian(args: &WronskianArgs) -> Result<CmdOutput, CliError> {
    if args.order < 2 {
        return Err(usage(format!(
            "--order must be at least 2, got {}",
            args.order
        )));
    }
    let tw = wronskian_series(args.order).map_err(usage)?;
    let inv = inverse_f_coefficients(args.order).map_err(usage)?;
    let fit = growth_fit(&inv, args.window_start).map_err(usage)?;
    let verdict = if fit.rms_sqrt < fit.rms_linear {
        "sqrt-growth consistent: yes"
    } else {
        "sqrt-growth consistent: no"
    };

    let results = json!({
        "order": args.order,
        "wronskian_constant_term": rat_str(&tw.coeff(0)),
        "constant_term": rat_str(&inv.coeff(0)),
        "fit": serde_json::to_value(&fit).expect("fit serializes"),
        "verdict": verdict,
    });
    let config = json!({
        "order": args.order,
        "window_start": args.window_start,
    });
    Ok(CmdOutput {
        config,
        results,
        csv: coefficients_csv(&inv),
    })
}
