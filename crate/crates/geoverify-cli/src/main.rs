//! Command-line front end: verify chart files against their manifests, emit
//! the built-in chart catalog, and run geodesic blow-up experiments.
//!
//! Exit codes: 0 on success, 1 when a verification or fit fails, 2 on
//! malformed input.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geoverify::geodesic::{self, BlowupModel, GeodesicError, TraceStatus, TrackField};
use geoverify::jsonio::{self, FitSummary, GeodesicReport, TraceRow};
use geoverify::{catalog, check, expr};

#[derive(Parser)]
#[command(name = "geoverify", version, disable_help_subcommand = true)]
/// Verification engine for metric connections with torsion on coordinate
/// charts.
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a chart's verification manifest and print the residual report
    Check(CheckArgs),
    /// List the built-in charts or emit one as a chart file
    Catalog {
        #[command(subcommand)]
        cmd: CatalogCmd,
    },
    /// Integrate a geodesic, track a scalar along it, optionally fit a
    /// blow-up law
    Geodesic(GeodesicArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Chart file (JSON)
    spec: PathBuf,
    /// Sample points per check
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Base seed for the per-check sampling streams
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Tolerance override, repeatable: --tol nabla_xi=1e-6
    #[arg(long = "tol", value_name = "ID=VALUE")]
    tol: Vec<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// One line per entry: name - structural law
    List,
    /// Build a catalog chart and write it as a chart file
    Emit(EmitArgs),
}

#[derive(Args)]
struct EmitArgs {
    /// Catalog entry name, see `catalog list`
    name: String,
    /// Parameter override, repeatable: --param a=2
    #[arg(long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// Write the chart here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeodesicArgs {
    /// Chart file (JSON)
    spec: PathBuf,
    /// Initial point, comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x0: Vec<f64>,
    /// Initial velocity, comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    v0: Vec<f64>,
    /// End of the parameter window; negative integrates backward
    #[arg(long, allow_hyphen_values = true)]
    tmax: f64,
    /// Integration step size
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Tracked scalar: xi | p0 | d<coord> | expression over the coordinates
    #[arg(long, default_value = "xi")]
    track: String,
    /// Blow-up law: reciprocal | arctan | exp_linear:<slope> | log_ratio:<scale>
    #[arg(long)]
    fit: Option<String>,
    /// Largest admissible fit defect
    #[arg(long = "fit-tol", default_value_t = 1e-3)]
    fit_tol: f64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Exit 2: the request itself is unusable.
    Input(String),
    /// Exit 1: the request ran, the verification or fit did not pass.
    Failure(String),
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Check(args) => cmd_check(args),
        Cmd::Catalog { cmd: CatalogCmd::List } => cmd_list(),
        Cmd::Catalog { cmd: CatalogCmd::Emit(args) } => cmd_emit(args),
        Cmd::Geodesic(args) => cmd_geodesic(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("geoverify: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("geoverify: {msg}");
            ExitCode::from(2)
        }
    }
}

/// GEOVERIFY_THREADS caps the sampling parallelism; reports are identical
/// for any thread count.
fn init_thread_pool() {
    if let Ok(text) = std::env::var("GEOVERIFY_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn parse_pairs(items: &[String], what: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("{what} '{item}' is not KEY=VALUE")))?;
        if key.is_empty() {
            return Err(CliError::Input(format!("{what} '{item}' has an empty key")));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Input(format!("{what} '{item}' has a non-numeric value")))?;
        out.insert(key.to_string(), value);
    }
    Ok(out)
}

fn write_text(text: String, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|()| lock.flush())
                .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    let spec = jsonio::read_spec(&args.spec).map_err(input)?;

    // A chart that claims a catalog name must satisfy that family's
    // parameter constraints; this catches charts edited into nonsense
    // (e.g. the degenerate a = 0 Kundt chart) before any sampling runs.
    if let Some(entry) = catalog::entries().iter().find(|e| e.name == spec.name) {
        let declared: BTreeMap<String, f64> = spec
            .param_names
            .iter()
            .zip(&spec.param_values)
            .filter(|(name, _)| entry.params.iter().any(|p| p.name == name.as_str()))
            .map(|(name, value)| (name.clone(), *value))
            .collect();
        catalog::build(&spec.name, &declared).map_err(input)?;
    }

    let overrides = parse_pairs(&args.tol, "tolerance override")?;
    let ids = check::manifest_or_default(&spec);
    let report =
        check::run_checks(&spec, &ids, args.seed, args.points, &overrides).map_err(input)?;
    write_text(jsonio::to_json(&report).map_err(input)?, args.out.as_deref())?;
    if report.overall_pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.check_id.as_str())
            .collect();
        Err(CliError::Failure(format!("checks failed: {}", failed.join(", "))))
    }
}

fn cmd_list() -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for entry in catalog::entries() {
        writeln!(lock, "{} - {}", entry.name, entry.law)
            .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}")))?;
    }
    Ok(())
}

fn cmd_emit(args: EmitArgs) -> Result<(), CliError> {
    let params = parse_pairs(&args.param, "parameter override")?;
    let spec = catalog::build(&args.name, &params).map_err(input)?;
    write_text(jsonio::spec_to_json(&spec).map_err(input)?, args.out.as_deref())
}

fn parse_track(text: &str, spec: &geoverify::chart::MetricSpec) -> Result<TrackField, CliError> {
    match text {
        "xi" => return Ok(TrackField::Xi),
        "p0" => return Ok(TrackField::P0),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix('d') {
        if let Some(ix) = spec.coords.iter().position(|c| c == rest) {
            return Ok(TrackField::Velocity(ix));
        }
    }
    expr::parse(text, &spec.coords, &spec.param_names)
        .map(TrackField::Scalar)
        .map_err(|e| CliError::Input(format!("cannot parse track '{text}': {e}")))
}

fn parse_fit(text: &str) -> Result<BlowupModel, CliError> {
    if text == "reciprocal" {
        return Ok(BlowupModel::Reciprocal);
    }
    if text == "arctan" {
        return Ok(BlowupModel::Arctan);
    }
    if let Some(rest) = text.strip_prefix("exp_linear:") {
        let slope: f64 = rest
            .parse()
            .map_err(|_| CliError::Input(format!("bad exp_linear slope '{rest}'")))?;
        if !slope.is_finite() {
            return Err(CliError::Input("exp_linear slope must be finite".into()));
        }
        return Ok(BlowupModel::ExpLinear { slope });
    }
    if let Some(rest) = text.strip_prefix("log_ratio:") {
        let scale: f64 = rest
            .parse()
            .map_err(|_| CliError::Input(format!("bad log_ratio scale '{rest}'")))?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(CliError::Input("log_ratio scale must be positive".into()));
        }
        return Ok(BlowupModel::LogRatio { scale });
    }
    Err(CliError::Input(format!(
        "unknown fit model '{text}'; use reciprocal | arctan | exp_linear:<slope> | log_ratio:<scale>"
    )))
}

fn cmd_geodesic(args: GeodesicArgs) -> Result<(), CliError> {
    let spec = jsonio::read_spec(&args.spec).map_err(input)?;
    let track = parse_track(&args.track, &spec)?;
    let model = args.fit.as_deref().map(parse_fit).transpose()?;

    let trace = geodesic::integrate(&spec, &args.x0, &args.v0, args.tmax, args.step, &track)
        .map_err(input)?;
    let (status, blow_up_time) = match trace.status {
        TraceStatus::Completed => ("completed", None),
        TraceStatus::LeftDomain => ("left_domain", None),
        TraceStatus::BlowUp { t_est } => ("blow_up", Some(t_est)),
    };

    let mut fit_summary = None;
    let mut failure = None;
    if let Some(model) = &model {
        match geodesic::fit_blowup(&trace.times, &trace.alpha, model) {
            Ok(fit) => {
                let pass = fit.residual <= args.fit_tol;
                if !pass {
                    failure = Some(format!(
                        "fit defect {:.3e} exceeds tolerance {:.3e}",
                        fit.residual, args.fit_tol
                    ));
                }
                fit_summary = Some(FitSummary {
                    model: args.fit.clone().expect("model implies the flag"),
                    slope: fit.slope,
                    intercept: fit.intercept,
                    t_singular: fit.t_singular,
                    residual: fit.residual,
                    tolerance: args.fit_tol,
                    pass,
                });
            }
            Err(e @ (GeodesicError::ModelMismatch { .. } | GeodesicError::InvalidSeries(_))) => {
                failure = Some(e.to_string());
            }
            Err(e) => return Err(input(e)),
        }
    }

    let rows: Vec<TraceRow> = trace
        .times
        .iter()
        .zip(&trace.points)
        .zip(&trace.velocities)
        .zip(&trace.alpha)
        .map(|(((t, x), v), alpha)| TraceRow {
            t: *t,
            x: x.clone(),
            v: v.clone(),
            alpha: *alpha,
        })
        .collect();
    let report = GeodesicReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec_name: spec.name.clone(),
        x0: args.x0.clone(),
        v0: args.v0.clone(),
        t_max: args.tmax,
        step: args.step,
        track: args.track.clone(),
        status: status.to_string(),
        blow_up_time,
        fit: fit_summary,
        rows,
    };
    write_text(jsonio::to_json(&report).map_err(input)?, args.out.as_deref())?;
    match failure {
        None => Ok(()),
        Some(msg) => Err(CliError::Failure(msg)),
    }
}
