//! `barry` command line.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 the audit found
//! violations.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use barry_core::audit::{audit_series, DEFAULT_TOLERANCE};
use barry_core::ingest::{
    generate_scenario, read_dataset, to_csv, to_json, write_dataset, DefectInjection, DefectKind, Format, ScenarioSpec,
};
use barry_core::owi::{infer_spec, DatasetSeries};
use barry_core::par::Strategy;
use barry_core::render::{
    animate_with, jitter_overlaps, project_frame, render_frame, stacked_chart, timeseries_chart, ViewConfig,
};
use barry_core::simplex::NormalizationMode;
use barry_service::{parse_axes, parse_grid, AppState, ProjectionResponse, ViewParams, DEFAULT_PORT};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VIOLATIONS: u8 = 3;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "barry", version, about = "Barycentric views and time-accounting audits of session metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset from a built-in scenario.
    Generate(GenerateArgs),
    /// Write one snap's projection as JSON.
    Project(FrameArgs),
    /// Render one snap as SVG.
    Render(FrameArgs),
    /// Render every snap to DIR/frame_%06d.svg.
    Animate(AnimateArgs),
    /// Draw a stacked or time-series chart of metric shares.
    Chart(ChartArgs),
    /// Check the sum rule and end-to-end accounting; exits 3 on violations.
    Audit(AuditArgs),
    /// Serve the HTTP API over a dataset.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Built-in scenario: fig6, fig8, drift or uniform.
    #[arg(long)]
    scenario: String,
    /// Session count (scenario default when omitted).
    #[arg(long)]
    sessions: Option<usize>,
    /// Snap count (scenario default when omitted).
    #[arg(long)]
    snaps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of snapshots to corrupt.
    #[arg(long, default_value_t = 0)]
    defects: usize,
    /// unaccounted or double-counted.
    #[arg(long, default_value = "unaccounted", value_parser = parse_defect_kind)]
    defect_kind: DefectKind,
    /// Size of each defect in ms.
    #[arg(long, default_value_t = 100)]
    defect_ms: u32,
    /// Attach response time / DB wait / OS CPU records.
    #[arg(long)]
    accounting: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    /// Output file; `.csv` or `.json` selects the format. Stdout (JSON) when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_defect_kind(s: &str) -> std::result::Result<DefectKind, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => Format::Auto,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

/// Same names and meanings as the HTTP query parameters.
#[derive(Debug, Args)]
struct ViewArgs {
    /// Aggregation spec: owi3, session3 or session4 (inferred when omitted).
    #[arg(long)]
    spec: Option<String>,
    /// Expected vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Azimuth in degrees (tetrahedron views).
    #[arg(long, allow_negative_numbers = true)]
    az: Option<f64>,
    /// Elevation in degrees (tetrahedron views).
    #[arg(long, allow_negative_numbers = true)]
    el: Option<f64>,
    /// strict, rescale or slack.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<NormalizationMode>,
    /// Comma-separated composites, first at the apex.
    #[arg(long)]
    axes: Option<String>,
    /// Ring radius for coincident dots, in scene units.
    #[arg(long)]
    jitter: Option<f64>,
    /// Gridline step, or `none`.
    #[arg(long)]
    grid: Option<String>,
}

fn parse_tolerance(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|t| t.is_finite() && *t >= 0.0)
        .ok_or_else(|| format!("'{s}' is not a finite fraction >= 0"))
}

fn parse_mode(s: &str) -> std::result::Result<NormalizationMode, String> {
    s.parse()
}

impl ViewArgs {
    fn resolve(&self, d: &DatasetSeries) -> Result<ViewConfig> {
        let grid = self.grid.as_deref().map(parse_grid).transpose()?;
        let params = ViewParams {
            spec: self.spec.clone(),
            n: self.n,
            azimuth: self.az,
            elevation: self.el,
            mode: self.mode,
            axes: self.axes.as_deref().map(parse_axes),
            jitter: self.jitter,
            grid,
        };
        let default_spec = infer_spec(d).context("cannot infer an aggregation spec; pass --spec")?;
        Ok(params.resolve(d, default_spec.name())?)
    }
}

#[derive(Debug, Args)]
struct FrameArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    snap: u64,
    #[command(flatten)]
    view: ViewArgs,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnimateArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
    /// Render frames on one thread.
    #[arg(long)]
    sequential: bool,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChartKind {
    Stacked,
    Timeseries,
}

#[derive(Debug, Args)]
struct ChartArgs {
    #[arg(long, value_enum)]
    kind: ChartKind,
    #[arg(short, long)]
    input: PathBuf,
    /// Comma-separated raw metrics or built-in composites, bottom band first.
    #[arg(long)]
    metrics: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Residual tolerance as a fraction of the sample interval.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = parse_tolerance)]
    tol: f64,
    /// JSON report file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Spec used when a request names none.
    #[arg(long)]
    spec: Option<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn load(path: &Path) -> Result<DatasetSeries> {
    Ok(read_dataset(path, Format::Auto)?)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) if path != Path::new("-") => {
            ensure_parent(path)?;
            fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Generate(a) => {
            let mut spec =
                ScenarioSpec::builtin(&a.scenario, a.sessions, a.snaps, a.seed)?.with_accounting(a.accounting);
            if a.defects > 0 {
                spec = spec.with_defects(DefectInjection {
                    count: a.defects,
                    kind: a.defect_kind,
                    magnitude_ms: a.defect_ms,
                });
            }
            let d = generate_scenario(&spec)?;
            match a.output.as_deref().filter(|p| *p != Path::new("-")) {
                Some(path) => {
                    ensure_parent(path)?;
                    write_dataset(&d, path, a.format.into())?
                }
                None => emit(None, &if matches!(a.format, FormatArg::Csv) { to_csv(&d) } else { to_json(&d) })?,
            }
        }
        Command::Project(a) => {
            let d = load(&a.input)?;
            let view = a.view.resolve(&d)?;
            let scene = jitter_overlaps(&project_frame(&d, a.snap, &view)?, view.jitter_radius, view.palette_seed);
            emit(a.output.as_deref(), &json_bytes(&ProjectionResponse::new(a.snap, &view, &scene))?)?;
        }
        Command::Render(a) => {
            let d = load(&a.input)?;
            let view = a.view.resolve(&d)?;
            emit(a.output.as_deref(), &render_frame(&d, a.snap, &view)?)?;
        }
        Command::Animate(a) => {
            let d = load(&a.input)?;
            let view = a.view.resolve(&d)?;
            let strategy = if a.sequential { Strategy::Sequential } else { Strategy::default() };
            let count = animate_with(&d, &view, &a.output, strategy)?;
            println!("{count}");
        }
        Command::Chart(a) => {
            let d = load(&a.input)?;
            let metrics = parse_axes(&a.metrics);
            if metrics.is_empty() {
                bail!("--metrics needs at least one name");
            }
            let names: Vec<&str> = metrics.iter().map(String::as_str).collect();
            let svg = match a.kind {
                ChartKind::Stacked => stacked_chart(&d, &names)?,
                ChartKind::Timeseries => timeseries_chart(&d, &names)?,
            };
            emit(a.output.as_deref(), &svg)?;
        }
        Command::Audit(a) => {
            let report = audit_series(&load(&a.input)?, a.tol);
            emit(a.output.as_deref(), &json_bytes(&report)?)?;
            let t = report.totals;
            eprintln!(
                "audited {} snapshots: {} ok, {} unaccounted, {} double counted (worst residual {:.4})",
                t.total(),
                t.ok,
                t.unaccounted,
                t.double_counted,
                report.worst_residual_fraction
            );
            if let Some(acct) = &report.accounting {
                eprintln!(
                    "accounting records: {} ok, {} unaccounted, {} double counted",
                    acct.totals.ok, acct.totals.unaccounted, acct.totals.double_counted
                );
            }
            if report.has_violations() {
                return Ok(EXIT_VIOLATIONS);
            }
        }
        Command::Serve(a) => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .try_init();
            let state = AppState::new(load(&a.input)?, a.spec.as_deref())?;
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(barry_service::serve(state, a.port))?;
        }
    }
    Ok(EXIT_OK)
}
