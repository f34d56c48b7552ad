//! Command-line verification harness: parses connection specs, runs the
//! check suites and renders `stl-report/1` reports.

pub mod commands;
pub mod report;
pub mod spec;

use std::ffi::OsString;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use stl_core::levi::ScanGrid;

use commands::{Ctx, HoloTarget, LeviArgs};
use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("connection spec: {0}")]
    Spec(String),
}

#[derive(Parser, Debug)]
#[command(name = "stl", version, about = "Verification suites for symplectic twistor geometry")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Connection spec file (JSON object or key = value lines).
    #[arg(long, global = true, value_name = "FILE")]
    conn: Option<String>,
    /// Named connection: trivial, sphere, log_example, sphere_lc, flat_ti.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Multiplier applied to every pass threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol: f64,
    /// Metric scale.
    #[arg(long, global = true, default_value_t = 1.0)]
    t: f64,
    #[arg(long, global = true, default_value_t = 200)]
    samples: usize,
    /// Emit the JSON report instead of the table.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Torsion, symplecticity, curvature decomposition and field equations.
    AnalyzeConnection,
    /// Classify a translation-invariant form and build its flattening map.
    FlatSolve {
        /// Coefficients a,b,c,d.
        #[arg(long, allow_hyphen_values = true, value_name = "A,B,C,D")]
        abcd: String,
    },
    /// Algebraic checks of the twistor almost complex structure.
    TwistorAcs,
    /// Integrability residual, Weyl consistency and Nijenhuis tensor.
    CheckIntegrability,
    /// Holomorphy residual of a function of (z, w) or a section w(z).
    HoloResidual {
        /// Function of z, zb, w, wb.
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        /// Section w(z) as a function of x, y or z, zb.
        #[arg(long, allow_hyphen_values = true)]
        section: Option<String>,
        #[arg(long, default_value_t = 0.95)]
        wmax: f64,
    },
    /// Positivity, compatibility, torsion and curvature of the twistor metric.
    MetricReport,
    /// Levi-form scan of an exhaustion candidate over a grid of Z.
    LeviScan {
        #[arg(long, default_value = "15x15", value_name = "NxN")]
        base_grid: String,
        #[arg(long, default_value_t = 12, value_name = "M")]
        fibre_grid: usize,
        #[arg(long, default_value_t = 0.95)]
        wmax: f64,
        /// Half-width of the square base box.
        #[arg(long, default_value_t = 0.7)]
        base_range: f64,
        /// oka, stein, fibre, base or chart.
        #[arg(long, default_value = "oka")]
        exhaustion: String,
        /// Radius of Oka's function.
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Base function phi(x, y) for `--exhaustion base`.
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        /// Function of xi, xib, w, wb for `--exhaustion chart`.
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        /// Reference section w(z) for the fibre distance.
        #[arg(long, allow_hyphen_values = true)]
        section: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::AnalyzeConnection => "analyze-connection",
            Command::FlatSolve { .. } => "flat-solve",
            Command::TwistorAcs => "twistor-acs",
            Command::CheckIntegrability => "check-integrability",
            Command::HoloResidual { .. } => "holo-residual",
            Command::MetricReport => "metric-report",
            Command::LeviScan { .. } => "levi-scan",
        }
    }
}

/// Exit code and rendered output of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn usage(msg: String) -> Outcome {
    Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(cli) {
        Ok(o) => o,
        Err(e) => usage(e.to_string()),
    }
}

fn parse_abcd(s: &str) -> Result<[f64; 4], CliError> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == 4 && v.iter().all(|x| x.is_finite()) => Ok([v[0], v[1], v[2], v[3]]),
        _ => Err(CliError::Usage(format!("--abcd expects four comma-separated numbers, got `{s}`"))),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--base-grid expects NxM, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b) = (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?);
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let c = &cli.common;
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be a positive number, got {}", c.tol)));
    }
    if !(c.t.is_finite() && c.t > 0.0) {
        return Err(CliError::Usage(format!("--t must be a positive number, got {}", c.t)));
    }
    if c.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let start = Instant::now();
    let mut ctx = Ctx::new(c.seed, c.samples, c.t, c.verbose);
    let name = cli.command.name();
    let mut args = std::collections::BTreeMap::new();
    args.insert("samples".to_string(), serde_json::json!(c.samples));
    let report = match &cli.command {
        Command::FlatSolve { abcd } => {
            let v = parse_abcd(abcd)?;
            if c.conn.is_some() || c.preset.is_some() {
                return Err(CliError::Usage("flat-solve takes --abcd, not a connection".into()));
            }
            args.insert("abcd".into(), serde_json::json!(v));
            let input = spec::InputEcho { preset: None, conn_file: None, spec: None, args };
            let mut r = Report::new(name, input, c.seed, c.tol);
            commands::flat_solve(v, &mut ctx, &mut r);
            r
        }
        Command::LeviScan { base_grid, fibre_grid, wmax, base_range, exhaustion, eps, base, f, section } => {
            let (nx, ny) = parse_grid(base_grid)?;
            if !(base_range.is_finite() && *base_range > 0.0) {
                return Err(CliError::Usage("--base-range must be positive".into()));
            }
            let grid = ScanGrid::new([(-base_range, *base_range), (-base_range, *base_range)], nx, ny, *fibre_grid, *wmax)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let spec = commands::exhaustion(exhaustion, *eps, base.as_deref(), f.as_deref(), section.as_deref()).map_err(CliError::Usage)?;
            let preset = if c.conn.is_none() && c.preset.is_none() { Some("trivial") } else { c.preset.as_deref() };
            let (conn, mut input) = spec::load(preset, c.conn.as_deref())?;
            for (k, v) in [
                ("base_grid", serde_json::json!([nx, ny])),
                ("fibre_grid", serde_json::json!(fibre_grid)),
                ("wmax", serde_json::json!(wmax)),
                ("base_range", serde_json::json!(base_range)),
                ("exhaustion", serde_json::json!(exhaustion)),
                ("eps", serde_json::json!(eps)),
                ("base", serde_json::json!(base)),
                ("f", serde_json::json!(f)),
                ("section", serde_json::json!(section)),
            ] {
                if !v.is_null() {
                    args.insert(k.into(), v);
                }
            }
            args.remove("samples");
            input.args = args;
            let mut r = Report::new(name, input, c.seed, c.tol);
            commands::levi_scan(&conn, &LeviArgs { spec, grid, has_section: section.is_some() }, &mut ctx, &mut r);
            r
        }
        cmd => {
            let (conn, mut input) = spec::load(c.preset.as_deref(), c.conn.as_deref())?;
            let target = if let Command::HoloResidual { f, section, wmax } = cmd {
                if !(*wmax > 0.0 && *wmax < 1.0) {
                    return Err(CliError::Usage("--wmax must lie in (0, 1)".into()));
                }
                args.insert("wmax".into(), serde_json::json!(wmax));
                let n = conn.n();
                let t = match (f, section) {
                    (Some(f), None) => {
                        args.insert("f".into(), serde_json::json!(f));
                        HoloTarget::Function(
                            stl_core::exprfield::Expr::parse_with(f, &stl_core::exprfield::VarScheme::twistor())
                                .map_err(|e| CliError::Usage(format!("--f: {e}")))?,
                        )
                    }
                    (None, Some(s)) => {
                        args.insert("section".into(), serde_json::json!(s));
                        HoloTarget::Section(
                            stl_core::exprfield::Expr::parse_with(s, &stl_core::exprfield::VarScheme::base(n))
                                .map_err(|e| CliError::Usage(format!("--section: {e}")))?,
                        )
                    }
                    _ => return Err(CliError::Usage("holo-residual needs exactly one of --f or --section".into())),
                };
                Some((t, *wmax))
            } else {
                None
            };
            if matches!(cmd, Command::MetricReport) {
                args.insert("t".into(), serde_json::json!(c.t));
            }
            input.args = args;
            let mut r = Report::new(name, input, c.seed, c.tol);
            match cmd {
                Command::AnalyzeConnection => commands::analyze_connection(&conn, &mut ctx, &mut r),
                Command::TwistorAcs => commands::twistor_acs(&conn, &mut ctx, &mut r),
                Command::CheckIntegrability => commands::check_integrability(&conn, &mut ctx, &mut r),
                Command::MetricReport => commands::metric_report(&conn, &mut ctx, &mut r),
                Command::HoloResidual { .. } => {
                    let (t, w) = target.expect("holo target");
                    commands::holo_residual(&conn, &t, w, &mut ctx, &mut r)
                }
                Command::FlatSolve { .. } | Command::LeviScan { .. } => unreachable!(),
            }
            r
        }
    };
    let mut report = report;
    report.wall_time_s = start.elapsed().as_secs_f64();
    let code = if report.pass { 0 } else { 1 };
    let mut stdout = if c.json { report.to_json() } else { report.to_table() };
    let mut stderr = String::new();
    if !report.pass {
        let failed: Vec<&str> = report.checks.iter().filter(|k| !k.pass).map(|k| k.id.as_str()).collect();
        stderr = format!("failing checks: {}\n", failed.join(", "));
    }
    if stdout.is_empty() {
        stdout.push('\n');
    }
    Ok(Outcome { code, stdout, stderr })
}
