//! Command-line driver for the heat-kernel laboratory: evaluate kernels by
//! any of the three methods, tabulate dispersion bands and ground energies,
//! machine-check the comparison inequalities, and scan for the witnesses
//! that delimit them.
//!
//! Reports are JSON on stdout (or `--out`, with a resolved-config echo and,
//! for checks, a margins table beside it). Runs are deterministic: no
//! timestamps, fixed float formatting, seeded sampling — rerunning from an
//! echoed config reproduces every artifact byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use diamag::bridge_mc::mc_kernel;
use diamag::checks::{
    check_improved_bound, check_lower_bound, check_lt_bound, check_pathwise_variance,
    check_sandwich, check_theorem1, check_theorem2, fact3_fixture, fact4_fixture, scan_fact3,
    scan_fact4, scan_open_problem, EnergyBackend, Theorem2Backend,
};
use diamag::config::{CheckConfig, FieldConfig, GridConfig, KConfig, QueryConfig, RunConfig};
use diamag::exact::mehler_kernel;
use diamag::iwatsuka::{band_function, ground_state_energy};
use diamag::radial::ground_state_energy_radial;
use diamag::{
    CheckReport, CheckStatus, Error as DiamagError, Flags, MehlerParams64, Point64,
    SpectralEvaluator, SpectralSettings,
};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

const EXIT_PASS: i32 = 0;
const EXIT_CHECK_FAILED: i32 = 2;
const EXIT_HYPOTHESIS: i32 = 3;
const EXIT_FLAGGED: i32 = 4;
const EXIT_CONFIG: i32 = 64;

const EXIT_HELP: &str = "Exit codes:
  0   success (check passed / witness found / clean evaluation)
  2   a check failed, or a scan found no witness
  3   a hypothesis could not be verified; nothing was asserted
  4   numerical-quality flags were raised (results still reported)
  64  configuration or usage error

Parallelism is controlled by the RAYON_NUM_THREADS environment variable;
results do not depend on the thread count.";

/// Main-artifact encoding. Defaults to JSON; a `.csv` output path implies CSV.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "diamag",
    version,
    about = "Planar magnetic heat kernels: evaluate, compare, and machine-check",
    after_help = EXIT_HELP,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the heat kernel over the query grid, or at one ad-hoc pair
    Kernel(KernelArgs),
    /// Tabulate the lowest fiber eigenvalue over the momentum window
    Band(BandArgs),
    /// Ground-state energy by the fibered or the radial backend
    Energy(EnergyArgs),
    /// Machine-check one comparison inequality
    Check(CheckArgs),
    /// Scan for counterexample witnesses or survey the open question
    Scan(ScanArgs),
    /// Evaluate two problem descriptions on one query grid and diff the moduli
    Compare(CompareArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Problem description (TOML; a `.json` extension switches the parser)
    #[arg(long)]
    config: Option<PathBuf>,
    /// `mehler`, `iwatsuka`, or `mc`
    #[arg(long)]
    method: Option<String>,
    /// Field preset override (`zero`, `constant`, `fact4`, `sine`, `gaussian-bump`, `piecewise`)
    #[arg(long)]
    field: Option<String>,
    /// Field strength override
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Field length-scale override
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Oscillator frequency; switches the potential preset to `oscillator`
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Single inverse temperature, replacing the query grid's list
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Ad-hoc query point `X1 X2` (needs --y; bypasses the query grid)
    #[arg(long, num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    /// Ad-hoc base point `Y1 Y2`
    #[arg(long, num_args = 2, value_names = ["Y1", "Y2"], allow_negative_numbers = true)]
    y: Option<Vec<f64>>,
    /// Write the report here (`.csv` for a table, JSON otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force the main-artifact encoding regardless of the `--out` extension
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct BandArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field preset override
    #[arg(long)]
    field: Option<String>,
    /// Field strength override
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Momentum window half-width override
    #[arg(long, allow_negative_numbers = true)]
    k_halfwidth: Option<f64>,
    /// Number of momentum nodes override
    #[arg(long)]
    k_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `iwatsuka` (fibered) or `radial`
    #[arg(long, default_value = "iwatsuka")]
    backend: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(subcommand)]
    which: CheckKind,
}

#[derive(Subcommand)]
enum CheckKind {
    /// Kernel domination: larger field and potential shrink the modulus
    Theorem2(CheckCommon),
    /// Radial ground-energy ordering (needs the hat minimizer at m = 0)
    Theorem1(CheckCommon),
    /// Two-sided zero-potential energy bound from the field range
    Sandwich(CheckCommon),
    /// Isotropic Gaussian upper bound with full magnetic decay
    LtBound(CheckCommon),
    /// Anisotropic upper bound: magnetic decay along x1, free across
    ImprovedBound(CheckCommon),
    /// Constant-field minorant at equal transverse coordinate
    LowerBound(CheckCommon),
    /// Pathwise variance ordering of the sampled gauge functionals
    Pathwise(CheckCommon),
}

#[derive(Args, Clone)]
struct CheckCommon {
    /// Problem description (TOML; a `.json` extension switches the parser)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Backend override: `spectral` or `mc` (sandwich also takes `radial`)
    #[arg(long)]
    backend: Option<String>,
    /// Write the report here, plus `<stem>.config.json` and `<stem>.margins.csv`
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(subcommand)]
    which: ScanKind,
}

#[derive(Subcommand)]
enum ScanKind {
    /// Oscillator frequencies that raise an off-diagonal modulus
    Fact3(Fact3Args),
    /// Growing fields whose kernel exceeds the constant-field one off-axis
    Fact4(Fact4Args),
    /// Survey the open constant-field domination question (report only)
    OpenProblem(OpenProblemArgs),
}

#[derive(Args)]
struct Fact3Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Constant field strength
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// First coordinate of the scan point (the kernel runs to its antipode)
    #[arg(long, allow_negative_numbers = true)]
    x1: Option<f64>,
    /// Second coordinate of the scan point
    #[arg(long, allow_negative_numbers = true)]
    x2: Option<f64>,
    /// Comma-separated, strictly increasing oscillator frequencies
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    omegas: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct Fact4Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base field strength (must be positive)
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Single growth length scale, replacing the config list
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Single inverse temperature, replacing the config list
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Single transverse separation, replacing the config list
    #[arg(long, allow_negative_numbers = true)]
    d2: Option<f64>,
    /// Common first coordinate of both endpoints
    #[arg(long, allow_negative_numbers = true)]
    x1: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct OpenProblemArgs {
    /// Problem description; a sine-field survey grid is used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct CompareArgs {
    /// First problem description
    #[arg(long)]
    config_a: PathBuf,
    /// Second problem description (must share the first one's query grid)
    #[arg(long)]
    config_b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

/// Default scan box for the frequency counterexample: the committed witness
/// geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Fact3ScanConfig {
    b: f64,
    beta: f64,
    x: [f64; 2],
    omegas: Vec<f64>,
}

impl Default for Fact3ScanConfig {
    fn default() -> Self {
        let f = fact3_fixture();
        Fact3ScanConfig {
            b: f.b,
            beta: f.beta,
            x: f.x,
            omegas: f.omegas,
        }
    }
}

/// Default search box for the growing-field counterexample: the committed
/// witness geometry and the discretization it was certified on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Fact4ScanConfig {
    b: f64,
    lambdas: Vec<f64>,
    betas: Vec<f64>,
    d2s: Vec<f64>,
    x1: f64,
    grid: GridConfig,
    k: KConfig,
}

impl Default for Fact4ScanConfig {
    fn default() -> Self {
        let f = fact4_fixture();
        Fact4ScanConfig {
            b: f.b,
            lambdas: vec![f.lambda],
            betas: vec![f.beta],
            d2s: vec![f.d2],
            x1: f.x1,
            grid: GridConfig {
                x_min: f.x_min,
                x_max: f.x_max,
                n_points: f.n_points,
            },
            k: KConfig {
                half_width: f.k_half_width,
                n_points: f.k_points,
            },
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.cmd {
        Cmd::Kernel(a) => kernel_cmd(a),
        Cmd::Band(a) => band_cmd(a),
        Cmd::Energy(a) => energy_cmd(a),
        Cmd::Check(a) => check_cmd(a),
        Cmd::Scan(a) => match a.which {
            ScanKind::Fact3(f) => fact3_cmd(f),
            ScanKind::Fact4(f) => fact4_cmd(f),
            ScanKind::OpenProblem(o) => open_problem_cmd(o),
        },
        Cmd::Compare(a) => compare_cmd(a),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

#[derive(Serialize)]
struct Meta {
    tool_version: &'static str,
    config_sha256: String,
    seed: Option<u64>,
}

fn meta_for(config: &Value, seed: Option<u64>) -> Meta {
    let bytes = serde_json::to_vec(config).expect("resolved config serializes");
    let mut h = Sha256::new();
    h.update(&bytes);
    let config_sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Meta {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_sha256,
        seed,
    }
}

fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
    } else {
        Ok(toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn csv_meta(meta: &Meta) -> String {
    let seed = meta
        .seed
        .map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# tool_version={}\n# config_sha256={}\n# seed={}\n",
        meta.tool_version, meta.config_sha256, seed
    )
}

/// Write the report (or print it when no path was given). A `.csv` extension
/// selects the tabular form; JSON otherwise. Beside a written report go the
/// resolved-config echo and, for checks, the per-point margins table.
fn emit(
    out: Option<&Path>,
    format: Option<OutputFormat>,
    payload: &Value,
    csv_main: &str,
    margins: Option<&str>,
    config_echo: &Value,
) -> CliResult<()> {
    let pretty = |v: &Value| -> CliResult<String> {
        Ok(format!("{}\n", serde_json::to_string_pretty(v)?))
    };
    // An explicit --format wins; otherwise the `.csv` extension selects CSV.
    let is_csv = match format {
        Some(f) => f == OutputFormat::Csv,
        None => out.and_then(Path::extension).and_then(|e| e.to_str()) == Some("csv"),
    };
    let Some(path) = out else {
        if is_csv {
            print!("{csv_main}");
        } else {
            print!("{}", pretty(payload)?);
        }
        return Ok(());
    };
    if is_csv {
        fs::write(path, csv_main)?;
    } else {
        fs::write(path, pretty(payload)?)?;
    }
    println!("wrote {}", path.display());
    let echo_path = path.with_extension("config.json");
    fs::write(&echo_path, pretty(config_echo)?)?;
    println!("wrote {}", echo_path.display());
    if let (Some(m), false) = (margins, is_csv) {
        let margins_path = path.with_extension("margins.csv");
        fs::write(&margins_path, m)?;
        println!("wrote {}", margins_path.display());
    }
    Ok(())
}

fn status_str(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::HypothesisNotVerified => "hypothesis-not-verified",
        CheckStatus::Informational => "informational",
    }
}

fn report_exit(r: &CheckReport) -> i32 {
    match r.status {
        CheckStatus::Fail => EXIT_CHECK_FAILED,
        CheckStatus::HypothesisNotVerified => EXIT_HYPOTHESIS,
        CheckStatus::Pass | CheckStatus::Informational => {
            if r.flags.any() {
                EXIT_FLAGGED
            } else {
                EXIT_PASS
            }
        }
    }
}

fn margins_csv(meta: &Meta, r: &CheckReport) -> String {
    let mut s = csv_meta(meta);
    s.push_str(&format!(
        "# check_id={}\n# status={}\n",
        r.check_id,
        status_str(r.status)
    ));
    s.push_str("parameters,lhs,rhs,margin\n");
    for p in &r.points {
        s.push_str(&format!(
            "{},{},{},{}\n",
            csv_quote(&p.parameters),
            fmt_f(p.lhs),
            fmt_f(p.rhs),
            fmt_f(p.margin)
        ));
    }
    s
}

fn emit_check(
    out: Option<&Path>,
    format: Option<OutputFormat>,
    report: &CheckReport,
    seed: Option<u64>,
    cfg_value: &Value,
) -> CliResult<i32> {
    let meta = meta_for(cfg_value, seed);
    let margins = margins_csv(&meta, report);
    let payload = json!({
        "meta": &meta,
        "kind": "check",
        "report": report,
    });
    emit(out, format, &payload, &margins, Some(&margins), cfg_value)?;
    Ok(report_exit(report))
}

// ---------------------------------------------------------------------------
// kernel evaluation (shared by `kernel` and `compare`)

#[derive(Serialize)]
struct KernelRow {
    beta: f64,
    x: [f64; 2],
    y: [f64; 2],
    re: f64,
    im: f64,
    modulus: f64,
    std_error: Option<f64>,
}

fn kernel_row(beta: f64, x: Point64, y: Point64, re: f64, im: f64, se: Option<f64>) -> KernelRow {
    KernelRow {
        beta,
        x: [x.x1, x.x2],
        y: [y.x1, y.x2],
        re,
        im,
        modulus: re.hypot(im),
        std_error: se,
    }
}

/// Query-grid cross product in report order: beta, then x1, y1, and the
/// transverse separation innermost.
fn query_pairs(q: &QueryConfig) -> CliResult<Vec<(f64, Point64, Point64)>> {
    q.build()?; // full validation
    let mut pairs = Vec::new();
    for &beta in &q.betas {
        for &x1 in &q.x1 {
            for &y1 in &q.y1 {
                for &d2 in &q.d2 {
                    pairs.push((beta, Point64::new(x1, d2), Point64::new(y1, 0.0)));
                }
            }
        }
    }
    Ok(pairs)
}

/// Evaluate one method over prepared pairs. Phases are reported in each
/// method's own gauge (symmetric for the closed form, transverse otherwise);
/// the moduli are gauge-invariant and comparable across methods.
fn eval_rows(
    cfg: &RunConfig,
    pairs: &[(f64, Point64, Point64)],
) -> CliResult<(Vec<KernelRow>, Flags, Option<u64>)> {
    let mut flags = Flags::default();
    let mut rows = Vec::with_capacity(pairs.len());
    match cfg.method.as_str() {
        "mehler" => {
            let b = cfg.mehler_b()?;
            let omega = cfg.mehler_omega()?;
            for &(beta, x, y) in pairs {
                let v = mehler_kernel(&MehlerParams64::new(b, omega, beta)?, x, y);
                rows.push(kernel_row(beta, x, y, v.re, v.im, None));
            }
            Ok((rows, flags, None))
        }
        "iwatsuka" => {
            let field = cfg.field.build()?;
            let pot = cfg.potential.build()?;
            let settings = cfg.settings()?;
            let mut betas: Vec<f64> = Vec::new();
            for p in pairs {
                if !betas.contains(&p.0) {
                    betas.push(p.0);
                }
            }
            let mut evaluators: Vec<(f64, SpectralEvaluator<f64>)> = Vec::new();
            for &beta in &betas {
                let mut slots: Vec<f64> = pairs
                    .iter()
                    .filter(|p| p.0 == beta)
                    .flat_map(|p| [p.1.x1, p.2.x1])
                    .collect();
                slots.sort_by(f64::total_cmp);
                slots.dedup();
                let ev = SpectralEvaluator::build(&field, &pot, beta, &settings, &slots)?;
                evaluators.push((beta, ev));
            }
            for &(beta, x, y) in pairs {
                let ev = &evaluators
                    .iter()
                    .find(|(b, _)| *b == beta)
                    .expect("evaluator built for every beta")
                    .1;
                let k = ev.kernel(x, y)?;
                flags.merge(k.flags);
                rows.push(kernel_row(beta, x, y, k.value.re, k.value.im, None));
            }
            Ok((rows, flags, None))
        }
        "mc" => {
            let field = cfg.field.build()?;
            let pot = cfg.potential.build()?;
            for &(beta, x, y) in pairs {
                let est = mc_kernel(
                    &field,
                    &pot,
                    beta,
                    x,
                    y,
                    cfg.mc.n_steps,
                    cfg.mc.n_samples,
                    cfg.mc.seed,
                )?;
                rows.push(kernel_row(
                    beta,
                    x,
                    y,
                    est.value.re,
                    est.value.im,
                    Some(est.std_error),
                ));
            }
            Ok((rows, flags, Some(cfg.mc.seed)))
        }
        other => Err(DiamagError::Config(format!(
            "unknown method {other:?} (expected mehler, iwatsuka, or mc)"
        ))
        .into()),
    }
}

fn kernel_rows_csv(meta: &Meta, rows: &[KernelRow]) -> String {
    let mut s = csv_meta(meta);
    s.push_str("beta,x1,x2,y1,y2,re,im,modulus,std_error\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f(r.beta),
            fmt_f(r.x[0]),
            fmt_f(r.x[1]),
            fmt_f(r.y[0]),
            fmt_f(r.y[1]),
            fmt_f(r.re),
            fmt_f(r.im),
            fmt_f(r.modulus),
            r.std_error.map_or_else(String::new, fmt_f)
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// subcommands

fn kernel_cmd(args: KernelArgs) -> CliResult<i32> {
    let mut cfg: RunConfig = load_config(args.config.as_deref())?;
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(f) = args.field {
        cfg.field.preset = f;
    }
    if let Some(b) = args.b {
        cfg.field.b = b;
    }
    if let Some(l) = args.lambda {
        cfg.field.lambda = l;
    }
    if let Some(omega) = args.omega {
        cfg.potential.preset = "oscillator".into();
        cfg.potential.omega = omega;
    }
    if let Some(beta) = args.beta {
        cfg.query.betas = vec![beta];
    }

    // Ad-hoc pairs are evaluated verbatim (the closed form's phase is not
    // transverse-translation covariant, so the coordinates are not shifted);
    // they live only in the report, never in the config echo.
    let pairs = match (&args.x, &args.y) {
        (Some(x), Some(y)) => {
            cfg.query.build()?;
            let (x, y) = (Point64::new(x[0], x[1]), Point64::new(y[0], y[1]));
            cfg.query.betas.iter().map(|&b| (b, x, y)).collect()
        }
        (None, None) => query_pairs(&cfg.query)?,
        _ => {
            return Err(
                DiamagError::Config("an ad-hoc query needs both --x and --y".into()).into(),
            )
        }
    };

    let (rows, flags, seed) = eval_rows(&cfg, &pairs)?;
    let cfg_value = serde_json::to_value(&cfg)?;
    let meta = meta_for(&cfg_value, seed);
    let payload = json!({
        "meta": &meta,
        "kind": "kernel",
        "method": cfg.method,
        "field": cfg.field.build()?.label(),
        "potential": cfg.potential.build()?.label(),
        "rows": &rows,
        "flags": flags,
    });
    let csv = kernel_rows_csv(&meta, &rows);
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if flags.any() { EXIT_FLAGGED } else { EXIT_PASS })
}

fn band_cmd(args: BandArgs) -> CliResult<i32> {
    let mut cfg: RunConfig = load_config(args.config.as_deref())?;
    if let Some(f) = args.field {
        cfg.field.preset = f;
    }
    if let Some(b) = args.b {
        cfg.field.b = b;
    }
    if let Some(h) = args.k_halfwidth {
        cfg.k.half_width = h;
    }
    if let Some(n) = args.k_points {
        cfg.k.n_points = n;
    }
    let field = cfg.field.build()?;
    let pot = cfg.potential.build()?;
    let settings = cfg.settings()?;
    let band = band_function(&field, &pot, &settings)?;
    let flags = band.flags;

    #[derive(Serialize)]
    struct BandRow {
        k: f64,
        e0: f64,
    }
    let rows: Vec<BandRow> = band
        .value
        .k_grid
        .iter()
        .zip(&band.value.e0)
        .map(|(&k, &e0)| BandRow { k, e0 })
        .collect();

    let cfg_value = serde_json::to_value(&cfg)?;
    let meta = meta_for(&cfg_value, None);
    let payload = json!({
        "meta": &meta,
        "kind": "band",
        "field": field.label(),
        "potential": pot.label(),
        "rows": &rows,
        "flags": flags,
    });
    let mut csv = csv_meta(&meta);
    csv.push_str("k,e0\n");
    for r in &rows {
        csv.push_str(&format!("{},{}\n", fmt_f(r.k), fmt_f(r.e0)));
    }
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if flags.any() { EXIT_FLAGGED } else { EXIT_PASS })
}

fn energy_cmd(args: EnergyArgs) -> CliResult<i32> {
    let cfg: CheckConfig = load_config(args.config.as_deref())?;
    let field = cfg.field.build()?;
    let pot = cfg.potential.build()?;
    let (e0, argmin_m, flags, backend) = match args.backend.as_str() {
        "iwatsuka" => {
            let settings = cfg.settings()?;
            let g = ground_state_energy(&field, &pot, &settings)?;
            (g.value, None, g.flags, "iwatsuka-spectral")
        }
        "radial" => {
            let grid = cfg.radial.build()?;
            let g = ground_state_energy_radial(
                &field,
                &pot,
                cfg.radial.m_min,
                cfg.radial.m_max,
                &grid,
            )?;
            (g.value.energy, Some(g.value.argmin_m), g.flags, "radial-fv")
        }
        other => {
            return Err(DiamagError::Config(format!(
                "unknown energy backend {other:?} (expected iwatsuka or radial)"
            ))
            .into())
        }
    };
    let cfg_value = serde_json::to_value(&cfg)?;
    let meta = meta_for(&cfg_value, None);
    let payload = json!({
        "meta": &meta,
        "kind": "energy",
        "backend": backend,
        "field": field.label(),
        "potential": pot.label(),
        "e0": e0,
        "argmin_m": argmin_m,
        "flags": flags,
    });
    let mut csv = csv_meta(&meta);
    csv.push_str("backend,e0,argmin_m\n");
    csv.push_str(&format!(
        "{},{},{}\n",
        backend,
        fmt_f(e0),
        argmin_m.map_or_else(String::new, |m| m.to_string())
    ));
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if flags.any() { EXIT_FLAGGED } else { EXIT_PASS })
}

fn check_cmd(args: CheckArgs) -> CliResult<i32> {
    let (name, common) = match &args.which {
        CheckKind::Theorem2(c) => ("theorem2", c),
        CheckKind::Theorem1(c) => ("theorem1", c),
        CheckKind::Sandwich(c) => ("sandwich", c),
        CheckKind::LtBound(c) => ("lt-bound", c),
        CheckKind::ImprovedBound(c) => ("improved-bound", c),
        CheckKind::LowerBound(c) => ("lower-bound", c),
        CheckKind::Pathwise(c) => ("pathwise", c),
    };
    let mut cfg: CheckConfig = load_config(common.config.as_deref())?;
    if let Some(b) = &common.backend {
        cfg.backend = b.clone();
    }
    let field = cfg.field.build()?;
    let pot = cfg.potential.build()?;
    let mut seed = None;

    let report = match name {
        "theorem2" => {
            let field_hat = cfg.build_field_hat()?;
            let pot_hat = cfg.build_potential_hat()?;
            let grid = cfg.query.build()?;
            let settings = cfg.settings()?;
            let backend = match cfg.backend_name()? {
                "mc" => {
                    seed = Some(cfg.mc.seed);
                    Theorem2Backend::Mc {
                        n_steps: cfg.mc.n_steps,
                        n_samples: cfg.mc.n_samples,
                        seed: cfg.mc.seed,
                    }
                }
                _ => Theorem2Backend::Spectral,
            };
            check_theorem2(&field, &pot, &field_hat, &pot_hat, &grid, &settings, backend)?
        }
        "theorem1" => {
            let field_hat = cfg.build_field_hat()?;
            let pot_hat = cfg.build_potential_hat()?;
            let grid = cfg.radial.build()?;
            check_theorem1(
                &field,
                &pot,
                &field_hat,
                &pot_hat,
                cfg.radial.m_min,
                cfg.radial.m_max,
                &grid,
            )?
        }
        "sandwich" => match cfg.backend.as_str() {
            "" | "spectral" => {
                let settings = cfg.settings()?;
                check_sandwich(&field, &EnergyBackend::Spectral(&settings))?
            }
            "radial" => {
                let grid = cfg.radial.build()?;
                check_sandwich(
                    &field,
                    &EnergyBackend::Radial {
                        m_min: cfg.radial.m_min,
                        m_max: cfg.radial.m_max,
                        grid: &grid,
                    },
                )?
            }
            other => {
                return Err(DiamagError::Config(format!(
                    "unknown sandwich backend {other:?} (expected spectral or radial)"
                ))
                .into())
            }
        },
        "lt-bound" => check_lt_bound(&field, &cfg.query.build()?, &cfg.settings()?)?,
        "improved-bound" => check_improved_bound(&field, &cfg.query.build()?, &cfg.settings()?)?,
        "lower-bound" => check_lower_bound(&field, &cfg.query.build()?, &cfg.settings()?)?,
        "pathwise" => {
            let field_hat = cfg.build_field_hat()?;
            cfg.query.build()?;
            seed = Some(cfg.mc.seed);
            check_pathwise_variance(
                &field,
                &field_hat,
                cfg.query.x1[0],
                cfg.query.y1[0],
                cfg.query.betas[0],
                cfg.mc.n_steps,
                cfg.mc.n_samples,
                cfg.mc.seed,
            )?
        }
        _ => unreachable!("every check kind is dispatched"),
    };

    let cfg_value = serde_json::to_value(&cfg)?;
    emit_check(common.out.as_deref(), common.format, &report, seed, &cfg_value)
}

fn fact3_cmd(args: Fact3Args) -> CliResult<i32> {
    let mut cfg: Fact3ScanConfig = load_config(args.config.as_deref())?;
    if let Some(b) = args.b {
        cfg.b = b;
    }
    if let Some(beta) = args.beta {
        cfg.beta = beta;
    }
    if let Some(x1) = args.x1 {
        cfg.x[0] = x1;
    }
    if let Some(x2) = args.x2 {
        cfg.x[1] = x2;
    }
    if let Some(omegas) = args.omegas {
        cfg.omegas = omegas;
    }
    let interval = scan_fact3(cfg.b, cfg.beta, Point64::new(cfg.x[0], cfg.x[1]), &cfg.omegas)?;
    let cfg_value = serde_json::to_value(&cfg)?;
    let meta = meta_for(&cfg_value, None);
    let payload = json!({
        "meta": &meta,
        "kind": "scan-fact3",
        "b": cfg.b,
        "beta": cfg.beta,
        "x": cfg.x,
        "omegas_scanned": cfg.omegas.len(),
        "witness_found": interval.is_some(),
        "interval": interval,
    });
    let mut csv = csv_meta(&meta);
    csv.push_str("omega_lo,omega_hi,points\n");
    if let Some(i) = &interval {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f(i.omega_lo),
            fmt_f(i.omega_hi),
            i.points
        ));
    }
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if interval.is_some() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    })
}

fn fact4_cmd(args: Fact4Args) -> CliResult<i32> {
    let mut cfg: Fact4ScanConfig = load_config(args.config.as_deref())?;
    if let Some(b) = args.b {
        cfg.b = b;
    }
    if let Some(l) = args.lambda {
        cfg.lambdas = vec![l];
    }
    if let Some(beta) = args.beta {
        cfg.betas = vec![beta];
    }
    if let Some(d2) = args.d2 {
        cfg.d2s = vec![d2];
    }
    if let Some(x1) = args.x1 {
        cfg.x1 = x1;
    }
    let settings = SpectralSettings::new(cfg.grid.build()?, cfg.k.half_width, cfg.k.n_points)?;
    let witnesses = scan_fact4(cfg.b, &cfg.lambdas, &cfg.betas, &cfg.d2s, cfg.x1, &settings)?;
    let mut flags = Flags::default();
    for w in &witnesses {
        flags.merge(w.flags);
    }
    let cfg_value = serde_json::to_value(&cfg)?;
    let meta = meta_for(&cfg_value, None);
    let payload = json!({
        "meta": &meta,
        "kind": "scan-fact4",
        "n_witnesses": witnesses.len(),
        "witnesses": &witnesses,
        "flags": flags,
    });
    let mut csv = csv_meta(&meta);
    csv.push_str(
        "b,lambda,beta,x1,x2,y1,y2,hat_modulus,plain_modulus,excess,improved_rhs,improved_holds\n",
    );
    for w in &witnesses {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f(w.b),
            fmt_f(w.lambda),
            fmt_f(w.beta),
            fmt_f(w.x[0]),
            fmt_f(w.x[1]),
            fmt_f(w.y[0]),
            fmt_f(w.y[1]),
            fmt_f(w.hat_modulus),
            fmt_f(w.plain_modulus),
            fmt_f(w.excess),
            fmt_f(w.improved_rhs),
            w.improved_holds
        ));
    }
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if witnesses.is_empty() {
        EXIT_CHECK_FAILED
    } else if flags.any() {
        EXIT_FLAGGED
    } else {
        EXIT_PASS
    })
}

fn open_problem_cmd(args: OpenProblemArgs) -> CliResult<i32> {
    let cfg: CheckConfig = if args.config.is_some() {
        load_config(args.config.as_deref())?
    } else {
        // A survey grid with genuinely planar separations, where the
        // question is actually open; the momentum window is wide enough to
        // keep the quality flags clear.
        CheckConfig {
            field: FieldConfig {
                preset: "sine".into(),
                ..FieldConfig::default()
            },
            k: KConfig {
                half_width: 12.0,
                n_points: 193,
            },
            query: QueryConfig {
                betas: vec![1.0],
                x1: vec![-1.0, 0.0, 1.0],
                y1: vec![0.0],
                d2: vec![0.0, 1.0],
            },
            ..CheckConfig::default()
        }
    };
    let field = cfg.field.build()?;
    let grid = cfg.query.build()?;
    let settings = cfg.settings()?;
    let report = scan_open_problem(&field, &grid, &settings)?;
    let cfg_value = serde_json::to_value(&cfg)?;
    emit_check(args.out.as_deref(), args.format, &report, None, &cfg_value)
}

fn compare_cmd(args: CompareArgs) -> CliResult<i32> {
    let cfg_a: RunConfig = load_config(Some(&args.config_a))?;
    let cfg_b: RunConfig = load_config(Some(&args.config_b))?;
    if serde_json::to_value(&cfg_a.query)? != serde_json::to_value(&cfg_b.query)? {
        return Err(DiamagError::Config(
            "the two problem descriptions must share one query grid".into(),
        )
        .into());
    }
    let pairs = query_pairs(&cfg_a.query)?;
    let (rows_a, flags_a, _) = eval_rows(&cfg_a, &pairs)?;
    let (rows_b, flags_b, _) = eval_rows(&cfg_b, &pairs)?;
    let mut flags = flags_a;
    flags.merge(flags_b);

    // Values are reported in each method's own gauge; only the moduli (and
    // their ratio) are gauge-invariant, so the diff columns use moduli.
    #[derive(Serialize)]
    struct CompareRow {
        beta: f64,
        x: [f64; 2],
        y: [f64; 2],
        re_a: f64,
        im_a: f64,
        modulus_a: f64,
        std_error_a: Option<f64>,
        re_b: f64,
        im_b: f64,
        modulus_b: f64,
        std_error_b: Option<f64>,
        ratio: f64,
        abs_diff: f64,
        rel_diff: f64,
    }
    let rows: Vec<CompareRow> = rows_a
        .iter()
        .zip(&rows_b)
        .map(|(a, b)| {
            let abs_diff = (a.modulus - b.modulus).abs();
            let scale = a.modulus.abs().max(b.modulus.abs()).max(1e-300);
            CompareRow {
                beta: a.beta,
                x: a.x,
                y: a.y,
                re_a: a.re,
                im_a: a.im,
                modulus_a: a.modulus,
                std_error_a: a.std_error,
                re_b: b.re,
                im_b: b.im,
                modulus_b: b.modulus,
                std_error_b: b.std_error,
                ratio: a.modulus / b.modulus.max(1e-300),
                abs_diff,
                rel_diff: abs_diff / scale,
            }
        })
        .collect();
    let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let max_rel_diff = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);

    let cfg_value = json!({ "a": &cfg_a, "b": &cfg_b });
    let meta = meta_for(&cfg_value, None);
    let payload = json!({
        "meta": &meta,
        "kind": "compare",
        "method_a": cfg_a.method,
        "method_b": cfg_b.method,
        "rows": &rows,
        "max_abs_diff": max_abs_diff,
        "max_rel_diff": max_rel_diff,
        "flags": flags,
    });
    let fmt_se = |se: Option<f64>| se.map(fmt_f).unwrap_or_default();
    let mut csv = csv_meta(&meta);
    csv.push_str(
        "beta,x1,x2,y1,y2,re_a,im_a,modulus_a,std_error_a,\
         re_b,im_b,modulus_b,std_error_b,ratio,abs_diff,rel_diff\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f(r.beta),
            fmt_f(r.x[0]),
            fmt_f(r.x[1]),
            fmt_f(r.y[0]),
            fmt_f(r.y[1]),
            fmt_f(r.re_a),
            fmt_f(r.im_a),
            fmt_f(r.modulus_a),
            fmt_se(r.std_error_a),
            fmt_f(r.re_b),
            fmt_f(r.im_b),
            fmt_f(r.modulus_b),
            fmt_se(r.std_error_b),
            fmt_f(r.ratio),
            fmt_f(r.abs_diff),
            fmt_f(r.rel_diff)
        ));
    }
    emit(args.out.as_deref(), args.format, &payload, &csv, None, &cfg_value)?;
    Ok(if flags.any() { EXIT_FLAGGED } else { EXIT_PASS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn float_format_is_full_precision() {
        assert_eq!(fmt_f(1.0), "1.0000000000000000e0");
        let v = 0.13542782627579134;
        assert_eq!(fmt_f(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn csv_quoting_doubles_inner_quotes() {
        assert_eq!(csv_quote("beta=1 x=(1, 0)"), "\"beta=1 x=(1, 0)\"");
        assert_eq!(csv_quote("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn config_hash_is_stable_and_hex() {
        let v = json!({"field": {"preset": "sine"}});
        let m1 = meta_for(&v, None);
        let m2 = meta_for(&v, Some(7));
        assert_eq!(m1.config_sha256, m2.config_sha256);
        assert_eq!(m1.config_sha256.len(), 64);
        assert!(m1.config_sha256.chars().all(|c| c.is_ascii_hexdigit()));
        let other = meta_for(&json!({"field": {"preset": "zero"}}), None);
        assert_ne!(m1.config_sha256, other.config_sha256);
    }

    #[test]
    fn report_exit_ranks_statuses() {
        let mut r = CheckReport {
            check_id: "t".into(),
            status: CheckStatus::Pass,
            backend: "b".into(),
            points_tested: 1,
            failures: vec![],
            worst_margin: 0.0,
            tolerance_used: 0.0,
            flags: Flags::default(),
            notes: vec![],
            points: vec![],
        };
        assert_eq!(report_exit(&r), EXIT_PASS);
        r.flags.box_edge = true;
        assert_eq!(report_exit(&r), EXIT_FLAGGED);
        r.status = CheckStatus::HypothesisNotVerified;
        assert_eq!(report_exit(&r), EXIT_HYPOTHESIS);
        r.status = CheckStatus::Fail;
        assert_eq!(report_exit(&r), EXIT_CHECK_FAILED);
    }

    #[test]
    fn scan_defaults_come_from_the_committed_fixtures() {
        let f3 = Fact3ScanConfig::default();
        assert!(f3.omegas.len() >= 2);
        assert!(f3.b > 0.0);
        let f4 = Fact4ScanConfig::default();
        assert_eq!(f4.lambdas.len(), 1);
        assert!(f4.grid.n_points > 100);
    }
}
