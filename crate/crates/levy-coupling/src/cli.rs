//! Command-line surface: parse process descriptions, run the library, emit
//! CSV/JSON artifacts for external plotting.
//!
//! Exit codes are part of the interface:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success (for `check`: verdict `Coupling`) |
//! | 1    | could not read or parse an input          |
//! | 2    | input parsed but violates an invariant    |
//! | 3    | `check` verdict `NoCoupling`              |
//! | 4    | `check` verdict `Inconclusive`            |
//! | 5    | computation stopped by the work budget    |
//! | 6    | coupled step construction has no overlap  |
//! | 7    | not enough usable data points for a fit   |
//!
//! Every artifact embeds the tool version, the seed, and an echo of the
//! configuration that produced it. CSV artifacts carry these as leading
//! `#`-comment lines above the header row; JSON artifacts carry them as an
//! envelope around the payload.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{couplingo2_bound, empirical_walk_constant, fit_rate, th2_bound, RateFit};
use crate::coupling::{build_mineka, estimate_survival, SimulationPlan, SurvivalPoint};
use crate::criteria::{
    decide_coupling_property_with, truncate_levy, CriterionParams, CriterionReport, LevyTriplet,
    TripletJson, Verdict,
};
use crate::error::Error;
use crate::measure::Point;
use crate::semigroup::{SemigroupSeries, DEFAULT_SERIES_TOL};

pub const TOOL_NAME: &str = "levy-coupling";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Steps of the underlying random walk examined when calibrating the
/// square-root-decay constant from data.
const WALK_CONSTANT_STEPS: usize = 200;

/// Fitted slopes at or above this value are flagged as "no decay".
const NO_DECAY_SLOPE: f64 = -0.05;

#[derive(Debug, Parser)]
#[command(name = TOOL_NAME, version, about = "Coupling constructions and transition-law distance bounds for compound jump processes", disable_help_subcommand = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the coupling property of a process triplet (JSON in, JSON out).
    Check(CheckArgs),
    /// Exact transition-law distances and decay bounds over a time grid (CSV out).
    Tv(TvArgs),
    /// Monte Carlo survival of the coupling time over a time grid (CSV + JSON summary).
    Couple(CoupleArgs),
    /// Power-law fit of a (t, value) CSV produced by `tv` or `couple` (JSON out).
    Rate(RateArgs),
}

/// Comma-separated list of floats, e.g. `--t-grid 1,2,4,8`.
#[derive(Debug, Clone)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals: Result<Vec<f64>, _> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad number {p:?}: {e}"))
            })
            .collect();
        let vals = vals?;
        if vals.is_empty() {
            return Err("expected at least one number".into());
        }
        Ok(FloatList(vals))
    }
}

impl FloatList {
    fn to_point(&self) -> Result<Point, Error> {
        Point::new(self.0.clone())
    }

    fn echo(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Process triplet JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed echoed into the artifact (the check itself is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest displacement norm probed by the overlap conditions.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Jump-size cutoff; overrides the triplet's own value.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Spacing of the displacement grid.
    #[arg(long = "grid-step", default_value_t = 1.0 / 64.0)]
    pub grid_step: f64,
    /// Largest convolution power searched.
    #[arg(long = "depth", default_value_t = 6)]
    pub depth: u32,
}

#[derive(Debug, Args)]
pub struct TvArgs {
    /// Process triplet JSON file (finite activity, or truncated via its cutoff).
    #[arg(long)]
    pub input: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed echoed into the artifact (the computation is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Series truncation tolerance.
    #[arg(long, default_value_t = DEFAULT_SERIES_TOL)]
    pub tol: f64,
    /// Times to evaluate, comma-separated.
    #[arg(long = "t-grid")]
    pub t_grid: FloatList,
    /// First starting point, comma-separated coordinates.
    #[arg(long)]
    pub x: FloatList,
    /// Second starting point, comma-separated coordinates.
    #[arg(long)]
    pub y: FloatList,
    /// Jump-size cutoff; overrides the triplet's own value.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    /// Process triplet JSON file (finite activity, or truncated via its cutoff).
    #[arg(long)]
    pub input: PathBuf,
    /// CSV destination; the JSON summary lands next to it as
    /// `<stem>.summary.json`. Stdout when omitted (summary follows as
    /// `#`-prefixed lines).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Series truncation tolerance (echoed; reserved for cross-checks).
    #[arg(long, default_value_t = DEFAULT_SERIES_TOL)]
    pub tol: f64,
    /// Times to evaluate, comma-separated.
    #[arg(long = "t-grid")]
    pub t_grid: FloatList,
    /// Starting-point separation for the coupled pair, comma-separated coordinates.
    #[arg(long)]
    pub displacement: FloatList,
    /// Jump-size cutoff; overrides the triplet's own value.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// CSV file produced by `tv` or `couple`.
    #[arg(long)]
    pub input: PathBuf,
    /// Fit JSON destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed echoed into the artifact (the fit is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here as non-errors.
            if e.use_stderr() {
                let _ = e.print();
                return 1;
            }
            let _ = e.print();
            return 0;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Library errors keep their own exit-code taxonomy.
fn lib_fail(err: Error) -> Failure {
    let code = match &err {
        Error::Json(_) | Error::Io(_) => 1,
        Error::BudgetExceeded { .. } => 5,
        Error::DegenerateOverlap => 6,
        Error::InsufficientData(_) => 7,
        _ => 2,
    };
    fail(code, err.to_string())
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Tv(args) => cmd_tv(args),
        Command::Couple(args) => cmd_couple(args),
        Command::Rate(args) => cmd_rate(args),
    }
}

/// Reads and validates a triplet in two stages so that malformed JSON and
/// well-formed-but-invalid triplets exit differently.
fn load_triplet(path: &Path, eps_override: Option<f64>) -> Result<LevyTriplet, Failure> {
    let raw = fs::read_to_string(path)
        .map_err(|e| fail(1, format!("cannot read {}: {e}", path.display())))?;
    let json: TripletJson = serde_json::from_str(&raw)
        .map_err(|e| fail(1, format!("cannot parse {}: {e}", path.display())))?;
    let triplet =
        LevyTriplet::try_from(json).map_err(|e| fail(2, format!("invalid triplet: {e}")))?;
    match eps_override {
        None => Ok(triplet),
        Some(eps) => LevyTriplet::new(
            triplet.dim(),
            triplet.drift().clone(),
            triplet.gaussian().to_vec(),
            triplet.levy().clone(),
            eps,
            triplet.infinite_activity(),
        )
        .map_err(|e| fail(2, format!("invalid triplet with --eps {eps}: {e}"))),
    }
}

fn write_artifact(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| fail(1, format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Envelope shared by all JSON artifacts; field order is the serialization
/// order, so artifacts diff cleanly.
#[derive(Serialize)]
struct Envelope<C: Serialize, P: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: C,
    #[serde(flatten)]
    payload: P,
}

fn render_json<C: Serialize, P: Serialize>(envelope: &Envelope<C, P>) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(envelope)
        .map_err(|e| fail(2, format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn comment_block(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool = {TOOL_NAME} {TOOL_VERSION}");
    for (key, value) in pairs {
        let _ = writeln!(out, "# {key} = {value}");
    }
    out
}

#[derive(Serialize)]
struct CheckConfig {
    input: String,
    delta: f64,
    eps: f64,
    grid_step: f64,
    depth: u32,
}

#[derive(Serialize)]
struct CheckPayload {
    report: CriterionReport,
}

fn cmd_check(args: CheckArgs) -> Result<i32, Failure> {
    let triplet = load_triplet(&args.input, args.eps)?;
    let params = CriterionParams {
        delta: args.delta,
        grid_step: args.grid_step,
        search_depth: args.depth,
    };
    let report = decide_coupling_property_with(&triplet, &params).map_err(lib_fail)?;
    let verdict = report.verdict;
    let envelope = Envelope {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "check",
        seed: args.seed,
        config: CheckConfig {
            input: args.input.display().to_string(),
            delta: args.delta,
            eps: triplet.cutoff(),
            grid_step: args.grid_step,
            depth: args.depth,
        },
        payload: CheckPayload { report },
    };
    write_artifact(args.output.as_deref(), &render_json(&envelope)?)?;
    Ok(match verdict {
        Verdict::Coupling => 0,
        Verdict::NoCoupling => 3,
        Verdict::Inconclusive => 4,
    })
}

fn cmd_tv(args: TvArgs) -> Result<i32, Failure> {
    if args.t_grid.0.iter().any(|&t| !t.is_finite() || t <= 0.0) {
        return Err(fail(2, "t-grid entries must be positive and finite"));
    }
    let triplet = load_triplet(&args.input, args.eps)?;
    let x = args.x.to_point().map_err(lib_fail)?;
    let y = args.y.to_point().map_err(lib_fail)?;
    if x.dim() != triplet.dim() || y.dim() != triplet.dim() {
        return Err(fail(
            2,
            format!("x and y must have dimension {}", triplet.dim()),
        ));
    }
    let nu_eps = truncate_levy(
        triplet.levy(),
        triplet.cutoff(),
        triplet.infinite_activity(),
    )
    .map_err(lib_fail)?;
    let (step_law, rate) = nu_eps.normalize().map_err(lib_fail)?;
    let same_start = x.coords() == y.coords();

    // Empirical stand-in for the random-walk constant; always labeled as
    // calibrated in the artifact because no closed form is available.
    let c_xy = empirical_walk_constant(&step_law, &x, &y, WALK_CONSTANT_STEPS).map_err(lib_fail)?;

    struct Row {
        t: f64,
        lower: f64,
        upper: f64,
        series: f64,
        c2: f64,
    }
    let mut rows = Vec::with_capacity(args.t_grid.0.len());
    for &t in &args.t_grid.0 {
        let series = SemigroupSeries::build(&step_law, rate, t, args.tol).map_err(lib_fail)?;
        let tv = series.cp_tv(&x, &y).map_err(lib_fail)?;
        let series_bound = series.series_tv_bound(&x, &y).map_err(lib_fail)?;
        let c2 = couplingo2_bound(rate, t, c_xy, same_start).map_err(lib_fail)?;
        rows.push(Row {
            t,
            lower: tv.lower,
            upper: tv.upper,
            series: series_bound,
            c2,
        });
    }

    // Smallest constant that dominates the exact distances on this grid.
    let dist = x.distance(&y);
    let th2_c = rows
        .iter()
        .map(|r| r.upper * r.t.sqrt() / (1.0 + dist))
        .fold(0.0f64, f64::max)
        .max(1e-13);

    let mut out = comment_block(&[
        ("command", "tv".into()),
        ("input", args.input.display().to_string()),
        ("seed", args.seed.to_string()),
        ("tol", args.tol.to_string()),
        ("t_grid", args.t_grid.echo()),
        ("x", args.x.echo()),
        ("y", args.y.echo()),
        ("eps", triplet.cutoff().to_string()),
        ("rate", rate.to_string()),
        ("c_xy", format!("{c_xy} (empirically calibrated)")),
        ("th2_constant", format!("{th2_c} (empirically calibrated)")),
    ]);
    out.push_str("t,tv_lower,tv_upper,series_bound,couplingo2_bound,th2_bound\n");
    for r in &rows {
        let th2 = th2_bound(r.t, &x, &y, th2_c).map_err(lib_fail)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.lower, r.upper, r.series, r.c2, th2
        );
    }
    write_artifact(args.output.as_deref(), &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct CoupleConfig {
    input: String,
    t_grid: Vec<f64>,
    displacement: Vec<f64>,
    eps: f64,
    samples: u64,
    workers: usize,
    chunk_size: u64,
    max_steps: u64,
}

#[derive(Serialize)]
struct CoupleSummary {
    rate: f64,
    displacement_magnitude: f64,
    stay_prob: f64,
    step_plus_prob: f64,
    step_minus_prob: f64,
    points: Vec<SurvivalPoint>,
}

fn cmd_couple(args: CoupleArgs) -> Result<i32, Failure> {
    let triplet = load_triplet(&args.input, args.eps)?;
    let a = args.displacement.to_point().map_err(lib_fail)?;
    if a.dim() != triplet.dim() {
        return Err(fail(
            2,
            format!("displacement must have dimension {}", triplet.dim()),
        ));
    }
    let nu_eps = truncate_levy(
        triplet.levy(),
        triplet.cutoff(),
        triplet.infinite_activity(),
    )
    .map_err(lib_fail)?;
    let (step_law, rate) = nu_eps.normalize().map_err(lib_fail)?;
    let law = build_mineka(&step_law, &a).map_err(lib_fail)?;

    let plan = SimulationPlan {
        n_samples: args.samples,
        seed: args.seed,
        workers: args.workers,
        ..SimulationPlan::default()
    };
    let points = estimate_survival(&law, rate, &args.t_grid.0, &plan).map_err(lib_fail)?;

    let mut csv = comment_block(&[
        ("command", "couple".into()),
        ("input", args.input.display().to_string()),
        ("seed", args.seed.to_string()),
        ("workers", args.workers.to_string()),
        ("tol", args.tol.to_string()),
        ("t_grid", args.t_grid.echo()),
        ("displacement", args.displacement.echo()),
        ("eps", triplet.cutoff().to_string()),
        ("samples", args.samples.to_string()),
        ("chunk_size", plan.chunk_size.to_string()),
        ("max_steps", plan.max_steps.to_string()),
        ("rate", rate.to_string()),
        ("stay_prob", law.stay_prob().to_string()),
    ]);
    csv.push_str("t,n_samples,p_hat_TL_gt_t,stderr,n_censored\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.t, p.n_samples, p.p_hat, p.stderr, p.n_censored
        );
    }

    let envelope = Envelope {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "couple",
        seed: args.seed,
        config: CoupleConfig {
            input: args.input.display().to_string(),
            t_grid: args.t_grid.0.clone(),
            displacement: args.displacement.0.clone(),
            eps: triplet.cutoff(),
            samples: args.samples,
            workers: args.workers,
            chunk_size: plan.chunk_size,
            max_steps: plan.max_steps,
        },
        payload: CoupleSummary {
            rate,
            displacement_magnitude: law.magnitude(),
            stay_prob: law.stay_prob(),
            step_plus_prob: law.p_plus(),
            step_minus_prob: law.p_minus(),
            points: points.clone(),
        },
    };
    let summary = render_json(&envelope)?;

    match args.output.as_deref() {
        Some(path) => {
            write_artifact(Some(path), &csv)?;
            let summary_path = path.with_extension("summary.json");
            write_artifact(Some(&summary_path), &summary)?;
        }
        None => {
            // Keep stdout a valid commented CSV: the summary rides along as
            // comment lines.
            print!("{csv}");
            for line in summary.lines() {
                println!("# {line}");
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct RateConfig {
    input: String,
    t_column: String,
    value_column: String,
}

#[derive(Serialize)]
struct RatePayload {
    fit: RateFit,
    excluded_points: usize,
    no_decay: bool,
}

/// Columns `rate` can fit, in preference order, by artifact of origin.
const VALUE_COLUMNS: [&str; 3] = ["tv_upper", "p_hat_TL_gt_t", "value"];

fn cmd_rate(args: RateArgs) -> Result<i32, Failure> {
    let raw = fs::read_to_string(&args.input)
        .map_err(|e| fail(1, format!("cannot read {}: {e}", args.input.display())))?;
    let mut lines = raw
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| fail(1, format!("{} has no header row", args.input.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let t_idx = columns
        .iter()
        .position(|&c| c == "t")
        .ok_or_else(|| fail(1, format!("{} has no column named t", args.input.display())))?;
    let (value_name, value_idx) = VALUE_COLUMNS
        .iter()
        .find_map(|name| columns.iter().position(|c| c == name).map(|i| (*name, i)))
        .ok_or_else(|| {
            fail(
                1,
                format!(
                    "{} has none of the value columns {}",
                    args.input.display(),
                    VALUE_COLUMNS.join(", ")
                ),
            )
        })?;

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(fail(
                1,
                format!(
                    "row {} has {} fields, header has {}",
                    row_no + 2,
                    fields.len(),
                    columns.len()
                ),
            ));
        }
        let parse = |s: &str, col: &str| {
            s.parse::<f64>()
                .map_err(|e| fail(1, format!("row {}, column {col}: {e}", row_no + 2)))
        };
        times.push(parse(fields[t_idx], "t")?);
        values.push(parse(fields[value_idx], value_name)?);
    }

    let parsed = times.len();
    let fit = fit_rate(&times, &values).map_err(lib_fail)?;
    let excluded = parsed - fit.times.len();
    let no_decay = fit.slope >= NO_DECAY_SLOPE;
    let envelope = Envelope {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "rate",
        seed: args.seed,
        config: RateConfig {
            input: args.input.display().to_string(),
            t_column: "t".into(),
            value_column: value_name.into(),
        },
        payload: RatePayload {
            fit,
            excluded_points: excluded,
            no_decay,
        },
    };
    write_artifact(args.output.as_deref(), &render_json(&envelope)?)?;
    Ok(0)
}
