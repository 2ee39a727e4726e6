//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 failed property or check,
//! 3 I/O failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{beta_bounds, deviation_constants, BetaSearch, ModelParams, MOMENT_TOL};
use crate::error::{Error, Result};
use crate::experiments::{write_report, ExperimentConfig, ExperimentKind, Report, ReportFormat, Runner};
use crate::geometry::{build_tiling, Point};
use crate::solvers::{grid_tour_detailed, tsp_bruteforce, tsp_exact, two_opt};
use crate::verify::{run_suite, SuiteConfig};
use crate::weights::{Exponent, WeightFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "powertsp",
    version,
    about = "Power-weighted TSP solvers, constants and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a point set exactly and print the optimal tour as JSON
    Solve(SolveArgs),
    /// Build the grid tour of a point set and print it as JSON
    Tour(TourArgs),
    /// Print the deviation constants C1(A) and C2(A) as JSON
    Bounds(BoundsArgs),
    /// Print beta_low and beta_up as JSON, or the beta curve as CSV
    Beta(BetaArgs),
    /// Run a Monte Carlo experiment from a JSON config file
    Simulate(SimulateArgs),
    /// Run the randomized invariant suite
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ExactSolver {
    /// Held-Karp dynamic programming, up to 18 nodes
    Exact,
    /// Enumeration of all cycles, up to 10 nodes
    Bruteforce,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    /// Points CSV: one `x,y` pair per line, `#` starts a comment
    #[arg(long)]
    points: PathBuf,
    /// Weight kind: euclidean, coordinate_metric or radial_metric
    #[arg(long, default_value = "euclidean")]
    weight: String,
    /// Power exponent alpha > 0
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = ExactSolver::Exact)]
    solver: ExactSolver,
}

#[derive(Debug, Args, Serialize)]
struct TourArgs {
    /// Points CSV: one `x,y` pair per line, `#` starts a comment
    #[arg(long)]
    points: PathBuf,
    /// Weight kind: euclidean, coordinate_metric or radial_metric
    #[arg(long, default_value = "euclidean")]
    weight: String,
    /// Power exponent alpha > 0
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tiling parameter A; cells have side about A/sqrt(n)
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Polish the grid tour with 2-opt
    #[arg(long)]
    two_opt: bool,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    /// Power exponent alpha > 0
    #[arg(long)]
    alpha: f64,
    /// Lower density bound
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    /// Upper density bound
    #[arg(long, default_value_t = 1.0)]
    eps2: f64,
    /// Lower equivalence constant
    #[arg(long, conflicts_with = "weight")]
    c1: Option<f64>,
    /// Upper equivalence constant
    #[arg(long, conflicts_with = "weight")]
    c2: Option<f64>,
    /// Take c1 and c2 from a builtin weight kind
    #[arg(long)]
    weight: Option<String>,
    /// Tiling parameter A
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Absolute tolerance of the moment series
    #[arg(long, default_value_t = MOMENT_TOL)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct BetaArgs {
    /// Power exponent alpha > 0; required unless --curve is given
    #[arg(long, required_unless_present = "curve")]
    alpha: Option<f64>,
    /// Lower density bound
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    /// Upper density bound
    #[arg(long, default_value_t = 1.0)]
    eps2: f64,
    /// Right end of the search interval for A
    #[arg(long, default_value_t = 5.0)]
    a_max: f64,
    /// Number of grid points in (0, a_max]
    #[arg(long, default_value_t = 2000)]
    grid_points: usize,
    /// Golden-section refinement tolerance
    #[arg(long, default_value_t = 1e-9)]
    refine_tol: f64,
    /// Emit CSV `alpha,beta_low,beta_up,argA_low,argA_up` for alpha = 0.25, 0.5, ..., 2
    #[arg(long, conflicts_with = "alpha")]
    curve: bool,
    /// Write the output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Experiment: scaling, sandwich, variance, convergence or uniform-ratio
    kind: String,
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = one per core); defaults to POWERTSP_THREADS
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format: json or csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Largest instance size, 5 to 10
    #[arg(long, default_value_t = 10)]
    max_n: usize,
    /// Random instances per property
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Tour(args) => tour(args),
        Command::Bounds(args) => bounds(args),
        Command::Beta(args) => beta(args),
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn announce(command: &str, resolved: &impl Serialize) -> Result<()> {
    eprintln!("{command}: {}", serde_json::to_string(resolved)?);
    Ok(())
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn pretty(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Reads a points file: one `x,y` pair per line, blank lines and anything
/// after `#` ignored, every point inside the unit square.
pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_points(text: &str) -> std::result::Result<Vec<Point>, String> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [x, y] = fields[..] else {
            return Err(format!("line {}: expected `x,y`, got `{line}`", i + 1));
        };
        let coord = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("line {}: `{s}` is not a number", i + 1))
        };
        let p = Point::checked(coord(x)?, coord(y)?).map_err(|e| format!("line {}: {e}", i + 1))?;
        points.push(p);
    }
    Ok(points)
}

fn solve(args: &SolveArgs) -> Result<i32> {
    announce("solve", args)?;
    let points = read_points(&args.points)?;
    let wf = WeightFunction::by_name(&args.weight)?;
    let alpha = Exponent::new(args.alpha)?;
    let tour = match args.solver {
        ExactSolver::Exact => tsp_exact(&points, &wf, alpha)?,
        ExactSolver::Bruteforce => tsp_bruteforce(&points, &wf, alpha)?,
    };
    let out = json!({
        "n": points.len(),
        "solver": args.solver,
        "weight_kind": wf.kind(),
        "alpha": alpha.get(),
        "order": tour.order,
        "weight": tour.weight,
    });
    emit(&pretty(&out)?, None)?;
    Ok(EXIT_OK)
}

fn tour(args: &TourArgs) -> Result<i32> {
    announce("tour", args)?;
    let points = read_points(&args.points)?;
    let wf = WeightFunction::by_name(&args.weight)?;
    let alpha = Exponent::new(args.alpha)?;
    let tiling = build_tiling(points.len(), args.a)?;
    let (grid, info) = grid_tour_detailed(&points, &wf, alpha, &tiling)?;
    let grid_weight = grid.weight;
    let tour = if args.two_opt {
        two_opt(&points, &grid, &wf, alpha)?
    } else {
        grid
    };
    let out = json!({
        "n": points.len(),
        "solver": if args.two_opt { "grid_tour+two_opt" } else { "grid_tour" },
        "weight_kind": wf.kind(),
        "alpha": alpha.get(),
        "tiling": tiling,
        "construction": info,
        "grid_weight": grid_weight,
        "order": tour.order,
        "weight": tour.weight,
    });
    emit(&pretty(&out)?, None)?;
    Ok(EXIT_OK)
}

fn bounds(args: &BoundsArgs) -> Result<i32> {
    announce("bounds", args)?;
    let (c1, c2) = match &args.weight {
        Some(name) => {
            let wf = WeightFunction::by_name(name)?;
            (wf.c1(), wf.c2())
        }
        None => (args.c1.unwrap_or(1.0), args.c2.unwrap_or(1.0)),
    };
    let mp = ModelParams::new(args.eps1, args.eps2, args.alpha, c1, c2)?;
    let constants = deviation_constants(&mp, args.a, args.tol)?;
    emit(&pretty(&json!({ "params": mp, "constants": constants }))?, None)?;
    Ok(EXIT_OK)
}

/// Exponents of the plotted beta curve.
pub fn curve_alphas() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

fn beta(args: &BetaArgs) -> Result<i32> {
    announce("beta", args)?;
    let search = BetaSearch {
        a_max: args.a_max,
        grid_points: args.grid_points,
        refine_tol: args.refine_tol,
    };
    let text = match args.alpha {
        Some(alpha) if !args.curve => {
            let (low, up) = beta_bounds(alpha, args.eps1, args.eps2, &search)?;
            pretty(&json!({
                "alpha": alpha,
                "eps1": args.eps1,
                "eps2": args.eps2,
                "beta_low": low,
                "beta_up": up,
            }))?
        }
        _ => {
            let mut csv = String::from("alpha,beta_low,beta_up,argA_low,argA_up\n");
            for alpha in curve_alphas() {
                let (low, up) = beta_bounds(alpha, args.eps1, args.eps2, &search)?;
                csv.push_str(&format!(
                    "{alpha:?},{:?},{:?},{:?},{:?}\n",
                    low.value, up.value, low.arg_a, up.arg_a
                ));
            }
            csv
        }
    };
    emit(&text, args.output.as_deref())?;
    Ok(EXIT_OK)
}

fn simulate(args: &SimulateArgs) -> Result<i32> {
    let kind = ExperimentKind::parse(&args.kind)?;
    let format = ReportFormat::parse(&args.format)?;
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    let runner = match args.threads {
        Some(t) => Runner::with_threads(t)?,
        None => Runner::from_env()?,
    };
    announce(
        "simulate",
        &json!({
            "kind": kind,
            "config": cfg,
            "threads": runner.threads(),
            "output": args.output,
            "format": format,
        }),
    )?;
    let report = runner.run(kind, &cfg)?;
    match &args.output {
        Some(path) => write_report(&report, path, format)?,
        None => {
            let text = match format {
                ReportFormat::Json => report.to_json()? + "\n",
                ReportFormat::Csv => report.to_csv(),
            };
            emit(&text, None)?;
        }
    }
    eprintln!("{}", summary(&report));
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn summary(report: &Report) -> String {
    let status = if report.passed() { "PASS" } else { "FAIL" };
    let detail = match report {
        Report::Scaling(r) => format!(
            "slope {:.4} (95% half-width {:?}), predicted {}",
            r.regression.slope, r.regression.slope_half_width, r.predicted_slope
        ),
        Report::Sandwich(r) => format!(
            "lower frequency {}, upper frequency {} (required {})",
            r.lower_frequency, r.upper_frequency, r.upper_required
        ),
        Report::Variance(r) => match &r.regression {
            Some(reg) => format!("variance slope {:.4}, mode {}", reg.slope, r.mode),
            None => format!("mode {}", r.mode),
        },
        Report::Convergence(r) => format!(
            "hypothesis holds: {}, decreasing tail: {:?}",
            r.hypothesis_holds, r.decreasing_tail
        ),
        Report::UniformRatio(r) => format!("ratio {} (limit {})", r.ratio, r.limit),
    };
    format!("{status} {}: {detail}", report_kind(report))
}

fn report_kind(report: &Report) -> &'static str {
    match report {
        Report::Scaling(_) => "scaling",
        Report::Sandwich(_) => "sandwich",
        Report::Variance(_) => "variance",
        Report::Convergence(_) => "convergence",
        Report::UniformRatio(_) => "uniform-ratio",
    }
}

fn verify(args: &VerifyArgs) -> Result<i32> {
    announce("verify", args)?;
    let cfg = SuiteConfig {
        max_n: args.max_n,
        instances: args.instances,
        seed: args.seed,
    };
    let results = run_suite(&cfg)?;
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.line());
        text.push('\n');
    }
    emit(&text, None)?;
    Ok(if results.iter().all(|r| r.passed()) {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_format() {
        let pts = parse_points("# corners\n-0.5,-0.5\n 0.5 , -0.5 # trailing\n\n0.5,0.5\n").unwrap();
        assert_eq!(
            pts,
            vec![Point::new(-0.5, -0.5), Point::new(0.5, -0.5), Point::new(0.5, 0.5)]
        );
        assert!(parse_points("0.1,0.2,0.3\n").unwrap_err().contains("line 1"));
        assert!(parse_points("0.1;0.2\n").is_err());
        assert!(parse_points("0.1,abc\n").unwrap_err().contains("abc"));
        assert!(parse_points("0.1,0.7\n").is_err());
    }

    #[test]
    fn curve_grid() {
        assert_eq!(curve_alphas(), vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn clap_errors_map_to_validation() {
        assert_eq!(run_command(["powertsp", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run_command(["powertsp", "verify", "--bogus"]), EXIT_INVALID);
        assert_eq!(run_command(["powertsp", "--help"]), EXIT_OK);
        assert_eq!(run_command(["powertsp", "beta"]), EXIT_INVALID);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
