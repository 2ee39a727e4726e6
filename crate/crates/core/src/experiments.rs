//! Monte Carlo drivers and report persistence.
//!
//! Every trial draws its points from stream `(n << 32) | trial` of the
//! configured seed, trials run on a rayon pool and are collected in index
//! order, so reports do not depend on the number of threads.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bounds::{beta_bounds, deviation_constants, BetaSearch, DeviationConstants, ModelParams, MOMENT_TOL};
use crate::error::{Error, Result};
use crate::geometry::{build_tiling, Tiling};
use crate::sampling::{sample_binomial, Density, DensityKind, DensitySpec, RNG_NAME};
use crate::solvers::{grid_tour, tsp_exact, two_opt, EXACT_MAX_N};
use crate::weights::{Exponent, WeightFunction, WeightKind, WeightSpec};

/// Environment variable capping trial parallelism; 0 means one thread per
/// core.
pub const THREADS_ENV: &str = "POWERTSP_THREADS";

pub const DEFAULT_SANDWICH_SLACK: f64 = 0.05;
pub const DEFAULT_RATIO_SLACK: f64 = 0.10;
/// Half-width of the accepted window around the predicted variance exponent.
pub const VARIANCE_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heuristic {
    #[serde(rename = "grid_tour")]
    GridTour,
    #[serde(rename = "grid_tour+two_opt")]
    GridTourTwoOpt,
}

impl Heuristic {
    pub fn name(self) -> &'static str {
        match self {
            Heuristic::GridTour => "grid_tour",
            Heuristic::GridTourTwoOpt => "grid_tour+two_opt",
        }
    }
}

/// Instances with fewer than `exact_below` nodes are solved exactly, the
/// rest by the heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverPolicy {
    #[serde(default)]
    pub exact_below: usize,
    pub heuristic: Heuristic,
}

impl SolverPolicy {
    fn label(&self, n: usize) -> &'static str {
        if self.uses_exact(n) {
            "exact"
        } else {
            self.heuristic.name()
        }
    }

    fn uses_exact(&self, n: usize) -> bool {
        n < self.exact_below
    }
}

fn default_a() -> f64 {
    1.0
}

fn default_density() -> DensitySpec {
    DensitySpec::uniform()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub weight: WeightSpec,
    pub alpha: f64,
    #[serde(default = "default_density")]
    pub density: DensitySpec,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Tiling parameter `A`.
    #[serde(default = "default_a")]
    pub a: f64,
    pub solver: SolverPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list must not be empty"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_list must be strictly increasing"));
        }
        if self.n_list[0] < 2 {
            return Err(Error::invalid("every n in n_list must be >= 2"));
        }
        if self.solver.exact_below > EXACT_MAX_N + 1 {
            return Err(Error::invalid(format!(
                "exact_below = {} exceeds the exact solver limit of {EXACT_MAX_N} nodes",
                self.solver.exact_below
            )));
        }
        if let Some(s) = self.slack {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid(format!("slack must be >= 0, got {s}")));
            }
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::invalid(format!(
                "tiling parameter a must be > 0, got {}",
                self.a
            )));
        }
        Exponent::new(self.alpha)?;
        self.weight.build()?;
        self.density.build()?;
        Ok(())
    }

    fn exponent(&self) -> f64 {
        1.0 - self.alpha / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub weight: f64,
    pub solver: String,
    pub seed_stream: u64,
}

pub fn seed_stream(n: usize, trial: usize) -> u64 {
    ((n as u64) << 32) | trial as u64
}

/// Least-squares fit of `y = slope x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width of the slope; absent with two points.
    pub slope_half_width: Option<f64>,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<Regression> {
    let k = x.len();
    if k < 2 || y.len() != k {
        return Err(Error::invalid("a slope needs at least two points"));
    }
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = y.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_half_width = if k > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (k - 2) as f64 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, (k - 2) as f64)
            .map_err(|e| Error::invalid(format!("student t: {e}")))?
            .inverse_cdf(0.975);
        Some(t * se)
    } else {
        None
    };
    Ok(Regression {
        slope,
        intercept,
        slope_half_width,
        points: k,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 {
        xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Jackknife standard error of the sample variance.
pub fn jackknife_variance_se(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m < 3 {
        return f64::NAN;
    }
    let (mean, var) = mean_var(xs);
    let ss = var * (m - 1) as f64;
    let mf = m as f64;
    let loo: Vec<f64> = xs
        .iter()
        .map(|&x| {
            // Removing x shifts the mean by (mean - x)/(m - 1).
            let d = x - mean;
            (ss - d * d * mf / (mf - 1.0)) / (mf - 2.0)
        })
        .collect();
    let (lm, _) = mean_var(&loo);
    let s: f64 = loo.iter().map(|v| (v - lm).powi(2)).sum();
    ((mf - 1.0) / mf * s).sqrt()
}

/// Executes trials on a rayon pool of a fixed size.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// Thread count from [`THREADS_ENV`], defaulting to one per core.
    pub fn from_env() -> Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
            Err(_) => 0,
        };
        Self::with_threads(threads)
    }

    pub fn with_threads(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        Ok(Runner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn trials(&self, cfg: &ExperimentConfig, n: usize) -> Result<Vec<TrialRecord>> {
        let wf = cfg.weight.build()?;
        let density = cfg.density.build()?;
        let alpha = Exponent::new(cfg.alpha)?;
        let tiling = if cfg.solver.uses_exact(n) {
            None
        } else {
            Some(build_tiling(n, cfg.a)?)
        };
        let ctx = TrialContext {
            cfg,
            wf: &wf,
            density: &density,
            alpha,
            tiling: tiling.as_ref(),
        };
        self.pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| ctx.solve(n, trial))
                .collect()
        })
    }

    pub fn scaling(&self, cfg: &ExperimentConfig) -> Result<ScalingReport> {
        cfg.validate()?;
        if cfg.n_list.len() < 2 {
            return Err(Error::invalid("a scaling fit needs at least two values of n"));
        }
        let mut records = Vec::new();
        let mut rows = Vec::new();
        let e = cfg.exponent();
        for &n in &cfg.n_list {
            let recs = self.trials(cfg, n)?;
            let weights: Vec<f64> = recs.iter().map(|r| r.weight).collect();
            let (mean, variance) = mean_var(&weights);
            let std_error = (variance / weights.len() as f64).sqrt();
            let scale = (n as f64).powf(e);
            rows.push(ScalingRow {
                n,
                trials: weights.len(),
                mean,
                variance,
                std_error,
                normalized_mean: mean / scale,
                normalized_variance: variance / (n as f64).powf(1.0 - cfg.alpha),
                normalized_std_error: std_error / scale,
                tiling_within_window: build_tiling(n, cfg.a)?.within_window,
            });
            records.extend(recs);
        }
        let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean.ln()).collect();
        let regression = fit_line(&x, &y)?;
        let wf = cfg.weight.build()?;
        let (low, up) = beta_bounds(cfg.alpha, cfg.density.eps1, cfg.density.eps2, &BetaSearch::default())?;
        Ok(ScalingReport {
            config: cfg.clone(),
            rng: RNG_NAME.to_string(),
            measured: measured_object(cfg),
            predicted_slope: e,
            rows,
            regression,
            bracket: Bracket {
                lower: wf.c1().powf(cfg.alpha) * low.value,
                upper: wf.c2().powf(cfg.alpha) * up.value,
            },
            records,
        })
    }

    pub fn sandwich(&self, cfg: &ExperimentConfig) -> Result<SandwichReport> {
        cfg.validate()?;
        let [n] = cfg.n_list[..] else {
            return Err(Error::invalid("the sandwich experiment takes exactly one n"));
        };
        let wf = cfg.weight.build()?;
        let mp = ModelParams::new(cfg.density.eps1, cfg.density.eps2, cfg.alpha, wf.c1(), wf.c2())?;
        let constants = deviation_constants(&mp, cfg.a, MOMENT_TOL)?;
        let nf = n as f64;
        let scale = nf.powf(cfg.exponent());
        let lower_threshold = constants.c1_const * scale * (1.0 - 4.0 * cfg.a.sqrt() / nf.powf(0.25));
        let upper_threshold = constants.c2_const * scale * (1.0 + 2.0 / nf.powf(1.0 / 16.0));
        let records = self.trials(cfg, n)?;
        let m = records.len() as f64;
        let lower_hits = records.iter().filter(|r| r.weight >= lower_threshold).count();
        let upper_hits = records.iter().filter(|r| r.weight <= upper_threshold).count();
        let slack = cfg.slack.unwrap_or(DEFAULT_SANDWICH_SLACK);
        let lower_frequency = lower_hits as f64 / m;
        let upper_frequency = upper_hits as f64 / m;
        Ok(SandwichReport {
            config: cfg.clone(),
            rng: RNG_NAME.to_string(),
            measured: measured_object(cfg),
            n,
            constants,
            lower_threshold,
            upper_threshold,
            lower_frequency,
            upper_frequency,
            upper_required: 1.0 - slack,
            lower_pass: lower_hits == records.len(),
            upper_pass: upper_frequency >= 1.0 - slack,
            records,
        })
    }

    pub fn variance(&self, cfg: &ExperimentConfig) -> Result<VarianceReport> {
        cfg.validate()?;
        if cfg.trials < 100 {
            return Err(Error::invalid(format!(
                "variance estimates need trials >= 100, got {}",
                cfg.trials
            )));
        }
        let mut records = Vec::new();
        let mut rows = Vec::new();
        for &n in &cfg.n_list {
            let recs = self.trials(cfg, n)?;
            let weights: Vec<f64> = recs.iter().map(|r| r.weight).collect();
            let (mean, variance) = mean_var(&weights);
            rows.push(VarianceRow {
                n,
                trials: weights.len(),
                mean,
                variance,
                jackknife_se: jackknife_variance_se(&weights),
            });
            records.extend(recs);
        }
        let regression = if rows.len() >= 2 && rows.iter().all(|r| r.variance > 0.0) {
            let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
            Some(fit_line(&x, &y)?)
        } else {
            None
        };
        let predicted_exponent = (cfg.alpha < 1.0).then_some(1.0 - cfg.alpha);
        let checked = cfg.alpha < 1.0 && cfg.trials >= 1000;
        let pass = match (&regression, predicted_exponent, checked) {
            (Some(r), Some(p), true) => Some((r.slope - p).abs() <= VARIANCE_WINDOW),
            _ => None,
        };
        Ok(VarianceReport {
            config: cfg.clone(),
            rng: RNG_NAME.to_string(),
            measured: measured_object(cfg),
            mode: if checked { "checked" } else { "informational" }.to_string(),
            s0_condition: cfg.weight.kind == WeightKind::Euclidean,
            rows,
            regression,
            predicted_exponent,
            window: VARIANCE_WINDOW,
            pass,
            records,
        })
    }

    pub fn convergence(&self, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
        cfg.validate()?;
        let mut records = Vec::new();
        let mut rows = Vec::new();
        let e = cfg.exponent();
        for &n in &cfg.n_list {
            let recs = self.trials(cfg, n)?;
            let weights: Vec<f64> = recs.iter().map(|r| r.weight).collect();
            let (mean, _) = mean_var(&weights);
            let scale = (n as f64).powf(e);
            let trace: Vec<f64> = weights.iter().map(|w| (w - mean) / scale).collect();
            let max_abs = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            rows.push(ConvergenceRow {
                n,
                mean,
                max_abs_centered: max_abs,
                trace,
            });
            records.extend(recs);
        }
        let tail: Vec<f64> = rows.iter().rev().take(3).rev().map(|r| r.max_abs_centered).collect();
        let decreasing = (tail.len() >= 2).then(|| tail.windows(2).all(|w| w[1] < w[0]));
        let threshold = 2.0 * (2f64.sqrt() - 1.0);
        Ok(ConvergenceReport {
            config: cfg.clone(),
            rng: RNG_NAME.to_string(),
            measured: measured_object(cfg),
            hypothesis_holds: cfg.alpha < threshold,
            alpha_threshold: threshold,
            rows,
            decreasing_tail: decreasing,
            records,
        })
    }

    pub fn uniform_ratio(&self, cfg: &ExperimentConfig) -> Result<UniformRatioReport> {
        cfg.validate()?;
        if cfg.density.kind != DensityKind::Uniform {
            return Err(Error::invalid("the uniform-ratio experiment needs the uniform density"));
        }
        let wf = cfg.weight.build()?;
        if !wf.scale_invariant() {
            return Err(Error::invalid(format!(
                "weight `{}` lacks the scaling property h(ax, ay) = a h(x, y)",
                wf.formula_name()
            )));
        }
        let h0 = wf.h0().ok_or_else(|| {
            Error::invalid(format!(
                "weight `{}` declares no translation constant h0",
                wf.formula_name()
            ))
        })?;
        let e = cfg.exponent();
        let mut records = Vec::new();
        let mut normalized_means = Vec::new();
        for &n in &cfg.n_list {
            let recs = self.trials(cfg, n)?;
            let mean = recs.iter().map(|r| r.weight).sum::<f64>() / recs.len() as f64;
            normalized_means.push(NormalizedMean {
                n,
                value: mean / (n as f64).powf(e),
            });
            records.extend(recs);
        }
        let max = normalized_means
            .iter()
            .map(|m| m.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let min = normalized_means.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        let slack = cfg.slack.unwrap_or(DEFAULT_RATIO_SLACK);
        let limit = h0.powf(cfg.alpha) * (1.0 + slack);
        Ok(UniformRatioReport {
            config: cfg.clone(),
            rng: RNG_NAME.to_string(),
            measured: measured_object(cfg),
            h0,
            normalized_means,
            max,
            min,
            ratio: max / min,
            limit,
            pass: max / min <= limit,
            records,
        })
    }

    pub fn run(&self, kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Report> {
        Ok(match kind {
            ExperimentKind::Scaling => Report::Scaling(self.scaling(cfg)?),
            ExperimentKind::Sandwich => Report::Sandwich(self.sandwich(cfg)?),
            ExperimentKind::Variance => Report::Variance(self.variance(cfg)?),
            ExperimentKind::Convergence => Report::Convergence(self.convergence(cfg)?),
            ExperimentKind::UniformRatio => Report::UniformRatio(self.uniform_ratio(cfg)?),
        })
    }
}

struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    wf: &'a WeightFunction,
    density: &'a Density,
    alpha: Exponent,
    tiling: Option<&'a Tiling>,
}

impl TrialContext<'_> {
    fn solve(&self, n: usize, trial: usize) -> Result<TrialRecord> {
        let stream = seed_stream(n, trial);
        let points = sample_binomial(self.density, n, self.cfg.seed, stream).points;
        let tour = match self.tiling {
            None => tsp_exact(&points, self.wf, self.alpha)?,
            Some(tiling) => {
                let t = grid_tour(&points, self.wf, self.alpha, tiling)?;
                match self.cfg.solver.heuristic {
                    Heuristic::GridTour => t,
                    Heuristic::GridTourTwoOpt => two_opt(&points, &t, self.wf, self.alpha)?,
                }
            }
        };
        Ok(TrialRecord {
            n,
            trial,
            weight: tour.weight,
            solver: self.cfg.solver.label(n).to_string(),
            seed_stream: stream,
        })
    }
}

/// Which tour each reported weight belongs to.
fn measured_object(cfg: &ExperimentConfig) -> String {
    let p = cfg.solver;
    if p.exact_below == 0 {
        format!("{} tour weight (upper bound on the optimum)", p.heuristic.name())
    } else {
        format!(
            "optimal tour weight for n < {}, {} tour weight otherwise",
            p.exact_below,
            p.heuristic.name()
        )
    }
}

pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    Runner::from_env()?.scaling(cfg)
}

pub fn run_sandwich(cfg: &ExperimentConfig) -> Result<SandwichReport> {
    Runner::from_env()?.sandwich(cfg)
}

pub fn run_variance(cfg: &ExperimentConfig) -> Result<VarianceReport> {
    Runner::from_env()?.variance(cfg)
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    Runner::from_env()?.convergence(cfg)
}

pub fn run_uniform_ratio(cfg: &ExperimentConfig) -> Result<UniformRatioReport> {
    Runner::from_env()?.uniform_ratio(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Scaling,
    Sandwich,
    Variance,
    Convergence,
    UniformRatio,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "scaling" => Ok(ExperimentKind::Scaling),
            "sandwich" => Ok(ExperimentKind::Sandwich),
            "variance" => Ok(ExperimentKind::Variance),
            "convergence" => Ok(ExperimentKind::Convergence),
            "uniform-ratio" | "uniform_ratio" => Ok(ExperimentKind::UniformRatio),
            _ => Err(Error::Unknown {
                what: "experiment",
                name: name.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub normalized_mean: f64,
    pub normalized_variance: f64,
    pub normalized_std_error: f64,
    pub tiling_within_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub measured: String,
    pub predicted_slope: f64,
    pub rows: Vec<ScalingRow>,
    pub regression: Regression,
    /// `[c1^alpha beta_low, c2^alpha beta_up]` for the normalized mean.
    pub bracket: Bracket,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub measured: String,
    pub n: usize,
    pub constants: DeviationConstants,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub lower_frequency: f64,
    pub upper_frequency: f64,
    pub upper_required: f64,
    pub lower_pass: bool,
    pub upper_pass: bool,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub jackknife_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub measured: String,
    /// `checked` when the slope is compared against the prediction.
    pub mode: String,
    /// True when h coincides with the euclidean distance.
    pub s0_condition: bool,
    pub rows: Vec<VarianceRow>,
    pub regression: Option<Regression>,
    pub predicted_exponent: Option<f64>,
    pub window: f64,
    pub pass: Option<bool>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mean: f64,
    pub max_abs_centered: f64,
    /// `(weight - mean) / n^(1 - alpha/2)` per trial.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub measured: String,
    /// Whether alpha lies below `2(sqrt 2 - 1)`.
    pub hypothesis_holds: bool,
    pub alpha_threshold: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Max |trace| strictly decreasing over the last (up to) three n.
    pub decreasing_tail: Option<bool>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMean {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformRatioReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub measured: String,
    pub h0: f64,
    pub normalized_means: Vec<NormalizedMean>,
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
    pub limit: f64,
    pub pass: bool,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Scaling(ScalingReport),
    Sandwich(SandwichReport),
    Variance(VarianceReport),
    Convergence(ConvergenceReport),
    UniformRatio(UniformRatioReport),
}

impl Report {
    pub fn records(&self) -> &[TrialRecord] {
        match self {
            Report::Scaling(r) => &r.records,
            Report::Sandwich(r) => &r.records,
            Report::Variance(r) => &r.records,
            Report::Convergence(r) => &r.records,
            Report::UniformRatio(r) => &r.records,
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        match self {
            Report::Scaling(r) => &r.config,
            Report::Sandwich(r) => &r.config,
            Report::Variance(r) => &r.config,
            Report::Convergence(r) => &r.config,
            Report::UniformRatio(r) => &r.config,
        }
    }

    /// False when the report carries a failed check.
    pub fn passed(&self) -> bool {
        match self {
            Report::Sandwich(r) => r.lower_pass && r.upper_pass,
            Report::Variance(r) => r.pass.unwrap_or(true),
            Report::UniformRatio(r) => r.pass,
            Report::Scaling(_) | Report::Convergence(_) => true,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,trial,weight,solver,seed_stream\n");
        for r in self.records() {
            let _ = writeln!(out, "{},{},{:?},{},{}", r.n, r.trial, r.weight, r.solver, r.seed_stream);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Unknown {
                what: "report format",
                name: name.to_string(),
            }),
        }
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Json => report.to_json()? + "\n",
        ReportFormat::Csv => report.to_csv(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
