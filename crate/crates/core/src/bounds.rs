//! Closed-form constants of the deviation bounds and their optimization
//! over the tiling parameter `A`.

use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::rng_for;

/// Default absolute tolerance for geometric moment series.
pub const MOMENT_TOL: f64 = 1e-10;
/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ModelParams {
    pub fn new(eps1: f64, eps2: f64, alpha: f64, c1: f64, c2: f64) -> Result<Self> {
        let mp = ModelParams {
            eps1,
            eps2,
            alpha,
            c1,
            c2,
        };
        mp.validate()?;
        Ok(mp)
    }

    /// Homogeneous density with euclidean weights.
    pub fn homogeneous(alpha: f64) -> Result<Self> {
        Self::new(1.0, 1.0, alpha, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("eps1", self.eps1)?;
        positive("alpha", self.alpha)?;
        positive("c1", self.c1)?;
        if !(self.eps2.is_finite() && self.eps2 >= self.eps1) {
            return Err(Error::invalid(format!(
                "need eps2 >= eps1, got {} < {}",
                self.eps2, self.eps1
            )));
        }
        if !(self.c2.is_finite() && self.c2 >= self.c1) {
            return Err(Error::invalid(format!("need c2 >= c1, got {} < {}", self.c2, self.c1)));
        }
        Ok(())
    }

    /// Density bound entering the dense-cell probability: `eps1` for
    /// `alpha <= 1`, `eps2` otherwise.
    pub fn delta(&self) -> f64 {
        delta_for(self.alpha, self.eps1, self.eps2)
    }
}

pub fn delta_for(alpha: f64, eps1: f64, eps2: f64) -> f64 {
    if alpha <= 1.0 {
        eps1
    } else {
        eps2
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// `P(Poisson(delta a^2) >= 3)`, the chance that a cell is dense.
pub fn p_dense(a: f64, delta: f64) -> Result<f64> {
    positive("a", a)?;
    positive("delta", delta)?;
    let x = delta * a * a;
    if x < 0.5 {
        // Direct subtraction cancels badly for small means.
        let mut term = x * x * x / 6.0;
        let mut sum = 0.0;
        let mut k = 3.0;
        while term > sum * 1e-17 {
            sum += term;
            k += 1.0;
            term *= x / k;
        }
        Ok(sum * (-x).exp())
    } else {
        Ok(1.0 - p_sparse_of(x))
    }
}

/// `P(Poisson(delta a^2) <= 2)`, computed without cancellation.
pub fn p_sparse(a: f64, delta: f64) -> Result<f64> {
    positive("a", a)?;
    positive("delta", delta)?;
    Ok(p_sparse_of(delta * a * a))
}

fn p_sparse_of(x: f64) -> f64 {
    (-x).exp() * (1.0 + x + 0.5 * x * x)
}

/// A truncated series together with its remaining error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    pub residual_bound: f64,
}

/// `E T^alpha` for `T` geometric on `{1, 2, ...}` with success `p`.
pub fn geometric_moment(p: f64, alpha: f64, tol: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "success probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(geometric_moment_pq(p, 1.0 - p, alpha, tol)?.value)
}

/// Same as [`geometric_moment`] with the failure probability `q = 1 - p`
/// passed separately so that either can be tiny without rounding.
pub fn geometric_moment_pq(p: f64, q: f64, alpha: f64, tol: f64) -> Result<SeriesValue> {
    positive("alpha", alpha)?;
    positive("tol", tol)?;
    if !(p > 0.0 && p <= 1.0 && q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!(
            "geometric parameters p = {p}, q = {q} must lie in (0, 1)"
        )));
    }
    let ln_q = ln_q(p, q);
    let ln_p = p.ln();
    let term = |k: f64| (alpha * k.ln() + (k - 1.0) * ln_q + ln_p).exp();
    let mut sum = 0.0;
    let mut residual = f64::INFINITY;
    for k in 1..=MAX_SERIES_TERMS {
        sum += term(k as f64);
        // Term ratios (1 + 1/j)^alpha q decrease in j, so the tail after k
        // terms is at most t_{k+1} / (1 - r_{k+1}).
        let next = (k + 1) as f64;
        let ratio = (alpha * (1.0 / next).ln_1p() + ln_q).exp();
        if ratio < 1.0 {
            residual = term(next) / (1.0 - ratio);
            if residual <= tol {
                return Ok(SeriesValue {
                    value: sum,
                    terms: k,
                    residual_bound: residual,
                });
            }
        }
    }
    Err(Error::SeriesNotConverged {
        p,
        alpha,
        terms: MAX_SERIES_TERMS,
        partial_sum: sum,
        residual,
    })
}

fn ln_q(p: f64, q: f64) -> f64 {
    if p < 0.5 {
        (-p).ln_1p()
    } else {
        q.ln()
    }
}

/// A lower bound on `E T^alpha` that needs no series: `K^alpha P(T >= K)`
/// with `K = ceil(1/p)`.
fn moment_lower_bound(p: f64, q: f64, alpha: f64) -> f64 {
    let k = (1.0 / p).ceil().max(1.0);
    (alpha * k.ln() + (k - 1.0) * ln_q(p, q)).exp()
}

/// `r! / (1 - e^{-p})^r`, an upper bound on `E T^r`.
pub fn geometric_moment_factorial_bound(p: f64, r: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "success probability must lie in (0, 1), got {p}"
        )));
    }
    if r == 0 {
        return Err(Error::invalid("moment order r must be >= 1"));
    }
    let factorial: f64 = (1..=r).map(f64::from).product();
    Ok(factorial / (-(-p).exp_m1()).powi(r as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationConstants {
    pub a: f64,
    pub delta: f64,
    pub p: f64,
    pub c1_const: f64,
    pub c2_const: f64,
    /// `E T~^alpha` with success `p`.
    pub moment_dense: f64,
    /// `E T^^alpha` with success `1 - p`.
    pub moment_sparse: f64,
}

/// The lower and upper constants `C1(A)` and `C2(A)`.
pub fn deviation_constants(mp: &ModelParams, a: f64, tol: f64) -> Result<DeviationConstants> {
    mp.validate()?;
    positive("a", a)?;
    let delta = mp.delta();
    let p = p_dense(a, delta)?;
    let q = p_sparse(a, delta)?;
    let alpha = mp.alpha;
    let a2 = a * a;
    let c1_const = (mp.c1 * a).powf(alpha) / a2 * -(-mp.eps1 * a2).exp_m1() * (-8.0 * mp.eps2 * a2).exp();
    let moment_dense = geometric_moment_pq(p, q, alpha, tol)?.value;
    let moment_sparse = geometric_moment_pq(q, p, alpha, tol)?.value;
    let c2_const = (2.0 * mp.c2 * a).powf(alpha) * (1.0 + (moment_dense + moment_sparse) / a2);
    Ok(DeviationConstants {
        a,
        delta,
        p,
        c1_const,
        c2_const,
        moment_dense,
        moment_sparse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    pub a_max: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for BetaSearch {
    fn default() -> Self {
        BetaSearch {
            a_max: 5.0,
            grid_points: 2000,
            refine_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub value: f64,
    /// The optimizing `A`.
    pub arg_a: f64,
    pub a_max: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
    pub refine_iterations: usize,
    /// Grid points skipped because a rigorous lower bound on the objective
    /// already exceeded the incumbent minimum.
    pub excluded_points: usize,
}

/// `A^(alpha - 2) (1 - e^{-eps1 A^2}) e^{-8 eps2 A^2}`.
pub fn beta_low_objective(a: f64, alpha: f64, eps1: f64, eps2: f64) -> f64 {
    let a2 = a * a;
    a.powf(alpha - 2.0) * -(-eps1 * a2).exp_m1() * (-8.0 * eps2 * a2).exp()
}

/// `(2A)^alpha (1 + (E T_a^alpha + E T_b^alpha) / A^2)`.
pub fn beta_up_objective(a: f64, alpha: f64, eps1: f64, eps2: f64, tol: f64) -> Result<f64> {
    let delta = delta_for(alpha, eps1, eps2);
    let p = p_dense(a, delta)?;
    let q = p_sparse(a, delta)?;
    let ma = geometric_moment_pq(p, q, alpha, tol)?.value;
    let mb = geometric_moment_pq(q, p, alpha, tol)?.value;
    Ok((2.0 * a).powf(alpha) * (1.0 + (ma + mb) / (a * a)))
}

/// Rigorous lower bound on [`beta_up_objective`] that never fails to
/// evaluate.
fn beta_up_lower_bound(a: f64, alpha: f64, delta: f64, tol: f64, cheap: bool) -> Result<f64> {
    let p = p_dense(a, delta)?;
    let q = p_sparse(a, delta)?;
    let bound = |p: f64, q: f64| -> Result<f64> {
        if cheap {
            return Ok(moment_lower_bound(p, q, alpha));
        }
        match geometric_moment_pq(p, q, alpha, tol) {
            Ok(s) => Ok(s.value),
            Err(Error::SeriesNotConverged { terms, partial_sum, .. }) => {
                // E T^alpha >= partial sum + (K+1)^alpha P(T > K).
                let k = terms as f64;
                Ok(partial_sum + (alpha * (k + 1.0).ln() + k * ln_q(p, q)).exp())
            }
            Err(e) => Err(e),
        }
    };
    let m = bound(p, q)? + bound(q, p)?;
    Ok((2.0 * a).powf(alpha) * (1.0 + m / (a * a)))
}

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_min(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64, usize)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 {
        (x1, f1, iterations)
    } else {
        (x2, f2, iterations)
    })
}

fn grid(search: &BetaSearch) -> Vec<f64> {
    (1..=search.grid_points)
        .map(|j| search.a_max * j as f64 / search.grid_points as f64)
        .collect()
}

fn refine_bracket(grid: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 { grid[0] * 1e-3 } else { grid[i - 1] };
    let hi = grid[(i + 1).min(grid.len() - 1)];
    (lo, hi)
}

/// `beta_low` (a maximum over `A`) and `beta_up` (a minimum over `A`).
pub fn beta_bounds(alpha: f64, eps1: f64, eps2: f64, search: &BetaSearch) -> Result<(BetaResult, BetaResult)> {
    positive("alpha", alpha)?;
    ModelParams::new(eps1, eps2, alpha, 1.0, 1.0)?;
    positive("a_max", search.a_max)?;
    positive("refine_tol", search.refine_tol)?;
    if search.grid_points == 0 {
        return Err(Error::invalid("beta search grid is empty"));
    }
    let grid = grid(search);
    Ok((
        beta_low(alpha, eps1, eps2, search, &grid)?,
        beta_up(alpha, eps1, eps2, search, &grid)?,
    ))
}

fn beta_low(alpha: f64, eps1: f64, eps2: f64, search: &BetaSearch, grid: &[f64]) -> Result<BetaResult> {
    let values: Vec<f64> = grid.iter().map(|&a| beta_low_objective(a, alpha, eps1, eps2)).collect();
    let best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let (lo, hi) = refine_bracket(grid, best);
    let (x, fx, iterations) = golden_min(
        |a| Ok(-beta_low_objective(a, alpha, eps1, eps2)),
        lo,
        hi,
        search.refine_tol,
    )?;
    let (arg_a, value) = if -fx > values[best] {
        (x, -fx)
    } else {
        (grid[best], values[best])
    };
    Ok(BetaResult {
        value,
        arg_a,
        a_max: search.a_max,
        grid_points: search.grid_points,
        refine_tol: search.refine_tol,
        refine_iterations: iterations,
        excluded_points: 0,
    })
}

fn beta_up(alpha: f64, eps1: f64, eps2: f64, search: &BetaSearch, grid: &[f64]) -> Result<BetaResult> {
    let delta = delta_for(alpha, eps1, eps2);
    let mut values = vec![f64::INFINITY; grid.len()];
    // Visit points by increasing cheap lower bound; once that bound exceeds
    // the incumbent, every remaining point is dominated.
    let cheap: Vec<f64> = grid
        .iter()
        .map(|&a| beta_up_lower_bound(a, alpha, delta, MOMENT_TOL, true))
        .collect::<Result<_>>()?;
    let mut visit: Vec<usize> = (0..grid.len()).collect();
    visit.sort_by(|&i, &j| cheap[i].total_cmp(&cheap[j]).then(i.cmp(&j)));
    let mut incumbent = f64::INFINITY;
    let mut excluded = 0;
    let mut deferred = Vec::new();
    for (rank, &i) in visit.iter().enumerate() {
        if cheap[i] > incumbent {
            excluded += visit.len() - rank;
            break;
        }
        match beta_up_objective(grid[i], alpha, eps1, eps2, MOMENT_TOL) {
            Ok(v) => {
                values[i] = v;
                incumbent = incumbent.min(v);
            }
            Err(Error::SeriesNotConverged { .. }) => deferred.push(i),
            Err(e) => return Err(e),
        }
    }
    for i in deferred {
        let a = grid[i];
        if beta_up_lower_bound(a, alpha, delta, MOMENT_TOL, false)? > incumbent {
            excluded += 1;
        } else {
            return Err(Error::Degenerate(format!(
                "beta_up objective at A = {a} neither converges nor is dominated"
            )));
        }
    }
    let best = (0..grid.len())
        .fold(None, |b: Option<usize>, i| match b {
            Some(j) if values[j] <= values[i] => Some(j),
            _ if values[i].is_finite() => Some(i),
            _ => b,
        })
        .ok_or_else(|| Error::Degenerate("no beta_up grid point could be evaluated".into()))?;
    let (lo, hi) = refine_bracket(grid, best);
    let (x, fx, iterations) = golden_min(
        |a| beta_up_objective(a, alpha, eps1, eps2, MOMENT_TOL),
        lo,
        hi,
        search.refine_tol,
    )?;
    let (arg_a, value) = if fx < values[best] {
        (x, fx)
    } else {
        (grid[best], values[best])
    };
    Ok(BetaResult {
        value,
        arg_a,
        a_max: search.a_max,
        grid_points: search.grid_points,
        refine_tol: search.refine_tol,
        refine_iterations: iterations,
        excluded_points: excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    /// Sum exceeds `m mu (1 + eps)`.
    Upper,
    /// Sum falls below `m mu (1 - eps)`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailProcess {
    Bernoulli,
    Poisson,
}

/// `exp(-eps^2 m mu / 4)`, bounding either tail of a sum of `m`
/// independent variables with mean `mu`.
pub fn chernoff_tail(m: u64, mu: f64, eps: f64, _direction: TailDirection) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    positive("mu", mu)?;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    Ok((-eps * eps * m as f64 * mu / 4.0).exp())
}

/// Fraction of `trials` simulated sums landing in the tail event.
pub fn empirical_tail_frequency(
    m: u64,
    mu: f64,
    eps: f64,
    direction: TailDirection,
    process: TailProcess,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    chernoff_tail(m, mu, eps, direction)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mean = m as f64 * mu;
    let mut rng = rng_for(seed, 0);
    let mut draw: Box<dyn FnMut(&mut rand_chacha::ChaCha8Rng) -> f64> = match process {
        TailProcess::Bernoulli => {
            let d = Binomial::new(m, mu).map_err(|e| Error::invalid(format!("binomial({m}, {mu}): {e}")))?;
            Box::new(move |r| d.sample(r) as f64)
        }
        TailProcess::Poisson => {
            let d = Poisson::new(mean).map_err(|e| Error::invalid(format!("poisson({mean}): {e}")))?;
            Box::new(move |r| d.sample(r))
        }
    };
    let hits = (0..trials)
        .filter(|_| {
            let s = draw(&mut rng);
            match direction {
                TailDirection::Upper => s > mean * (1.0 + eps),
                TailDirection::Lower => s < mean * (1.0 - eps),
            }
        })
        .count();
    Ok(hits as f64 / trials as f64)
}
