//! Bounded densities on the unit square and the binomial / Poissonized point
//! processes drawn from them.
//!
//! Every sample is a pure function of `(density, n, seed, stream)`. The
//! generator is ChaCha8 seeded with `seed_from_u64(seed)` and positioned on
//! the given stream, so trials on distinct streams are independent.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, HALF};

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed) + set_stream(stream)";

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Uniform,
    Checkerboard,
}

/// JSON form: `{"kind": "checkerboard", "eps1": 0.5, "eps2": 1.5, "k": 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub kind: DensityKind,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl DensitySpec {
    pub fn uniform() -> Self {
        DensitySpec {
            kind: DensityKind::Uniform,
            eps1: 1.0,
            eps2: 1.0,
            k: None,
        }
    }

    pub fn build(&self) -> Result<Density> {
        build_density(self.kind, self.eps1, self.eps2, self.k)
    }
}

/// A piecewise-constant density with `eps1 <= f <= eps2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub kind: DensityKind,
    pub eps1: f64,
    pub eps2: f64,
    /// `k x k` table of cell values, row-major from the top-left cell.
    /// A single entry for the uniform density.
    pub grid: Vec<Vec<f64>>,
}

pub fn build_density(kind: DensityKind, eps1: f64, eps2: f64, k: Option<usize>) -> Result<Density> {
    if !(eps1.is_finite() && eps2.is_finite() && eps1 > 0.0) {
        return Err(Error::invalid(format!(
            "density bounds must be finite and positive, got {eps1}, {eps2}"
        )));
    }
    if eps1 > eps2 {
        return Err(Error::invalid(format!("eps1 = {eps1} exceeds eps2 = {eps2}")));
    }
    match kind {
        DensityKind::Uniform => {
            if !(eps1 <= 1.0 && 1.0 <= eps2) {
                return Err(Error::invalid(format!(
                    "the uniform density 1 violates the bounds [{eps1}, {eps2}]"
                )));
            }
            Ok(Density {
                kind,
                eps1,
                eps2,
                grid: vec![vec![1.0]],
            })
        }
        DensityKind::Checkerboard => {
            let k = k.ok_or_else(|| Error::invalid("checkerboard density needs k"))?;
            if k == 0 {
                return Err(Error::invalid("checkerboard needs k >= 1"));
            }
            let (low, high) = checkerboard_levels(k, eps1, eps2)?;
            let grid = (0..k)
                .map(|row| {
                    (0..k)
                        .map(|col| if (row + col) % 2 == 0 { low } else { high })
                        .collect()
                })
                .collect();
            Ok(Density { kind, eps1, eps2, grid })
        }
    }
}

/// Values for the even-parity (light) and odd-parity (heavy) cells. Starts
/// from the pure alternation `eps1 / eps2`; if that does not integrate to 1,
/// the light level is raised (or the heavy level lowered) until it does.
fn checkerboard_levels(k: usize, eps1: f64, eps2: f64) -> Result<(f64, f64)> {
    let cells = (k * k) as f64;
    let light = (k * k).div_ceil(2) as f64;
    let heavy = cells - light;
    let mass = (light * eps1 + heavy * eps2) / cells;
    let (low, high) = if (mass - 1.0).abs() <= 1e-15 {
        (eps1, eps2)
    } else if mass < 1.0 {
        ((cells - heavy * eps2) / light, eps2)
    } else if heavy > 0.0 {
        (eps1, (cells - light * eps1) / heavy)
    } else {
        // k = 1: a single light cell, so the density must be exactly 1.
        (1.0, 1.0)
    };
    let tol = 1e-12;
    if low < eps1 - tol || low > eps2 + tol || high < eps1 - tol || high > eps2 + tol {
        return Err(Error::invalid(format!(
            "a {k}x{k} checkerboard cannot integrate to 1 within [{eps1}, {eps2}]"
        )));
    }
    Ok((low.clamp(eps1, eps2), high.clamp(eps1, eps2)))
}

impl Density {
    pub fn uniform() -> Self {
        build_density(DensityKind::Uniform, 1.0, 1.0, None).expect("uniform")
    }

    pub fn cells_per_side(&self) -> usize {
        self.grid.len()
    }

    pub fn value(&self, p: Point) -> f64 {
        let k = self.grid.len();
        if k == 1 {
            return self.grid[0][0];
        }
        let col = (((p.x + HALF) * k as f64).floor() as usize).min(k - 1);
        let row = (((HALF - p.y) * k as f64).floor() as usize).min(k - 1);
        self.grid[row][col]
    }

    /// Exact integral over the unit square (cells have equal area).
    pub fn integral(&self) -> f64 {
        let k = self.grid.len() as f64;
        self.grid.iter().flatten().sum::<f64>() / (k * k)
    }

    pub fn min_value(&self) -> f64 {
        self.grid.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.grid.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// One point by rejection against the envelope `eps2`.
    fn draw<R: Rng>(&self, rng: &mut R) -> Point {
        loop {
            let p = Point::new(rng.random_range(-HALF..=HALF), rng.random_range(-HALF..=HALF));
            if self.kind == DensityKind::Uniform {
                return p;
            }
            let accept: f64 = rng.random();
            if accept * self.eps2 < self.value(p) {
                return p;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Binomial,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub points: Vec<Point>,
    pub process: Process,
    pub intended_n: usize,
    pub seed: u64,
    pub stream: u64,
}

/// `count` i.i.d. points in general position (exact coordinate duplicates are
/// redrawn).
fn draw_points<R: Rng>(density: &Density, count: usize, rng: &mut R) -> Vec<Point> {
    let mut seen = HashSet::with_capacity(count);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let p = density.draw(rng);
        if seen.insert((p.x.to_bits(), p.y.to_bits())) {
            points.push(p);
        }
    }
    points
}

pub fn sample_binomial(density: &Density, n: usize, seed: u64, stream: u64) -> PointSample {
    let mut rng = rng_for(seed, stream);
    PointSample {
        points: draw_points(density, n, &mut rng),
        process: Process::Binomial,
        intended_n: n,
        seed,
        stream,
    }
}

pub fn sample_poisson(density: &Density, n: usize, seed: u64, stream: u64) -> Result<PointSample> {
    if n == 0 {
        return Err(Error::invalid("Poisson intensity n must be >= 1"));
    }
    let mut rng = rng_for(seed, stream);
    let count = Poisson::new(n as f64)
        .map_err(|e| Error::invalid(format!("poisson({n}): {e}")))?
        .sample(&mut rng) as usize;
    Ok(PointSample {
        points: draw_points(density, count, &mut rng),
        process: Process::Poisson,
        intended_n: n,
        seed,
        stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadrant(p: &Point) -> usize {
        (p.x >= 0.0) as usize + 2 * (p.y < 0.0) as usize
    }

    #[test]
    fn uniform_density() {
        let d = build_density(DensityKind::Uniform, 1.0, 1.0, None).unwrap();
        assert_eq!(d.value(Point::new(0.3, -0.1)), 1.0);
        assert_eq!(d.integral(), 1.0);
        assert!(build_density(DensityKind::Uniform, 1.2, 2.0, None).is_err());
    }

    #[test]
    fn checkerboard_2x2_alternates_bounds() {
        let d = build_density(DensityKind::Checkerboard, 0.5, 1.5, Some(2)).unwrap();
        assert_eq!(d.grid, vec![vec![0.5, 1.5], vec![1.5, 0.5]]);
        assert_relative_eq!(d.integral(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn checkerboard_3x3_is_renormalized_within_bounds() {
        let d = build_density(DensityKind::Checkerboard, 0.5, 1.5, Some(3)).unwrap();
        assert_relative_eq!(d.integral(), 1.0, epsilon = 1e-12);
        assert!(d.min_value() >= 0.5 && d.max_value() <= 1.5);
        // five light cells at (9 - 4 * 1.5) / 5 = 0.6
        assert_relative_eq!(d.min_value(), 0.6, epsilon = 1e-12);
        assert_eq!(d.max_value(), 1.5);
    }

    #[test]
    fn checkerboard_errors() {
        assert!(build_density(DensityKind::Checkerboard, 1.5, 0.5, Some(2)).is_err());
        assert!(build_density(DensityKind::Checkerboard, 2.0, 3.0, Some(2)).is_err());
        assert!(build_density(DensityKind::Checkerboard, 0.5, 1.5, None).is_err());
        assert!(build_density(DensityKind::Checkerboard, 0.5, 1.5, Some(0)).is_err());
    }

    #[test]
    fn empty_binomial_sample() {
        let s = sample_binomial(&Density::uniform(), 0, 1, 0);
        assert!(s.points.is_empty());
    }

    #[test]
    fn uniform_quadrants_within_four_sigma() {
        let s = sample_binomial(&Density::uniform(), 10_000, 42, 0);
        assert_eq!(s.points.len(), 10_000);
        let mut counts = [0usize; 4];
        for p in &s.points {
            assert!(p.in_unit_square());
            counts[quadrant(p)] += 1;
        }
        let sigma = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn checkerboard_heavy_cells_get_three_times_the_mass() {
        let d = build_density(DensityKind::Checkerboard, 0.5, 1.5, Some(2)).unwrap();
        let s = sample_binomial(&d, 10_000, 5, 0);
        let mut light = 0usize;
        for p in &s.points {
            if d.value(*p) == 0.5 {
                light += 1;
            }
        }
        let heavy = 10_000 - light;
        // light cells carry probability 1/4 in total
        let sigma = (10_000.0f64 * 0.25 * 0.75).sqrt();
        assert!((light as f64 - 2500.0).abs() < 4.0 * sigma);
        let ratio = heavy as f64 / light as f64;
        assert!((ratio - 3.0).abs() < 0.35, "ratio {ratio}");
    }

    #[test]
    fn poisson_counts_have_mean_and_variance_n() {
        let d = Density::uniform();
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|i| sample_poisson(&d, 100, 9, i).unwrap().points.len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (100.0f64 / reps as f64).sqrt();
        assert!((mean - 100.0).abs() < 4.0 * se, "{mean}");
        assert!((var - 100.0).abs() < 10.0, "{var}");
    }

    #[test]
    fn samples_are_reproducible() {
        let d = build_density(DensityKind::Checkerboard, 0.5, 1.5, Some(3)).unwrap();
        assert_eq!(
            sample_poisson(&d, 1, 77, 3).unwrap(),
            sample_poisson(&d, 1, 77, 3).unwrap()
        );
        assert_eq!(sample_binomial(&d, 50, 77, 3), sample_binomial(&d, 50, 77, 3));
        assert_ne!(
            sample_binomial(&d, 50, 77, 3).points,
            sample_binomial(&d, 50, 77, 4).points
        );
        assert!(sample_poisson(&d, 0, 1, 0).is_err());
    }
}
