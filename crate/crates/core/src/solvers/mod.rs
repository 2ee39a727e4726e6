//! Spanning cycles and paths under power-weighted edge costs.
//!
//! All solvers are deterministic. Among tours of (numerically) equal weight
//! the lexicographically smallest canonical order wins, where "equal" means
//! within [`REL_TOL`] relative.

mod approx;
mod exact;
mod gaps;
mod grid;
mod path;
mod two_opt;

pub use approx::{approx_tsp_path, ApproxDecomposition};
pub use exact::{tsp_bruteforce, tsp_exact, tsp_value, BRUTEFORCE_MAX_N, EXACT_MAX_N};
pub use gaps::{gap_statistics, GapStatistics};
pub use grid::{grid_tour, grid_tour_detailed, GridConstruction, GridTourInfo, DENSE_THRESHOLD};
pub use path::{min_weight_spanning_path, EXACT_PATH_MAX_N};
pub use two_opt::{two_opt, two_opt_path, two_opt_with, TwoOptOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::weights::{Exponent, WeightFunction};

/// Relative tolerance for weight equality.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub weight: f64,
}

impl Tour {
    /// Canonicalizes `order` and computes its weight.
    pub fn new(points: &[Point], order: Vec<usize>, wf: &WeightFunction, alpha: Exponent) -> Result<Self> {
        let weight = tour_weight(points, &order, wf, alpha)?;
        Ok(Tour {
            order: canonical_cycle(order),
            weight,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The two tour neighbours of node `v`.
    pub fn neighbors(&self, v: usize) -> Option<(usize, usize)> {
        let n = self.order.len();
        let pos = self.order.iter().position(|&u| u == v)?;
        Some((self.order[(pos + n - 1) % n], self.order[(pos + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningPath {
    pub order: Vec<usize>,
    pub weight: f64,
    /// False when the path came from the heuristic fallback.
    pub exact: bool,
}

impl SpanningPath {
    pub fn endpoints(&self) -> Option<(usize, usize)> {
        Some((*self.order.first()?, *self.order.last()?))
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::invalid(format!(
            "order has {} entries for {n} points",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("order is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Weight of the closed cycle visiting `order`, including the wraparound
/// edge. Two nodes form the doubled edge.
pub fn tour_weight(points: &[Point], order: &[usize], wf: &WeightFunction, alpha: Exponent) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::SizeOutOfRange {
            solver: "tour_weight",
            n,
            min: 2,
            max: usize::MAX,
        });
    }
    check_permutation(order, n)?;
    let mut total = 0.0;
    for i in 0..n {
        let (u, v) = (order[i], order[(i + 1) % n]);
        total += wf.edge_weight(alpha, points[u], points[v]);
    }
    Ok(total)
}

/// Weight of the open path visiting `order` (any subset of the points).
pub fn path_weight(points: &[Point], order: &[usize], wf: &WeightFunction, alpha: Exponent) -> f64 {
    order
        .windows(2)
        .map(|e| wf.edge_weight(alpha, points[e[0]], points[e[1]]))
        .sum()
}

/// Rotates the cycle to start at its smallest label and orients it so that
/// the second entry is smaller than the last.
pub fn canonical_cycle(mut order: Vec<usize>) -> Vec<usize> {
    let n = order.len();
    if n == 0 {
        return order;
    }
    let start = order
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    order.rotate_left(start);
    if n > 2 && order[1] > order[n - 1] {
        order[1..].reverse();
    }
    order
}

/// Dense table of `h^alpha` for all pairs.
pub(crate) struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub(crate) fn new(points: &[Point], wf: &WeightFunction, alpha: Exponent) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = wf.edge_weight(alpha, points[i], points[j]);
                data[i * n + j] = w;
                data[j * n + i] = w;
            }
        }
        CostMatrix { n, data }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Within [`REL_TOL`] of `best`, or below it.
#[inline]
pub(crate) fn within_tol(value: f64, best: f64) -> bool {
    value <= best + REL_TOL * best.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn corners() -> Vec<Point> {
        vec![
            Point::new(-0.5, -0.5),
            Point::new(0.5, -0.5),
            Point::new(0.5, 0.5),
            Point::new(-0.5, 0.5),
        ]
    }

    #[test]
    fn tour_weight_examples() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let pts = corners();
        assert!((tour_weight(&pts, &[0, 1, 2, 3], &wf, one).unwrap() - 4.0).abs() < 1e-12);
        let crossing = tour_weight(&pts, &[0, 2, 1, 3], &wf, one).unwrap();
        assert!((crossing - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        let two = [Point::new(0.0, 0.0), Point::new(0.3, 0.4)];
        let sq = Exponent::new(2.0).unwrap();
        assert!((tour_weight(&two, &[0, 1], &wf, sq).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tour_weight_errors() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let pts = corners();
        assert!(tour_weight(&pts[..1], &[0], &wf, one).is_err());
        assert!(tour_weight(&pts, &[0, 1, 1, 3], &wf, one).is_err());
        assert!(tour_weight(&pts, &[0, 1, 2], &wf, one).is_err());
        assert!(tour_weight(&pts, &[0, 1, 2, 4], &wf, one).is_err());
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonical_cycle(vec![2, 3, 0, 1]), vec![0, 1, 2, 3]);
        assert_eq!(canonical_cycle(vec![2, 1, 0, 3]), vec![0, 1, 2, 3]);
        assert_eq!(canonical_cycle(vec![1, 0]), vec![0, 1]);
        assert_eq!(canonical_cycle(vec![4, 0, 3, 1, 2]), vec![0, 3, 1, 2, 4]);
    }

    #[test]
    fn neighbors_wrap_around() {
        let wf = WeightFunction::euclidean();
        let t = Tour::new(&corners(), vec![0, 1, 2, 3], &wf, Exponent::new(1.0).unwrap()).unwrap();
        assert_eq!(t.neighbors(0), Some((3, 1)));
        assert_eq!(t.neighbors(2), Some((1, 3)));
        assert_eq!(t.neighbors(9), None);
    }
}
