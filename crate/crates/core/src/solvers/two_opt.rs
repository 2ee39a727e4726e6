use super::{check_permutation, CostMatrix, Tour};
use crate::error::Result;
use crate::geometry::Point;
use crate::weights::{Exponent, WeightFunction};

/// Above this size edge weights are evaluated on demand instead of tabulated.
const MATRIX_MAX_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoOptOptions {
    /// Full sweeps over the neighbourhood before giving up.
    pub max_passes: usize,
}

impl Default for TwoOptOptions {
    fn default() -> Self {
        TwoOptOptions { max_passes: 1000 }
    }
}

/// First-improvement 2-opt over the full neighbourhood.
pub fn two_opt(points: &[Point], tour: &Tour, wf: &WeightFunction, alpha: Exponent) -> Result<Tour> {
    two_opt_with(points, tour, wf, alpha, TwoOptOptions::default())
}

pub fn two_opt_with(
    points: &[Point],
    tour: &Tour,
    wf: &WeightFunction,
    alpha: Exponent,
    options: TwoOptOptions,
) -> Result<Tour> {
    let n = points.len();
    check_permutation(&tour.order, n)?;
    let mut order = tour.order.clone();
    let improved = if n < 4 {
        false
    } else if n <= MATRIX_MAX_N {
        let m = CostMatrix::new(points, wf, alpha);
        improve_tour(&mut order, |i, j| m.get(i, j), options.max_passes)
    } else {
        improve_tour(
            &mut order,
            |i, j| wf.edge_weight(alpha, points[i], points[j]),
            options.max_passes,
        )
    };
    if !improved {
        return Ok(tour.clone());
    }
    let polished = Tour::new(points, order, wf, alpha)?;
    // Guard against rounding making the recomputed sum drift upward.
    if polished.weight <= tour.weight {
        Ok(polished)
    } else {
        Ok(tour.clone())
    }
}

/// 2-opt on an open path. With `fix_start` the first node never moves.
pub fn two_opt_path(
    points: &[Point],
    order: &mut [usize],
    wf: &WeightFunction,
    alpha: Exponent,
    fix_start: bool,
) -> bool {
    improve_path(
        order,
        |i, j| wf.edge_weight(alpha, points[i], points[j]),
        fix_start,
        usize::MAX,
    )
}

#[inline]
fn is_gain(before: f64, after: f64) -> bool {
    after < before * (1.0 - 1e-12)
}

fn reverse_cyclic(t: &mut [usize], start: usize, len: usize) {
    let n = t.len();
    for k in 0..len / 2 {
        t.swap((start + k) % n, (start + len - 1 - k) % n);
    }
}

pub(crate) fn improve_tour(t: &mut [usize], w: impl Fn(usize, usize) -> f64, max_passes: usize) -> bool {
    let n = t.len();
    let mut any = false;
    for _ in 0..max_passes {
        let mut changed = false;
        for i in 0..n - 2 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, d) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
                let before = w(a, b) + w(c, d);
                let after = w(a, c) + w(b, d);
                if is_gain(before, after) {
                    let inner = j - i;
                    if inner <= n / 2 {
                        t[i + 1..=j].reverse();
                    } else {
                        reverse_cyclic(t, j + 1, n - inner);
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        any = true;
    }
    any
}

pub(crate) fn improve_path(
    t: &mut [usize],
    w: impl Fn(usize, usize) -> f64,
    fix_start: bool,
    max_passes: usize,
) -> bool {
    let n = t.len();
    if n < 3 {
        return false;
    }
    let first = usize::from(fix_start);
    let mut any = false;
    for _ in 0..max_passes {
        let mut changed = false;
        for i in first..n - 1 {
            for j in (i + 1)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let mut before = 0.0;
                let mut after = 0.0;
                if i > 0 {
                    before += w(t[i - 1], t[i]);
                    after += w(t[i - 1], t[j]);
                }
                if j + 1 < n {
                    before += w(t[j], t[j + 1]);
                    after += w(t[i], t[j + 1]);
                }
                if is_gain(before, after) {
                    t[i..=j].reverse();
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        any = true;
    }
    any
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;
    use crate::solvers::{path_weight, tsp_exact};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn corners() -> Vec<Point> {
        vec![
            Point::new(-0.5, -0.5),
            Point::new(0.5, -0.5),
            Point::new(0.5, 0.5),
            Point::new(-0.5, 0.5),
        ]
    }

    #[test]
    fn removes_crossing() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let pts = corners();
        let crossing = Tour::new(&pts, vec![0, 2, 1, 3], &wf, one).unwrap();
        let t = two_opt(&pts, &crossing, &wf, one).unwrap();
        assert!((t.weight - 4.0).abs() < 1e-12);
        assert_eq!(t.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn optimal_tour_is_fixed_point() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let mut rng = rng_for(2, 0);
        let pts: Vec<Point> = (0..9)
            .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        let opt = tsp_exact(&pts, &wf, one).unwrap();
        assert_eq!(two_opt(&pts, &opt, &wf, one).unwrap(), opt);
    }

    #[test]
    fn never_increases_weight() {
        let wf = WeightFunction::coordinate_metric();
        let alpha = Exponent::new(1.5).unwrap();
        for seed in 0..10 {
            let mut rng = rng_for(seed, 1);
            let n = 30 + seed as usize;
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let start = Tour::new(&pts, order, &wf, alpha).unwrap();
            let t = two_opt(&pts, &start, &wf, alpha).unwrap();
            assert!(t.weight <= start.weight);
            // A second run finds nothing further.
            assert_eq!(two_opt(&pts, &t, &wf, alpha).unwrap(), t);
        }
    }

    #[test]
    fn pass_budget_is_respected() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let mut rng = rng_for(4, 1);
        let pts: Vec<Point> = (0..60)
            .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        let mut order: Vec<usize> = (0..60).collect();
        order.shuffle(&mut rng);
        let start = Tour::new(&pts, order, &wf, one).unwrap();
        let zero = two_opt_with(&pts, &start, &wf, one, TwoOptOptions { max_passes: 0 }).unwrap();
        assert_eq!(zero, start);
        let one_pass = two_opt_with(&pts, &start, &wf, one, TwoOptOptions { max_passes: 1 }).unwrap();
        assert!(one_pass.weight < start.weight);
    }

    #[test]
    fn path_polish_keeps_start() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let mut rng = rng_for(6, 1);
        let pts: Vec<Point> = (0..25)
            .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        let mut order: Vec<usize> = (0..25).collect();
        order.shuffle(&mut rng);
        let first = order[0];
        let before = path_weight(&pts, &order, &wf, one);
        two_opt_path(&pts, &mut order, &wf, one, true);
        assert_eq!(order[0], first);
        assert!(path_weight(&pts, &order, &wf, one) < before);
    }
}
