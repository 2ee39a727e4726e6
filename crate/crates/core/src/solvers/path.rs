use super::two_opt::improve_path;
use super::{path_weight, within_tol, CostMatrix, SpanningPath};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::weights::{Exponent, WeightFunction};

/// Largest instance solved by the exact path dynamic program.
pub const EXACT_PATH_MAX_N: usize = 16;

/// Minimum-weight Hamiltonian path, optionally forced to start at
/// `required_endpoint`. Exact up to [`EXACT_PATH_MAX_N`] nodes; above that a
/// nearest-neighbour path polished by 2-opt, reported with `exact: false`.
pub fn min_weight_spanning_path(
    points: &[Point],
    wf: &WeightFunction,
    alpha: Exponent,
    required_endpoint: Option<usize>,
) -> Result<SpanningPath> {
    let n = points.len();
    if let Some(e) = required_endpoint {
        if e >= n {
            return Err(Error::invalid(format!(
                "required endpoint {e} out of range for {n} points"
            )));
        }
    }
    if n <= 1 {
        return Ok(SpanningPath {
            order: (0..n).collect(),
            weight: 0.0,
            exact: true,
        });
    }
    let m = CostMatrix::new(points, wf, alpha);
    let (order, exact) = if n <= EXACT_PATH_MAX_N {
        (exact_path(&m, n, required_endpoint), true)
    } else {
        let start = required_endpoint.unwrap_or(0);
        let mut order = nearest_neighbor(&m, n, start);
        improve_path(&mut order, |i, j| m.get(i, j), required_endpoint.is_some(), usize::MAX);
        (order, false)
    };
    let weight = path_weight(points, &order, wf, alpha);
    Ok(SpanningPath { order, weight, exact })
}

fn nearest_neighbor(m: &CostMatrix, n: usize, start: usize) -> Vec<usize> {
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    used[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&v| !used[v])
            .min_by(|&a, &b| m.get(cur, a).total_cmp(&m.get(cur, b)))
            .expect("unused node remains");
        used[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// Dynamic program over all subsets with free start. `f[mask][j]` is the
/// cheapest path covering `mask` and ending at `j`; by symmetry it is also
/// the cheapest path starting at `j`, which gives the cost-to-go used for
/// the lexicographic forward reconstruction.
fn exact_path(m: &CostMatrix, n: usize, required: Option<usize>) -> Vec<usize> {
    let full = (1usize << n) - 1;
    let mut f = vec![f64::INFINITY; (full + 1) * n];
    for j in 0..n {
        f[(1 << j) * n + j] = 0.0;
    }
    for mask in 1..=full {
        for j in 0..n {
            let cur = f[mask * n + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            let mut bits = full & !mask;
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let cand = cur + m.get(j, v);
                let slot = &mut f[(mask | (1 << v)) * n + v];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }
    let (start, best) = match required {
        Some(e) => {
            let rest = full & !(1 << e);
            let best = (0..n)
                .filter(|&v| rest & (1 << v) != 0)
                .map(|v| m.get(e, v) + f[rest * n + v])
                .fold(f64::INFINITY, f64::min);
            (e, best)
        }
        None => {
            let best = (0..n).map(|j| f[full * n + j]).fold(f64::INFINITY, f64::min);
            let start = (0..n)
                .find(|&j| within_tol(f[full * n + j], best))
                .expect("optimal start exists");
            (start, best)
        }
    };
    let mut order = vec![start];
    let mut cur = start;
    let mut spent = 0.0;
    let mut remaining = full & !(1 << start);
    while remaining != 0 {
        let mut bits = remaining;
        let mut picked = None;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let step = m.get(cur, v);
            if within_tol(spent + step + f[remaining * n + v], best) {
                picked = Some((v, step));
                break;
            }
        }
        let (v, step) = picked.expect("optimal completion exists");
        order.push(v);
        spent += step;
        cur = v;
        remaining &= !(1 << v);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;
    use crate::solvers::tsp_exact;
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = rng_for(seed, 7);
        (0..n)
            .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect()
    }

    fn brute_path(points: &[Point], wf: &WeightFunction, alpha: Exponent, start: Option<usize>) -> f64 {
        fn rec(
            points: &[Point],
            wf: &WeightFunction,
            alpha: Exponent,
            order: &mut Vec<usize>,
            used: &mut [bool],
            best: &mut f64,
        ) {
            if order.len() == points.len() {
                *best = best.min(path_weight(points, order, wf, alpha));
                return;
            }
            for v in 0..points.len() {
                if !used[v] {
                    used[v] = true;
                    order.push(v);
                    rec(points, wf, alpha, order, used, best);
                    order.pop();
                    used[v] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut used = vec![false; points.len()];
        let mut order = Vec::new();
        match start {
            Some(s) => {
                used[s] = true;
                order.push(s);
                rec(points, wf, alpha, &mut order, &mut used, &mut best);
            }
            None => rec(points, wf, alpha, &mut order, &mut used, &mut best),
        }
        best
    }

    #[test]
    fn collinear_points() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let pts = vec![Point::new(0.0, 0.0), Point::new(-0.4, 0.0), Point::new(0.4, 0.0)];
        let p = min_weight_spanning_path(&pts, &wf, one, None).unwrap();
        assert!((p.weight - 0.8).abs() < 1e-12);
        assert_eq!(p.order, vec![1, 0, 2]);
        assert_eq!(p.endpoints(), Some((1, 2)));
        assert!(p.exact);
    }

    #[test]
    fn single_point_is_empty_path() {
        let wf = WeightFunction::euclidean();
        let p = min_weight_spanning_path(&[Point::ORIGIN], &wf, Exponent::new(1.0).unwrap(), None).unwrap();
        assert_eq!(p.weight, 0.0);
        assert_eq!(p.order, vec![0]);
    }

    #[test]
    fn required_endpoint_is_honoured() {
        let wf = WeightFunction::euclidean();
        let one = Exponent::new(1.0).unwrap();
        let pts = vec![Point::new(0.0, 0.0), Point::new(-0.4, 0.0), Point::new(0.4, 0.0)];
        let p = min_weight_spanning_path(&pts, &wf, one, Some(0)).unwrap();
        assert_eq!(p.order[0], 0);
        assert!((p.weight - 1.2).abs() < 1e-12);
        assert!(min_weight_spanning_path(&pts, &wf, one, Some(3)).is_err());
    }

    #[test]
    fn matches_bruteforce_and_stays_below_cycle() {
        let wf = WeightFunction::radial_metric();
        for seed in 0..20 {
            let n = 2 + seed as usize % 7;
            let alpha = Exponent::new([0.5, 1.0, 2.0][seed as usize % 3]).unwrap();
            let pts = random_points(n, seed);
            let free = min_weight_spanning_path(&pts, &wf, alpha, None).unwrap();
            let b = brute_path(&pts, &wf, alpha, None);
            assert!((free.weight - b).abs() <= 1e-9 * b.max(1e-300), "seed {seed}");
            let fixed = min_weight_spanning_path(&pts, &wf, alpha, Some(n - 1)).unwrap();
            let bf = brute_path(&pts, &wf, alpha, Some(n - 1));
            assert_eq!(fixed.order[0], n - 1);
            assert!((fixed.weight - bf).abs() <= 1e-9 * bf.max(1e-300), "seed {seed}");
            let cycle = tsp_exact(&pts, &wf, alpha).unwrap();
            assert!(free.weight <= cycle.weight * (1.0 + 1e-9));
        }
    }

    #[test]
    fn heuristic_above_cutoff() {
        let wf = WeightFunction::euclidean();
        let pts = random_points(40, 3);
        let p = min_weight_spanning_path(&pts, &wf, Exponent::new(1.0).unwrap(), Some(5)).unwrap();
        assert!(!p.exact);
        assert_eq!(p.order[0], 5);
        let mut sorted = p.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..40).collect::<Vec<_>>());
    }
}
