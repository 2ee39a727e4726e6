use super::{canonical_cycle, within_tol, CostMatrix, Tour};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::weights::{Exponent, WeightFunction};

pub const BRUTEFORCE_MAX_N: usize = 10;
pub const EXACT_MAX_N: usize = 18;

fn check_size(solver: &'static str, n: usize, max: usize) -> Result<()> {
    if (2..=max).contains(&n) {
        Ok(())
    } else {
        Err(Error::SizeOutOfRange { solver, n, min: 2, max })
    }
}

fn cycle_cost(order: &[usize], m: &CostMatrix) -> f64 {
    let n = order.len();
    (0..n).map(|i| m.get(order[i], order[(i + 1) % n])).sum()
}

/// Rearranges `a` into the next permutation in lexicographic order.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Visits every canonical cycle in lexicographic order.
fn for_each_cycle(n: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        if (n <= 2 || order[1] < order[n - 1]) && !f(&order) {
            return;
        }
        if !next_permutation(&mut order[1..]) {
            return;
        }
    }
}

/// Exhaustive search over all `(n-1)!/2` cycles.
pub fn tsp_bruteforce(points: &[Point], wf: &WeightFunction, alpha: Exponent) -> Result<Tour> {
    let n = points.len();
    check_size("tsp_bruteforce", n, BRUTEFORCE_MAX_N)?;
    let m = CostMatrix::new(points, wf, alpha);
    let mut best = f64::INFINITY;
    for_each_cycle(n, |order| {
        best = best.min(cycle_cost(order, &m));
        true
    });
    let mut chosen = None;
    for_each_cycle(n, |order| {
        if within_tol(cycle_cost(order, &m), best) {
            chosen = Some(order.to_vec());
            false
        } else {
            true
        }
    });
    let order = chosen.expect("at least one cycle exists");
    Tour::new(points, order, wf, alpha)
}

/// Held-Karp dynamic program over subsets of the nodes other than 0.
pub fn tsp_exact(points: &[Point], wf: &WeightFunction, alpha: Exponent) -> Result<Tour> {
    let n = points.len();
    check_size("tsp_exact", n, EXACT_MAX_N)?;
    if n <= 3 {
        return Tour::new(points, (0..n).collect(), wf, alpha);
    }
    let m = CostMatrix::new(points, wf, alpha);
    // Node v >= 1 is bit v-1. f[mask * k + j]: cheapest path leaving 0,
    // visiting exactly `mask`, ending at node j+1.
    let k = n - 1;
    let full = (1usize << k) - 1;
    let mut f = vec![f64::INFINITY; (full + 1) * k];
    for j in 0..k {
        f[(1 << j) * k + j] = m.get(0, j + 1);
    }
    for mask in 1..=full {
        for j in 0..k {
            let cur = f[mask * k + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            let rest = full & !mask;
            let mut bits = rest;
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let next = mask | (1 << v);
                let cand = cur + m.get(j + 1, v + 1);
                let slot = &mut f[next * k + v];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }
    let best = (0..k)
        .map(|j| f[full * k + j] + m.get(j + 1, 0))
        .fold(f64::INFINITY, f64::min);

    // Walk forward from 0 taking the smallest next node that still admits a
    // completion within tolerance of the optimum. The cost-to-go from `cur`
    // through `remaining` via `v` is h(cur, v) + f[remaining][v], read
    // backwards.
    let mut order = vec![0usize];
    let mut cur = 0usize;
    let mut spent = 0.0;
    let mut remaining = full;
    while remaining != 0 {
        let mut bits = remaining;
        let mut picked = None;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let step = m.get(cur, v + 1);
            if within_tol(spent + step + f[remaining * k + v], best) {
                picked = Some((v, step));
                break;
            }
        }
        let (v, step) = picked.expect("optimal completion exists");
        order.push(v + 1);
        spent += step;
        cur = v + 1;
        remaining &= !(1 << v);
    }
    Tour::new(points, canonical_cycle(order), wf, alpha)
}

/// Optimal tour weight, with the conventions `TSP = 0` for fewer than two
/// nodes.
pub fn tsp_value(points: &[Point], wf: &WeightFunction, alpha: Exponent) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    Ok(tsp_exact(points, wf, alpha)?.weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;
    use crate::weights::WeightKind;
    use rand::Rng;

    fn corners() -> Vec<Point> {
        vec![
            Point::new(-0.5, -0.5),
            Point::new(0.5, -0.5),
            Point::new(0.5, 0.5),
            Point::new(-0.5, 0.5),
        ]
    }

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = rng_for(seed, 0);
        (0..n)
            .map(|_| Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect()
    }

    fn one() -> Exponent {
        Exponent::new(1.0).unwrap()
    }

    #[test]
    fn corners_give_perimeter() {
        let wf = WeightFunction::euclidean();
        for t in [
            tsp_bruteforce(&corners(), &wf, one()).unwrap(),
            tsp_exact(&corners(), &wf, one()).unwrap(),
        ] {
            assert!((t.weight - 4.0).abs() < 1e-12);
            assert_eq!(t.order, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn three_points_single_cycle() {
        let wf = WeightFunction::euclidean();
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.3, 0.0), Point::new(0.0, 0.4)];
        let t = tsp_bruteforce(&pts, &wf, one()).unwrap();
        assert!((t.weight - 1.2).abs() < 1e-12);
        assert_eq!(tsp_exact(&pts, &wf, one()).unwrap(), t);
    }

    #[test]
    fn size_limits() {
        let wf = WeightFunction::euclidean();
        assert!(tsp_bruteforce(&random_points(1, 1), &wf, one()).is_err());
        assert!(tsp_bruteforce(&random_points(11, 1), &wf, one()).is_err());
        assert!(tsp_exact(&random_points(19, 1), &wf, one()).is_err());
        assert_eq!(tsp_value(&random_points(1, 1), &wf, one()).unwrap(), 0.0);
    }

    #[test]
    fn two_points_doubled_edge() {
        let wf = WeightFunction::euclidean();
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.3, 0.4)];
        let t = tsp_exact(&pts, &wf, one()).unwrap();
        assert!((t.weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bruteforce_matches_full_permutation_scan() {
        let wf = WeightFunction::coordinate_metric();
        let alpha = Exponent::new(0.7).unwrap();
        let pts = random_points(7, 11);
        let t = tsp_bruteforce(&pts, &wf, alpha).unwrap();
        let mut perm: Vec<usize> = (0..7).collect();
        let mut best = f64::INFINITY;
        loop {
            let w: f64 = (0..7)
                .map(|i| wf.edge_weight(alpha, pts[perm[i]], pts[perm[(i + 1) % 7]]))
                .sum();
            best = best.min(w);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        assert!((t.weight - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn exact_matches_bruteforce() {
        let kinds = [
            WeightKind::Euclidean,
            WeightKind::CoordinateMetric,
            WeightKind::RadialMetric,
        ];
        for seed in 0..60u64 {
            let n = 5 + (seed as usize % 5);
            let wf = WeightFunction::builtin(kinds[seed as usize % 3]).unwrap();
            let alpha = Exponent::new([0.5, 1.0, 1.5, 2.0][(seed / 3) as usize % 4]).unwrap();
            let pts = random_points(n, seed);
            let a = tsp_exact(&pts, &wf, alpha).unwrap();
            let b = tsp_bruteforce(&pts, &wf, alpha).unwrap();
            assert!((a.weight - b.weight).abs() <= 1e-9 * b.weight, "seed {seed}");
            assert_eq!(a.order, b.order, "seed {seed}");
        }
    }

    #[test]
    fn ties_break_lexicographically() {
        // Square corners: two optimal orientations, one canonical order.
        let wf = WeightFunction::euclidean();
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.2, 0.0),
            Point::new(0.0, 0.2),
            Point::new(0.2, 0.2),
        ];
        let t = tsp_exact(&pts, &wf, one()).unwrap();
        assert_eq!(t.order, vec![0, 1, 3, 2]);
        assert_eq!(tsp_bruteforce(&pts, &wf, one()).unwrap().order, t.order);
    }

    #[test]
    fn exact_handles_eighteen_nodes() {
        let wf = WeightFunction::euclidean();
        let pts = random_points(18, 5);
        let t = tsp_exact(&pts, &wf, one()).unwrap();
        assert_eq!(t.order.len(), 18);
        assert_eq!(t.order[0], 0);
    }
}
