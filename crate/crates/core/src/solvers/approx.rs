use serde::{Deserialize, Serialize};

use super::{min_weight_spanning_path, path_weight, SpanningPath};
use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, Point, Tiling};
use crate::weights::{Exponent, WeightFunction};

/// How the approximate path splits into its three pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxDecomposition {
    /// Nodes inside the half-size square around node 0's cell, node 0
    /// included when it lies there.
    pub n_in: usize,
    pub inside: Vec<usize>,
    pub v_close: usize,
    /// In-path endpoint joined to `v_close`; absent when no node is inside.
    pub v_in: Option<usize>,
    pub in_weight: f64,
    pub e_min_weight: f64,
    pub out_weight: f64,
    pub in_exact: bool,
    pub out_exact: bool,
    /// Weight of the edge joining the two ends of the full path.
    pub closing_edge_weight: f64,
}

impl ApproxDecomposition {
    /// Path weight plus the closing edge: the weight of the induced cycle.
    pub fn closed_weight(&self) -> f64 {
        self.in_weight + self.e_min_weight + self.out_weight + self.closing_edge_weight
    }
}

/// Spanning path made of an optimal path inside the small square around
/// node 0, a cross edge to the nearest outside node `v_close`, and an
/// optimal outside path starting at `v_close`.
pub fn approx_tsp_path(
    points: &[Point],
    wf: &WeightFunction,
    alpha: Exponent,
    tiling: &Tiling,
) -> Result<(SpanningPath, ApproxDecomposition)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::SizeOutOfRange {
            solver: "approx_tsp_path",
            n,
            min: 3,
            max: usize::MAX,
        });
    }
    let label = tiling.cell_index(points[0])?;
    let (center, side) = tiling.cell_square(label)?;
    let half = side / 4.0;
    let gap = |p: Point| {
        let dx = ((p.x - center.x).abs() - half).max(0.0);
        let dy = ((p.y - center.y).abs() - half).max(0.0);
        dx.hypot(dy)
    };
    let is_inside = |p: Point| (p.x - center.x).abs() <= half && (p.y - center.y).abs() <= half;
    let (inside, outside): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_inside(points[i]));
    if outside.is_empty() {
        return Err(Error::Degenerate(
            "every node lies inside the small square; no outside node to attach".into(),
        ));
    }
    let v_close = outside
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, f64)>, i| {
            let g = gap(points[i]);
            match best {
                Some((_, bg)) if bg <= g => best,
                _ => Some((i, g)),
            }
        })
        .map(|(i, _)| i)
        .expect("outside is non-empty");

    let subset = |ids: &[usize]| ids.iter().map(|&i| points[i]).collect::<Vec<_>>();

    let (mut in_order, in_exact) = if inside.is_empty() {
        (Vec::new(), true)
    } else {
        let p = min_weight_spanning_path(&subset(&inside), wf, alpha, None)?;
        (p.order.iter().map(|&k| inside[k]).collect::<Vec<_>>(), p.exact)
    };
    let v_in = match (in_order.first(), in_order.last()) {
        (Some(&u), Some(&v)) => {
            let target = points[v_close];
            if euclidean_distance(points[u], target) < euclidean_distance(points[v], target) {
                in_order.reverse();
            }
            in_order.last().copied()
        }
        _ => None,
    };

    let close_pos = outside.iter().position(|&i| i == v_close).expect("v_close is outside");
    let out = min_weight_spanning_path(&subset(&outside), wf, alpha, Some(close_pos))?;
    let out_order: Vec<usize> = out.order.iter().map(|&k| outside[k]).collect();

    let in_weight = path_weight(points, &in_order, wf, alpha);
    let out_weight = path_weight(points, &out_order, wf, alpha);
    let e_min_weight = v_in.map_or(0.0, |v| wf.edge_weight(alpha, points[v], points[v_close]));

    let mut order = in_order;
    order.extend(out_order);
    let closing_edge_weight = wf.edge_weight(alpha, points[order[0]], points[order[n - 1]]);
    let weight = path_weight(points, &order, wf, alpha);
    let record = ApproxDecomposition {
        n_in: inside.len(),
        inside,
        v_close,
        v_in,
        in_weight,
        e_min_weight,
        out_weight,
        in_exact,
        out_exact: out.exact,
        closing_edge_weight,
    };
    Ok((
        SpanningPath {
            order,
            weight,
            exact: in_exact && out.exact,
        },
        record,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_binomial, Density};
    use crate::solvers::tsp_exact;

    fn one() -> Exponent {
        Exponent::new(1.0).unwrap()
    }

    #[test]
    fn lone_inside_node() {
        // Cell 1 of a 2x2 tiling is [-0.5, 0) x (0, 0.5]; its small square is
        // centred at (-0.25, 0.25) with half-side 0.125.
        let wf = WeightFunction::euclidean();
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let pts = vec![
            Point::new(-0.25, 0.25),
            Point::new(-0.45, 0.45),
            Point::new(0.3, 0.3),
            Point::new(0.3, -0.3),
        ];
        let (path, rec) = approx_tsp_path(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(rec.n_in, 1);
        assert_eq!(rec.v_close, 1);
        assert_eq!(rec.v_in, Some(0));
        assert_eq!(rec.in_weight, 0.0);
        assert_eq!(path.order, vec![0, 1, 2, 3]);
        let e = euclidean_distance(pts[0], pts[1]);
        assert!((rec.e_min_weight - e).abs() < 1e-15);
        assert!((path.weight - (rec.in_weight + rec.e_min_weight + rec.out_weight)).abs() < 1e-12);
    }

    #[test]
    fn others_outside_first_cell() {
        let wf = WeightFunction::euclidean();
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let pts = vec![
            Point::new(-0.2, 0.2),
            Point::new(0.2, 0.2),
            Point::new(0.2, -0.2),
            Point::new(-0.2, -0.2),
        ];
        let (_, rec) = approx_tsp_path(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(rec.n_in, 1);
        assert_eq!(rec.inside, vec![0]);
    }

    #[test]
    fn degenerate_cases() {
        let wf = WeightFunction::euclidean();
        let tiling = Tiling::with_cells_per_side(1).unwrap();
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.1, 0.0), Point::new(0.0, 0.1)];
        assert!(matches!(
            approx_tsp_path(&pts, &wf, one(), &tiling),
            Err(Error::Degenerate(_))
        ));
        assert!(approx_tsp_path(&pts[..2], &wf, one(), &tiling).is_err());
    }

    #[test]
    fn node_zero_outside_small_square() {
        let wf = WeightFunction::euclidean();
        let tiling = Tiling::with_cells_per_side(1).unwrap();
        let pts = vec![Point::new(0.4, 0.4), Point::new(0.1, 0.0), Point::new(-0.4, 0.1)];
        let (path, rec) = approx_tsp_path(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(rec.inside, vec![1]);
        assert_eq!(rec.n_in, 1);
        assert_eq!(path.order.len(), 3);
    }

    #[test]
    fn bound_against_optimum() {
        let d = Density::uniform();
        for seed in 0..30 {
            let n = 3 + seed as usize % 7;
            let wf = WeightFunction::radial_metric();
            let alpha = Exponent::new([0.5, 1.0, 2.0][seed as usize % 3]).unwrap();
            let pts = sample_binomial(&d, n, seed, 11).points;
            let tiling = Tiling::with_cells_per_side(2).unwrap();
            let Ok((_, rec)) = approx_tsp_path(&pts, &wf, alpha, &tiling) else {
                continue;
            };
            let opt = tsp_exact(&pts, &wf, alpha).unwrap().weight;
            let slack = (2 * rec.n_in + 2) as f64 * alpha.pow(wf.c2() * 2f64.sqrt());
            assert!((rec.closed_weight() - opt).abs() <= slack, "seed {seed}");
        }
    }
}
