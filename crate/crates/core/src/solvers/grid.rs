use serde::{Deserialize, Serialize};

use super::Tour;
use crate::error::{Error, Result};
use crate::geometry::{Point, Tiling};
use crate::weights::{Exponent, WeightFunction};

/// Cells with at least this many nodes are dense.
pub const DENSE_THRESHOLD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConstruction {
    /// Dense and sparse chains merged by two cross edges.
    DenseSparse,
    /// Too few dense or occupied sparse cells: one serpentine chain over all
    /// occupied cells, closed into a cycle.
    SerpentineFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTourInfo {
    pub construction: GridConstruction,
    pub dense_cells: usize,
    /// Sparse cells holding at least one node.
    pub occupied_sparse_cells: usize,
    pub cell_count: usize,
}

pub fn grid_tour(points: &[Point], wf: &WeightFunction, alpha: Exponent, tiling: &Tiling) -> Result<Tour> {
    Ok(grid_tour_detailed(points, wf, alpha, tiling)?.0)
}

pub fn grid_tour_detailed(
    points: &[Point],
    wf: &WeightFunction,
    alpha: Exponent,
    tiling: &Tiling,
) -> Result<(Tour, GridTourInfo)> {
    let n = points.len();
    if n < 2 {
        return Err(Error::SizeOutOfRange {
            solver: "grid_tour",
            n,
            min: 2,
            max: usize::MAX,
        });
    }
    let labels = tiling.assign(points)?;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); tiling.cell_count];
    for (i, &label) in labels.iter().enumerate() {
        cells[label - 1].push(i);
    }
    let occupied: Vec<&[usize]> = cells.iter().filter(|c| !c.is_empty()).map(|c| c.as_slice()).collect();
    let dense: Vec<&[usize]> = occupied
        .iter()
        .copied()
        .filter(|c| c.len() >= DENSE_THRESHOLD)
        .collect();
    let sparse: Vec<&[usize]> = occupied.iter().copied().filter(|c| c.len() < DENSE_THRESHOLD).collect();
    let w = |u: usize, v: usize| wf.edge_weight(alpha, points[u], points[v]);

    let construction = if dense.len() >= 2 && sparse.len() >= 2 {
        GridConstruction::DenseSparse
    } else {
        GridConstruction::SerpentineFallback
    };
    let order = match construction {
        GridConstruction::DenseSparse => {
            let mut order = chain(&dense, &w);
            // f2 joins the last endpoints, f1 closes back to the first ones.
            order.extend(chain(&sparse, &w).into_iter().rev());
            order
        }
        GridConstruction::SerpentineFallback => chain(&occupied, &w),
    };
    let info = GridTourInfo {
        construction,
        dense_cells: dense.len(),
        occupied_sparse_cells: sparse.len(),
        cell_count: tiling.cell_count,
    };
    Ok((Tour::new(points, order, wf, alpha)?, info))
}

/// Spanning path through `cells` in the given order, each cell traversed
/// contiguously and consecutive cells joined by their cheapest edge.
fn chain(cells: &[&[usize]], w: &impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let m = cells.len();
    let mut entry: Vec<Option<usize>> = vec![None; m];
    let mut exit: Vec<Option<usize>> = vec![None; m];
    for j in 0..m.saturating_sub(1) {
        let (from, to) = (cells[j], cells[j + 1]);
        let mut best: Option<(f64, usize, usize)> = None;
        for &u in from {
            if from.len() > 1 && entry[j] == Some(u) {
                continue;
            }
            for &v in to {
                let c = w(u, v);
                if best.is_none_or(|(b, _, _)| c < b) {
                    best = Some((c, u, v));
                }
            }
        }
        let (_, u, v) = best.expect("adjacent cells are non-empty");
        exit[j] = Some(u);
        entry[j + 1] = Some(v);
    }
    let mut order = Vec::new();
    for j in 0..m {
        order.extend(cell_path(cells[j], entry[j], exit[j], w));
    }
    order
}

/// Nearest-neighbour path covering `cell`, starting at `entry` and ending at
/// `exit` when given.
fn cell_path(
    cell: &[usize],
    entry: Option<usize>,
    exit: Option<usize>,
    w: &impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    if cell.len() == 1 {
        return cell.to_vec();
    }
    match (entry, exit) {
        (Some(s), Some(t)) => {
            let mut path = nearest_neighbor(cell, s, Some(t), w);
            path.push(t);
            path
        }
        (Some(s), None) => nearest_neighbor(cell, s, None, w),
        (None, Some(t)) => {
            let mut path = nearest_neighbor(cell, t, None, w);
            path.reverse();
            path
        }
        (None, None) => nearest_neighbor(cell, cell[0], None, w),
    }
}

/// Greedy walk from `start` over `cell`, leaving out `skip`.
fn nearest_neighbor(cell: &[usize], start: usize, skip: Option<usize>, w: &impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut left: Vec<usize> = cell
        .iter()
        .copied()
        .filter(|&v| v != start && Some(v) != skip)
        .collect();
    let mut path = Vec::with_capacity(cell.len());
    path.push(start);
    let mut cur = start;
    while !left.is_empty() {
        let (k, _) = left
            .iter()
            .enumerate()
            .map(|(k, &v)| (k, w(cur, v)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        cur = left.remove(k);
        path.push(cur);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_tiling;
    use crate::sampling::{sample_binomial, Density};
    use crate::solvers::tsp_exact;

    fn one() -> Exponent {
        Exponent::new(1.0).unwrap()
    }

    fn is_permutation(order: &[usize], n: usize) -> bool {
        let mut s = order.to_vec();
        s.sort_unstable();
        s == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn single_cell_gives_closed_dense_path() {
        let wf = WeightFunction::euclidean();
        let pts = vec![
            Point::new(0.1, 0.1),
            Point::new(0.2, 0.3),
            Point::new(0.3, 0.1),
            Point::new(0.15, 0.2),
        ];
        let tiling = Tiling::with_cells_per_side(1).unwrap();
        let (t, info) = grid_tour_detailed(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(info.construction, GridConstruction::SerpentineFallback);
        assert_eq!(info.dense_cells, 1);
        assert!(is_permutation(&t.order, 4));
        assert!(t.weight >= tsp_exact(&pts, &wf, one()).unwrap().weight * (1.0 - 1e-9));
    }

    #[test]
    fn two_points() {
        let wf = WeightFunction::euclidean();
        let pts = vec![Point::new(-0.3, 0.0), Point::new(0.3, 0.0)];
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let t = grid_tour(&pts, &wf, one(), &tiling).unwrap();
        assert!((t.weight - 1.2).abs() < 1e-12);
        assert!(grid_tour(&pts[..1], &wf, one(), &tiling).is_err());
    }

    #[test]
    fn dense_sparse_merge() {
        // Cells 1 and 2 (left column) dense, cells 3 and 4 sparse.
        let wf = WeightFunction::euclidean();
        let pts = vec![
            Point::new(-0.3, 0.3),
            Point::new(-0.2, 0.2),
            Point::new(-0.4, 0.1),
            Point::new(-0.3, -0.3),
            Point::new(-0.2, -0.2),
            Point::new(-0.1, -0.4),
            Point::new(0.3, -0.3),
            Point::new(0.3, 0.3),
        ];
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let (t, info) = grid_tour_detailed(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(info.construction, GridConstruction::DenseSparse);
        assert_eq!((info.dense_cells, info.occupied_sparse_cells), (2, 2));
        assert!(is_permutation(&t.order, 8));
        let opt = tsp_exact(&pts, &wf, one()).unwrap();
        assert!(t.weight >= opt.weight * (1.0 - 1e-9));
        // Each cell is visited as one contiguous block.
        let labels = tiling.assign(&pts).unwrap();
        let changes = (0..8)
            .filter(|&i| labels[t.order[i]] != labels[t.order[(i + 1) % 8]])
            .count();
        assert_eq!(changes, 4);
    }

    #[test]
    fn dominates_optimum_on_small_instances() {
        let wf = WeightFunction::radial_metric();
        let d = Density::uniform();
        for seed in 0..40 {
            let n = 2 + seed as usize % 8;
            let pts = sample_binomial(&d, n, seed, 3).points;
            let tiling = Tiling::with_cells_per_side(1 + seed as usize % 3).unwrap();
            let alpha = Exponent::new([0.5, 1.0, 2.0][seed as usize % 3]).unwrap();
            let t = grid_tour(&pts, &wf, alpha, &tiling).unwrap();
            assert!(is_permutation(&t.order, n));
            let opt = tsp_exact(&pts, &wf, alpha).unwrap();
            assert!(t.weight >= opt.weight * (1.0 - 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn large_uniform_instance_uses_merge() {
        let wf = WeightFunction::euclidean();
        let pts = sample_binomial(&Density::uniform(), 1024, 9, 0).points;
        let tiling = build_tiling(1024, 1.0).unwrap();
        let (t, info) = grid_tour_detailed(&pts, &wf, one(), &tiling).unwrap();
        assert_eq!(info.construction, GridConstruction::DenseSparse);
        assert!(is_permutation(&t.order, 1024));
        assert!(t.weight > 0.0);
    }
}
