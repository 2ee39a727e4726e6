use serde::{Deserialize, Serialize};

use super::grid::DENSE_THRESHOLD;
use crate::error::Result;
use crate::geometry::{Point, Tiling};
use crate::weights::Exponent;

/// Label gaps between consecutive dense cells and between consecutive
/// sparse cells (empty cells are sparse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub dense_indices: Vec<usize>,
    pub sparse_indices: Vec<usize>,
    pub q: usize,
    pub l: usize,
    pub s_alpha: f64,
    pub v_alpha: f64,
    /// Absent unless both classes are non-empty.
    pub z_alpha: Option<f64>,
}

/// `sum T_j^alpha` with `T_1 = i_1 - 1`, interior differences, and
/// `T_last = cells - i_last`; `(cells - 1)^alpha` for an empty sequence.
fn gap_sum(labels: &[usize], cells: usize, alpha: Exponent) -> f64 {
    let pow = |t: usize| alpha.pow(t as f64);
    match (labels.first(), labels.last()) {
        (Some(&first), Some(&last)) => {
            let interior: f64 = labels.windows(2).map(|w| pow(w[1] - w[0])).sum();
            pow(first - 1) + interior + pow(cells - last)
        }
        _ => pow(cells - 1),
    }
}

pub fn gap_statistics(points: &[Point], tiling: &Tiling, alpha: Exponent) -> Result<GapStatistics> {
    let occupancy = tiling.occupancy(points)?;
    let (dense, sparse): (Vec<usize>, Vec<usize>) =
        (1..=tiling.cell_count).partition(|&label| occupancy[label - 1] >= DENSE_THRESHOLD);
    let cells = tiling.cell_count;
    let s_alpha = gap_sum(&dense, cells, alpha);
    let v_alpha = gap_sum(&sparse, cells, alpha);
    let z_alpha = match (dense.first(), dense.last(), sparse.first(), sparse.last()) {
        (Some(&i1), Some(&iq), Some(&m1), Some(&ml)) => {
            Some(alpha.pow(i1.abs_diff(m1) as f64) + alpha.pow(iq.abs_diff(ml) as f64))
        }
        _ => None,
    };
    Ok(GapStatistics {
        q: dense.len(),
        l: sparse.len(),
        dense_indices: dense,
        sparse_indices: sparse,
        s_alpha,
        v_alpha,
        z_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Exponent {
        Exponent::new(1.0).unwrap()
    }

    #[test]
    fn two_by_two_example() {
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let pts = vec![
            Point::new(-0.3, 0.3),
            Point::new(-0.2, 0.2),
            Point::new(-0.4, 0.1),
            Point::new(-0.3, -0.3),
        ];
        let g = gap_statistics(&pts, &tiling, one()).unwrap();
        assert_eq!(g.q, 1);
        assert_eq!(g.dense_indices, vec![1]);
        assert_eq!(g.sparse_indices, vec![2, 3, 4]);
        assert_eq!(g.s_alpha, 3.0);
        assert_eq!(g.v_alpha, 3.0);
        assert_eq!(g.z_alpha, Some(4.0));
        assert_eq!(g.q + g.l, 4);
    }

    #[test]
    fn no_dense_cell() {
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let g = gap_statistics(&[Point::new(0.1, 0.1)], &tiling, one()).unwrap();
        assert_eq!(g.s_alpha, 3.0);
        assert_eq!(g.v_alpha, 3.0);
        assert_eq!(g.z_alpha, None);
    }

    #[test]
    fn every_cell_dense() {
        let tiling = Tiling::with_cells_per_side(2).unwrap();
        let mut pts = Vec::new();
        for (cx, cy) in [(-0.25, 0.25), (-0.25, -0.25), (0.25, 0.25), (0.25, -0.25)] {
            for k in 0..3 {
                pts.push(Point::new(cx + 0.01 * k as f64, cy));
            }
        }
        let alpha = Exponent::new(2.0).unwrap();
        let g = gap_statistics(&pts, &tiling, alpha).unwrap();
        assert_eq!(g.q, 4);
        assert_eq!(g.l, 0);
        assert_eq!(g.s_alpha, 3.0);
        assert_eq!(g.v_alpha, 9.0);
        assert_eq!(g.z_alpha, None);
    }
}
