//! Points of the centered unit square `S = [-1/2, 1/2]^2` and the square
//! tiling used by the grid tour construction.
//!
//! Cells are labelled in serpentine (boustrophedon) column order: label 1 is
//! the top-left cell, labels increase going down the first column, then up
//! the second column, and so on. Consecutive labels always share an edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HALF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Builds a point, rejecting coordinates outside the unit square.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        let p = Point { x, y };
        if p.in_unit_square() {
            Ok(p)
        } else {
            Err(Error::OutsideSquare { x, y })
        }
    }

    pub fn in_unit_square(&self) -> bool {
        (-HALF..=HALF).contains(&self.x) && (-HALF..=HALF).contains(&self.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scaled(&self, a: f64) -> Point {
        Point::new(a * self.x, a * self.y)
    }

    pub fn translated(&self, bx: f64, by: f64) -> Point {
        Point::new(self.x + bx, self.y + by)
    }

    /// Total order on coordinates, used to evaluate symmetric functions on a
    /// canonically ordered pair.
    pub(crate) fn lex_le(&self, other: &Point) -> bool {
        (self.x, self.y) <= (other.x, other.y)
    }
}

pub fn euclidean_distance(p: Point, q: Point) -> f64 {
    let (a, b) = if p.lex_le(&q) { (p, q) } else { (q, p) };
    (b.x - a.x).hypot(b.y - a.y)
}

/// A `k x k` partition of the unit square into cells of side `A(n)/sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub n: usize,
    pub a_nominal: f64,
    pub a_effective: f64,
    pub cells_per_side: usize,
    pub cell_side: f64,
    pub cell_count: usize,
    /// False when no admissible `A(n)` exists in `[A, A + 1/ln n]`; the
    /// smallest admissible value above `A` is used anyway.
    pub within_window: bool,
}

pub fn build_tiling(n: usize, a: f64) -> Result<Tiling> {
    if n == 0 {
        return Err(Error::invalid("tiling needs n >= 1"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("tiling parameter A must be > 0, got {a}")));
    }
    let root = (n as f64).sqrt();
    // Tolerate rounding in sqrt(n)/A landing just under an integer.
    let ratio = root / a;
    let k = (ratio * (1.0 + 1e-12)).floor();
    if k < 1.0 {
        return Err(Error::invalid(format!(
            "A = {a} exceeds sqrt(n) = {root}; the tiling would have no cells"
        )));
    }
    let k = k as usize;
    let a_effective = root / k as f64;
    let window = if n > 1 { 1.0 / (n as f64).ln() } else { f64::INFINITY };
    let within_window = a_effective <= a + window + 1e-12;
    Ok(Tiling {
        n,
        a_nominal: a,
        a_effective,
        cells_per_side: k,
        cell_side: 1.0 / k as f64,
        cell_count: k * k,
        within_window,
    })
}

impl Tiling {
    /// A tiling with exactly `k` cells per side, independent of any `n`.
    pub fn with_cells_per_side(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cells_per_side must be >= 1"));
        }
        build_tiling(k * k, 1.0)
    }

    /// Column (0 = left) and row (0 = top) of the cell containing `p`.
    pub fn cell_coords(&self, p: Point) -> Result<(usize, usize)> {
        if !p.in_unit_square() {
            return Err(Error::OutsideSquare { x: p.x, y: p.y });
        }
        let k = self.cells_per_side;
        let col = (((p.x + HALF) * k as f64).floor() as usize).min(k - 1);
        let row = (((HALF - p.y) * k as f64).floor() as usize).min(k - 1);
        Ok((col, row))
    }

    pub fn label_of(&self, col: usize, row: usize) -> usize {
        let k = self.cells_per_side;
        let offset = if col.is_multiple_of(2) { row } else { k - 1 - row };
        col * k + offset + 1
    }

    pub fn coords_of(&self, label: usize) -> Result<(usize, usize)> {
        self.check_label(label)?;
        let k = self.cells_per_side;
        let col = (label - 1) / k;
        let offset = (label - 1) % k;
        let row = if col.is_multiple_of(2) { offset } else { k - 1 - offset };
        Ok((col, row))
    }

    pub fn cell_index(&self, p: Point) -> Result<usize> {
        let (col, row) = self.cell_coords(p)?;
        Ok(self.label_of(col, row))
    }

    /// Cells sharing an edge or a corner with `label`, including itself, in
    /// increasing label order.
    pub fn cell_neighbors(&self, label: usize) -> Result<Vec<usize>> {
        let (col, row) = self.coords_of(label)?;
        let k = self.cells_per_side as isize;
        let mut out = Vec::with_capacity(9);
        for dc in -1..=1isize {
            for dr in -1..=1isize {
                let (c, r) = (col as isize + dc, row as isize + dr);
                if (0..k).contains(&c) && (0..k).contains(&r) {
                    out.push(self.label_of(c as usize, r as usize));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Center and side length of the cell with the given label.
    pub fn cell_square(&self, label: usize) -> Result<(Point, f64)> {
        let (col, row) = self.coords_of(label)?;
        let s = self.cell_side;
        let cx = -HALF + (col as f64 + 0.5) * s;
        let cy = HALF - (row as f64 + 0.5) * s;
        Ok((Point::new(cx, cy), s))
    }

    /// Labels of the cells containing each point.
    pub fn assign(&self, points: &[Point]) -> Result<Vec<usize>> {
        points.iter().map(|&p| self.cell_index(p)).collect()
    }

    /// Nodes per cell, indexed by `label - 1`.
    pub fn occupancy(&self, points: &[Point]) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.cell_count];
        for label in self.assign(points)? {
            counts[label - 1] += 1;
        }
        Ok(counts)
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label == 0 || label > self.cell_count {
            return Err(Error::invalid(format!(
                "cell label {label} outside 1..={}",
                self.cell_count
            )));
        }
        Ok(())
    }
}
