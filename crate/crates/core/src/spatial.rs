//! Uniform-grid nearest-neighbour index over a fixed point set.
//!
//! Results are identical to a brute-force sort by `(squared distance, index)`.

use crate::geometry::Point;

pub(crate) struct GridIndex {
    points: Vec<Point>,
    origin: Point,
    cell: f64,
    cols: usize,
    rows: usize,
    /// point indices per cell, ascending
    cells: Vec<Vec<usize>>,
}

impl GridIndex {
    pub fn new(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        if points.is_empty() {
            min = Point::default();
            max = Point::default();
        }
        let extent = (max.x - min.x).max(max.y - min.y).max(1e-9);
        // roughly two points per cell
        let per_side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = extent / per_side as f64 * (1.0 + 1e-9);
        let cols = (((max.x - min.x) / cell).floor() as usize + 1).min(per_side + 1);
        let rows = (((max.y - min.y) / cell).floor() as usize + 1).min(per_side + 1);
        let mut cells = vec![Vec::new(); cols * rows];
        let mut index = Self {
            points: points.to_vec(),
            origin: min,
            cell,
            cols,
            rows,
            cells: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(*p);
            cells[cy * cols + cx].push(i);
        }
        index.cells = cells;
        index
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        let cx = if fx.is_finite() && fx > 0.0 {
            (fx as usize).min(self.cols - 1)
        } else {
            0
        };
        let cy = if fy.is_finite() && fy > 0.0 {
            (fy as usize).min(self.rows - 1)
        } else {
            0
        };
        (cx, cy)
    }

    /// The `m` nearest points to `q`, ascending by distance, ties by index.
    pub fn nearest(&self, q: Point, m: usize) -> Vec<usize> {
        let m = m.min(self.points.len());
        if m == 0 {
            return Vec::new();
        }
        let (qx, qy) = self.cell_of(q);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let max_ring = self.cols.max(self.rows);
        for ring in 0..=max_ring {
            let (x0, x1) = (qx as isize - ring as isize, qx as isize + ring as isize);
            let (y0, y1) = (qy as isize - ring as isize, qy as isize + ring as isize);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    let on_ring = cy == y0 || cy == y1 || cx == x0 || cx == x1;
                    if !on_ring || cx < 0 || cy < 0 || cx as usize >= self.cols || cy as usize >= self.rows {
                        continue;
                    }
                    for &i in &self.cells[cy as usize * self.cols + cx as usize] {
                        found.push((q.distance_squared(self.points[i]), i));
                    }
                }
            }
            if found.len() >= m {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // every unvisited point lies outside the visited block of cells
                let left = self.origin.x + x0 as f64 * self.cell;
                let right = self.origin.x + (x1 + 1) as f64 * self.cell;
                let bottom = self.origin.y + y0 as f64 * self.cell;
                let top = self.origin.y + (y1 + 1) as f64 * self.cell;
                let reach = (q.x - left).min(right - q.x).min(q.y - bottom).min(top - q.y);
                let covers_all = x0 <= 0 && y0 <= 0 && x1 as usize >= self.cols - 1 && y1 as usize >= self.rows - 1;
                if covers_all || (reach > 0.0 && found[m - 1].0 < reach * reach) {
                    break;
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(m);
        found.into_iter().map(|(_, i)| i).collect()
    }
}

#[cfg(test)]
pub(crate) fn brute_force_nearest(points: &[Point], q: Point, m: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (q.distance_squared(*p), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(m).map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn grid_matches_brute_force(
            pts in prop::collection::vec((-50.0..50.0f64, -20.0..20.0f64), 1..300),
            qx in -80.0..80.0f64, qy in -40.0..40.0f64, m in 1usize..20,
        ) {
            let points: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let index = GridIndex::new(&points);
            let q = Point::new(qx, qy);
            prop_assert_eq!(index.nearest(q, m), brute_force_nearest(&points, q, m));
        }

        #[test]
        fn grid_handles_duplicates_and_lattices(
            n in 1usize..12, m in 1usize..30, qx in 0i32..12, qy in 0i32..12,
        ) {
            // integer lattice, many exact ties
            let points: Vec<Point> = (0..n * n)
                .map(|i| Point::new((i % n) as f64, (i / n) as f64))
                .chain(std::iter::once(Point::new(0.0, 0.0)))
                .collect();
            let index = GridIndex::new(&points);
            let q = Point::new(qx as f64 * 0.5, qy as f64 * 0.5);
            prop_assert_eq!(index.nearest(q, m), brute_force_nearest(&points, q, m));
        }
    }
}
