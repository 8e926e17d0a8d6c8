//! Binary coverage masks of warped frame unions at quarter resolution.
//!
//! Cells are `CELL` pixels square on a lattice anchored at the canvas origin.
//! A cell is covered when its center lies inside at least one quad, using an
//! even-odd scanline rule with half-open spans, so quads sharing an edge never
//! double-count or drop a cell.

use super::geometry::Quad;

pub const CELL: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct CoverageMask {
    // lattice index of cell (0, 0)
    x0: i64,
    y0: i64,
    cols: usize,
    rows: usize,
    cells: Vec<bool>,
    // (rows + 1) x (cols + 1) summed-area table
    sat: Vec<u64>,
}

fn cell_floor(x: f64) -> i64 {
    (x / CELL).floor() as i64
}

fn cell_ceil(x: f64) -> i64 {
    (x / CELL).ceil() as i64
}

/// First lattice column whose center is at or beyond `x`.
fn first_center_at_or_after(x: f64) -> i64 {
    (x / CELL - 0.5).ceil() as i64
}

impl CoverageMask {
    pub fn rasterize(quads: &[Quad]) -> CoverageMask {
        let pts = || quads.iter().flat_map(|q| q.iter());
        if quads.is_empty() || pts().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return CoverageMask::empty();
        }
        let min_x = pts().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let min_y = pts().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_x = pts().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let max_y = pts().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let (x0, y0) = (cell_floor(min_x), cell_floor(min_y));
        let cols = (cell_ceil(max_x) - x0).max(1) as usize;
        let rows = (cell_ceil(max_y) - y0).max(1) as usize;
        let mut cells = vec![false; rows * cols];
        let mut xs = Vec::with_capacity(8);
        for r in 0..rows {
            let yc = ((y0 + r as i64) as f64 + 0.5) * CELL;
            let row = &mut cells[r * cols..(r + 1) * cols];
            for q in quads {
                xs.clear();
                for k in 0..4 {
                    let (p, s) = (q[k], q[(k + 1) % 4]);
                    if (p[1] <= yc) != (s[1] <= yc) {
                        xs.push(p[0] + (yc - p[1]) * (s[0] - p[0]) / (s[1] - p[1]));
                    }
                }
                xs.sort_by(f64::total_cmp);
                for span in xs.chunks_exact(2) {
                    let a = (first_center_at_or_after(span[0]) - x0).clamp(0, cols as i64) as usize;
                    let b = (first_center_at_or_after(span[1]) - x0).clamp(0, cols as i64) as usize;
                    row[a..b.max(a)].iter_mut().for_each(|c| *c = true);
                }
            }
        }
        let mut mask = CoverageMask {
            x0,
            y0,
            cols,
            rows,
            cells,
            sat: Vec::new(),
        };
        mask.build_sat();
        mask
    }

    fn empty() -> CoverageMask {
        CoverageMask {
            x0: 0,
            y0: 0,
            cols: 0,
            rows: 0,
            cells: Vec::new(),
            sat: vec![0],
        }
    }

    fn build_sat(&mut self) {
        let w = self.cols + 1;
        let mut sat = vec![0u64; (self.rows + 1) * w];
        for r in 0..self.rows {
            let mut run = 0u64;
            for c in 0..self.cols {
                run += self.cells[r * self.cols + c] as u64;
                sat[(r + 1) * w + c + 1] = sat[r * w + c + 1] + run;
            }
        }
        self.sat = sat;
    }

    pub fn covered_cells(&self) -> usize {
        self.sat.last().copied().unwrap_or(0) as usize
    }

    /// Covered area in full-resolution pixels.
    pub fn area(&self) -> f64 {
        self.covered_cells() as f64 * CELL * CELL
    }

    pub fn is_empty(&self) -> bool {
        self.covered_cells() == 0
    }

    /// Mean of covered cell centers.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        let n = self.covered_cells();
        if n == 0 {
            return None;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.cells[r * self.cols + c] {
                    sx += (self.x0 + c as i64) as f64 + 0.5;
                    sy += (self.y0 + r as i64) as f64 + 0.5;
                }
            }
        }
        Some([sx / n as f64 * CELL, sy / n as f64 * CELL])
    }

    /// Whether the cell containing `p` is covered.
    pub fn covers_point(&self, p: [f64; 2]) -> bool {
        let c = cell_floor(p[0]) - self.x0;
        let r = cell_floor(p[1]) - self.y0;
        if c < 0 || r < 0 || c >= self.cols as i64 || r >= self.rows as i64 {
            return false;
        }
        self.cells[r as usize * self.cols + c as usize]
    }

    /// Whether every cell overlapping the open rectangle `(min, max)` is
    /// covered.
    pub fn covers_rect(&self, min: [f64; 2], max: [f64; 2]) -> bool {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return false;
        }
        let c0 = cell_floor(min[0]) - self.x0;
        let r0 = cell_floor(min[1]) - self.y0;
        let c1 = cell_ceil(max[0]) - self.x0;
        let r1 = cell_ceil(max[1]) - self.y0;
        if c0 < 0 || r0 < 0 || c1 > self.cols as i64 || r1 > self.rows as i64 {
            return false;
        }
        let (c0, r0, c1, r1) = (c0 as usize, r0 as usize, c1 as usize, r1 as usize);
        let w = self.cols + 1;
        let sum = self.sat[r1 * w + c1] + self.sat[r0 * w + c0] - self.sat[r0 * w + c1] - self.sat[r1 * w + c0];
        sum as usize == (r1 - r0) * (c1 - c0)
    }
}
