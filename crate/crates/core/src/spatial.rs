//! Fixed-radius neighbor search: brute force and a uniform grid.

use crate::environment::{Arena, Vec2};

/// Indices `j != i` with `eligible[j]` and `|p_i - p_j| < radius`, ascending.
pub fn brute_force_neighbors(
    positions: &[Vec2],
    eligible: &[bool],
    i: usize,
    radius: f64,
) -> Vec<usize> {
    let p = positions[i];
    positions
        .iter()
        .enumerate()
        .filter(|&(j, q)| j != i && eligible[j] && p.distance(*q) < radius)
        .map(|(j, _)| j)
        .collect()
}

/// Uniform grid with cells at least as large as the query radius, so a query
/// only needs to visit the 3x3 block of cells around the focal point.
#[derive(Debug, Clone)]
pub struct UniformGrid {
    cell_w: f64,
    cell_h: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl UniformGrid {
    pub fn new(arena: &Arena, radius: f64) -> Self {
        // Small margin so rounding in `cell_of` never separates true neighbors by two cells.
        let min_cell = radius * (1.0 + 1e-9);
        let cols = ((arena.width() / min_cell).floor() as usize).max(1);
        let rows = ((arena.height() / min_cell).floor() as usize).max(1);
        UniformGrid {
            cell_w: arena.width() / cols as f64,
            cell_h: arena.height() / rows as f64,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let c = ((p.x / self.cell_w) as usize).min(self.cols - 1);
        let r = ((p.y / self.cell_h) as usize).min(self.rows - 1);
        (c, r)
    }

    /// Re-populates the grid with every eligible index.
    pub fn rebuild(&mut self, positions: &[Vec2], eligible: &[bool]) {
        for cell in &mut self.cells {
            cell.clear();
        }
        for (j, p) in positions.iter().enumerate() {
            if eligible[j] {
                let (c, r) = self.cell_of(*p);
                self.cells[r * self.cols + c].push(j);
            }
        }
    }

    /// Same contract as [`brute_force_neighbors`] over the indexed set.
    pub fn neighbors(&self, positions: &[Vec2], i: usize, radius: f64) -> Vec<usize> {
        let p = positions[i];
        let (c, r) = self.cell_of(p);
        let mut out = Vec::new();
        for rr in r.saturating_sub(1)..=(r + 1).min(self.rows - 1) {
            for cc in c.saturating_sub(1)..=(c + 1).min(self.cols - 1) {
                out.extend(
                    self.cells[rr * self.cols + cc]
                        .iter()
                        .copied()
                        .filter(|&j| j != i && p.distance(positions[j]) < radius),
                );
            }
        }
        out.sort_unstable();
        out
    }
}
