use crate::mapping::{CellClass, OccupancyGrid};
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    /// Row-major cell indices, ascending.
    pub cells: Vec<usize>,
    pub centroid: (f64, f64),
    pub size: usize,
    /// Ranking score, filled in by goal selection.
    pub cost: f64,
}

/// Free cells with at least one Unknown 4-neighbor.
pub fn frontier_mask(grid: &OccupancyGrid) -> Vec<bool> {
    let g = *grid.geometry();
    let classes = grid.classes();
    let (w, h) = (g.width, g.height);
    let mut mask = vec![false; g.len()];
    for iy in 0..h {
        for ix in 0..w {
            let i = iy * w + ix;
            if classes[i] != CellClass::Free {
                continue;
            }
            let unknown = |j: usize| classes[j] == CellClass::Unknown;
            mask[i] = (ix > 0 && unknown(i - 1))
                || (ix + 1 < w && unknown(i + 1))
                || (iy > 0 && unknown(i - w))
                || (iy + 1 < h && unknown(i + w));
        }
    }
    mask
}

/// Frontier cells grouped by 8-connectivity. Clusters smaller than
/// `min_cluster_size` are dropped; the rest are sorted by size descending,
/// then centroid x, then centroid y.
pub fn find_frontiers(grid: &OccupancyGrid, min_cluster_size: usize) -> Vec<FrontierCluster> {
    let g = *grid.geometry();
    let mask = frontier_mask(grid);
    let mut seen = vec![false; g.len()];
    let mut clusters = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..g.len() {
        if !mask[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        stack.push(seed);
        let mut cells = Vec::new();
        while let Some(i) = stack.pop() {
            cells.push(i);
            let (ix, iy) = g.coords(i);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                    if (dx, dy) == (0, 0) || !g.in_bounds(nx, ny) {
                        continue;
                    }
                    let j = g.index(nx as usize, ny as usize);
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if cells.len() < min_cluster_size {
            continue;
        }
        cells.sort_unstable();
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in &cells {
            let (ix, iy) = g.coords(i);
            let (x, y) = g.cell_center(ix, iy);
            sx += x;
            sy += y;
        }
        let n = cells.len() as f64;
        clusters.push(FrontierCluster {
            size: cells.len(),
            centroid: (sx / n, sy / n),
            cells,
            cost: 0.0,
        });
    }
    clusters.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.centroid.0.total_cmp(&b.centroid.0))
            .then(a.centroid.1.total_cmp(&b.centroid.1))
    });
    clusters
}

/// `cluster_id,cell_x,cell_y` rows.
pub fn write_frontiers_csv<W: Write>(out: &mut W, grid: &OccupancyGrid, clusters: &[FrontierCluster]) -> std::io::Result<()> {
    let g = grid.geometry();
    writeln!(out, "cluster_id,cell_x,cell_y")?;
    for (id, c) in clusters.iter().enumerate() {
        for &i in &c.cells {
            let (ix, iy) = g.coords(i);
            writeln!(out, "{id},{ix},{iy}")?;
        }
    }
    Ok(())
}
