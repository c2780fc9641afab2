use super::costmap::{Costmap, INSCRIBED};
use crate::error::{Error, Result};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;
use std::sync::OnceLock;

/// Fixed-point scale: a straight step over a zero-cost cell costs
/// `COST_UNIT`. Integer costs make path totals exact and order independent.
pub const COST_UNIT: u64 = 1 << 30;

struct StepTables {
    straight: [u64; 256],
    diagonal: [u64; 256],
}

fn tables() -> &'static StepTables {
    static TABLES: OnceLock<StepTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut straight = [0u64; 256];
        let mut diagonal = [0u64; 256];
        for c in 0..256u64 {
            // (1 + c/128) · COST_UNIT
            straight[c as usize] = (128 + c) << 23;
            diagonal[c as usize] = ((128 + c) as f64 * std::f64::consts::SQRT_2 * (1u64 << 23) as f64).round() as u64;
        }
        StepTables { straight, diagonal }
    })
}

/// Cost of moving onto a cell of cost `target`, in `COST_UNIT`s.
pub fn step_cost_units(diagonal: bool, target: u8) -> u64 {
    let t = tables();
    if diagonal {
        t.diagonal[target as usize]
    } else {
        t.straight[target as usize]
    }
}

/// Octile lower bound on the remaining cost.
fn octile(a: (usize, usize), b: (usize, usize)) -> u64 {
    let dx = a.0.abs_diff(b.0) as u64;
    let dy = a.1.abs_diff(b.1) as u64;
    let (lo, hi) = (dx.min(dy), dx.max(dy));
    lo * step_cost_units(true, 0) + (hi - lo) * step_cost_units(false, 0)
}

/// 8-connected neighbors reachable from `index`; diagonal moves may not cut
/// a blocked corner.
fn for_each_neighbor(costmap: &Costmap, index: usize, mut visit: impl FnMut(usize, u64)) {
    let g = costmap.geometry();
    let (x, y) = g.coords(index);
    let open = |nx: i64, ny: i64| g.in_bounds(nx, ny) && costmap.is_traversable(nx as usize, ny as usize);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if !open(nx, ny) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && !(open(x as i64 + dx, y as i64) && open(x as i64, y as i64 + dy)) {
                continue;
            }
            let n = g.index(nx as usize, ny as usize);
            visit(n, step_cost_units(diagonal, costmap.costs()[n]));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<(usize, usize)>,
    /// Cell centers in world coordinates.
    pub points: Vec<(f64, f64)>,
    pub cost_units: u64,
    /// `cost_units / COST_UNIT`: path length in cells weighted by cost.
    pub total_cost: f64,
}

impl Path {
    fn from_indices(costmap: &Costmap, indices: &[usize], cost_units: u64) -> Path {
        let g = costmap.geometry();
        let cells: Vec<_> = indices.iter().map(|&i| g.coords(i)).collect();
        let points = cells.iter().map(|&(x, y)| g.cell_center(x, y)).collect();
        Path {
            cells,
            points,
            cost_units,
            total_cost: cost_units as f64 / COST_UNIT as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn goal(&self) -> (f64, f64) {
        *self.points.last().expect("non-empty path")
    }

    /// Euclidean length of the polyline in meters.
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }
}

/// Minimum-cost 8-connected path. Expansion order is fixed by
/// `(f, h, cell index)` so equal-cost alternatives resolve deterministically.
pub fn plan_astar(costmap: &Costmap, start: (usize, usize), goal: (usize, usize)) -> Result<Path> {
    let g = costmap.geometry();
    for cell in [start, goal] {
        if !g.in_bounds(cell.0 as i64, cell.1 as i64) {
            return Err(Error::InvalidEndpoint { cell, cost: 255 });
        }
        let cost = costmap.cost(cell.0, cell.1);
        if cost >= INSCRIBED {
            return Err(Error::InvalidEndpoint { cell, cost });
        }
    }
    let s = g.index(start.0, start.1);
    let t = g.index(goal.0, goal.1);
    if s == t {
        return Ok(Path::from_indices(costmap, &[s], 0));
    }
    let mut best = vec![u64::MAX; g.len()];
    let mut parent = vec![usize::MAX; g.len()];
    let mut heap = BinaryHeap::new();
    best[s] = 0;
    let h0 = octile(start, goal);
    heap.push(Reverse((h0, h0, s, 0u64)));
    while let Some(Reverse((_, _, node, cost))) = heap.pop() {
        if cost > best[node] {
            continue;
        }
        if node == t {
            let mut indices = vec![t];
            let mut cur = t;
            while cur != s {
                cur = parent[cur];
                indices.push(cur);
            }
            indices.reverse();
            return Ok(Path::from_indices(costmap, &indices, cost));
        }
        for_each_neighbor(costmap, node, |n, step| {
            let c = cost + step;
            if c < best[n] {
                best[n] = c;
                parent[n] = node;
                let h = octile(g.coords(n), goal);
                heap.push(Reverse((c + h, h, n, c)));
            }
        });
    }
    Err(Error::NoPath)
}

/// Single-source shortest-path costs over the whole costmap.
#[derive(Debug, Clone)]
pub struct CostField {
    pub start: usize,
    /// `u64::MAX` where unreachable.
    pub cost: Vec<u64>,
    parent: Vec<usize>,
}

impl CostField {
    pub fn reachable(&self, index: usize) -> bool {
        self.cost[index] != u64::MAX
    }

    pub fn path_to(&self, costmap: &Costmap, index: usize) -> Option<Path> {
        if !self.reachable(index) {
            return None;
        }
        let mut indices = vec![index];
        let mut cur = index;
        while cur != self.start {
            cur = self.parent[cur];
            indices.push(cur);
        }
        indices.reverse();
        Some(Path::from_indices(costmap, &indices, self.cost[index]))
    }
}

/// Dijkstra from `start` using the same step costs as A*. The start cell
/// itself may be non-traversable (a robot pressed against an obstacle can
/// still leave it).
pub fn dijkstra(costmap: &Costmap, start: (usize, usize)) -> CostField {
    let g = costmap.geometry();
    let s = g.index(start.0, start.1);
    let mut cost = vec![u64::MAX; g.len()];
    let mut parent = vec![usize::MAX; g.len()];
    let mut heap = BinaryHeap::new();
    cost[s] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((c, node))) = heap.pop() {
        if c > cost[node] {
            continue;
        }
        for_each_neighbor(costmap, node, |n, step| {
            let nc = c + step;
            if nc < cost[n] {
                cost[n] = nc;
                parent[n] = node;
                heap.push(Reverse((nc, n)));
            }
        });
    }
    CostField {
        start: s,
        cost,
        parent,
    }
}

/// Plans to `goal`, or to the reachable cell closest to it within
/// `tolerance` meters when the goal itself is blocked or unreachable.
pub fn plan_to_nearest(costmap: &Costmap, start: (usize, usize), goal: (usize, usize), tolerance: f64) -> Result<Path> {
    let g = costmap.geometry();
    if costmap.is_traversable(start.0, start.1) && costmap.is_traversable(goal.0, goal.1) {
        if let Ok(p) = plan_astar(costmap, start, goal) {
            return Ok(p);
        }
    }
    let field = dijkstra(costmap, start);
    let tol_cells = tolerance / g.resolution;
    let mut best: Option<(f64, u64, usize)> = None;
    for i in 0..g.len() {
        if !field.reachable(i) {
            continue;
        }
        let (x, y) = g.coords(i);
        let d = (x as f64 - goal.0 as f64).hypot(y as f64 - goal.1 as f64);
        if d > tol_cells {
            continue;
        }
        let key = (d, field.cost[i], i);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    best.and_then(|(_, _, i)| field.path_to(costmap, i)).ok_or(Error::NoPath)
}

/// `x,y` polyline rows.
pub fn write_path_csv<W: Write>(out: &mut W, path: &Path) -> std::io::Result<()> {
    writeln!(out, "x,y")?;
    for (x, y) in &path.points {
        writeln!(out, "{x},{y}")?;
    }
    Ok(())
}
