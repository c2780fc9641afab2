use super::frontier::{find_frontiers, FrontierCluster};
use crate::geometry::Pose;
use crate::mapping::OccupancyGrid;
use crate::planning::{dijkstra, Costmap};

/// Goal ranking: `score = w_dist·path_cost_m − w_size·size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalWeights {
    pub w_dist: f64,
    pub w_size: f64,
}

impl GoalWeights {
    pub fn for_resolution(resolution: f64) -> Self {
        GoalWeights {
            w_dist: 1.0,
            w_size: 0.5 * resolution,
        }
    }
}

/// Frontier centroids whose goals failed too often.
#[derive(Debug, Clone, PartialEq)]
pub struct Blacklist {
    pub radius: f64,
    pub max_failures: u32,
    failures: Vec<((f64, f64), u32)>,
    banned: Vec<(f64, f64)>,
}

impl Default for Blacklist {
    fn default() -> Self {
        Blacklist::new(0.5, 2)
    }
}

impl Blacklist {
    pub fn new(radius: f64, max_failures: u32) -> Self {
        Blacklist {
            radius,
            max_failures,
            failures: Vec::new(),
            banned: Vec::new(),
        }
    }

    fn near(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).hypot(a.1 - b.1) <= self.radius
    }

    pub fn contains(&self, centroid: (f64, f64)) -> bool {
        self.banned.iter().any(|&b| self.near(b, centroid))
    }

    /// Counts a failure against the centroid; returns true when this failure
    /// blacklists it.
    pub fn record_failure(&mut self, centroid: (f64, f64)) -> bool {
        if self.contains(centroid) {
            return false;
        }
        let radius = self.radius;
        let entry = self
            .failures
            .iter_mut()
            .find(|(c, _)| (c.0 - centroid.0).hypot(c.1 - centroid.1) <= radius);
        let count = match entry {
            Some((_, n)) => {
                *n += 1;
                *n
            }
            None => {
                self.failures.push((centroid, 1));
                1
            }
        };
        if count >= self.max_failures {
            self.banned.push(centroid);
            true
        } else {
            false
        }
    }

    pub fn len(&self) -> usize {
        self.banned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.banned.is_empty()
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.banned
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreGoal {
    pub pose: Pose,
    pub cell: (usize, usize),
    /// Centroid of the chosen cluster, the blacklist key.
    pub centroid: (f64, f64),
    pub path_cost: f64,
    pub score: f64,
}

/// Ranks clusters by path cost from `pose` (one Dijkstra over `costmap`)
/// and returns the reachable cell nearest the best cluster's centroid,
/// facing the centroid. Scores are written back into `clusters`.
pub fn select_goal(
    clusters: &mut [FrontierCluster],
    pose: &Pose,
    costmap: &Costmap,
    weights: GoalWeights,
    blacklist: &Blacklist,
) -> Option<ExploreGoal> {
    let g = *costmap.geometry();
    let start = g.cell_of(pose.x, pose.y)?;
    let field = dijkstra(costmap, start);
    let reachable: Vec<usize> = (0..g.len()).filter(|&i| field.reachable(i)).collect();
    let mut best: Option<ExploreGoal> = None;
    for c in clusters.iter_mut() {
        c.cost = f64::INFINITY;
        if blacklist.contains(c.centroid) {
            continue;
        }
        let nearest = reachable
            .iter()
            .map(|&i| {
                let (ix, iy) = g.coords(i);
                let (x, y) = g.cell_center(ix, iy);
                ((x - c.centroid.0).hypot(y - c.centroid.1), field.cost[i], i)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let Some((_, units, i)) = nearest else { continue };
        let path_cost = units as f64 / crate::planning::COST_UNIT as f64 * g.resolution;
        let score = weights.w_dist * path_cost - weights.w_size * c.size as f64;
        c.cost = score;
        if best.as_ref().is_some_and(|b| b.score <= score) {
            continue;
        }
        let cell = g.coords(i);
        let (x, y) = g.cell_center(cell.0, cell.1);
        let (dx, dy) = (c.centroid.0 - x, c.centroid.1 - y);
        let yaw = if dx.hypot(dy) > 1e-9 { dy.atan2(dx) } else { (c.centroid.1 - pose.y).atan2(c.centroid.0 - pose.x) };
        best = Some(ExploreGoal {
            pose: Pose::new(x, y, yaw),
            cell,
            centroid: c.centroid,
            path_cost,
            score,
        });
    }
    best
}

/// True when every frontier cluster is blacklisted (or there are none).
pub fn exploration_done(grid: &OccupancyGrid, min_cluster_size: usize, blacklist: &Blacklist) -> bool {
    find_frontiers(grid, min_cluster_size)
        .iter()
        .all(|c| blacklist.contains(c.centroid))
}
