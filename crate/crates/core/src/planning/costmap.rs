use super::edt::squared_edt;
use crate::mapping::{CellClass, OccupancyGrid};
use crate::raycast::GridGeometry;
use serde::{Deserialize, Serialize};

pub const LETHAL: u8 = 255;
pub const INSCRIBED: u8 = 254;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflationConfig {
    /// Cells within this distance of a lethal cell are inscribed.
    pub robot_radius: f64,
    /// Width of the exponential decay band beyond the inscribed radius.
    pub decay_radius: f64,
    pub unknown_is_lethal: bool,
}

impl Default for InflationConfig {
    fn default() -> Self {
        InflationConfig {
            robot_radius: 0.3,
            decay_radius: 1.0,
            unknown_is_lethal: true,
        }
    }
}

impl InflationConfig {
    /// Cost of a cell `distance` meters from the nearest lethal cell.
    pub fn cost_at(&self, distance: f64) -> u8 {
        if distance <= 0.0 {
            LETHAL
        } else if distance <= self.robot_radius {
            INSCRIBED
        } else if distance >= self.robot_radius + self.decay_radius {
            0
        } else {
            let k = 3.0 / self.decay_radius;
            (253.0 * (-k * (distance - self.robot_radius)).exp()).round() as u8
        }
    }
}

/// Planning cost per cell: 255 lethal, 254 inscribed, decaying to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    geometry: GridGeometry,
    cost: Vec<u8>,
}

impl Costmap {
    pub fn from_costs(geometry: GridGeometry, cost: Vec<u8>) -> Self {
        assert_eq!(cost.len(), geometry.len(), "cost length mismatch");
        Costmap { geometry, cost }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn costs(&self) -> &[u8] {
        &self.cost
    }

    pub fn cost(&self, ix: usize, iy: usize) -> u8 {
        self.cost[self.geometry.index(ix, iy)]
    }

    pub fn is_traversable(&self, ix: usize, iy: usize) -> bool {
        self.cost(ix, iy) < INSCRIBED
    }
}

/// Inflates lethal cells (occupied, and unknown when configured) by an exact
/// Euclidean distance transform.
pub fn inflate(grid: &OccupancyGrid, cfg: &InflationConfig) -> Costmap {
    let g = *grid.geometry();
    let sources: Vec<bool> = grid
        .classes()
        .into_iter()
        .map(|c| c == CellClass::Occupied || (cfg.unknown_is_lethal && c == CellClass::Unknown))
        .collect();
    let cost = match squared_edt(g.width, g.height, &sources) {
        None => vec![0; g.len()],
        Some(d2) => d2
            .into_iter()
            .map(|d2| cfg.cost_at((d2 as f64).sqrt() * g.resolution))
            .collect(),
    };
    Costmap { geometry: g, cost }
}
