use super::detector::DiseaseObservation;
use crate::simworld::{CellKind, CropClass, World};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusedLabel {
    Class(CropClass),
    /// Two or more classes share the top count.
    Unresolved,
}

impl FusedLabel {
    pub fn name(self) -> &'static str {
        match self {
            FusedLabel::Class(c) => c.name(),
            FusedLabel::Unresolved => "unresolved",
        }
    }
}

/// Per-cell vote counts over predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiseaseMap {
    pub min_obs: u32,
    counts: BTreeMap<usize, [u32; 3]>,
    rejected: u64,
}

impl Default for DiseaseMap {
    fn default() -> Self {
        DiseaseMap::new(3)
    }
}

impl DiseaseMap {
    pub fn new(min_obs: u32) -> Self {
        DiseaseMap {
            min_obs,
            counts: BTreeMap::new(),
            rejected: 0,
        }
    }

    /// Adds the observations. Ones that land on a non-crop cell are counted
    /// as rejected and otherwise ignored.
    pub fn fuse(&mut self, world: &World, obs: &[DiseaseObservation]) {
        for o in obs {
            let is_crop = o.cell < world.cells().len() && matches!(world.cells()[o.cell], CellKind::Crop(_));
            if !is_crop {
                self.rejected += 1;
                continue;
            }
            self.counts.entry(o.cell).or_insert([0; 3])[o.predicted.index()] += 1;
        }
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn counts(&self, cell: usize) -> [u32; 3] {
        self.counts.get(&cell).copied().unwrap_or([0; 3])
    }

    pub fn total(&self, cell: usize) -> u32 {
        self.counts(cell).iter().sum()
    }

    /// Majority label once the cell has at least `min_obs` observations.
    pub fn label(&self, cell: usize) -> Option<FusedLabel> {
        let c = self.counts(cell);
        let total: u32 = c.iter().sum();
        if total < self.min_obs || total == 0 {
            return None;
        }
        let top = *c.iter().max().unwrap();
        let mut winners = c.iter().enumerate().filter(|(_, &n)| n == top);
        let (first, _) = winners.next().unwrap();
        if winners.next().is_some() {
            Some(FusedLabel::Unresolved)
        } else {
            Some(FusedLabel::Class(CropClass::from_index(first).unwrap()))
        }
    }

    /// Cells with any observation, ascending.
    pub fn observed_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.keys().copied()
    }

    pub fn fused_count(&self) -> usize {
        self.counts.keys().filter(|&&c| self.label(c).is_some()).count()
    }
}

/// One-vs-rest metrics; `None` where the denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support: u64,
}

/// Metrics per class from a count matrix (rows true, columns predicted).
/// A fourth "no prediction" column may be folded in through `missed`.
pub fn metrics_from_confusion(counts: &[[u64; 3]; 3], missed: &[u64; 3]) -> [ClassMetrics; 3] {
    std::array::from_fn(|k| {
        let tp = counts[k][k];
        let predicted: u64 = (0..3).map(|r| counts[r][k]).sum();
        let actual: u64 = counts[k].iter().sum::<u64>() + missed[k];
        let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
        let recall = (actual > 0).then(|| tp as f64 / actual as f64);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseEvaluation {
    pub brown: ClassMetrics,
    pub yellow: ClassMetrics,
    pub healthy: ClassMetrics,
    /// Fused cells over all crop cells; 0 for a field without crops.
    pub coverage: f64,
    pub crop_cells: u64,
    pub fused_cells: u64,
    pub unresolved_cells: u64,
    pub rejected_observations: u64,
}

impl DiseaseEvaluation {
    pub fn class(&self, c: CropClass) -> &ClassMetrics {
        match c {
            CropClass::Brown => &self.brown,
            CropClass::Yellow => &self.yellow,
            CropClass::Healthy => &self.healthy,
        }
    }
}

/// Scores fused labels against the ground-truth crop classes. Metrics are
/// computed over fused cells; an unresolved cell counts against the recall
/// of its true class.
pub fn evaluate(map: &DiseaseMap, world: &World) -> DiseaseEvaluation {
    let mut counts = [[0u64; 3]; 3];
    let mut missed = [0u64; 3];
    let (mut crop_cells, mut fused, mut unresolved) = (0u64, 0u64, 0u64);
    for (cell, truth) in world.crop_cells() {
        crop_cells += 1;
        match map.label(cell) {
            Some(FusedLabel::Class(p)) => {
                fused += 1;
                counts[truth.index()][p.index()] += 1;
            }
            Some(FusedLabel::Unresolved) => {
                fused += 1;
                unresolved += 1;
                missed[truth.index()] += 1;
            }
            None => {}
        }
    }
    let [brown, yellow, healthy] = metrics_from_confusion(&counts, &missed);
    DiseaseEvaluation {
        brown,
        yellow,
        healthy,
        coverage: if crop_cells > 0 { fused as f64 / crop_cells as f64 } else { 0.0 },
        crop_cells,
        fused_cells: fused,
        unresolved_cells: unresolved,
        rejected_observations: map.rejected(),
    }
}

/// One row per ground-truth crop cell, row-major.
pub fn write_disease_csv<W: Write>(out: &mut W, map: &DiseaseMap, world: &World) -> std::io::Result<()> {
    let g = world.geometry();
    writeln!(out, "cell_x,cell_y,world_x,world_y,true_class,fused_class,n_obs,n_brown,n_yellow,n_healthy")?;
    for (cell, truth) in world.crop_cells() {
        let (ix, iy) = g.coords(cell);
        let (x, y) = g.cell_center(ix, iy);
        let c = map.counts(cell);
        let fused = map.label(cell).map_or("none", FusedLabel::name);
        writeln!(
            out,
            "{ix},{iy},{x:.3},{y:.3},{},{fused},{},{},{},{}",
            truth.name(),
            c[0] + c[1] + c[2],
            c[0],
            c[1],
            c[2]
        )?;
    }
    Ok(())
}
