//! Statistical crop-disease detector and majority-vote disease map.

mod detector;
mod fusion;

pub use detector::{classify, observe, profile_from_paper, DetectionClock, DetectorProfile, DiseaseObservation};
pub use fusion::{evaluate, metrics_from_confusion, write_disease_csv, ClassMetrics, DiseaseEvaluation, DiseaseMap, FusedLabel};
