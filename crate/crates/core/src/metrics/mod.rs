//! Graph statistics, set-level discrepancies and edge classification scores.

pub mod distance;
pub mod edges;
pub mod orbits;
pub mod stats;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use distance::{emd_1d, euclidean, gaussian_kernel, mmd_squared};
pub use edges::{edge_class_metrics, Confusion, EdgeClassReport};
pub use orbits::{orbit_counts, orbit_mean_vector, ORBITS};
pub use stats::{clustering_bin, clustering_coefficients, clustering_histogram, degree_histogram, CLUSTERING_BINS};

use crate::error::Result;
use crate::matrix::DenseMatrix;

/// Descriptors of one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub degree_hist: Vec<f64>,
    pub clustering_hist: Vec<f64>,
    pub orbit_mean: [f64; ORBITS],
}

impl GraphStats {
    pub fn of(a: &DenseMatrix) -> Result<Self> {
        Ok(Self {
            degree_hist: degree_histogram(a)?,
            clustering_hist: clustering_histogram(a)?,
            orbit_mean: orbit_mean_vector(&orbit_counts(a)?),
        })
    }
}

/// Gaussian bandwidth per statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MmdConfig {
    pub degree_sigma: f64,
    pub clustering_sigma: f64,
    pub orbit_sigma: f64,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            degree_sigma: 1.0,
            clustering_sigma: 1.0,
            orbit_sigma: 1.0,
        }
    }
}

/// Squared discrepancies between two graph sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmdReport {
    pub degree_mmd: f64,
    pub clustering_mmd: f64,
    pub orbit_mmd: f64,
    pub left_size: usize,
    pub right_size: usize,
    pub sigma: MmdConfig,
}

pub fn compare_stats(left: &[GraphStats], right: &[GraphStats], config: &MmdConfig) -> Result<MmdReport> {
    let degree: Vec<&[f64]> = left.iter().map(|s| s.degree_hist.as_slice()).collect();
    let degree_r: Vec<&[f64]> = right.iter().map(|s| s.degree_hist.as_slice()).collect();
    let clus: Vec<&[f64]> = left.iter().map(|s| s.clustering_hist.as_slice()).collect();
    let clus_r: Vec<&[f64]> = right.iter().map(|s| s.clustering_hist.as_slice()).collect();
    let orb: Vec<&[f64]> = left.iter().map(|s| s.orbit_mean.as_slice()).collect();
    let orb_r: Vec<&[f64]> = right.iter().map(|s| s.orbit_mean.as_slice()).collect();
    Ok(MmdReport {
        degree_mmd: mmd_squared(&degree, &degree_r, emd_1d, config.degree_sigma)?,
        clustering_mmd: mmd_squared(&clus, &clus_r, emd_1d, config.clustering_sigma)?,
        orbit_mmd: mmd_squared(&orb, &orb_r, euclidean, config.orbit_sigma)?,
        left_size: left.len(),
        right_size: right.len(),
        sigma: *config,
    })
}

pub fn compare_graphs(left: &[DenseMatrix], right: &[DenseMatrix], config: &MmdConfig) -> Result<MmdReport> {
    let l = left.iter().map(GraphStats::of).collect::<Result<Vec<_>>>()?;
    let r = right.iter().map(GraphStats::of).collect::<Result<Vec<_>>>()?;
    compare_stats(&l, &r, config)
}

pub const REPORT_HEADER: &str = "degree_mmd,clustering_mmd,orbit_mmd,acc,iou,dice,precision,recall";

/// One evaluated pair of graph sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub mmd: MmdReport,
    pub edges: EdgeClassReport,
}

impl EvalRow {
    pub fn csv_fields(&self) -> String {
        let (m, e) = (&self.mmd, &self.edges);
        format!(
            "{},{},{},{},{},{},{},{}",
            m.degree_mmd, m.clustering_mmd, m.orbit_mmd, e.accuracy, e.iou, e.dice, e.precision, e.recall
        )
    }
}

pub fn report_csv(rows: &[EvalRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_fields());
    }
    out
}

/// Scores predicted graphs against their ground truth, pairwise and as sets.
pub fn evaluate_predictions(predicted: &[DenseMatrix], truth: &[DenseMatrix], config: &MmdConfig) -> Result<(Vec<EdgeClassReport>, EvalRow)> {
    let per_sample = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| edge_class_metrics(p, t))
        .collect::<Result<Vec<_>>>()?;
    let mmd = compare_graphs(predicted, truth, config)?;
    let edges = EdgeClassReport::mean(&per_sample).expect("nonempty after MMD check");
    Ok((per_sample, EvalRow { mmd, edges }))
}
