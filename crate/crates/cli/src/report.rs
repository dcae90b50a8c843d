//! Metrics report file: a single JSON document with fixed key names.
//! Per-threshold metrics are arrays aligned with `thresholds`; MMD pair
//! aggregates are null when no molecule has two heavy edges.

use std::path::Path;

use gradconf_core::metrics::EnsembleMetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportFile {
    pub version: u32,
    pub num_molecules: usize,
    pub thresholds: Vec<f64>,
    pub cov_mean: Vec<f64>,
    pub cov_median: Vec<f64>,
    pub mis_mean: Vec<f64>,
    pub mis_median: Vec<f64>,
    pub mat_mean: f64,
    pub mat_median: f64,
    pub mmd_single_mean: f64,
    pub mmd_single_median: f64,
    pub mmd_pair_mean: Option<f64>,
    pub mmd_pair_median: Option<f64>,
    pub mmd_all_mean: f64,
    pub mmd_all_median: f64,
}

impl From<&EnsembleMetricsReport> for ReportFile {
    fn from(r: &EnsembleMetricsReport) -> Self {
        ReportFile {
            version: REPORT_VERSION,
            num_molecules: r.num_molecules,
            thresholds: r.thresholds.clone(),
            cov_mean: r.cov_mean.clone(),
            cov_median: r.cov_median.clone(),
            mis_mean: r.mis_mean.clone(),
            mis_median: r.mis_median.clone(),
            mat_mean: r.mat_mean,
            mat_median: r.mat_median,
            mmd_single_mean: r.mmd_single_mean,
            mmd_single_median: r.mmd_single_median,
            mmd_pair_mean: r.mmd_pair_mean,
            mmd_pair_median: r.mmd_pair_median,
            mmd_all_mean: r.mmd_all_mean,
            mmd_all_median: r.mmd_all_median,
        }
    }
}

pub fn write_report(path: &Path, report: &ReportFile) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<ReportFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
