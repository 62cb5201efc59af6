//! Experiment configurations. Every field has a default, so a config file
//! only needs the values it changes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::DEFAULT_TIME_LIMIT_S;
use crate::generate::{Homogeneity, NfGrouping};
use crate::scenario::read;

/// Ratio that lifts a non-homogeneous farm, whose capacity is 7/12 of the
/// demand it was sized for, back to the full demand.
pub const NON_HOMOGENEOUS_HEADROOM: f64 = 12.0 / 7.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostGapConfig {
    pub ms_counts: Vec<usize>,
    pub server_ratios: Vec<f64>,
    pub edge_probabilities: Vec<f64>,
    pub homogeneities: Vec<Homogeneity>,
    pub iterations: usize,
    /// Run `k` of every cell uses seed `seed + k`.
    pub seed: u64,
    pub time_limit_s: f64,
    /// Largest procedure size handed to the exact solver.
    pub max_exact_ms: usize,
    /// Write solver wall times; off makes the CSV byte-reproducible.
    pub timings: bool,
}

impl Default for CostGapConfig {
    fn default() -> Self {
        CostGapConfig {
            ms_counts: (6..=10).collect(),
            server_ratios: vec![0.5, 0.75],
            edge_probabilities: vec![0.25, 0.5, 0.75],
            homogeneities: vec![Homogeneity::Homogeneous, Homogeneity::NonHomogeneous],
            iterations: 500,
            seed: 1,
            time_limit_s: DEFAULT_TIME_LIMIT_S,
            max_exact_ms: 10,
            timings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchCompareConfig {
    /// Requested loads; each sizes its own farms.
    pub u_hats: Vec<u64>,
    pub server_counts: Vec<usize>,
    pub homogeneity: Homogeneity,
    /// Multiplier on the MS-based footprint the farms are sized against.
    pub capacity_headroom: f64,
    pub nf_threads: u64,
    pub procedure_threads: u64,
    /// NF grouping file; the bundled illustrative grouping when absent.
    pub grouping: Option<PathBuf>,
    /// Also record feasibility of every load from 0 to the requested one.
    pub record_bitmap: bool,
    pub timings: bool,
}

impl Default for ArchCompareConfig {
    fn default() -> Self {
        ArchCompareConfig {
            u_hats: vec![50],
            server_counts: (1..=25).map(|k| 10 * k).collect(),
            homogeneity: Homogeneity::NonHomogeneous,
            capacity_headroom: NON_HOMOGENEOUS_HEADROOM,
            nf_threads: 1,
            procedure_threads: 1,
            grouping: None,
            record_bitmap: false,
            timings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilizationConfig {
    pub servers: usize,
    pub homogeneity: Homogeneity,
    /// Load the farm is sized for.
    pub farm_u_hat: u64,
    pub capacity_headroom: f64,
    pub nf_threads: u64,
    pub procedure_threads: u64,
    pub u_step: u64,
    pub grouping: Option<PathBuf>,
}

impl Default for UtilizationConfig {
    fn default() -> Self {
        UtilizationConfig {
            servers: 5,
            homogeneity: Homogeneity::NonHomogeneous,
            farm_u_hat: 500,
            capacity_headroom: NON_HOMOGENEOUS_HEADROOM,
            nf_threads: 50,
            procedure_threads: 100,
            u_step: 1,
            grouping: None,
        }
    }
}

pub(crate) fn load_grouping(path: &Option<PathBuf>) -> Result<NfGrouping> {
    match path {
        None => Ok(NfGrouping::illustrative()),
        Some(p) => NfGrouping::from_json(&read(p)?),
    }
}

impl CostGapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !(self.time_limit_s > 0.0) {
            return Err(Error::config("time limit must be positive"));
        }
        if self.server_ratios.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::config("server ratios must be positive"));
        }
        if self.edge_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("edge probabilities must lie in [0, 1]"));
        }
        if let Some(&m) = self.ms_counts.iter().find(|&&m| m > self.max_exact_ms || m == 0) {
            return Err(Error::config(format!(
                "procedure size {m} is outside 1..={}",
                self.max_exact_ms
            )));
        }
        Ok(())
    }
}

impl ArchCompareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.server_counts.contains(&0) {
            return Err(Error::config("server counts must be positive"));
        }
        if !(self.capacity_headroom > 0.0) {
            return Err(Error::config("capacity headroom must be positive"));
        }
        Ok(())
    }
}

impl UtilizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.servers == 0 || self.u_step == 0 {
            return Err(Error::config("servers and load step must be positive"));
        }
        if !(self.capacity_headroom > 0.0) {
            return Err(Error::config("capacity headroom must be positive"));
        }
        Ok(())
    }
}
