//! Random procedure graphs for the cost-gap study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CpProcedure, MsEdge, MsSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphConfig {
    pub ms_count: usize,
    /// Probability that an ordered pair `(i, j)` carries an edge.
    pub edge_probability: f64,
    pub base_time_s: f64,
    pub remote_penalty_s: f64,
    pub cpu_footprint: f64,
    pub mem_footprint: f64,
    pub max_load: u64,
    pub seed: u64,
}

impl RandomGraphConfig {
    /// Unit footprints, 1 ms base time, 0.5 ms remote penalty, one request
    /// per instance.
    pub fn unit(ms_count: usize, edge_probability: f64, seed: u64) -> Self {
        RandomGraphConfig {
            ms_count,
            edge_probability,
            base_time_s: 0.001,
            remote_penalty_s: 0.0005,
            cpu_footprint: 1.0,
            mem_footprint: 1.0,
            max_load: 1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::config(format!(
                "edge probability {} is outside [0, 1]",
                self.edge_probability
            )));
        }
        if !(self.base_time_s > 0.0) || !(self.remote_penalty_s >= 0.0) {
            return Err(Error::config(
                "base time must be positive and remote penalty nonnegative",
            ));
        }
        if !(self.cpu_footprint >= 0.0) || !(self.mem_footprint >= 0.0) {
            return Err(Error::config("footprints must be nonnegative"));
        }
        if self.max_load == 0 {
            return Err(Error::config("max load must be at least 1"));
        }
        Ok(())
    }
}

/// Draws every ordered pair `(i, j)`, `i != j`, independently with the
/// configured probability, in row-major order.
pub fn gen_random_procedure(config: &RandomGraphConfig, id: usize) -> Result<CpProcedure> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.ms_count;
    let ms = (0..n)
        .map(|i| MsSpec {
            id: i,
            cpu_footprint: config.cpu_footprint,
            mem_footprint: config.mem_footprint,
            remote_penalty: config.remote_penalty_s,
            max_load: config.max_load,
        })
        .collect();
    let mut edges = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if src != dst && rng.gen_bool(config.edge_probability) {
                edges.push(MsEdge {
                    src,
                    dst,
                    base_time: config.base_time_s,
                });
            }
        }
    }
    CpProcedure::new(id, ms, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_probabilities() {
        let none = gen_random_procedure(&RandomGraphConfig::unit(7, 0.0, 3), 0).unwrap();
        assert!(none.edges().is_empty());
        let all = gen_random_procedure(&RandomGraphConfig::unit(4, 1.0, 3), 0).unwrap();
        assert_eq!(all.edges().len(), 12);
    }

    #[test]
    fn same_seed_same_graph() {
        let c = RandomGraphConfig::unit(9, 0.5, 42);
        let a = gen_random_procedure(&c, 0).unwrap();
        let b = gen_random_procedure(&c, 0).unwrap();
        assert_eq!(a.edges(), b.edges());
        let other = gen_random_procedure(&RandomGraphConfig { seed: 43, ..c }, 0).unwrap();
        assert_ne!(a.edges(), other.edges());
    }

    #[test]
    fn bad_probability_is_rejected() {
        assert!(gen_random_procedure(&RandomGraphConfig::unit(3, 1.5, 0), 0).is_err());
    }

    #[test]
    fn mean_edge_count_is_binomial() {
        // 500 graphs of 90 ordered pairs at p = 0.75: the sample mean has
        // standard deviation sqrt(90 * 0.75 * 0.25 / 500).
        let runs = 500;
        let total: usize = (0..runs)
            .map(|seed| {
                gen_random_procedure(&RandomGraphConfig::unit(10, 0.75, seed), 0)
                    .unwrap()
                    .edges()
                    .len()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let sd = (90.0 * 0.75 * 0.25 / runs as f64).sqrt();
        assert!((mean - 67.5).abs() <= 3.0 * sd, "mean {mean}");
    }
}
