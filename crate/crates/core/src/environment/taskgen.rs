//! Synthetic protein-folding workload.
//!
//! Each task stands for a folding problem over a chain of amino acids. The
//! circuit width equals the chain length; depth, cycle density and deadline
//! are drawn from configured ranges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{uniform, uniform_int};
use crate::error::ConfigError;
use crate::model::TaskSpec;
use crate::units::megabits_to_bits;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskGenConfig {
    pub amino_min: u32,
    pub amino_max: u32,
    pub datasize_min_mb: f64,
    pub datasize_max_mb: f64,
    pub cycles_per_bit_min: f64,
    pub cycles_per_bit_max: f64,
    pub deadline_min_s: f64,
    pub deadline_max_s: f64,
    pub depth_min: u32,
    pub depth_max: u32,
    pub ack_mb: f64,
}

impl Default for TaskGenConfig {
    fn default() -> Self {
        Self {
            amino_min: 30,
            amino_max: 90,
            datasize_min_mb: 160.0e2,
            datasize_max_mb: 320.0e2,
            cycles_per_bit_min: 50.0,
            cycles_per_bit_max: 200.0,
            deadline_min_s: 1500.0,
            deadline_max_s: 6000.0,
            depth_min: 10,
            depth_max: 100,
            ack_mb: 1.0,
        }
    }
}

impl TaskGenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ranges = [
            (
                "taskgen.amino",
                f64::from(self.amino_min),
                f64::from(self.amino_max),
            ),
            (
                "taskgen.datasize",
                self.datasize_min_mb,
                self.datasize_max_mb,
            ),
            (
                "taskgen.cycles_per_bit",
                self.cycles_per_bit_min,
                self.cycles_per_bit_max,
            ),
            ("taskgen.deadline", self.deadline_min_s, self.deadline_max_s),
            (
                "taskgen.depth",
                f64::from(self.depth_min),
                f64::from(self.depth_max),
            ),
        ];
        for (key, lo, hi) in ranges {
            if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("{key}_min"),
                    "must be positive",
                ));
            }
            if lo > hi {
                return Err(ConfigError::invalid(
                    format!("{key}_max"),
                    "must be >= the minimum",
                ));
            }
        }
        if !(self.ack_mb > 0.0 && self.ack_mb.is_finite()) {
            return Err(ConfigError::invalid("taskgen.ack_mb", "must be positive"));
        }
        Ok(())
    }
}

/// Draw one task. Always consumes the same number of random draws.
pub fn generate_task<R: Rng + ?Sized>(cfg: &TaskGenConfig, rng: &mut R) -> TaskSpec {
    let amino = uniform_int(rng, cfg.amino_min, cfg.amino_max);
    let datasize_mb = uniform(rng, cfg.datasize_min_mb, cfg.datasize_max_mb);
    let depth = uniform_int(rng, cfg.depth_min, cfg.depth_max);
    let cycles = uniform(rng, cfg.cycles_per_bit_min, cfg.cycles_per_bit_max);
    let deadline = uniform(rng, cfg.deadline_min_s, cfg.deadline_max_s);
    TaskSpec {
        data_bits: megabits_to_bits(datasize_mb),
        cycles_per_bit: cycles,
        deadline_s: deadline,
        circuit_qubits: amino,
        circuit_depth: depth,
        ack_bits: megabits_to_bits(cfg.ack_mb),
    }
}
