use serde::{Deserialize, Serialize};

use crate::environment::{path_loss_db, TaskGenConfig, WorldConfig};
use crate::lyapunov::SlotInput;
use crate::model::TaskSpec;
use crate::units::{linear_to_db, megabits_to_bits};

/// What a device observes at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub leased_cpu_hz: f64,
    pub cycles_per_bit: f64,
    pub task: TaskSpec,
    pub gain: f64,
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    pub backlog: f64,
}

impl Observation {
    pub fn new(input: &SlotInput, backlog: f64) -> Self {
        Self {
            leased_cpu_hz: input.device.leased_cpu_hz,
            cycles_per_bit: input.task.cycles_per_bit,
            task: input.task,
            gain: input.channel.gain,
            cpu_hz: input.device.cpu_hz,
            tx_power_w: input.device.tx_power_w,
            backlog,
        }
    }

    /// Raw features in network order, excluding the backlog.
    fn raw(&self) -> [f64; NUM_FEATURES] {
        [
            self.leased_cpu_hz,
            self.cycles_per_bit,
            self.task.data_bits,
            self.task.deadline_s,
            f64::from(self.task.circuit_qubits),
            f64::from(self.task.circuit_depth),
            linear_to_db(self.gain),
            self.cpu_hz,
            linear_to_db(self.tx_power_w),
        ]
    }
}

const NUM_FEATURES: usize = 9;

/// Min-max scaling of observations into `[0, 1]`. The backlog, which has
/// no configured bound, is squashed with `z / (1 + z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationScaler {
    ranges: Vec<(f64, f64)>,
}

impl ObservationScaler {
    /// Ranges implied by the world and workload configuration. Channel gain
    /// spans the path loss over the cell widened by three shadowing standard
    /// deviations and a deep-fade margin.
    pub fn from_config(world: &WorldConfig, taskgen: &TaskGenConfig) -> Self {
        let pl_near = path_loss_db(1.0, world.pathloss_ref_db, world.pathloss_exponent);
        let pl_far = path_loss_db(
            world.cell_radius_m,
            world.pathloss_ref_db,
            world.pathloss_exponent,
        );
        let shadow = 3.0 * world.shadowing_sigma_db;
        let (fade_lo, fade_hi) = if world.rayleigh_fading {
            (-20.0, 7.0)
        } else {
            (0.0, 0.0)
        };
        let cpu_lo = world
            .cpu_hz_choices
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let cpu_hi = world
            .cpu_hz_choices
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            ranges: vec![
                (world.leased_cpu_hz_min, world.leased_cpu_hz_max),
                (taskgen.cycles_per_bit_min, taskgen.cycles_per_bit_max),
                (
                    megabits_to_bits(taskgen.datasize_min_mb),
                    megabits_to_bits(taskgen.datasize_max_mb),
                ),
                (taskgen.deadline_min_s, taskgen.deadline_max_s),
                (f64::from(taskgen.amino_min), f64::from(taskgen.amino_max)),
                (f64::from(taskgen.depth_min), f64::from(taskgen.depth_max)),
                (-pl_far - shadow + fade_lo, -pl_near + shadow + fade_hi),
                (cpu_lo, cpu_hi),
                (world.tx_power_min_dbm - 30.0, world.tx_power_max_dbm - 30.0),
            ],
        }
    }

    /// Ranges spanning a fixed set of inputs.
    pub fn from_inputs(inputs: &[SlotInput]) -> Self {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); NUM_FEATURES];
        for input in inputs {
            for (r, v) in ranges.iter_mut().zip(Observation::new(input, 0.0).raw()) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Self { ranges }
    }

    pub fn dim(&self, include_backlog: bool) -> usize {
        self.ranges.len() + usize::from(include_backlog)
    }

    pub fn normalize(&self, obs: &Observation, include_backlog: bool) -> Vec<f64> {
        let mut out: Vec<f64> = obs
            .raw()
            .iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        if include_backlog {
            let z = obs.backlog.max(0.0);
            out.push(z / (1.0 + z));
        }
        out
    }

    pub fn features(&self, input: &SlotInput, backlog: f64, include_backlog: bool) -> Vec<f64> {
        self.normalize(&Observation::new(input, backlog), include_backlog)
    }
}
