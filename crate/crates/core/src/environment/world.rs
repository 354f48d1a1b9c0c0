use serde::{Deserialize, Serialize};

use super::channel::channel_sample;
use super::mobility::{gmmm_step, initial_state, position_step, MobilityState};
use super::taskgen::{generate_task, TaskGenConfig};
use super::{stream_rng, uniform, uniform_int, Stream, WorldRng};
use crate::error::ConfigError;
use crate::lyapunov::SlotInput;
use crate::model::DeviceProfile;
use crate::units::dbm_to_watts;

/// Cell geometry, radio, device population and mobility settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub num_devices: usize,
    pub cell_radius_m: f64,
    pub bandwidth_hz: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub rayleigh_fading: bool,
    pub noise_power_dbm: f64,
    pub tx_power_min_dbm: f64,
    pub tx_power_max_dbm: f64,
    pub cpu_hz_choices: Vec<f64>,
    pub leased_cpu_hz_min: f64,
    pub leased_cpu_hz_max: f64,
    pub leased_qubits_min: u32,
    pub leased_qubits_max: u32,
    pub switched_cap_rho: f64,
    pub exponent_zeta: f64,
    /// Server CPU energy constants; `None` reuses the device constants.
    pub server_switched_cap_rho: Option<f64>,
    pub server_exponent_zeta: Option<f64>,
    pub weight_time: f64,
    pub weight_energy: f64,
    pub mean_speed_min: f64,
    pub mean_speed_max: f64,
    pub mobility_memory: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            num_devices: 15,
            cell_radius_m: 50.0,
            bandwidth_hz: 0.1e9,
            pathloss_ref_db: 30.0,
            pathloss_exponent: 3.0,
            shadowing_sigma_db: 8.0,
            rayleigh_fading: true,
            noise_power_dbm: -100.0,
            tx_power_min_dbm: 0.01,
            tx_power_max_dbm: 0.2,
            cpu_hz_choices: vec![1e9, 2e9, 3e9],
            leased_cpu_hz_min: 4e9,
            leased_cpu_hz_max: 8e9,
            leased_qubits_min: 1000,
            leased_qubits_max: 5000,
            switched_cap_rho: 1e-30,
            exponent_zeta: 3.0,
            server_switched_cap_rho: None,
            server_exponent_zeta: None,
            weight_time: 0.5,
            weight_energy: 0.5,
            mean_speed_min: 3.0,
            mean_speed_max: 5.0,
            mobility_memory: 0.8,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_devices == 0 {
            return Err(ConfigError::invalid(
                "world.num_devices",
                "must be at least 1",
            ));
        }
        for (key, v) in [
            ("world.cell_radius_m", self.cell_radius_m),
            ("world.bandwidth_hz", self.bandwidth_hz),
            ("world.pathloss_exponent", self.pathloss_exponent),
            ("world.leased_cpu_hz_min", self.leased_cpu_hz_min),
            ("world.switched_cap_rho", self.switched_cap_rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(key, "must be positive"));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(ConfigError::invalid(
                "world.shadowing_sigma_db",
                "must be non-negative",
            ));
        }
        for (key, v) in [
            ("world.noise_power_dbm", self.noise_power_dbm),
            ("world.pathloss_ref_db", self.pathloss_ref_db),
            ("world.tx_power_min_dbm", self.tx_power_min_dbm),
            ("world.tx_power_max_dbm", self.tx_power_max_dbm),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(key, "must be finite"));
            }
        }
        if self.tx_power_min_dbm > self.tx_power_max_dbm {
            return Err(ConfigError::invalid(
                "world.tx_power_max_dbm",
                "must be >= tx_power_min_dbm",
            ));
        }
        if self.cpu_hz_choices.is_empty() || self.cpu_hz_choices.iter().any(|f| !(*f > 0.0)) {
            return Err(ConfigError::invalid(
                "world.cpu_hz_choices",
                "must be a non-empty list of positive values",
            ));
        }
        if self.leased_cpu_hz_min > self.leased_cpu_hz_max {
            return Err(ConfigError::invalid(
                "world.leased_cpu_hz_max",
                "must be >= leased_cpu_hz_min",
            ));
        }
        if self.leased_qubits_min == 0 {
            return Err(ConfigError::invalid(
                "world.leased_qubits_min",
                "must be at least 1",
            ));
        }
        if self.leased_qubits_min > self.leased_qubits_max {
            return Err(ConfigError::invalid(
                "world.leased_qubits_max",
                "must be >= leased_qubits_min",
            ));
        }
        if !(self.exponent_zeta >= 2.0) {
            return Err(ConfigError::invalid("world.exponent_zeta", "must be >= 2"));
        }
        if let Some(r) = self.server_switched_cap_rho {
            if !(r > 0.0) {
                return Err(ConfigError::invalid(
                    "world.server_switched_cap_rho",
                    "must be positive",
                ));
            }
        }
        if let Some(z) = self.server_exponent_zeta {
            if !(z >= 2.0) {
                return Err(ConfigError::invalid(
                    "world.server_exponent_zeta",
                    "must be >= 2",
                ));
            }
        }
        for (key, v) in [
            ("world.weight_time", self.weight_time),
            ("world.weight_energy", self.weight_energy),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(key, "must be in [0, 1]"));
            }
        }
        if self.weight_time + self.weight_energy <= 0.0 {
            return Err(ConfigError::invalid(
                "world.weight_time",
                "weights must not both be zero",
            ));
        }
        if !(self.mean_speed_min >= 0.0 && self.mean_speed_min <= self.mean_speed_max) {
            return Err(ConfigError::invalid(
                "world.mean_speed_max",
                "need 0 <= mean_speed_min <= mean_speed_max",
            ));
        }
        if !(0.0..=1.0).contains(&self.mobility_memory) {
            return Err(ConfigError::invalid(
                "world.mobility_memory",
                "must be in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// Source of per-slot inputs for every device.
pub trait SlotSource {
    fn num_devices(&self) -> usize;
    fn next_slot(&mut self) -> Vec<SlotInput>;
}

/// The seeded stochastic world: static device draws at construction, then
/// per-slot channels, tasks and mobility.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    taskgen: TaskGenConfig,
    devices: Vec<DeviceProfile>,
    mobility: Vec<MobilityState>,
    mobility_rng: WorldRng,
    channel_rng: WorldRng,
    task_rng: WorldRng,
    slot: u64,
}

impl World {
    pub fn new(cfg: &WorldConfig, taskgen: &TaskGenConfig, seed: u64) -> Self {
        let mut static_rng = stream_rng(seed, Stream::Devices as u64);
        let mut placement_rng = stream_rng(seed, Stream::Placement as u64);
        let devices = (0..cfg.num_devices)
            .map(|_| {
                let tx_dbm = uniform(&mut static_rng, cfg.tx_power_min_dbm, cfg.tx_power_max_dbm);
                let cpu_idx = uniform_int(&mut static_rng, 0, cfg.cpu_hz_choices.len() as u32 - 1);
                let leased_cpu = uniform(
                    &mut static_rng,
                    cfg.leased_cpu_hz_min,
                    cfg.leased_cpu_hz_max,
                );
                let leased_qubits = uniform_int(
                    &mut static_rng,
                    cfg.leased_qubits_min,
                    cfg.leased_qubits_max,
                );
                DeviceProfile {
                    cpu_hz: cfg.cpu_hz_choices[cpu_idx as usize],
                    switched_cap_rho: cfg.switched_cap_rho,
                    exponent_zeta: cfg.exponent_zeta,
                    tx_power_w: dbm_to_watts(tx_dbm),
                    weight_time: cfg.weight_time,
                    weight_energy: cfg.weight_energy,
                    leased_cpu_hz: leased_cpu,
                    leased_qubits,
                    server_rho: cfg.server_switched_cap_rho.unwrap_or(cfg.switched_cap_rho),
                    server_zeta: cfg.server_exponent_zeta.unwrap_or(cfg.exponent_zeta),
                }
            })
            .collect();
        let mobility = (0..cfg.num_devices)
            .map(|_| {
                initial_state(
                    &mut placement_rng,
                    cfg.cell_radius_m,
                    cfg.mean_speed_min,
                    cfg.mean_speed_max,
                    cfg.mobility_memory,
                )
            })
            .collect();
        Self {
            cfg: cfg.clone(),
            taskgen: taskgen.clone(),
            devices,
            mobility,
            mobility_rng: stream_rng(seed, Stream::Mobility as u64),
            channel_rng: stream_rng(seed, Stream::Channel as u64),
            task_rng: stream_rng(seed, Stream::Tasks as u64),
            slot: 0,
        }
    }

    pub fn devices(&self) -> &[DeviceProfile] {
        &self.devices
    }

    pub fn mobility(&self) -> &[MobilityState] {
        &self.mobility
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }
}

impl SlotSource for World {
    fn num_devices(&self) -> usize {
        self.devices.len()
    }

    /// Channels at the current positions and fresh tasks, then every device
    /// moves one slot.
    fn next_slot(&mut self) -> Vec<SlotInput> {
        let inputs = self
            .devices
            .iter()
            .zip(&self.mobility)
            .map(|(dev, pos)| SlotInput {
                task: generate_task(&self.taskgen, &mut self.task_rng),
                device: *dev,
                channel: channel_sample(pos, &self.cfg, &mut self.channel_rng),
            })
            .collect();
        for state in &mut self.mobility {
            let moved = position_step(state, self.cfg.cell_radius_m);
            *state = gmmm_step(&moved, &mut self.mobility_rng);
        }
        self.slot += 1;
        inputs
    }
}

/// Identical inputs every slot.
#[derive(Debug, Clone)]
pub struct StationaryWorld {
    pub inputs: Vec<SlotInput>,
}

impl SlotSource for StationaryWorld {
    fn num_devices(&self) -> usize {
        self.inputs.len()
    }

    fn next_slot(&mut self) -> Vec<SlotInput> {
        self.inputs.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_streams() {
        let cfg = WorldConfig::default();
        let tg = TaskGenConfig::default();
        let mut a = World::new(&cfg, &tg, 42);
        let mut b = World::new(&cfg, &tg, 42);
        assert_eq!(a.devices(), b.devices());
        for _ in 0..50 {
            assert_eq!(a.next_slot(), b.next_slot());
            assert_eq!(a.mobility(), b.mobility());
        }
        let mut c = World::new(&cfg, &tg, 43);
        assert_ne!(a.next_slot(), c.next_slot());
    }

    #[test]
    fn static_draws_follow_config() {
        let cfg = WorldConfig::default();
        let w = World::new(&cfg, &TaskGenConfig::default(), 5);
        assert_eq!(w.devices().len(), 15);
        for d in w.devices() {
            assert!(d.validate().is_ok());
            assert!(cfg.cpu_hz_choices.contains(&d.cpu_hz));
            assert!((1000..=5000).contains(&d.leased_qubits));
            assert!(d.tx_power_w >= dbm_to_watts(0.01) && d.tx_power_w <= dbm_to_watts(0.2));
        }
    }

    #[test]
    fn task_stream_independent_of_world_parameters() {
        let tg = TaskGenConfig::default();
        let mut a = World::new(&WorldConfig::default(), &tg, 8);
        let mut b = World::new(
            &WorldConfig {
                tx_power_max_dbm: 1.0,
                leased_qubits_min: 3000,
                leased_qubits_max: 3000,
                ..WorldConfig::default()
            },
            &tg,
            8,
        );
        for _ in 0..20 {
            let sa = a.next_slot();
            let sb = b.next_slot();
            for (x, y) in sa.iter().zip(&sb) {
                assert_eq!(x.task, y.task);
                assert_eq!(x.channel, y.channel);
            }
        }
    }

    #[test]
    fn validation_names_key() {
        let cfg = WorldConfig {
            mobility_memory: 1.5,
            ..WorldConfig::default()
        };
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("world.mobility_memory"));
    }
}
