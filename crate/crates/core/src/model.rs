//! Per-slot physical cost model for one device.
//!
//! Three execution paths exist for a task of `d` bits:
//!
//! * **local**: the device processes `(1 - phi) * d` bits on its own CPU;
//! * **cloud CPU**: `phi * d` bits are uploaded, processed on a leased server
//!   CPU and a result packet of `ack_bits` is returned;
//! * **cloud QPU**: as above, but the offloaded share runs as a quantum circuit
//!   with error correction.
//!
//! The local and offloaded shares run concurrently, so the completion time
//! used for the deadline check is the later of the two branches. The scalar
//! cost ([`CostBreakdown::wset`]) is the weighted sum of a `phi`-weighted
//! time term and a `phi`-weighted energy term. Because each branch's own
//! time and energy already scale with its share, that cost is a convex
//! quadratic in `phi` within a fixed mode; [`OffloadProfile`] exposes the
//! coefficients.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Relative slack applied when checking `time <= deadline`.
pub const DEADLINE_RTOL: f64 = 1e-12;

/// Minimum success probability for a quantum execution to be accepted.
pub const MIN_SUCCESS_PROBABILITY: f64 = 2.0 / 3.0;

/// One computation task arriving at a device in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub data_bits: f64,
    pub cycles_per_bit: f64,
    pub deadline_s: f64,
    pub circuit_qubits: u32,
    pub circuit_depth: u32,
    pub ack_bits: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("task.data_bits", self.data_bits)?;
        positive("task.cycles_per_bit", self.cycles_per_bit)?;
        positive("task.deadline_s", self.deadline_s)?;
        positive("task.ack_bits", self.ack_bits)?;
        if self.circuit_qubits == 0 {
            return Err(ModelError::NotPositive("task.circuit_qubits"));
        }
        if self.circuit_depth == 0 {
            return Err(ModelError::NotPositive("task.circuit_depth"));
        }
        Ok(())
    }

    /// Number of locations where a logical error may occur (width x depth).
    pub fn error_locations(&self) -> f64 {
        f64::from(self.circuit_qubits) * f64::from(self.circuit_depth)
    }

    pub fn total_cycles(&self) -> f64 {
        self.data_bits * self.cycles_per_bit
    }
}

/// Static per-device compute, radio and preference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub cpu_hz: f64,
    pub switched_cap_rho: f64,
    pub exponent_zeta: f64,
    pub tx_power_w: f64,
    pub weight_time: f64,
    pub weight_energy: f64,
    pub leased_cpu_hz: f64,
    pub leased_qubits: u32,
    /// Energy constants of the leased server CPU. Equal to the device's
    /// constants unless configured otherwise.
    pub server_rho: f64,
    pub server_zeta: f64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("device.cpu_hz", self.cpu_hz)?;
        positive("device.switched_cap_rho", self.switched_cap_rho)?;
        positive("device.tx_power_w", self.tx_power_w)?;
        positive("device.leased_cpu_hz", self.leased_cpu_hz)?;
        positive("device.server_rho", self.server_rho)?;
        if !(self.exponent_zeta >= 2.0) {
            return Err(ModelError::OutOfRange("device.exponent_zeta", ">= 2"));
        }
        if !(self.server_zeta >= 2.0) {
            return Err(ModelError::OutOfRange("device.server_zeta", ">= 2"));
        }
        unit_interval("device.weight_time", self.weight_time)?;
        unit_interval("device.weight_energy", self.weight_energy)?;
        if self.weight_time + self.weight_energy <= 0.0 {
            return Err(ModelError::OutOfRange(
                "device.weight_time + device.weight_energy",
                "> 0",
            ));
        }
        if self.leased_qubits == 0 {
            return Err(ModelError::NotPositive("device.leased_qubits"));
        }
        Ok(())
    }
}

/// Uplink channel realization for one device in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub gain: f64,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
}

impl ChannelState {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("channel.gain", self.gain)?;
        positive("channel.bandwidth_hz", self.bandwidth_hz)?;
        positive("channel.noise_power_w", self.noise_power_w)
    }
}

/// Gate timings, powers and parallelism of the quantum server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumHardwareParams {
    pub t_1qb_s: f64,
    pub t_2qb_s: f64,
    pub t_meas_s: f64,
    pub p_1qb_w: f64,
    pub p_2qb_w: f64,
    pub p_meas_w: f64,
    pub p_qubit_w: f64,
    pub n_1qb: f64,
    pub n_2qb: f64,
    pub n_meas: f64,
    pub phys_per_logical: u32,
}

impl QuantumHardwareParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("quantum.t_1qb_s", self.t_1qb_s),
            ("quantum.t_2qb_s", self.t_2qb_s),
            ("quantum.t_meas_s", self.t_meas_s),
            ("quantum.p_1qb_w", self.p_1qb_w),
            ("quantum.p_2qb_w", self.p_2qb_w),
            ("quantum.p_meas_w", self.p_meas_w),
            ("quantum.p_qubit_w", self.p_qubit_w),
            ("quantum.n_1qb", self.n_1qb),
            ("quantum.n_2qb", self.n_2qb),
            ("quantum.n_meas", self.n_meas),
        ] {
            positive(name, v)?;
        }
        if self.phys_per_logical == 0 {
            return Err(ModelError::NotPositive("quantum.phys_per_logical"));
        }
        Ok(())
    }

    /// Gate time per (bit x circuit qubit) of offloaded work.
    pub fn gate_time_per_unit(&self) -> f64 {
        self.t_1qb_s * self.n_1qb + self.t_2qb_s * self.n_2qb + self.t_meas_s * self.n_meas
    }

    /// Gate plus qubit-upkeep energy per (bit x circuit qubit).
    pub fn energy_per_unit(&self) -> f64 {
        self.p_1qb_w * self.n_1qb
            + self.p_2qb_w * self.n_2qb
            + self.p_meas_w * self.n_meas
            + self.p_qubit_w * f64::from(self.phys_per_logical)
    }
}

impl Default for QuantumHardwareParams {
    /// Placeholder constants. They are not calibrated against hardware and
    /// must be set explicitly for absolute-number studies.
    fn default() -> Self {
        Self {
            t_1qb_s: 1e-13,
            t_2qb_s: 3e-13,
            t_meas_s: 5e-13,
            p_1qb_w: 2e-13,
            p_2qb_w: 4e-13,
            p_meas_w: 4e-13,
            p_qubit_w: 1e-14,
            n_1qb: 100.0,
            n_2qb: 50.0,
            n_meas: 20.0,
            phys_per_logical: 49,
        }
    }
}

/// Error-correction constants of the quantum server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QecParams {
    pub err_rate: f64,
    pub err_threshold: f64,
    pub concat_level: u32,
}

impl QecParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        open_unit_interval("qec.err_rate", self.err_rate)?;
        open_unit_interval("qec.err_threshold", self.err_threshold)
    }
}

impl Default for QecParams {
    fn default() -> Self {
        Self {
            err_rate: 2e-3,
            err_threshold: 1e-2,
            concat_level: 1,
        }
    }
}

/// Execution mode of a task in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Local,
    Cpu,
    Qpu,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Local, Mode::Cpu, Mode::Qpu];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Cpu => "cpu",
            Mode::Qpu => "qpu",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-slot action of one device: offloaded share and server type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub phi: f64,
    /// `true` selects the server CPU, `false` the QPU. Ignored when `phi == 0`.
    pub use_classical: bool,
}

impl Decision {
    pub fn local() -> Self {
        Self {
            phi: 0.0,
            use_classical: true,
        }
    }

    /// Offload `phi` of the task in `mode`. `Mode::Local` always yields `phi = 0`.
    pub fn offload(mode: Mode, phi: f64) -> Self {
        match mode {
            Mode::Local => Self::local(),
            Mode::Cpu => Self {
                phi,
                use_classical: true,
            },
            Mode::Qpu => Self {
                phi,
                use_classical: false,
            },
        }
    }

    pub fn mode(&self) -> Mode {
        if self.phi == 0.0 {
            Mode::Local
        } else if self.use_classical {
            Mode::Cpu
        } else {
            Mode::Qpu
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if (0.0..=1.0).contains(&self.phi) {
            Ok(())
        } else {
            Err(ModelError::OutOfRange("decision.phi", "[0, 1]"))
        }
    }
}

/// Time, energy and weighted cost of one decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Completion time of the slot's task, `max(local_time_s, remote_time_s)`.
    pub time_s: f64,
    /// `phi`-weighted time term of the cost.
    pub time_term_s: f64,
    /// `phi`-weighted energy term of the cost.
    pub energy_j: f64,
    pub wset: f64,
    pub feasible: bool,
    pub local_time_s: f64,
    pub remote_time_s: f64,
}

/// Upload, server compute and result-return times on the CPU path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuStages {
    pub upload_s: f64,
    pub compute_s: f64,
    pub ack_s: f64,
}

impl CpuStages {
    pub fn total(&self) -> f64 {
        self.upload_s + self.compute_s + self.ack_s
    }
}

/// Gate execution, upload and result-return times on the QPU path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpuStages {
    pub compute_s: f64,
    pub upload_s: f64,
    pub ack_s: f64,
}

impl QpuStages {
    pub fn total(&self) -> f64 {
        self.compute_s + self.upload_s + self.ack_s
    }
}

pub fn local_time(task: &TaskSpec, phi: f64, dev: &DeviceProfile) -> f64 {
    (1.0 - phi) * task.data_bits * task.cycles_per_bit / dev.cpu_hz
}

pub fn local_energy(task: &TaskSpec, phi: f64, dev: &DeviceProfile) -> f64 {
    dev.switched_cap_rho * dev.cpu_hz.powf(dev.exponent_zeta) * local_time(task, phi, dev)
}

/// Shannon rate of the uplink in bits per second.
pub fn tx_rate(ch: &ChannelState, tx_power_w: f64) -> f64 {
    ch.bandwidth_hz * (1.0 + tx_power_w * ch.gain / ch.noise_power_w).log2()
}

pub fn cloud_cpu_time(task: &TaskSpec, phi: f64, rate_bps: f64, dev: &DeviceProfile) -> CpuStages {
    CpuStages {
        upload_s: phi * task.data_bits / rate_bps,
        compute_s: phi * task.data_bits * task.cycles_per_bit / dev.leased_cpu_hz,
        ack_s: task.ack_bits / rate_bps,
    }
}

pub fn cloud_cpu_energy(task: &TaskSpec, phi: f64, rate_bps: f64, dev: &DeviceProfile) -> f64 {
    let st = cloud_cpu_time(task, phi, rate_bps, dev);
    dev.tx_power_w * st.upload_s
        + dev.server_rho * dev.leased_cpu_hz.powf(dev.server_zeta) * st.compute_s
        + dev.tx_power_w * st.ack_s
}

pub fn quantum_time(
    task: &TaskSpec,
    phi: f64,
    rate_bps: f64,
    qhw: &QuantumHardwareParams,
) -> QpuStages {
    QpuStages {
        compute_s: phi * task.data_bits * f64::from(task.circuit_qubits) * qhw.gate_time_per_unit(),
        upload_s: phi * task.data_bits / rate_bps,
        ack_s: task.ack_bits / rate_bps,
    }
}

/// Transmit energy is charged against the upload and result-return stages.
pub fn quantum_energy(
    task: &TaskSpec,
    phi: f64,
    rate_bps: f64,
    dev: &DeviceProfile,
    qhw: &QuantumHardwareParams,
) -> f64 {
    let st = quantum_time(task, phi, rate_bps, qhw);
    phi * task.data_bits * f64::from(task.circuit_qubits) * qhw.energy_per_unit()
        + dev.tx_power_w * (st.upload_s + st.ack_s)
}

/// Linearized success probability of an error-corrected circuit. Not clamped:
/// very large circuits give negative values.
pub fn success_probability(task: &TaskSpec, qec: &QecParams) -> f64 {
    let exponent = 2f64.powi(qec.concat_level.min(1023) as i32);
    1.0 - task.error_locations() * qec.err_rate * (qec.err_rate / qec.err_threshold).powf(exponent)
}

pub fn quantum_feasible(task: &TaskSpec, dev: &DeviceProfile, qec: &QecParams) -> bool {
    task.circuit_qubits <= dev.leased_qubits
        && success_probability(task, qec) >= MIN_SUCCESS_PROBABILITY
}

pub fn meets_deadline(time_s: f64, deadline_s: f64) -> bool {
    time_s <= deadline_s * (1.0 + DEADLINE_RTOL)
}

/// Full cost of one decision.
pub fn evaluate(
    decision: &Decision,
    task: &TaskSpec,
    dev: &DeviceProfile,
    ch: &ChannelState,
    qhw: &QuantumHardwareParams,
    qec: &QecParams,
) -> CostBreakdown {
    let phi = decision.phi;
    let t_local = local_time(task, phi, dev);
    let e_local = local_energy(task, phi, dev);
    let (remote_time, remote_energy, quantum_ok) = if phi == 0.0 {
        (0.0, 0.0, true)
    } else {
        let rate = tx_rate(ch, dev.tx_power_w);
        if decision.use_classical {
            (
                cloud_cpu_time(task, phi, rate, dev).total(),
                cloud_cpu_energy(task, phi, rate, dev),
                true,
            )
        } else {
            (
                quantum_time(task, phi, rate, qhw).total(),
                quantum_energy(task, phi, rate, dev, qhw),
                quantum_feasible(task, dev, qec),
            )
        }
    };
    let time_term = (1.0 - phi) * t_local + phi * remote_time;
    let energy_term = (1.0 - phi) * e_local + phi * remote_energy;
    let time_s = t_local.max(remote_time);
    CostBreakdown {
        time_s,
        time_term_s: time_term,
        energy_j: energy_term,
        wset: dev.weight_time * time_term + dev.weight_energy * energy_term,
        feasible: meets_deadline(time_s, task.deadline_s) && quantum_ok,
        local_time_s: t_local,
        remote_time_s: remote_time,
    }
}

/// Closed-form description of one offload mode for a fixed task, device and
/// channel.
///
/// For `phi > 0`:
///
/// ```text
/// local_time(phi)  = (1 - phi) * local_full_s
/// remote_time(phi) = phi * remote_per_phi_s + ack_s
/// wset(phi)        = c0 + c1 * phi + c2 * phi^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadProfile {
    pub mode: Mode,
    pub local_full_s: f64,
    pub remote_per_phi_s: f64,
    pub ack_s: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl OffloadProfile {
    /// Profile of `mode` (must be `Cpu` or `Qpu`).
    pub fn new(
        mode: Mode,
        task: &TaskSpec,
        dev: &DeviceProfile,
        ch: &ChannelState,
        qhw: &QuantumHardwareParams,
    ) -> Self {
        assert!(mode != Mode::Local, "offload profile needs a remote mode");
        let rate = tx_rate(ch, dev.tx_power_w);
        let local_full = local_time(task, 0.0, dev);
        let local_energy_full = local_energy(task, 0.0, dev);
        let (per_phi_time, ack_s, per_phi_energy, ack_energy) = match mode {
            Mode::Cpu => {
                let st = cloud_cpu_time(task, 1.0, rate, dev);
                let server_power = dev.server_rho * dev.leased_cpu_hz.powf(dev.server_zeta);
                (
                    st.upload_s + st.compute_s,
                    st.ack_s,
                    dev.tx_power_w * st.upload_s + server_power * st.compute_s,
                    dev.tx_power_w * st.ack_s,
                )
            }
            _ => {
                let st = quantum_time(task, 1.0, rate, qhw);
                let gate_energy =
                    task.data_bits * f64::from(task.circuit_qubits) * qhw.energy_per_unit();
                (
                    st.upload_s + st.compute_s,
                    st.ack_s,
                    gate_energy + dev.tx_power_w * st.upload_s,
                    dev.tx_power_w * st.ack_s,
                )
            }
        };
        // (1-phi)^2 * L + phi * (phi * U + A), separately for time and energy.
        let lt = dev.weight_time;
        let le = dev.weight_energy;
        let local_w = lt * local_full + le * local_energy_full;
        let per_phi_w = lt * per_phi_time + le * per_phi_energy;
        let ack_w = lt * ack_s + le * ack_energy;
        Self {
            mode,
            local_full_s: local_full,
            remote_per_phi_s: per_phi_time,
            ack_s,
            c0: local_w,
            c1: ack_w - 2.0 * local_w,
            c2: local_w + per_phi_w,
        }
    }

    pub fn wset_at(&self, phi: f64) -> f64 {
        self.c0 + phi * (self.c1 + phi * self.c2)
    }

    pub fn local_time_at(&self, phi: f64) -> f64 {
        (1.0 - phi) * self.local_full_s
    }

    pub fn remote_time_at(&self, phi: f64) -> f64 {
        phi * self.remote_per_phi_s + self.ack_s
    }

    pub fn completion_time_at(&self, phi: f64) -> f64 {
        self.local_time_at(phi).max(self.remote_time_at(phi))
    }

    /// Closed interval of `phi` in `[lo_bound, 1]` meeting the deadline, or
    /// `None` when no such share exists.
    pub fn feasible_interval(&self, deadline_s: f64, lo_bound: f64) -> Option<(f64, f64)> {
        let mut lo = lo_bound;
        let mut hi: f64 = 1.0;
        if self.local_full_s > 0.0 {
            lo = lo.max(1.0 - deadline_s / self.local_full_s);
        }
        if self.ack_s > deadline_s {
            return None;
        }
        if self.remote_per_phi_s > 0.0 {
            hi = hi.min((deadline_s - self.ack_s) / self.remote_per_phi_s);
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Share in `[lo_bound, 1]` minimizing the completion time, where the
    /// falling local branch crosses the rising remote branch.
    pub fn fastest_phi(&self, lo_bound: f64) -> f64 {
        let denom = self.local_full_s + self.remote_per_phi_s;
        let crossing = if denom > 0.0 {
            (self.local_full_s - self.ack_s) / denom
        } else {
            1.0
        };
        crossing.clamp(lo_bound, 1.0)
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotPositive(name))
    }
}

fn unit_interval(name: &'static str, v: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ModelError::OutOfRange(name, "[0, 1]"))
    }
}

fn open_unit_interval(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange(name, "(0, 1)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn task() -> TaskSpec {
        TaskSpec {
            data_bits: 1e8,
            cycles_per_bit: 10.0,
            deadline_s: 5.0,
            circuit_qubits: 10,
            circuit_depth: 10,
            ack_bits: 1e6,
        }
    }

    pub(crate) fn device() -> DeviceProfile {
        DeviceProfile {
            cpu_hz: 1e9,
            switched_cap_rho: 1e-27,
            exponent_zeta: 2.0,
            tx_power_w: 0.1,
            weight_time: 0.5,
            weight_energy: 0.5,
            leased_cpu_hz: 1e9,
            leased_qubits: 5000,
            server_rho: 1e-27,
            server_zeta: 2.0,
        }
    }

    /// Channel giving `snr` at the test device's 0.1 W transmit power.
    fn channel_with_snr(snr: f64) -> ChannelState {
        ChannelState {
            gain: snr * 10.0,
            bandwidth_hz: 1e8,
            noise_power_w: 1.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn local_time_examples() {
        let mut t = task();
        t.data_bits = 1e8;
        t.cycles_per_bit = 10.0;
        let d = device();
        assert!(rel(local_time(&t, 0.0, &d), 1.0) < 1e-15);
        assert_eq!(local_time(&t, 1.0, &d), 0.0);
        assert!(rel(local_time(&t, 0.5, &d), 0.5) < 1e-15);
    }

    #[test]
    fn local_energy_examples() {
        let t = task();
        let mut d = device();
        assert!(rel(local_energy(&t, 0.0, &d), 1e-9) < 1e-12);
        assert_eq!(local_energy(&t, 1.0, &d), 0.0);
        let base = local_energy(&t, 0.3, &d);
        d.switched_cap_rho *= 2.0;
        assert!(rel(local_energy(&t, 0.3, &d), 2.0 * base) < 1e-15);
    }

    #[test]
    fn tx_rate_examples() {
        assert!(rel(tx_rate(&channel_with_snr(1.0), 0.1), 1e8) < 1e-15);
        assert!(rel(tx_rate(&channel_with_snr(3.0), 0.1), 2e8) < 1e-15);
        // B * log2(1.5)
        assert!(rel(tx_rate(&channel_with_snr(0.5), 0.1), 5.849625007211562e7) < 1e-12);
    }

    #[test]
    fn cloud_cpu_examples() {
        let t = task();
        let d = device();
        let st = cloud_cpu_time(&t, 1.0, 1e8, &d);
        assert!(rel(st.upload_s, 1.0) < 1e-15);
        assert!(rel(st.compute_s, 1.0) < 1e-15);
        assert!(rel(st.ack_s, 0.01) < 1e-15);
        let e = cloud_cpu_energy(&t, 1.0, 1e8, &d);
        assert!(rel(e, 0.101000001) < 1e-12);

        let tiny = cloud_cpu_time(&t, 1e-12, 1e8, &d);
        assert!(tiny.upload_s < 1e-11 && tiny.compute_s < 1e-11);
        assert_eq!(tiny.ack_s, st.ack_s);

        let half = cloud_cpu_time(&t, 1.0, 5e7, &d);
        assert!(rel(half.upload_s, 2.0 * st.upload_s) < 1e-15);
        assert!(rel(half.ack_s, 2.0 * st.ack_s) < 1e-15);
        assert_eq!(half.compute_s, st.compute_s);

        let mut no_ack = t;
        no_ack.ack_bits = 0.0;
        let e0 = cloud_cpu_energy(&no_ack, 1.0, 1e8, &d);
        assert!(rel(e0, 0.1 + 1e-9) < 1e-12);
        assert!(cloud_cpu_energy(&t, 0.4, 1e8, &d) < cloud_cpu_energy(&t, 0.6, 1e8, &d));
    }

    fn unit_qhw() -> QuantumHardwareParams {
        // tau-sum = 1e-6 s, power sum incl. qubit upkeep = 1e-3
        QuantumHardwareParams {
            t_1qb_s: 1e-7,
            t_2qb_s: 2e-7,
            t_meas_s: 7e-7,
            p_1qb_w: 1e-4,
            p_2qb_w: 2e-4,
            p_meas_w: 3e-4,
            p_qubit_w: 1e-4,
            n_1qb: 1.0,
            n_2qb: 1.0,
            n_meas: 1.0,
            phys_per_logical: 4,
        }
    }

    #[test]
    fn quantum_time_and_energy_examples() {
        let qhw = unit_qhw();
        assert!(rel(qhw.gate_time_per_unit(), 1e-6) < 1e-12);
        assert!(rel(qhw.energy_per_unit(), 1e-3) < 1e-12);
        let mut t = task();
        t.data_bits = 100.0;
        t.circuit_qubits = 10;
        let d = device();
        let st = quantum_time(&t, 1.0, 1e8, &qhw);
        assert!(rel(st.compute_s, 1e-3) < 1e-12);
        let cpu = cloud_cpu_time(&t, 1.0, 1e8, &d);
        assert_eq!(st.upload_s, cpu.upload_s);
        assert_eq!(st.ack_s, cpu.ack_s);

        let mut wide = t;
        wide.circuit_qubits = 30;
        let st3 = quantum_time(&wide, 1.0, 1e8, &qhw);
        assert!(rel(st3.compute_s, 3.0 * st.compute_s) < 1e-12);

        let e = quantum_energy(&t, 1.0, 1e8, &d, &qhw);
        let transmit = d.tx_power_w * (st.upload_s + st.ack_s);
        assert!(rel(e - transmit, 1.0) < 1e-12);

        let mut no_upkeep = qhw;
        no_upkeep.p_qubit_w = 1e-300;
        let e2 = quantum_energy(&t, 1.0, 1e8, &d, &no_upkeep);
        assert!(rel(e2 - transmit, 100.0 * 10.0 * 6e-4) < 1e-9);
    }

    #[test]
    fn success_probability_examples() {
        let mut t = task();
        let qec = QecParams {
            err_rate: 1e-3,
            err_threshold: 1e-3,
            concat_level: 3,
        };
        assert!(rel(success_probability(&t, &qec), 0.9) < 1e-12);
        t.circuit_qubits = 30;
        t.circuit_depth = 20;
        let qec2 = QecParams {
            err_rate: 5e-4,
            err_threshold: 1e-3,
            concat_level: 1,
        };
        assert!(rel(success_probability(&t, &qec2), 0.925) < 1e-12);
    }

    #[test]
    fn quantum_feasibility_examples() {
        let mut t = task();
        let d = device();
        let qec = QecParams {
            err_rate: 1e-3,
            err_threshold: 1e-3,
            concat_level: 0,
        };
        t.circuit_qubits = 100;
        t.circuit_depth = 1;
        assert!(quantum_feasible(&t, &d, &qec)); // S = 0.9
        t.circuit_qubits = 6000;
        assert!(!quantum_feasible(&t, &d, &qec));
        t.circuit_qubits = 100;
        t.circuit_depth = 4; // S = 0.6
        assert!(!quantum_feasible(&t, &d, &qec));
    }

    #[test]
    fn evaluate_local_ignores_channel_and_quantum() {
        let t = task();
        let d = device();
        let a = evaluate(
            &Decision::local(),
            &t,
            &d,
            &channel_with_snr(1.0),
            &unit_qhw(),
            &QecParams::default(),
        );
        let b = evaluate(
            &Decision::local(),
            &t,
            &d,
            &channel_with_snr(1e-6),
            &QuantumHardwareParams::default(),
            &QecParams {
                err_rate: 0.5,
                err_threshold: 0.1,
                concat_level: 4,
            },
        );
        assert_eq!(a, b);
        assert_eq!(a.remote_time_s, 0.0);
        let expect =
            d.weight_time * local_time(&t, 0.0, &d) + d.weight_energy * local_energy(&t, 0.0, &d);
        assert!(rel(a.wset, expect) < 1e-15);
    }

    #[test]
    fn evaluate_full_cpu_offload() {
        let t = task();
        let d = device();
        let ch = channel_with_snr(1.0);
        let c = evaluate(
            &Decision::offload(Mode::Cpu, 1.0),
            &t,
            &d,
            &ch,
            &unit_qhw(),
            &QecParams::default(),
        );
        let st = cloud_cpu_time(&t, 1.0, 1e8, &d);
        let expect =
            d.weight_time * st.total() + d.weight_energy * cloud_cpu_energy(&t, 1.0, 1e8, &d);
        assert!(rel(c.wset, expect) < 1e-14);
        assert_eq!(c.local_time_s, 0.0);
        assert_eq!(c.time_s, c.remote_time_s);
    }

    #[test]
    fn qpu_infeasible_circuit_marks_decision_infeasible() {
        let mut t = task();
        t.deadline_s = 1e9;
        t.circuit_qubits = 6000;
        let d = device();
        let c = evaluate(
            &Decision::offload(Mode::Qpu, 0.5),
            &t,
            &d,
            &channel_with_snr(1.0),
            &unit_qhw(),
            &QecParams::default(),
        );
        assert!(!c.feasible);
    }

    #[test]
    fn profile_matches_evaluate() {
        let t = task();
        let d = device();
        let ch = channel_with_snr(2.5);
        let qhw = unit_qhw();
        for mode in [Mode::Cpu, Mode::Qpu] {
            let p = OffloadProfile::new(mode, &t, &d, &ch, &qhw);
            for &phi in &[1e-4, 0.2, 0.5, 0.77, 1.0] {
                let c = evaluate(
                    &Decision::offload(mode, phi),
                    &t,
                    &d,
                    &ch,
                    &qhw,
                    &QecParams::default(),
                );
                assert!(rel(p.wset_at(phi), c.wset) < 1e-12, "{mode} {phi}");
                assert!(rel(p.completion_time_at(phi), c.time_s) < 1e-12);
            }
        }
    }

    #[test]
    fn feasible_interval_edges() {
        let t = task();
        let d = device();
        let p = OffloadProfile::new(Mode::Cpu, &t, &d, &channel_with_snr(1.0), &unit_qhw());
        // local 1 s, remote 2 s per phi + 0.01 s ack
        let (lo, hi) = p.feasible_interval(1.0, 1e-4).unwrap();
        assert_eq!(lo, 1e-4);
        assert!(rel(hi, 0.495) < 1e-12);
        let (lo, hi) = p.feasible_interval(0.8, 1e-4).unwrap();
        assert!(rel(lo, 0.2) < 1e-12);
        assert!(rel(hi, 0.395) < 1e-12);
        assert!(p.feasible_interval(0.5, 1e-4).is_none());
        assert!(p.feasible_interval(0.2, 1e-4).is_none());
        assert!(p.feasible_interval(0.005, 1e-4).is_none());
        let fast = p.fastest_phi(1e-4);
        assert!((p.local_time_at(fast) - p.remote_time_at(fast)).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut t = task();
        t.circuit_depth = 0;
        assert!(t.validate().is_err());
        let mut d = device();
        d.exponent_zeta = 1.5;
        assert!(d.validate().is_err());
        let mut d = device();
        d.weight_time = 0.0;
        d.weight_energy = 0.0;
        assert!(d.validate().is_err());
        assert!(Decision {
            phi: 1.2,
            use_classical: true
        }
        .validate()
        .is_err());
        assert!(QecParams {
            err_rate: 1.0,
            err_threshold: 0.5,
            concat_level: 0
        }
        .validate()
        .is_err());
    }
}
