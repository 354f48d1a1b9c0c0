//! Virtual queues and the drift-plus-penalty per-slot problem.
//!
//! Each device keeps a backlog `z` that grows by `delta` on slots where it
//! keeps the whole task local and drains by the offloaded share otherwise.
//! Every slot the scheduler minimizes
//!
//! ```text
//! V * sum_m wset_m + sum_m z_m * (delta * 1[phi_m = 0] - phi_m)
//! ```
//!
//! which separates across devices. Within an offload mode the per-device
//! term is a convex quadratic in `phi` on the deadline-feasible interval, so
//! the exact minimizer is one of the interval endpoints or the vertex.

use serde::{Deserialize, Serialize};

use crate::model::{
    evaluate, quantum_feasible, ChannelState, CostBreakdown, Decision, DeviceProfile, Mode,
    OffloadProfile, QecParams, QuantumHardwareParams, TaskSpec,
};

/// Per-device backlogs of the offload-rate virtual queues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueueState {
    pub backlog: Vec<f64>,
    pub target_rate: f64,
    pub slot: u64,
}

impl VirtualQueueState {
    pub fn new(num_devices: usize, target_rate: f64) -> Self {
        Self {
            backlog: vec![0.0; num_devices],
            target_rate,
            slot: 0,
        }
    }

    /// Advance every queue by one slot given the executed decisions.
    pub fn apply(&mut self, decisions: &[Decision]) {
        assert_eq!(decisions.len(), self.backlog.len());
        for (z, d) in self.backlog.iter_mut().zip(decisions) {
            *z = queue_update(*z, d.phi, self.target_rate);
        }
        self.slot += 1;
    }
}

/// Drift-plus-penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DppConfig {
    /// Weight `V` of the cost against queue drift.
    pub v_param: f64,
    /// Additive slack `C` of the per-slot solver; zero for the exact solver.
    pub c_additive: f64,
    /// Target time-average offload share `delta`.
    pub delta: f64,
    /// Smallest non-zero offload share a remote decision may use.
    pub min_offload_fraction: f64,
}

impl Default for DppConfig {
    fn default() -> Self {
        Self {
            v_param: 10.0,
            c_additive: 0.0,
            delta: 0.7,
            min_offload_fraction: 1e-4,
        }
    }
}

/// One slot of the literal queue recursion
/// `z' = max(0, z + delta * 1[phi = 0] - phi)`.
pub fn queue_update(z: f64, phi: f64, delta: f64) -> f64 {
    (z + constraint_drift(phi, delta)).max(0.0)
}

/// Per-slot arrival minus service of the virtual queue.
pub fn constraint_drift(phi: f64, delta: f64) -> f64 {
    let arrival = if phi == 0.0 { delta } else { 0.0 };
    arrival - phi
}

/// `V * sum(costs) + sum_m z_m * (delta * 1[phi_m = 0] - phi_m)`.
pub fn dpp_objective(
    costs: &[f64],
    phis: &[f64],
    queues: &VirtualQueueState,
    cfg: &DppConfig,
) -> f64 {
    assert_eq!(costs.len(), phis.len());
    assert_eq!(costs.len(), queues.backlog.len());
    let penalty: f64 = costs.iter().sum();
    let drift: f64 = queues
        .backlog
        .iter()
        .zip(phis)
        .map(|(z, &phi)| z * constraint_drift(phi, queues.target_rate))
        .sum();
    cfg.v_param * penalty + drift
}

/// What a per-device decision is scored on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Instantaneous weighted cost only.
    Wset,
    /// Per-device drift-plus-penalty term.
    DriftPlusPenalty { v: f64, backlog: f64, delta: f64 },
}

impl Objective {
    pub fn value(&self, phi: f64, wset: f64) -> f64 {
        match *self {
            Objective::Wset => wset,
            Objective::DriftPlusPenalty { v, backlog, delta } => {
                v * wset + backlog * constraint_drift(phi, delta)
            }
        }
    }

    /// Quadratic coefficients of the objective in `phi > 0` for a mode whose
    /// cost is `c0 + c1 phi + c2 phi^2`.
    fn quadratic(&self, p: &OffloadProfile) -> (f64, f64, f64) {
        match *self {
            Objective::Wset => (p.c0, p.c1, p.c2),
            Objective::DriftPlusPenalty { v, backlog, .. } => {
                (v * p.c0, v * p.c1 - backlog, v * p.c2)
            }
        }
    }
}

/// Everything needed to cost decisions for one device in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotInput {
    pub task: TaskSpec,
    pub device: DeviceProfile,
    pub channel: ChannelState,
}

/// A scored decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub decision: Decision,
    pub cost: CostBreakdown,
    pub objective: f64,
}

impl Candidate {
    fn new(
        decision: Decision,
        input: &SlotInput,
        qhw: &QuantumHardwareParams,
        qec: &QecParams,
        objective: &Objective,
    ) -> Self {
        let cost = evaluate(
            &decision,
            &input.task,
            &input.device,
            &input.channel,
            qhw,
            qec,
        );
        Self {
            decision,
            cost,
            objective: objective.value(decision.phi, cost.wset),
        }
    }
}

/// How the offloaded share is chosen inside a remote mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareRule {
    /// Only full offload (`phi = 1`).
    Whole,
    /// Any share in `[min_offload_fraction, 1]`.
    Fractional,
}

/// Candidate decisions for `mode`. QPU yields nothing when the circuit is
/// not quantum-feasible. When no share meets the deadline the fastest share
/// is returned (flagged infeasible).
pub fn mode_candidates(
    input: &SlotInput,
    mode: Mode,
    rule: ShareRule,
    objective: &Objective,
    min_phi: f64,
    qhw: &QuantumHardwareParams,
    qec: &QecParams,
) -> Vec<Candidate> {
    let make = |phi: f64| Candidate::new(Decision::offload(mode, phi), input, qhw, qec, objective);
    match mode {
        Mode::Local => vec![make(0.0)],
        Mode::Qpu if !quantum_feasible(&input.task, &input.device, qec) => Vec::new(),
        Mode::Cpu | Mode::Qpu => match rule {
            ShareRule::Whole => vec![make(1.0)],
            ShareRule::Fractional => {
                let profile =
                    OffloadProfile::new(mode, &input.task, &input.device, &input.channel, qhw);
                match profile.feasible_interval(input.task.deadline_s, min_phi) {
                    Some((lo, hi)) => {
                        let (_, q1, q2) = objective.quadratic(&profile);
                        let mut phis = vec![lo, hi];
                        if q2 > 0.0 {
                            phis.push((-q1 / (2.0 * q2)).clamp(lo, hi));
                        }
                        phis.into_iter().map(make).collect()
                    }
                    None => vec![make(profile.fastest_phi(min_phi))],
                }
            }
        },
    }
}

fn tie_tolerance(a: f64, b: f64) -> f64 {
    1e-14 * a.abs().max(b.abs()).max(1.0)
}

fn tie_key(c: &Candidate) -> (f64, Mode) {
    (c.decision.phi, c.decision.mode())
}

fn prefer(a: &Candidate, b: &Candidate) -> bool {
    // Returns true when `a` should replace the incumbent `b`.
    match (a.cost.feasible, b.cost.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => {
            if (a.objective - b.objective).abs() <= tie_tolerance(a.objective, b.objective) {
                tie_key(a) < tie_key(b)
            } else {
                a.objective < b.objective
            }
        }
        (false, false) => {
            if a.cost.time_s != b.cost.time_s {
                a.cost.time_s < b.cost.time_s
            } else if a.objective != b.objective {
                a.objective < b.objective
            } else {
                tie_key(a) < tie_key(b)
            }
        }
    }
}

/// Deterministic argmin: feasible candidates by objective (ties to lower
/// `phi`, then LOCAL < CPU < QPU); otherwise the smallest completion time.
pub fn select(candidates: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    candidates.into_iter().fold(None, |best, c| match best {
        Some(b) if !prefer(&c, &b) => Some(b),
        _ => Some(c),
    })
}

/// Best decision for one device over `modes`.
pub fn best_decision(
    input: &SlotInput,
    modes: &[Mode],
    rule: ShareRule,
    objective: &Objective,
    min_phi: f64,
    qhw: &QuantumHardwareParams,
    qec: &QecParams,
) -> Candidate {
    let cands = modes
        .iter()
        .flat_map(|&m| mode_candidates(input, m, rule, objective, min_phi, qhw, qec));
    select(cands).unwrap_or_else(|| Candidate::new(Decision::local(), input, qhw, qec, objective))
}

/// Exact solution of one slot's drift-plus-penalty problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSolution {
    pub decisions: Vec<Decision>,
    pub costs: Vec<CostBreakdown>,
    pub objective: f64,
    pub per_device_objective: Vec<f64>,
}

impl SlotSolution {
    pub fn all_feasible(&self) -> bool {
        self.costs.iter().all(|c| c.feasible)
    }
}

/// Per-device drift-plus-penalty objective for device `m`.
pub fn device_objective(queues: &VirtualQueueState, m: usize, cfg: &DppConfig) -> Objective {
    Objective::DriftPlusPenalty {
        v: cfg.v_param,
        backlog: queues.backlog[m],
        delta: queues.target_rate,
    }
}

pub fn solve_slot(
    inputs: &[SlotInput],
    qhw: &QuantumHardwareParams,
    qec: &QecParams,
    queues: &VirtualQueueState,
    cfg: &DppConfig,
) -> SlotSolution {
    assert_eq!(inputs.len(), queues.backlog.len());
    let best: Vec<Candidate> = inputs
        .iter()
        .enumerate()
        .map(|(m, input)| {
            best_decision(
                input,
                &Mode::ALL,
                ShareRule::Fractional,
                &device_objective(queues, m, cfg),
                cfg.min_offload_fraction,
                qhw,
                qec,
            )
        })
        .collect();
    let per_device_objective: Vec<f64> = best.iter().map(|c| c.objective).collect();
    SlotSolution {
        decisions: best.iter().map(|c| c.decision).collect(),
        costs: best.iter().map(|c| c.cost).collect(),
        objective: per_device_objective.iter().sum(),
        per_device_objective,
    }
}

/// Drift constant `B = (M / 2) * max(delta, 1)^2`, which dominates
/// `(1/2) * sum_m (delta * 1[phi_m = 0] - phi_m)^2` for every decision.
pub fn drift_bound(num_devices: usize, delta: f64) -> f64 {
    num_devices as f64 / 2.0 * delta.max(1.0).powi(2)
}

/// Optimality gap of a time-average cost against `(B + C) / V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCheck {
    pub gap: f64,
    pub bound_value: f64,
    pub holds: bool,
}

pub fn theorem1_gap(
    avg_cost: f64,
    opt_cost: f64,
    bound: f64,
    c_additive: f64,
    v_param: f64,
) -> GapCheck {
    assert!(v_param > 0.0);
    let gap = (avg_cost - opt_cost).abs();
    let bound_value = (bound + c_additive) / v_param;
    GapCheck {
        gap,
        bound_value,
        holds: gap <= bound_value,
    }
}

/// Worst per-device constraint residual `mean_{r < tau}(delta * 1[phi = 0] - phi)`.
/// `phi_history[r][m]` is device `m`'s share in slot `r`. Non-positive values
/// mean the time-average offload target is met.
pub fn convergence_probe(phi_history: &[Vec<f64>], delta: f64, tau: usize) -> f64 {
    assert!(tau >= 1 && tau <= phi_history.len(), "tau out of range");
    let m = phi_history[0].len();
    (0..m)
        .map(|dev| {
            phi_history[..tau]
                .iter()
                .map(|row| constraint_drift(row[dev], delta))
                .sum::<f64>()
                / tau as f64
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sqrt((2 (B + C) + V (avg_cost - opt_cost)) / tau)`, the residual bound
/// after `tau` slots. A negative numerator is clamped to zero.
pub fn residual_bound(
    bound: f64,
    c_additive: f64,
    v_param: f64,
    avg_cost: f64,
    opt_cost: f64,
    tau: usize,
) -> f64 {
    let num = 2.0 * (bound + c_additive) + v_param * (avg_cost - opt_cost);
    (num.max(0.0) / tau as f64).sqrt()
}
