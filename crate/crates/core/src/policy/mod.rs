//! Decision policies behind one interface.

pub mod dqn;
pub mod observation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{stream_rng, uniform, uniform_int, Stream, WorldRng};
use crate::lyapunov::{
    best_decision, solve_slot, DppConfig, Objective, ShareRule, SlotInput, VirtualQueueState,
};
use crate::model::{quantum_feasible, Decision, Mode, QecParams, QuantumHardwareParams};

pub use dqn::{
    dqn_act, dqn_train_step, target_sync, DqnAgent, DqnHyper, QNetwork, ReplayBuffer, Transition,
};
pub use observation::{Observation, ObservationScaler};

/// Server-side constants every policy needs to cost decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub qhw: QuantumHardwareParams,
    pub qec: QecParams,
    pub dpp: DppConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Random,
    CpuDiscrete,
    QpuDiscrete,
    CpuContinuous,
    QpuContinuous,
    LocalOnly,
    LyapunovExact,
    Dqn,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Random,
        PolicyKind::CpuDiscrete,
        PolicyKind::QpuDiscrete,
        PolicyKind::CpuContinuous,
        PolicyKind::QpuContinuous,
        PolicyKind::LocalOnly,
        PolicyKind::LyapunovExact,
        PolicyKind::Dqn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::CpuDiscrete => "cpu-discrete",
            PolicyKind::QpuDiscrete => "qpu-discrete",
            PolicyKind::CpuContinuous => "cpu-continuous",
            PolicyKind::QpuContinuous => "qpu-continuous",
            PolicyKind::LocalOnly => "local-only",
            PolicyKind::LyapunovExact => "lyapunov-exact",
            PolicyKind::Dqn => "dqn",
        }
    }

    pub fn is_learning(self) -> bool {
        self == PolicyKind::Dqn
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPolicy(pub String);

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = PolicyKind::ALL.iter().map(|p| p.as_str()).collect();
        write!(
            f,
            "unknown policy `{}` (expected one of: {})",
            self.0,
            names.join(", ")
        )
    }
}

impl std::error::Error for UnknownPolicy {}

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// A ready-to-run policy. Only `Random` and `Dqn` carry state.
#[derive(Debug, Clone)]
pub enum Policy {
    Fixed(PolicyKind),
    Random(WorldRng),
    Dqn(Box<DqnAgent>),
}

impl Policy {
    /// A non-learning policy; the random policy draws from its own stream of
    /// `seed`. Panics for [`PolicyKind::Dqn`], which needs an agent.
    pub fn baseline(kind: PolicyKind, seed: u64) -> Self {
        match kind {
            PolicyKind::Random => Policy::Random(stream_rng(seed, Stream::Policy as u64)),
            PolicyKind::Dqn => panic!("the dqn policy is built from a trained agent"),
            other => Policy::Fixed(other),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Fixed(k) => *k,
            Policy::Random(_) => PolicyKind::Random,
            Policy::Dqn(_) => PolicyKind::Dqn,
        }
    }
}

fn restricted(
    inputs: &[SlotInput],
    modes: &[Mode],
    rule: ShareRule,
    ctx: &PolicyContext,
) -> Vec<Decision> {
    inputs
        .iter()
        .map(|input| {
            best_decision(
                input,
                modes,
                rule,
                &Objective::Wset,
                ctx.dpp.min_offload_fraction,
                &ctx.qhw,
                &ctx.qec,
            )
            .decision
        })
        .collect()
}

/// Decisions for every device in one slot.
pub fn policy_decide(
    policy: &mut Policy,
    inputs: &[SlotInput],
    queues: &VirtualQueueState,
    ctx: &PolicyContext,
) -> Vec<Decision> {
    assert_eq!(inputs.len(), queues.backlog.len(), "one input per device");
    match policy {
        Policy::Fixed(kind) => match kind {
            PolicyKind::LocalOnly => vec![Decision::local(); inputs.len()],
            PolicyKind::CpuDiscrete => {
                restricted(inputs, &[Mode::Local, Mode::Cpu], ShareRule::Whole, ctx)
            }
            PolicyKind::QpuDiscrete => {
                restricted(inputs, &[Mode::Local, Mode::Qpu], ShareRule::Whole, ctx)
            }
            PolicyKind::CpuContinuous => restricted(
                inputs,
                &[Mode::Local, Mode::Cpu],
                ShareRule::Fractional,
                ctx,
            ),
            PolicyKind::QpuContinuous => restricted(
                inputs,
                &[Mode::Local, Mode::Qpu],
                ShareRule::Fractional,
                ctx,
            ),
            PolicyKind::LyapunovExact => {
                solve_slot(inputs, &ctx.qhw, &ctx.qec, queues, &ctx.dpp).decisions
            }
            PolicyKind::Random | PolicyKind::Dqn => unreachable!("stateful policies are not Fixed"),
        },
        Policy::Random(rng) => inputs
            .iter()
            .map(|input| {
                let qpu_ok = quantum_feasible(&input.task, &input.device, &ctx.qec);
                let n_modes = if qpu_ok { 3 } else { 2 };
                let mode = Mode::from_index(uniform_int(rng, 0, n_modes - 1) as usize).unwrap();
                // One share draw per device keeps the stream aligned across modes.
                let phi = 1.0 - uniform(rng, 0.0, 1.0);
                match mode {
                    Mode::Local => Decision::local(),
                    m => Decision::offload(m, phi),
                }
            })
            .collect(),
        Policy::Dqn(agent) => agent.greedy_decisions(inputs, queues, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.as_str().parse::<PolicyKind>().unwrap(), p);
            assert_eq!(
                serde_json::to_string(&p).unwrap(),
                format!("\"{}\"", p.as_str())
            );
        }
        let err = "greedy".parse::<PolicyKind>().unwrap_err().to_string();
        assert!(err.contains("lyapunov-exact"));
    }
}
