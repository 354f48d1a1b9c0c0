//! Deep Q-learning for the offload mode. The network picks LOCAL, CPU or
//! QPU; the share `phi` inside the chosen mode comes from the exact
//! per-mode optimizer.

pub mod network;
pub mod replay;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use network::{Adam, Dense, Gradients, QNetwork, CHECKPOINT_MAGIC};
pub use replay::{ReplayBuffer, Transition};

use super::observation::ObservationScaler;
use super::PolicyContext;
use crate::environment::{stream_rng, uniform, uniform_int, SlotSource, Stream, WorldRng};
use crate::error::ConfigError;
use crate::lyapunov::ShareRule;
use crate::lyapunov::{best_decision, device_objective, SlotInput, VirtualQueueState};
use crate::model::{quantum_feasible, Decision, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Learner settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnHyper {
    pub gamma: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_steps: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    /// Slots per training episode.
    pub episode_slots: usize,
    /// Output scale of the network. `None` picks one from the first
    /// observed costs.
    pub value_scale: Option<f64>,
    /// Append the virtual-queue backlog to the observation.
    pub include_backlog: bool,
}

impl Default for DqnHyper {
    fn default() -> Self {
        Self {
            gamma: 0.913,
            learning_rate: 0.001,
            optimizer: OptimizerKind::Adam,
            hidden: vec![512, 512, 512],
            replay_capacity: 100_000,
            batch_size: 64,
            target_sync_steps: 200,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
            episode_slots: 20,
            value_scale: None,
            include_backlog: true,
        }
    }
}

impl DqnHyper {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::invalid(
                "policy.dqn.gamma",
                "must be in [0, 1]",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::invalid(
                "policy.dqn.learning_rate",
                "must be positive",
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(ConfigError::invalid(
                "policy.dqn.hidden",
                "need at least one non-empty layer",
            ));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::invalid(
                "policy.dqn.batch_size",
                "must be positive",
            ));
        }
        if self.replay_capacity < self.batch_size {
            return Err(ConfigError::invalid(
                "policy.dqn.replay_capacity",
                "must be >= batch_size",
            ));
        }
        if self.target_sync_steps == 0 {
            return Err(ConfigError::invalid(
                "policy.dqn.target_sync_steps",
                "must be positive",
            ));
        }
        for (key, e) in [
            ("policy.dqn.epsilon_start", self.epsilon_start),
            ("policy.dqn.epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return Err(ConfigError::invalid(key, "must be in [0, 1]"));
            }
        }
        if self.episode_slots == 0 {
            return Err(ConfigError::invalid(
                "policy.dqn.episode_slots",
                "must be positive",
            ));
        }
        if let Some(s) = self.value_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(ConfigError::invalid(
                    "policy.dqn.value_scale",
                    "must be positive",
                ));
            }
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end`.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, net: &QNetwork, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(net, lr)),
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &Gradients) {
        match self {
            Optimizer::Adam(adam) => adam.step(net, grads),
            Optimizer::Sgd { lr } => {
                for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-*lr, &g.weights);
                    layer.bias.scaled_add(-*lr, &g.bias);
                }
            }
        }
    }
}

/// Available actions: LOCAL and CPU always, QPU when the circuit fits.
pub fn action_mask(input: &SlotInput, ctx: &PolicyContext) -> [bool; 3] {
    [
        true,
        true,
        quantum_feasible(&input.task, &input.device, &ctx.qec),
    ]
}

fn masked_argmax(q: &[f64], mask: &[bool; 3]) -> usize {
    let mut best = None;
    for (i, &v) in q.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).unwrap_or(0)
}

fn masked_max(q: &[f64], mask: &[bool; 3]) -> f64 {
    q.iter()
        .zip(mask)
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Epsilon-greedy mode index over the allowed actions. One uniform draw
/// decides exploration and, when exploring, a second picks the action.
pub fn dqn_act<R: Rng + ?Sized>(
    online: &QNetwork,
    obs: &[f64],
    mask: [bool; 3],
    epsilon: f64,
    rng: &mut R,
) -> usize {
    assert!((0.0..=1.0).contains(&epsilon), "epsilon must be in [0, 1]");
    if epsilon > 0.0 && uniform(rng, 0.0, 1.0) < epsilon {
        let allowed: Vec<usize> = (0..3).filter(|&i| mask[i]).collect();
        let k = uniform_int(rng, 0, allowed.len() as u32 - 1) as usize;
        return allowed[k];
    }
    masked_argmax(&online.q_values(obs), &mask)
}

/// One gradient step on a uniformly sampled batch. Returns the batch loss
/// before the update, or `None` while the buffer holds fewer than
/// `hyper.batch_size` transitions.
pub fn dqn_train_step<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    online: &mut QNetwork,
    target: &QNetwork,
    optimizer: &mut Optimizer,
    hyper: &DqnHyper,
    rng: &mut R,
) -> Option<f64> {
    let batch = buffer.sample(hyper.batch_size, rng)?;
    let dim = online.input_dim();
    let n = batch.len();
    let mut states = Array2::<f64>::zeros((n, dim));
    let mut next = Array2::<f64>::zeros((n, dim));
    for (i, t) in batch.iter().enumerate() {
        states
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(&t.state[..]));
        next.row_mut(i)
            .assign(&ndarray::ArrayView1::from(&t.next_state[..]));
    }
    let q_next = if hyper.gamma > 0.0 {
        Some(target.forward(&next))
    } else {
        None
    };
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let targets: Vec<f64> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| match (&q_next, t.terminal) {
            (Some(q), false) => {
                let row = q.row(i).to_vec();
                t.reward + hyper.gamma * masked_max(&row, &t.next_mask)
            }
            _ => t.reward,
        })
        .collect();
    let (loss, grads) = online.loss_and_grad(&states, &actions, &targets);
    optimizer.step(online, &grads);
    Some(loss)
}

/// Copy every online parameter into the target network.
pub fn target_sync(online: &QNetwork, target: &mut QNetwork) {
    target.copy_from(online);
}

/// Per-episode training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub mean_wset: f64,
    pub mean_loss: Option<f64>,
}

/// Shared-parameter DQN agent for all devices.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: QNetwork,
    pub target: QNetwork,
    pub optimizer: Optimizer,
    pub buffer: ReplayBuffer,
    pub hyper: DqnHyper,
    pub scaler: ObservationScaler,
    rng: WorldRng,
    scale_fixed: bool,
    pub env_steps: u64,
    pub train_steps: u64,
}

impl DqnAgent {
    pub fn new(hyper: DqnHyper, scaler: ObservationScaler, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Learner as u64);
        let dim = scaler.dim(hyper.include_backlog);
        let online = QNetwork::new(
            dim,
            &hyper.hidden,
            3,
            hyper.value_scale.unwrap_or(1.0),
            &mut rng,
        );
        let target = online.clone();
        let optimizer = Optimizer::new(hyper.optimizer, &online, hyper.learning_rate);
        Self {
            buffer: ReplayBuffer::new(hyper.replay_capacity),
            scale_fixed: hyper.value_scale.is_some(),
            online,
            target,
            optimizer,
            scaler,
            rng,
            hyper,
            env_steps: 0,
            train_steps: 0,
        }
    }

    pub fn features(&self, input: &SlotInput, backlog: f64) -> Vec<f64> {
        self.scaler
            .features(input, backlog, self.hyper.include_backlog)
    }

    fn decision_for(
        input: &SlotInput,
        mode: Mode,
        queues: &VirtualQueueState,
        m: usize,
        ctx: &PolicyContext,
    ) -> Decision {
        best_decision(
            input,
            &[mode],
            ShareRule::Fractional,
            &device_objective(queues, m, &ctx.dpp),
            ctx.dpp.min_offload_fraction,
            &ctx.qhw,
            &ctx.qec,
        )
        .decision
    }

    /// Greedy decisions from the current network; does not touch any state.
    pub fn greedy_decisions(
        &self,
        inputs: &[SlotInput],
        queues: &VirtualQueueState,
        ctx: &PolicyContext,
    ) -> Vec<Decision> {
        inputs
            .iter()
            .enumerate()
            .map(|(m, input)| {
                let obs = self.features(input, queues.backlog[m]);
                let a = masked_argmax(&self.online.q_values(&obs), &action_mask(input, ctx));
                Self::decision_for(input, Mode::from_index(a).unwrap(), queues, m, ctx)
            })
            .collect()
    }

    /// The discounted return of staying local forever on the first slot
    /// sets the output scale, so raw network outputs start near unit size.
    fn fix_scale(&mut self, inputs: &[SlotInput], ctx: &PolicyContext) {
        if self.scale_fixed {
            return;
        }
        let mean = inputs
            .iter()
            .map(|i| {
                crate::model::evaluate(
                    &Decision::local(),
                    &i.task,
                    &i.device,
                    &i.channel,
                    &ctx.qhw,
                    &ctx.qec,
                )
                .wset
            })
            .sum::<f64>()
            / inputs.len().max(1) as f64;
        let scale = if mean > 0.0 && mean.is_finite() {
            mean / (1.0 - self.hyper.gamma).max(1e-3)
        } else {
            1.0
        };
        self.online.value_scale = scale;
        self.target.value_scale = scale;
        self.scale_fixed = true;
    }

    /// One episode of `hyper.episode_slots` slots from `source`, with fresh
    /// virtual queues. Every device step is stored as a transition with
    /// reward `-wset`; the network is updated once per slot.
    pub fn train_episode<S: SlotSource>(
        &mut self,
        source: &mut S,
        ctx: &PolicyContext,
    ) -> EpisodeStats {
        let m_count = source.num_devices();
        let mut queues = VirtualQueueState::new(m_count, ctx.dpp.delta);
        let mut inputs = source.next_slot();
        self.fix_scale(&inputs, ctx);
        let slots = self.hyper.episode_slots;
        let (mut wset_sum, mut loss_sum, mut loss_n) = (0.0, 0.0, 0usize);
        for t in 0..slots {
            let epsilon = self.hyper.epsilon_at(self.env_steps);
            let mut states = Vec::with_capacity(m_count);
            let mut actions = Vec::with_capacity(m_count);
            let mut decisions = Vec::with_capacity(m_count);
            let mut rewards = Vec::with_capacity(m_count);
            for (m, input) in inputs.iter().enumerate() {
                let obs = self.features(input, queues.backlog[m]);
                let a = dqn_act(
                    &self.online,
                    &obs,
                    action_mask(input, ctx),
                    epsilon,
                    &mut self.rng,
                );
                let d = Self::decision_for(input, Mode::from_index(a).unwrap(), &queues, m, ctx);
                let cost = crate::model::evaluate(
                    &d,
                    &input.task,
                    &input.device,
                    &input.channel,
                    &ctx.qhw,
                    &ctx.qec,
                );
                wset_sum += cost.wset;
                rewards.push(-cost.wset);
                states.push(obs);
                actions.push(a);
                decisions.push(d);
            }
            queues.apply(&decisions);
            let terminal = t + 1 == slots;
            let next_inputs = if terminal {
                inputs.clone()
            } else {
                source.next_slot()
            };
            for m in 0..m_count {
                let next_state = self.features(&next_inputs[m], queues.backlog[m]);
                self.buffer.push(Transition {
                    state: std::mem::take(&mut states[m]),
                    action: actions[m],
                    reward: rewards[m],
                    next_state,
                    next_mask: action_mask(&next_inputs[m], ctx),
                    terminal,
                });
            }
            self.env_steps += 1;
            if let Some(loss) = dqn_train_step(
                &self.buffer,
                &mut self.online,
                &self.target,
                &mut self.optimizer,
                &self.hyper,
                &mut self.rng,
            ) {
                self.train_steps += 1;
                loss_sum += loss;
                loss_n += 1;
                if self
                    .train_steps
                    .is_multiple_of(self.hyper.target_sync_steps)
                {
                    target_sync(&self.online, &mut self.target);
                }
            }
            inputs = next_inputs;
        }
        EpisodeStats {
            mean_wset: wset_sum / (slots * m_count.max(1)) as f64,
            mean_loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_net(seed: u64) -> QNetwork {
        QNetwork::new(3, &[4, 4], 3, 1.0, &mut stream_rng(seed, 0))
    }

    fn transition(state: Vec<f64>, action: usize, reward: f64) -> Transition {
        Transition {
            next_state: state.clone(),
            state,
            action,
            reward,
            next_mask: [true; 3],
            terminal: false,
        }
    }

    #[test]
    fn epsilon_schedule_is_linear_then_flat() {
        let h = DqnHyper::default();
        assert_eq!(h.epsilon_at(0), 1.0);
        assert!((h.epsilon_at(5000) - 0.525).abs() < 1e-12);
        assert_eq!(h.epsilon_at(10_000), 0.05);
        assert_eq!(h.epsilon_at(1_000_000), 0.05);
    }

    #[test]
    fn greedy_action_is_masked_argmax() {
        let mut net = toy_net(1);
        // Zero every weight and set the output bias to (3, 1, 2).
        let flat = vec![0.0; net.param_count()];
        net.set_flat_params(&flat);
        let last = net.layers.last_mut().unwrap();
        last.bias.assign(&ndarray::arr1(&[3.0, 1.0, 2.0]));
        let mut rng = stream_rng(0, 0);
        assert_eq!(dqn_act(&net, &[0.5, 0.5, 0.5], [true; 3], 0.0, &mut rng), 0);
        last_bias(&mut net, [1.0, 2.0, 3.0]);
        assert_eq!(
            dqn_act(&net, &[0.5, 0.5, 0.5], [true, true, false], 0.0, &mut rng),
            1
        );
    }

    fn last_bias(net: &mut QNetwork, b: [f64; 3]) {
        net.layers
            .last_mut()
            .unwrap()
            .bias
            .assign(&ndarray::arr1(&b));
    }

    #[test]
    fn untrainable_until_batch_available() {
        let mut online = toy_net(2);
        let target = online.clone();
        let hyper = DqnHyper {
            batch_size: 4,
            ..DqnHyper::default()
        };
        let mut opt = Optimizer::new(OptimizerKind::Sgd, &online, 0.001);
        let mut buf = ReplayBuffer::new(10);
        let mut rng = stream_rng(0, 0);
        for _ in 0..3 {
            buf.push(transition(vec![0.1, 0.2, 0.3], 0, 0.0));
        }
        assert!(dqn_train_step(&buf, &mut online, &target, &mut opt, &hyper, &mut rng).is_none());
        buf.push(transition(vec![0.1, 0.2, 0.3], 0, 0.0));
        assert!(dqn_train_step(&buf, &mut online, &target, &mut opt, &hyper, &mut rng).is_some());
    }

    #[test]
    fn zero_reward_zero_gamma_loss_is_mean_square_q() {
        let mut online = toy_net(3);
        let target = online.clone();
        let s = vec![0.3, 0.9, 0.1];
        let q = online.q_values(&s);
        let hyper = DqnHyper {
            batch_size: 8,
            gamma: 0.0,
            ..DqnHyper::default()
        };
        let mut buf = ReplayBuffer::new(8);
        for _ in 0..8 {
            buf.push(transition(s.clone(), 2, 0.0));
        }
        let mut opt = Optimizer::new(OptimizerKind::Sgd, &online, 0.001);
        let loss = dqn_train_step(
            &buf,
            &mut online,
            &target,
            &mut opt,
            &hyper,
            &mut stream_rng(0, 0),
        )
        .unwrap();
        assert!((loss - q[2] * q[2]).abs() <= 1e-14 * q[2] * q[2]);
    }

    #[test]
    fn sync_copies_and_is_idempotent() {
        let mut online = toy_net(4);
        let mut target = toy_net(5);
        let x = [0.2, 0.4, 0.6];
        assert_ne!(online.q_values(&x), target.q_values(&x));
        target_sync(&online, &mut target);
        assert_eq!(online.q_values(&x), target.q_values(&x));
        target_sync(&online, &mut target);
        assert_eq!(online, target);
        online.layers[0].bias[0] += 1.0;
        assert_ne!(online, target);
    }
}
