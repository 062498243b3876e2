//! Replay memory, the Q-network policy agent and the actor-critic tracking agents.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{apply_gradients, soft_update, Activation, Mlp, OptimizerState, CHECKPOINT_VERSION};
use crate::ontology::{Indices, SlotType};
use crate::tracker::FEATURES_PER_ENTRY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<A> {
    pub state: Vec<f64>,
    pub action: A,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

pub type PolicyTransition = Transition<usize>;
pub type TrackingTransition = Transition<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct ReplayBuffer<A> {
    capacity: usize,
    items: Vec<Transition<A>>,
    next: usize,
}

impl<A> ReplayBuffer<A> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, items: Vec::new(), next: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition<A>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition<A>>> {
        if n == 0 || n > self.items.len() {
            return Err(Error::InsufficientSamples { available: self.items.len(), requested: n });
        }
        Ok(index::sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<A>> {
        self.items.iter()
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.next = 0;
    }
}

/// Linear interpolation from `start` to `end` over `steps`, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl LinearSchedule {
    pub fn value(&self, t: usize) -> f64 {
        if t >= self.steps {
            return self.end;
        }
        self.start + (self.end - self.start) * (t as f64 / self.steps as f64)
    }
}

fn check_finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: vec![128, 128],
            learning_rate: 1e-3,
            discount: 0.99,
            tau: 0.01,
            batch_size: 32,
            buffer_capacity: 50_000,
            warmup: 1_000,
            epsilon_start: 0.3,
            epsilon_end: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub config: DqnConfig,
    online: Mlp,
    target: Mlp,
    optimizer: OptimizerState,
    pub buffer: ReplayBuffer<usize>,
    learn_steps: u64,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, n_actions: usize, config: DqnConfig, rng: &mut R) -> Self {
        let online = Mlp::with_hidden(state_dim, &config.hidden, n_actions, Activation::Relu, Activation::Identity, rng);
        Self::from_net(online, config)
    }

    pub fn from_net(online: Mlp, config: DqnConfig) -> Self {
        let optimizer = OptimizerState::adam(config.learning_rate, &online);
        DqnAgent {
            target: online.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity.max(1)),
            online,
            optimizer,
            config,
            learn_steps: 0,
        }
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn n_actions(&self) -> usize {
        self.online.output_dim()
    }

    pub fn state_dim(&self) -> usize {
        self.online.input_dim()
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.online.predict(state)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.q_values(state)?))
    }

    /// ε-greedy; with probability ε a uniformly random action.
    pub fn select<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        check_dim(self.state_dim(), state.len())?;
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            return Ok(rng.random_range(0..self.n_actions()));
        }
        self.greedy(state)
    }

    /// One step on the mean squared TD error; returns the loss before the step.
    pub fn learn(&mut self, batch: &[&PolicyTransition]) -> Result<f64> {
        let loss = dqn_step(&mut self.online, &self.target, &mut self.optimizer, self.config.discount, batch)?;
        soft_update(&mut self.target, &self.online, self.config.tau)?;
        self.learn_steps += 1;
        Ok(loss)
    }

    /// Learn from a replay sample once the warm-up is over.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        let n = self.config.batch_size;
        if self.buffer.len() < self.config.warmup.max(n) {
            return Ok(None);
        }
        let batch = self.buffer.sample(n, rng)?;
        let loss = dqn_step(&mut self.online, &self.target, &mut self.optimizer, self.config.discount, &batch)?;
        soft_update(&mut self.target, &self.online, self.config.tau)?;
        self.learn_steps += 1;
        Ok(Some(loss))
    }

    pub fn checkpoint(&self) -> DqnCheckpoint {
        DqnCheckpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            online: self.online.clone(),
            target: self.target.clone(),
            optimizer: self.optimizer.clone(),
            learn_steps: self.learn_steps,
        }
    }

    pub fn from_checkpoint(ck: DqnCheckpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported policy checkpoint version {}", ck.version)));
        }
        if !ck.online.same_architecture(&ck.target) {
            return Err(Error::ArchitectureMismatch("policy online/target networks differ".into()));
        }
        Ok(DqnAgent {
            buffer: ReplayBuffer::new(ck.config.buffer_capacity.max(1)),
            config: ck.config,
            online: ck.online,
            target: ck.target,
            optimizer: ck.optimizer,
            learn_steps: ck.learn_steps,
        })
    }
}

fn dqn_step(
    online: &mut Mlp,
    target: &Mlp,
    opt: &mut OptimizerState,
    discount: f64,
    batch: &[&PolicyTransition],
) -> Result<f64> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::InsufficientSamples { available: 0, requested: 1 });
    }
    let (s_dim, n_act) = (online.input_dim(), online.output_dim());
    let mut states = Vec::with_capacity(b * s_dim);
    let mut next = Vec::with_capacity(b * s_dim);
    for t in batch {
        check_dim(s_dim, t.state.len())?;
        check_dim(s_dim, t.next_state.len())?;
        if t.action >= n_act {
            return Err(Error::DimensionMismatch { expected: n_act, actual: t.action + 1 });
        }
        states.extend_from_slice(&t.state);
        next.extend_from_slice(&t.next_state);
    }
    let q_next = if discount > 0.0 { Some(target.predict_batch(&next, b)?) } else { None };
    let (q, cache) = online.forward_batch(&states, b)?;
    let mut dout = vec![0.0; b * n_act];
    let mut loss = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let mut y = t.reward;
        if let (false, Some(qn)) = (t.terminal, &q_next) {
            y += discount * qn[i * n_act..(i + 1) * n_act].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        let err = q[i * n_act + t.action] - y;
        loss += err * err;
        dout[i * n_act + t.action] = 2.0 * err / b as f64;
    }
    let loss = check_finite(loss / b as f64, "policy loss")?;
    let (grads, _) = online.backward(&cache, &dout)?;
    apply_gradients(online, &grads, opt)?;
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnCheckpoint {
    pub version: u32,
    pub config: DqnConfig,
    pub online: Mlp,
    pub target: Mlp,
    pub optimizer: OptimizerState,
    pub learn_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub pretrain_lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub sigma_start: f64,
    pub sigma_end: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        DdpgConfig {
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            pretrain_lr: 1e-3,
            discount: 0.99,
            tau: 0.01,
            batch_size: 32,
            buffer_capacity: 50_000,
            warmup: 1_000,
            sigma_start: 0.2,
            sigma_end: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: DdpgConfig,
    actor: Mlp,
    critic: Mlp,
    actor_target: Mlp,
    critic_target: Mlp,
    actor_opt: OptimizerState,
    critic_opt: OptimizerState,
    pretrain_opt: OptimizerState,
    pub buffer: ReplayBuffer<Vec<f64>>,
    /// Current exploration noise scale.
    pub sigma: f64,
    learn_steps: u64,
}

/// Losses from one actor-critic update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgLosses {
    pub critic_loss: f64,
    pub mean_q: f64,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, config: DdpgConfig, rng: &mut R) -> Self {
        let actor = Mlp::with_hidden(state_dim, &config.actor_hidden, action_dim, Activation::Relu, Activation::Sigmoid, rng);
        let critic = Mlp::with_hidden(
            state_dim + action_dim,
            &config.critic_hidden,
            1,
            Activation::Relu,
            Activation::Identity,
            rng,
        );
        Self::from_nets(actor, critic, config).expect("freshly built networks are consistent")
    }

    pub fn from_nets(actor: Mlp, critic: Mlp, config: DdpgConfig) -> Result<Self> {
        if critic.input_dim() != actor.input_dim() + actor.output_dim() || critic.output_dim() != 1 {
            return Err(Error::ArchitectureMismatch("critic must take state and action and return one value".into()));
        }
        Ok(DdpgAgent {
            actor_opt: OptimizerState::adam(config.actor_lr, &actor),
            critic_opt: OptimizerState::adam(config.critic_lr, &critic),
            pretrain_opt: OptimizerState::adam(config.pretrain_lr, &actor),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity.max(1)),
            sigma: config.sigma_start,
            actor,
            critic,
            config,
            learn_steps: 0,
        })
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn critic_target(&self) -> &Mlp {
        &self.critic_target
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    /// All network parameters, for bit-identity checks.
    pub fn parameter_snapshot(&self) -> Vec<f64> {
        [&self.actor, &self.critic, &self.actor_target, &self.critic_target].iter().flat_map(|n| n.params()).collect()
    }

    /// Actor output, plus clamped Gaussian noise when exploring.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor.predict(state)?;
        if explore && self.sigma > 0.0 {
            let noise = Normal::new(0.0, self.sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            for x in &mut a {
                *x = (*x + noise.sample(rng)).clamp(0.0, 1.0);
            }
        }
        Ok(a)
    }

    fn critic_input(states: &[f64], actions: &[f64], s_dim: usize, a_dim: usize, b: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(b * (s_dim + a_dim));
        for i in 0..b {
            x.extend_from_slice(&states[i * s_dim..(i + 1) * s_dim]);
            x.extend_from_slice(&actions[i * a_dim..(i + 1) * a_dim]);
        }
        x
    }

    /// Gradient of −mean Q(s, π(s)) with respect to the actor parameters, and the mean Q.
    pub fn actor_gradient(&self, states: &[f64], b: usize) -> Result<(crate::nn::Gradients, f64)> {
        let (s_dim, a_dim) = (self.state_dim(), self.action_dim());
        let (actions, actor_cache) = self.actor.forward_batch(states, b)?;
        let (q, critic_cache) = self.critic.forward_batch(&Self::critic_input(states, &actions, s_dim, a_dim, b), b)?;
        let mean_q = q.iter().sum::<f64>() / b as f64;
        let (_, dx) = self.critic.backward(&critic_cache, &vec![-1.0 / b as f64; b])?;
        let mut da = Vec::with_capacity(b * a_dim);
        for i in 0..b {
            let row = &dx[i * (s_dim + a_dim)..(i + 1) * (s_dim + a_dim)];
            da.extend_from_slice(&row[s_dim..]);
        }
        let (grads, _) = self.actor.backward(&actor_cache, &da)?;
        Ok((grads, mean_q))
    }

    pub fn learn(&mut self, batch: &[&TrackingTransition]) -> Result<DdpgLosses> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::InsufficientSamples { available: 0, requested: 1 });
        }
        let (s_dim, a_dim) = (self.state_dim(), self.action_dim());
        let mut states = Vec::with_capacity(b * s_dim);
        let mut next = Vec::with_capacity(b * s_dim);
        let mut actions = Vec::with_capacity(b * a_dim);
        for t in batch {
            check_dim(s_dim, t.state.len())?;
            check_dim(s_dim, t.next_state.len())?;
            check_dim(a_dim, t.action.len())?;
            states.extend_from_slice(&t.state);
            next.extend_from_slice(&t.next_state);
            actions.extend_from_slice(&t.action);
        }

        let q_next = if self.config.discount > 0.0 {
            let a_next = self.actor_target.predict_batch(&next, b)?;
            Some(self.critic_target.predict_batch(&Self::critic_input(&next, &a_next, s_dim, a_dim, b), b)?)
        } else {
            None
        };
        let (q, cache) = self.critic.forward_batch(&Self::critic_input(&states, &actions, s_dim, a_dim, b), b)?;
        let mut dout = vec![0.0; b];
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            let mut y = t.reward;
            if let (false, Some(qn)) = (t.terminal, &q_next) {
                y += self.config.discount * qn[i];
            }
            let err = q[i] - y;
            loss += err * err;
            dout[i] = 2.0 * err / b as f64;
        }
        let critic_loss = check_finite(loss / b as f64, "critic loss")?;
        let (grads, _) = self.critic.backward(&cache, &dout)?;
        apply_gradients(&mut self.critic, &grads, &mut self.critic_opt)?;

        let (actor_grads, mean_q) = self.actor_gradient(&states, b)?;
        let mean_q = check_finite(mean_q, "actor objective")?;
        apply_gradients(&mut self.actor, &actor_grads, &mut self.actor_opt)?;

        soft_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        soft_update(&mut self.critic_target, &self.critic, self.config.tau)?;
        self.learn_steps += 1;
        Ok(DdpgLosses { critic_loss, mean_q })
    }

    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<DdpgLosses>> {
        let n = self.config.batch_size;
        if self.buffer.len() < self.config.warmup.max(n) {
            return Ok(None);
        }
        let idx: Vec<usize> = index::sample(rng, self.buffer.len(), n).into_vec();
        let batch: Vec<TrackingTransition> = idx.iter().map(|&i| self.buffer.items[i].clone()).collect();
        let refs: Vec<&TrackingTransition> = batch.iter().collect();
        self.learn(&refs).map(Some)
    }

    /// One supervised step of the actor toward teacher beliefs; returns the batch MSE before the step.
    pub fn pretrain_actor(&mut self, states: &[&[f64]], targets: &[&[f64]]) -> Result<f64> {
        let b = states.len();
        if b == 0 || targets.len() != b {
            return Err(Error::DimensionMismatch { expected: b.max(1), actual: targets.len() });
        }
        let (s_dim, a_dim) = (self.state_dim(), self.action_dim());
        let mut x = Vec::with_capacity(b * s_dim);
        let mut y = Vec::with_capacity(b * a_dim);
        for (s, t) in states.iter().zip(targets) {
            check_dim(s_dim, s.len())?;
            check_dim(a_dim, t.len())?;
            if t.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidBelief("teacher target outside [0,1]".into()));
            }
            x.extend_from_slice(s);
            y.extend_from_slice(t);
        }
        let (out, cache) = self.actor.forward_batch(&x, b)?;
        let n = (b * a_dim) as f64;
        let mut mse = 0.0;
        let dout: Vec<f64> = out
            .iter()
            .zip(&y)
            .map(|(p, t)| {
                mse += (p - t) * (p - t);
                2.0 * (p - t) / n
            })
            .collect();
        let mse = check_finite(mse / n, "pre-training loss")?;
        let (grads, _) = self.actor.backward(&cache, &dout)?;
        apply_gradients(&mut self.actor, &grads, &mut self.pretrain_opt)?;
        Ok(mse)
    }

    /// Copy the actor into its target, used after pre-training.
    pub fn sync_targets(&mut self) {
        self.actor_target = self.actor.clone();
        self.critic_target = self.critic.clone();
    }

    pub fn set_pretrain_learning_rate(&mut self, lr: f64) {
        self.pretrain_opt.learning_rate = lr;
    }

    pub fn checkpoint(&self) -> DdpgCheckpoint {
        DdpgCheckpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            actor_target: self.actor_target.clone(),
            critic_target: self.critic_target.clone(),
            actor_opt: self.actor_opt.clone(),
            critic_opt: self.critic_opt.clone(),
            pretrain_opt: self.pretrain_opt.clone(),
            sigma: self.sigma,
            learn_steps: self.learn_steps,
        }
    }

    pub fn from_checkpoint(ck: DdpgCheckpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported tracking checkpoint version {}", ck.version)));
        }
        let mut agent = Self::from_nets(ck.actor, ck.critic, ck.config)?;
        if !agent.actor.same_architecture(&ck.actor_target) || !agent.critic.same_architecture(&ck.critic_target) {
            return Err(Error::ArchitectureMismatch("tracking target networks differ".into()));
        }
        agent.actor_target = ck.actor_target;
        agent.critic_target = ck.critic_target;
        agent.actor_opt = ck.actor_opt;
        agent.critic_opt = ck.critic_opt;
        agent.pretrain_opt = ck.pretrain_opt;
        agent.sigma = ck.sigma;
        agent.learn_steps = ck.learn_steps;
        Ok(agent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgCheckpoint {
    pub version: u32,
    pub config: DdpgConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: OptimizerState,
    pub critic_opt: OptimizerState,
    pub pretrain_opt: OptimizerState,
    pub sigma: f64,
    pub learn_steps: u64,
}

/// Which slot types are tracked by agents, and whether the teacher's distance penalty is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Polynomial,
    TaG,
    TaR,
    TaM,
    TaAll,
    TaNoteaching,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Polynomial, Variant::TaG, Variant::TaR, Variant::TaM, Variant::TaAll, Variant::TaNoteaching];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Polynomial => "polynomial",
            Variant::TaG => "ta-g",
            Variant::TaR => "ta-r",
            Variant::TaM => "ta-m",
            Variant::TaAll => "ta-all",
            Variant::TaNoteaching => "ta-noteaching",
        }
    }

    /// Enabled agents in goal, request, method order.
    pub fn enabled(self) -> [bool; 3] {
        match self {
            Variant::Polynomial => [false; 3],
            Variant::TaG => [true, false, false],
            Variant::TaR => [false, true, false],
            Variant::TaM => [false, false, true],
            Variant::TaAll | Variant::TaNoteaching => [true; 3],
        }
    }

    pub fn uses_agents(self) -> bool {
        self != Variant::Polynomial
    }

    pub fn teaching(self) -> bool {
        self != Variant::TaNoteaching
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

pub fn slot_type_position(slot_type: SlotType) -> usize {
    match slot_type {
        SlotType::Goal => 0,
        SlotType::Request => 1,
        SlotType::Method => 2,
    }
}

/// Optional goal, request and method agents with their trust factors.
#[derive(Debug, Clone)]
pub struct TrackingAgentSet {
    agents: [Option<DdpgAgent>; 3],
    trust: [f64; 3],
}

impl TrackingAgentSet {
    pub fn new<R: Rng + ?Sized>(
        variant: Variant,
        indices: &Indices,
        config: &DdpgConfig,
        trust: [f64; 3],
        rng: &mut R,
    ) -> Self {
        let enabled = variant.enabled();
        let agents = SlotType::ALL.map(|st| {
            enabled[slot_type_position(st)].then(|| {
                let dim = indices.get(st).dimension();
                DdpgAgent::new(FEATURES_PER_ENTRY * dim, dim, config.clone(), rng)
            })
        });
        let trust = if variant.teaching() { trust } else { [0.0; 3] };
        TrackingAgentSet { agents, trust }
    }

    pub fn empty() -> Self {
        TrackingAgentSet { agents: [None, None, None], trust: [0.0; 3] }
    }

    pub fn from_agents(agents: [Option<DdpgAgent>; 3], trust: [f64; 3]) -> Self {
        TrackingAgentSet { agents, trust }
    }

    pub fn get(&self, slot_type: SlotType) -> Option<&DdpgAgent> {
        self.agents[slot_type_position(slot_type)].as_ref()
    }

    pub fn get_mut(&mut self, slot_type: SlotType) -> Option<&mut DdpgAgent> {
        self.agents[slot_type_position(slot_type)].as_mut()
    }

    pub fn trust(&self, slot_type: SlotType) -> f64 {
        self.trust[slot_type_position(slot_type)]
    }

    pub fn is_empty(&self) -> bool {
        self.agents.iter().all(Option::is_none)
    }

    pub fn enabled(&self) -> impl Iterator<Item = SlotType> + '_ {
        SlotType::ALL.into_iter().filter(|st| self.get(*st).is_some())
    }

    pub fn set_sigma(&mut self, sigma: f64) {
        for a in self.agents.iter_mut().flatten() {
            a.sigma = sigma;
        }
    }

    pub fn parameter_snapshot(&self) -> Vec<f64> {
        self.agents.iter().flatten().flat_map(DdpgAgent::parameter_snapshot).collect()
    }

    pub fn checkpoints(&self) -> [Option<DdpgCheckpoint>; 3] {
        [0, 1, 2].map(|i| self.agents[i].as_ref().map(DdpgAgent::checkpoint))
    }
}
