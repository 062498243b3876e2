//! The four-phase joint training schedule.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    slot_type_position, DdpgAgent, DdpgCheckpoint, DqnAgent, DqnCheckpoint, LinearSchedule, TrackingAgentSet, Variant,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::nn::CHECKPOINT_VERSION;
use crate::ontology::SlotType;

use super::episode::{
    derive_seed, run_dialogue, EpisodeOptions, EpisodeResult, EpisodeSeeds, Environment, TeacherPair, STREAM_AGENT,
    STREAM_POLICY, STREAM_TRACKERS,
};
use super::metrics::{EpisodeMetrics, EvalSummary, MetricsSeries, PhaseSummary};

/// A training run for one seed: environment, agents, metrics and the position in the schedule.
#[derive(Debug, Clone)]
pub struct Trainer {
    /// As given, before variant rules are applied.
    base_config: ExperimentConfig,
    config: ExperimentConfig,
    seed: u64,
    env: Environment,
    policy: DqnAgent,
    trackers: TrackingAgentSet,
    rng: ChaCha8Rng,
    metrics: MetricsSeries,
    episode: usize,
    phases_done: u8,
    agents_active: bool,
    pretrain_pool: [Vec<TeacherPair>; 3],
    distances: Vec<f64>,
}

fn build_trackers(cfg: &ExperimentConfig, env: &Environment, seed: u64) -> TrackingAgentSet {
    let mut r = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TRACKERS, 0));
    TrackingAgentSet::new(cfg.variant, &env.indices, &cfg.ddpg, cfg.reward.trust, &mut r)
}

impl Trainer {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let config = cfg.resolved();
        let env = Environment::from_config(&config)?;
        let mut prng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_POLICY, 0));
        let policy = DqnAgent::new(env.policy_state_dim(), env.actions.len(), config.dqn.clone(), &mut prng);
        let trackers = build_trackers(&config, &env, seed);
        Ok(Trainer {
            base_config: cfg.clone(),
            metrics: MetricsSeries::new(config.schedule.window),
            config,
            seed,
            env,
            policy,
            trackers,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_AGENT, 0)),
            episode: 0,
            phases_done: 0,
            agents_active: false,
            pretrain_pool: [Vec::new(), Vec::new(), Vec::new()],
            distances: Vec::new(),
        })
    }

    /// A copy that continues as `variant`. Before Phase 2 the result equals a
    /// fresh run of that variant, since Phase 1 never touches the trackers.
    pub fn fork(&self, variant: Variant) -> Result<Self> {
        if self.phases_done > 1 {
            return Err(Error::InvalidConfig("a run can only be forked before Phase 2".into()));
        }
        let mut base = self.base_config.clone();
        base.variant = variant;
        let config = base.resolved();
        let mut out = self.clone();
        out.env.reward = config.reward;
        out.trackers = build_trackers(&config, &out.env, self.seed);
        out.base_config = base;
        out.config = config;
        Ok(out)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn policy(&self) -> &DqnAgent {
        &self.policy
    }

    pub fn trackers(&self) -> &TrackingAgentSet {
        &self.trackers
    }

    pub fn metrics(&self) -> &MetricsSeries {
        &self.metrics
    }

    pub fn phases_done(&self) -> u8 {
        self.phases_done
    }

    /// Whether dialogues currently execute the agents' beliefs.
    pub fn agents_active(&self) -> bool {
        self.agents_active
    }

    /// Per-episode mean distance between agent outputs and the teacher (Phase 3 and later).
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    fn epsilon(&self) -> f64 {
        let d = &self.config.dqn;
        LinearSchedule { start: d.epsilon_start, end: d.epsilon_end, steps: self.config.schedule.n1 }.value(self.episode)
    }

    fn episode_count(&self, phase: u8) -> usize {
        let s = &self.config.schedule;
        match phase {
            1 => s.n1,
            2 => s.n2,
            3 => s.n3,
            _ => s.n4,
        }
    }

    fn record(&mut self, phase: u8, r: &EpisodeResult) {
        self.metrics.push(EpisodeMetrics {
            episode: self.episode,
            phase,
            success: r.success,
            turns: r.turns,
            reward: r.reward,
        });
        if let Some(d) = r.mean_distance {
            self.distances.push(d);
        }
        self.episode += 1;
    }

    fn episode(&mut self, opts: EpisodeOptions) -> Result<EpisodeResult> {
        let seeds = EpisodeSeeds::for_episode(self.seed, self.episode);
        run_dialogue(&self.env, &mut self.policy, &mut self.trackers, opts, seeds, &mut self.rng)
    }

    /// Runs the next phase of the schedule. Phases run in order 1..=4.
    pub fn run_phase(&mut self, phase: u8) -> Result<()> {
        if phase != self.phases_done + 1 || phase > 4 {
            return Err(Error::InvalidConfig(format!("phase {phase} cannot follow phase {}", self.phases_done)));
        }
        let n = self.episode_count(phase);
        let agents = self.config.variant.uses_agents();
        let base = EpisodeOptions {
            use_agents: false,
            epsilon: 0.0,
            learn_policy: false,
            explore_trackers: false,
            learn_trackers: false,
            record: false,
            teacher_pairs: false,
        };
        match (phase, agents) {
            (2, true) => {
                for _ in 0..n {
                    let opts = EpisodeOptions { epsilon: self.epsilon(), teacher_pairs: true, ..base };
                    let mut r = self.episode(opts)?;
                    self.pretrain(std::mem::take(&mut r.teacher_pairs), r.turns)?;
                    self.record(2, &r);
                }
                for st in SlotType::ALL {
                    if let Some(a) = self.trackers.get_mut(st) {
                        a.sync_targets();
                    }
                }
                self.pretrain_pool = [Vec::new(), Vec::new(), Vec::new()];
                self.agents_active = true;
            }
            (3, true) => {
                let d = &self.config.ddpg;
                let sigma = LinearSchedule { start: d.sigma_start, end: d.sigma_end, steps: n };
                for i in 0..n {
                    self.trackers.set_sigma(sigma.value(i));
                    let opts = EpisodeOptions {
                        use_agents: true,
                        epsilon: self.epsilon(),
                        explore_trackers: true,
                        learn_trackers: true,
                        ..base
                    };
                    let r = self.episode(opts)?;
                    self.record(3, &r);
                }
            }
            (4, true) => {
                for _ in 0..n {
                    let opts = EpisodeOptions { use_agents: true, epsilon: self.epsilon(), learn_policy: true, ..base };
                    let r = self.episode(opts)?;
                    self.record(4, &r);
                }
            }
            _ => {
                // Phase 1, or the polynomial baseline which keeps training its policy throughout.
                let label = if phase == 4 { 4 } else { 1 };
                for _ in 0..n {
                    let opts = EpisodeOptions { epsilon: self.epsilon(), learn_policy: true, ..base };
                    let r = self.episode(opts)?;
                    self.record(label, &r);
                }
            }
        }
        self.phases_done = phase;
        Ok(())
    }

    fn pretrain(&mut self, pairs: Vec<TeacherPair>, turns: usize) -> Result<()> {
        for p in pairs {
            self.pretrain_pool[slot_type_position(p.slot_type)].push(p);
        }
        let steps = self.config.schedule.pretrain_steps * turns;
        let batch = self.config.schedule.pretrain_batch;
        for st in SlotType::ALL {
            let k = slot_type_position(st);
            let pool = &self.pretrain_pool[k];
            let Some(agent) = self.trackers.get_mut(st) else { continue };
            if pool.is_empty() {
                continue;
            }
            for _ in 0..steps {
                let idx = index::sample(&mut self.rng, pool.len(), batch.min(pool.len()));
                let states: Vec<&[f64]> = idx.iter().map(|i| pool[i].state.as_slice()).collect();
                let targets: Vec<&[f64]> = idx.iter().map(|i| pool[i].target.as_slice()).collect();
                agent.pretrain_actor(&states, &targets)?;
            }
        }
        Ok(())
    }

    /// Runs every remaining phase. A non-finite loss ends the run and is
    /// returned as the crash reason; the metrics recorded so far are kept.
    pub fn train(&mut self) -> Result<Option<String>> {
        while self.phases_done < 4 {
            match self.run_phase(self.phases_done + 1) {
                Ok(()) => {}
                Err(e @ Error::NonFinite(_)) => return Ok(Some(format!("episode {}: {e}", self.episode))),
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    /// Greedy evaluation on episodes independent of training.
    pub fn evaluate(&self, episodes: usize, seed: u64) -> Result<EvalSummary> {
        let mut policy = DqnAgent::from_checkpoint(self.policy.checkpoint())?;
        let mut trackers = copy_trackers(&self.trackers)?;
        evaluate_components(&self.env, &mut policy, &mut trackers, self.agents_active, episodes, seed)
    }

    /// Mean per-dimension |π(s) − b^a(s)| of the noiseless actors over at
    /// least `turns` turns of fresh teacher-tracked dialogues.
    pub fn teacher_gap(&self, turns: usize, seed: u64) -> Result<Option<f64>> {
        if self.trackers.is_empty() {
            return Ok(None);
        }
        let mut policy = DqnAgent::from_checkpoint(self.policy.checkpoint())?;
        let mut trackers = copy_trackers(&self.trackers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = EpisodeOptions { teacher_pairs: true, ..EpisodeOptions::evaluation(false) };
        let per_turn = self.trackers.enabled().count();
        let (mut sum, mut dims, mut seen, mut i) = (0.0, 0usize, 0usize, 0usize);
        while seen < turns * per_turn {
            let r = run_dialogue(&self.env, &mut policy, &mut trackers, opts, EpisodeSeeds::for_evaluation(seed, i), &mut rng)?;
            for p in &r.teacher_pairs {
                let agent = trackers.get(p.slot_type).expect("enabled");
                let out = agent.act(&p.state, false, &mut rng)?;
                sum += out.iter().zip(&p.target).map(|(a, b)| (a - b).abs()).sum::<f64>();
                dims += out.len();
            }
            seen += r.teacher_pairs.len();
            i += 1;
        }
        Ok(Some(sum / dims.max(1) as f64))
    }

    pub fn checkpoint(&self) -> ManagerCheckpoint {
        ManagerCheckpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            seed: self.seed,
            episode: self.episode,
            phases_done: self.phases_done,
            agents_active: self.agents_active,
            policy: self.policy.checkpoint(),
            trackers: self.trackers.checkpoints(),
        }
    }

    /// Restores agents from a checkpoint; replay memories start empty.
    pub fn from_checkpoint(ck: ManagerCheckpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", ck.version)));
        }
        let mut t = Trainer::new(&ck.config, ck.seed)?;
        t.policy = DqnAgent::from_checkpoint(ck.policy)?;
        let [g, r, m] = ck.trackers;
        let load = |c: Option<DdpgCheckpoint>| c.map(DdpgAgent::from_checkpoint).transpose();
        t.trackers = TrackingAgentSet::from_agents([load(g)?, load(r)?, load(m)?], t.config.reward.trust);
        t.env.check_components(&t.policy, &t.trackers)?;
        t.episode = ck.episode;
        t.phases_done = ck.phases_done;
        t.agents_active = ck.agents_active;
        Ok(t)
    }

    pub fn summary(&self, crashed: Option<String>, eval: Option<EvalSummary>) -> RunSummary {
        let s = &self.config.schedule;
        RunSummary {
            variant: self.config.variant,
            seed: self.seed,
            ontology: self.config.ontology.clone(),
            boundaries: [s.n1, s.n2, s.n3, s.n4],
            window: self.metrics.window,
            episodes: self.metrics.len(),
            crashed,
            final_moving_reward: self.metrics.final_moving_reward(),
            phases: self.metrics.phase_summaries(),
            eval,
        }
    }

    /// Writes the metrics table, summary, checkpoint and resolved config into `dir`.
    pub fn save(&self, dir: &Path, summary: &RunSummary) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(METRICS_FILE), self.metrics.to_csv())?;
        std::fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(summary).expect("summary serializes"))?;
        std::fs::write(dir.join(CHECKPOINT_FILE), serde_json::to_string(&self.checkpoint()).expect("checkpoint serializes"))?;
        std::fs::write(dir.join(CONFIG_FILE), self.config.to_toml())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        let ck: ManagerCheckpoint = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(ck)
    }
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CONFIG_FILE: &str = "config.toml";

fn copy_trackers(set: &TrackingAgentSet) -> Result<TrackingAgentSet> {
    let [g, r, m] = set.checkpoints();
    let load = |c: Option<DdpgCheckpoint>| c.map(DdpgAgent::from_checkpoint).transpose();
    let trust = SlotType::ALL.map(|st| set.trust(st));
    Ok(TrackingAgentSet::from_agents([load(g)?, load(r)?, load(m)?], trust))
}

/// Greedy policy and noiseless trackers over `episodes` dialogues.
pub fn evaluate_components(
    env: &Environment,
    policy: &mut DqnAgent,
    trackers: &mut TrackingAgentSet,
    use_agents: bool,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let r = run_dialogue(
            env,
            policy,
            trackers,
            EpisodeOptions::evaluation(use_agents),
            EpisodeSeeds::for_evaluation(seed, i),
            &mut rng,
        )?;
        results.push((r.success, r.turns, r.reward));
    }
    Ok(EvalSummary::from_episodes(&results))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagerCheckpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub episode: usize,
    pub phases_done: u8,
    pub agents_active: bool,
    pub policy: DqnCheckpoint,
    pub trackers: [Option<DdpgCheckpoint>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub seed: u64,
    pub ontology: String,
    /// N1..N4.
    pub boundaries: [usize; 4],
    pub window: usize,
    pub episodes: usize,
    pub crashed: Option<String>,
    pub final_moving_reward: Option<f64>,
    pub phases: Vec<PhaseSummary>,
    pub eval: Option<EvalSummary>,
}

/// Trains one seed from scratch; returns the trainer and the crash reason, if any.
pub fn joint_train(cfg: &ExperimentConfig, seed: u64) -> Result<(Trainer, Option<String>)> {
    let mut t = Trainer::new(cfg, seed)?;
    let crashed = t.train()?;
    Ok((t, crashed))
}
