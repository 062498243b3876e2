//! One dialogue between the manager and the simulated user.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{slot_type_position, DqnAgent, Transition, TrackingAgentSet};
use crate::config::ExperimentConfig;
use crate::dialogue::{
    belief_vector, uniform_belief, vector_to_belief, ActType, BeliefState, DialogueAct, RewardBreakdown,
    SluHypotheses, TurnRecord, UserGoal, TURN_RECORD_SCHEMA,
};
use crate::error::{Error, Result};
use crate::ontology::{parse_entity_name, Indices, Ontology, SlotType};
use crate::reward::{basic_score, evaluation_reward, policy_turn_reward, tracking_turn_reward, RewardConfig};
use crate::tracker::{extract_features, PolynomialTracker};
use crate::usersim::{corrupt, sample_goal, user_respond, Agenda, ErrorModel, SuccessJudge, UserConfig};

use super::actions::{execute_system_act, policy_state, policy_state_dim, SystemAction, SystemActionSpace};

/// Everything about the task that stays fixed during a run.
#[derive(Debug, Clone)]
pub struct Environment {
    pub ontology: Ontology,
    pub indices: Indices,
    pub actions: SystemActionSpace,
    pub user: UserConfig,
    pub error_model: ErrorModel,
    pub tracker: PolynomialTracker,
    pub reward: RewardConfig,
    pub max_turns: usize,
}

impl Environment {
    pub fn new(ontology: Ontology, cfg: &ExperimentConfig) -> Self {
        Environment {
            indices: Indices::new(&ontology),
            actions: SystemActionSpace::new(&ontology),
            ontology,
            user: cfg.user.clone(),
            error_model: cfg.error_model.clone(),
            tracker: PolynomialTracker::new(cfg.tracker),
            reward: cfg.reward,
            max_turns: cfg.schedule.max_turns,
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self::new(cfg.load_ontology()?, cfg))
    }

    pub fn policy_state_dim(&self) -> usize {
        policy_state_dim(&self.ontology, self.actions.len())
    }

    /// Fails early when the agents do not fit this environment.
    pub fn check_components(&self, policy: &DqnAgent, trackers: &TrackingAgentSet) -> Result<()> {
        if policy.state_dim() != self.policy_state_dim() || policy.n_actions() != self.actions.len() {
            return Err(Error::ArchitectureMismatch(format!(
                "policy is {}→{}, environment needs {}→{}",
                policy.state_dim(),
                policy.n_actions(),
                self.policy_state_dim(),
                self.actions.len()
            )));
        }
        for st in trackers.enabled() {
            let agent = trackers.get(st).expect("enabled");
            let dim = self.indices.get(st).dimension();
            if agent.action_dim() != dim || agent.state_dim() != crate::tracker::FEATURES_PER_ENTRY * dim {
                return Err(Error::ArchitectureMismatch(format!("{} tracking agent does not fit the ontology", st.as_str())));
            }
        }
        Ok(())
    }
}

/// What the tracking agents produced in one turn.
#[derive(Debug, Clone, Default)]
pub struct AgentTurn {
    /// Agent input and raw action per slot type.
    pub steps: [Option<(Vec<f64>, Vec<f64>)>; 3],
    /// Basic-score reward per slot type.
    pub basic_scores: [Option<f64>; 3],
    /// Summed distance between agent outputs and the teacher belief.
    pub distance: f64,
    /// Agent inputs labelled with the teacher belief, when requested.
    pub pairs: Vec<TeacherPair>,
}

/// Teacher-labelled tracking input collected for pre-training.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherPair {
    pub slot_type: SlotType,
    pub state: Vec<f64>,
    pub target: Vec<f64>,
}

/// Manager-side state carried from turn to turn.
#[derive(Debug, Clone)]
pub struct ManagerState {
    pub aux: BeliefState,
    pub executed: BeliefState,
    pub last_action: Option<usize>,
    pub last_offer: Option<usize>,
    pub system_act: DialogueAct,
    pub turn: usize,
    pub decisions: usize,
}

impl ManagerState {
    pub fn new(ontology: &Ontology) -> Self {
        let b = uniform_belief(ontology);
        ManagerState {
            aux: b.clone(),
            executed: b,
            last_action: None,
            last_offer: None,
            system_act: DialogueAct::system(ActType::Hello),
            turn: 0,
            decisions: 0,
        }
    }

    /// Builds this turn's features on the executed belief, runs the teacher
    /// on them and, when `use_agents`, replaces enabled fragments of the
    /// executed belief with the agents' outputs for the same features.
    #[allow(clippy::too_many_arguments)]
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        env: &Environment,
        trackers: &TrackingAgentSet,
        slu: &SluHypotheses,
        use_agents: bool,
        explore: bool,
        collect_pairs: bool,
        rng: &mut R,
    ) -> Result<AgentTurn> {
        let frame = extract_features(slu, &self.executed, &self.system_act, &env.ontology, self.turn);
        let aux = env.tracker.update(&frame, &env.indices, &env.ontology);
        let mut executed = aux.clone();
        let mut out = AgentTurn::default();
        let acting = use_agents && !trackers.is_empty();
        if acting || collect_pairs {
            for st in trackers.enabled() {
                let index = env.indices.get(st);
                let state = frame.to_vector(st);
                let teacher = belief_vector(&aux, index)?;
                if acting {
                    let agent = trackers.get(st).expect("enabled");
                    let action = agent.act(&state, explore, rng)?;
                    executed.set_fragment(vector_to_belief(&action, index)?);
                    let k = slot_type_position(st);
                    out.basic_scores[k] = Some(basic_score(&action, &teacher, trackers.trust(st))?);
                    out.distance += basic_score(&action, &teacher, 1.0)?.abs();
                    out.steps[k] = Some((state.clone(), action));
                }
                if collect_pairs {
                    out.pairs.push(TeacherPair { slot_type: st, state, target: teacher });
                }
            }
        }
        self.aux = aux;
        self.executed = executed;
        self.turn += 1;
        Ok(out)
    }

    pub fn policy_input(&self, env: &Environment) -> Vec<f64> {
        policy_state(
            &self.executed,
            &env.ontology,
            env.actions.len(),
            self.last_action,
            self.decisions,
            env.max_turns,
            self.last_offer.is_some(),
        )
    }

    /// Grounds and records a chosen action.
    pub fn act(&mut self, env: &Environment, index: usize) -> Result<DialogueAct> {
        let action = env.actions.get(index)?;
        let act = execute_system_act(action, &self.executed, &env.ontology, self.last_offer);
        if action == SystemAction::OfferBest {
            self.last_offer = act.entity().and_then(parse_entity_name);
        }
        self.last_action = Some(index);
        self.system_act = act.clone();
        self.decisions += 1;
        Ok(act)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    /// Execute the agents' beliefs instead of the polynomial tracker's.
    pub use_agents: bool,
    pub epsilon: f64,
    pub learn_policy: bool,
    pub explore_trackers: bool,
    pub learn_trackers: bool,
    pub record: bool,
    pub teacher_pairs: bool,
}

impl EpisodeOptions {
    /// Greedy, noiseless, no learning.
    pub fn evaluation(use_agents: bool) -> Self {
        EpisodeOptions {
            use_agents,
            epsilon: 0.0,
            learn_policy: false,
            explore_trackers: false,
            learn_trackers: false,
            record: false,
            teacher_pairs: false,
        }
    }
}

/// Seeds for the user and the error channel of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSeeds {
    pub user: u64,
    pub channel: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seed for stream `stream`, item `index` of run `seed`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

pub const STREAM_USER: u64 = 1;
pub const STREAM_CHANNEL: u64 = 2;
pub const STREAM_EVAL: u64 = 3;
pub const STREAM_AGENT: u64 = 4;
pub const STREAM_TRACKERS: u64 = 5;
pub const STREAM_POLICY: u64 = 6;

impl EpisodeSeeds {
    pub fn for_episode(seed: u64, episode: usize) -> Self {
        EpisodeSeeds {
            user: derive_seed(seed, STREAM_USER, episode as u64),
            channel: derive_seed(seed, STREAM_CHANNEL, episode as u64),
        }
    }

    pub fn for_evaluation(seed: u64, episode: usize) -> Self {
        let base = derive_seed(seed, STREAM_EVAL, 0);
        Self::for_episode(base, episode)
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub goal: UserGoal,
    pub success: bool,
    /// Number of system decisions.
    pub turns: usize,
    pub reward: f64,
    pub log: Vec<TurnRecord>,
    pub teacher_pairs: Vec<TeacherPair>,
    /// Mean per-turn distance between agent outputs and the teacher, when agents acted.
    pub mean_distance: Option<f64>,
    pub policy_losses: Vec<f64>,
}

struct PendingTracking {
    state: Vec<f64>,
    action: Vec<f64>,
    basic_score: f64,
}

#[derive(Default)]
struct Pending {
    policy: Option<(Vec<f64>, usize)>,
    tracking: [Option<PendingTracking>; 3],
}

/// Pushes the transitions of the previous decision and runs one learn step per agent.
#[allow(clippy::too_many_arguments)]
fn close_pending(
    pending: &mut Pending,
    policy: &mut DqnAgent,
    trackers: &mut TrackingAgentSet,
    next_policy: &[f64],
    next_agents: &AgentTurn,
    terminal: bool,
    success: bool,
    cfg: &RewardConfig,
    rng: &mut ChaCha8Rng,
    losses: &mut Vec<f64>,
) -> Result<()> {
    if let Some((state, action)) = pending.policy.take() {
        let reward = policy_turn_reward(cfg, terminal, success);
        policy.buffer.push(Transition { state, action, reward, next_state: next_policy.to_vec(), terminal });
        if let Some(loss) = policy.train_step(rng)? {
            losses.push(loss);
        }
    }
    for st in SlotType::ALL {
        let k = slot_type_position(st);
        let Some(p) = pending.tracking[k].take() else { continue };
        let Some(agent) = trackers.get_mut(st) else { continue };
        let reward = if terminal {
            tracking_turn_reward(cfg, &[], &[], 0.0, true, success)?
        } else {
            cfg.turn_penalty + p.basic_score
        };
        let next_state = match &next_agents.steps[k] {
            Some((s, _)) => s.clone(),
            None => p.state.clone(),
        };
        agent.buffer.push(Transition { state: p.state, action: p.action, reward, next_state, terminal });
        agent.train_step(rng)?;
    }
    Ok(())
}

fn mark_terminal(record: Option<&mut TurnRecord>, cfg: &RewardConfig, success: bool) {
    if let Some(r) = record {
        r.rewards = RewardBreakdown {
            turn_penalty: 0.0,
            basic_score: [None; 3],
            success_reward: Some(if success { cfg.success_reward } else { 0.0 }),
        };
    }
}

fn record(
    state: &ManagerState,
    system_act: DialogueAct,
    user_acts: Vec<DialogueAct>,
    slu: SluHypotheses,
    agents: &AgentTurn,
    cfg: &RewardConfig,
) -> TurnRecord {
    TurnRecord {
        schema: TURN_RECORD_SCHEMA,
        turn: state.turn - 1,
        system_act,
        user_acts,
        slu,
        aux_belief: state.aux.clone(),
        executed_belief: state.executed.clone(),
        rewards: RewardBreakdown { turn_penalty: cfg.turn_penalty, basic_score: agents.basic_scores, success_reward: None },
    }
}

/// Runs one dialogue, pushing transitions and learning as `opts` allows.
pub fn run_dialogue(
    env: &Environment,
    policy: &mut DqnAgent,
    trackers: &mut TrackingAgentSet,
    opts: EpisodeOptions,
    seeds: EpisodeSeeds,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeResult> {
    env.check_components(policy, trackers)?;
    let mut user_rng = ChaCha8Rng::seed_from_u64(seeds.user);
    let mut channel_rng = ChaCha8Rng::seed_from_u64(seeds.channel);
    let goal = sample_goal(&env.ontology, &env.user, &mut user_rng);
    let mut agenda = Agenda::new(goal.clone(), &env.user, &mut user_rng);
    let mut judge = SuccessJudge::default();
    let mut state = ManagerState::new(&env.ontology);
    let cfg = env.reward;

    let mut log: Vec<TurnRecord> = Vec::new();
    let mut pairs = Vec::new();
    let mut losses = Vec::new();
    let (mut distance_sum, mut distance_turns) = (0.0, 0usize);
    let mut pending = Pending::default();

    loop {
        let user_acts = user_respond(&mut agenda, &state.system_act, &env.ontology, &env.user, &mut user_rng);
        let slu = corrupt(&user_acts, &env.error_model, &env.ontology, &mut channel_rng)?;
        let mut agents =
            state.observe(env, trackers, &slu, opts.use_agents, opts.explore_trackers, opts.teacher_pairs, rng)?;
        if agents.steps.iter().any(Option::is_some) {
            distance_sum += agents.distance;
            distance_turns += 1;
        }
        pairs.append(&mut agents.pairs);
        let user_done = agenda.finished;
        let policy_in = state.policy_input(env);

        close_pending(&mut pending, policy, trackers, &policy_in, &agents, user_done, judge.success(), &cfg, rng, &mut losses)?;
        if user_done {
            if opts.record {
                mark_terminal(log.last_mut(), &cfg, judge.success());
                let mut r = record(&state, DialogueAct::system(ActType::Bye), user_acts, slu, &agents, &cfg);
                r.rewards = RewardBreakdown::default();
                log.push(r);
            }
            break;
        }

        let index = policy.select(&policy_in, opts.epsilon, rng)?;
        let act = state.act(env, index)?;
        judge.observe(&goal, &env.ontology, &act);
        if opts.record {
            log.push(record(&state, act.clone(), user_acts, slu, &agents, &cfg));
        }
        if opts.learn_policy {
            pending.policy = Some((policy_in, index));
        }
        if opts.learn_trackers {
            for k in 0..3 {
                pending.tracking[k] = agents.steps[k].take().map(|(state, action)| PendingTracking {
                    state,
                    action,
                    basic_score: agents.basic_scores[k].unwrap_or(0.0),
                });
            }
        }

        if act.act_type == ActType::Bye || state.decisions >= env.max_turns {
            let next = state.policy_input(env);
            let success = judge.success();
            close_pending(&mut pending, policy, trackers, &next, &AgentTurn::default(), true, success, &cfg, rng, &mut losses)?;
            if opts.record {
                mark_terminal(log.last_mut(), &cfg, success);
            }
            break;
        }
    }

    let success = judge.success();
    let turns = state.decisions.max(1);
    Ok(EpisodeResult {
        goal,
        success,
        turns,
        reward: evaluation_reward(success, turns),
        log,
        teacher_pairs: pairs,
        mean_distance: (distance_turns > 0).then(|| distance_sum / distance_turns as f64),
        policy_losses: losses,
    })
}
