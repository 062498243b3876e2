//! Turn-by-turn dialogue with a human playing the user, reusing the manager's
//! per-turn state.

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{DqnAgent, TrackingAgentSet};
use crate::dialogue::{ActType, BeliefState, Constraint, DialogueAct, RewardBreakdown, SluHypotheses, UserGoal, DONTCARE};
use crate::error::{Error, Result};
use crate::usersim::SuccessJudge;

use super::episode::{Environment, ManagerState};

#[derive(Debug, Clone)]
pub struct ChatTurn {
    pub system_act: DialogueAct,
    pub action_label: String,
    pub aux_belief: BeliefState,
    pub executed_belief: BeliefState,
    pub rewards: RewardBreakdown,
    pub finished: bool,
}

#[derive(Debug, Clone)]
pub struct ChatSession {
    env: Environment,
    policy: DqnAgent,
    trackers: TrackingAgentSet,
    use_agents: bool,
    state: ManagerState,
    system_acts: Vec<DialogueAct>,
    constraints: IndexMap<String, Constraint>,
    requests: Vec<String>,
    finished: bool,
    rng: ChaCha8Rng,
}

impl ChatSession {
    pub fn new(env: Environment, policy: DqnAgent, trackers: TrackingAgentSet, use_agents: bool) -> Result<Self> {
        env.check_components(&policy, &trackers)?;
        let state = ManagerState::new(&env.ontology);
        Ok(ChatSession {
            system_acts: vec![state.system_act.clone()],
            env,
            policy,
            trackers,
            use_agents,
            state,
            constraints: IndexMap::new(),
            requests: Vec::new(),
            finished: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    /// The system's last act; the opening hello before any user turn.
    pub fn last_system_act(&self) -> &DialogueAct {
        &self.state.system_act
    }

    pub fn belief(&self) -> &BeliefState {
        &self.state.executed
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Feeds one user turn, heard with the given SLU confidence, and returns the system's reply.
    pub fn step(&mut self, user_acts: Vec<DialogueAct>, confidence: f64) -> Result<ChatTurn> {
        if self.finished {
            return Err(Error::IllegalAct("the dialogue has ended".into()));
        }
        if !(confidence > 0.0 && confidence <= 1.0) {
            return Err(Error::InvalidConfig(format!("confidence {confidence} is outside (0, 1]")));
        }
        let o = &self.env.ontology;
        for act in &user_acts {
            act.validate()?;
            for arg in &act.args {
                let known = match (act.act_type, &arg.value) {
                    (ActType::Request, _) => o.request_index(&arg.slot).is_some(),
                    (_, Some(v)) if v == DONTCARE => o.slot_index(&arg.slot).is_some(),
                    (_, Some(v)) => o.slot_index(&arg.slot).and_then(|i| o.value_index(i, v)).is_some(),
                    (_, None) => true,
                };
                if !known {
                    return Err(Error::IllegalAct(format!("{act}: slot `{}` or its value is not in the ontology", arg.slot)));
                }
            }
        }
        for act in &user_acts {
            for arg in &act.args {
                match (act.act_type, &arg.value) {
                    (ActType::Inform, Some(v)) if v == DONTCARE => {
                        self.constraints.insert(arg.slot.clone(), Constraint::DontCare);
                    }
                    (ActType::Inform, Some(v)) => {
                        self.constraints.insert(arg.slot.clone(), Constraint::Value(v.clone()));
                    }
                    (ActType::Request, _) if !self.requests.contains(&arg.slot) => self.requests.push(arg.slot.clone()),
                    _ => {}
                }
            }
        }
        let user_bye = user_acts.iter().any(|a| a.act_type == ActType::Bye);
        let slu = SluHypotheses::certain(user_acts, confidence);
        let agents =
            self.state.observe(&self.env, &self.trackers, &slu, self.use_agents, false, false, &mut self.rng)?;
        let rewards = RewardBreakdown {
            turn_penalty: self.env.reward.turn_penalty,
            basic_score: agents.basic_scores,
            success_reward: None,
        };
        if user_bye {
            self.finished = true;
            return Ok(ChatTurn {
                system_act: DialogueAct::system(ActType::Bye),
                action_label: "bye".into(),
                aux_belief: self.state.aux.clone(),
                executed_belief: self.state.executed.clone(),
                rewards,
                finished: true,
            });
        }
        let input = self.state.policy_input(&self.env);
        let index = self.policy.greedy(&input)?;
        let act = self.state.act(&self.env, index)?;
        self.system_acts.push(act.clone());
        self.finished = act.act_type == ActType::Bye || self.state.decisions >= self.env.max_turns;
        Ok(ChatTurn {
            system_act: act,
            action_label: self.env.actions.label(index, &self.env.ontology),
            aux_belief: self.state.aux.clone(),
            executed_belief: self.state.executed.clone(),
            rewards,
            finished: self.finished,
        })
    }

    /// The goal implied by what the user has said so far.
    pub fn inferred_goal(&self) -> UserGoal {
        let o = &self.env.ontology;
        let constraints = o
            .informable()
            .iter()
            .map(|s| (s.name.clone(), self.constraints.get(&s.name).cloned().unwrap_or(Constraint::DontCare)))
            .collect();
        UserGoal {
            constraints,
            requests: self.requests.clone(),
            method: o.methods().first().cloned().unwrap_or_default(),
        }
    }

    /// Whether the system has served the inferred goal.
    pub fn verdict(&self) -> bool {
        let goal = self.inferred_goal();
        let mut judge = SuccessJudge::default();
        for act in &self.system_acts {
            judge.observe(&goal, &self.env.ontology, act);
        }
        judge.success()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{DqnConfig, Variant};
    use crate::config::ExperimentConfig;
    use crate::dialogue::Actor;

    fn session() -> ChatSession {
        let mut cfg = ExperimentConfig::desk("toy");
        cfg.variant = Variant::Polynomial;
        let env = Environment::from_config(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = DqnAgent::new(env.policy_state_dim(), env.actions.len(), DqnConfig::default(), &mut rng);
        ChatSession::new(env, policy, TrackingAgentSet::empty(), false).unwrap()
    }

    #[test]
    fn inform_raises_the_named_value() {
        let mut s = session();
        assert_eq!(s.last_system_act().act_type, ActType::Hello);
        let o = s.environment().ontology.clone();
        let slot = &o.informable()[0];
        let turn = s.step(vec![DialogueAct::inform(Actor::User, &slot.name, &slot.values[1])], 0.9).unwrap();
        let b = &turn.executed_belief.goal[0];
        assert!(b.values[1] > 0.0);
        assert!(b.none < 1.0);
        assert!(turn.executed_belief.is_valid());
        assert_eq!(s.inferred_goal().constraints[&slot.name], Constraint::Value(slot.values[1].clone()));
    }

    #[test]
    fn bye_ends_with_a_verdict() {
        let mut s = session();
        let turn = s.step(vec![DialogueAct::user(ActType::Bye)], 1.0).unwrap();
        assert!(turn.finished && s.is_finished());
        assert_eq!(turn.system_act.act_type, ActType::Bye);
        // Nothing was offered, so nothing was served.
        assert!(!s.verdict());
        assert!(s.step(vec![DialogueAct::user(ActType::Hello)], 1.0).is_err());
    }

    #[test]
    fn bad_input_is_rejected_without_side_effects() {
        let mut s = session();
        let before = s.belief().clone();
        assert!(s.step(vec![DialogueAct::user(ActType::Bye)], 0.0).is_err());
        assert!(s.step(vec![DialogueAct::user(ActType::Bye)], 1.5).is_err());
        assert!(s.step(vec![DialogueAct::inform(Actor::User, "nonsense", "x")], 1.0).is_err());
        let slot = s.environment().ontology.informable()[0].name.clone();
        let good = DialogueAct::inform(Actor::User, &slot, DONTCARE);
        assert!(s.step(vec![good, DialogueAct::request(Actor::User, "nonsense")], 1.0).is_err());
        assert!(s.inferred_goal().requests.is_empty());
        assert_eq!(s.belief(), &before);
        assert!(!s.is_finished());
    }

    #[test]
    fn requests_enter_the_inferred_goal() {
        let mut s = session();
        let slot = s.environment().ontology.requestable()[0].clone();
        s.step(vec![DialogueAct::request(Actor::User, &slot)], 1.0).unwrap();
        assert_eq!(s.inferred_goal().requests, vec![slot]);
    }
}
