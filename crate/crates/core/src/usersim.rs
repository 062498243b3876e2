//! Agenda-based simulated user, the semantic error channel and the success judge.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::dialogue::{
    ActArg, ActType, Actor, Constraint, DialogueAct, SluHypotheses, SluHypothesis, TurnRecord, UserGoal, DONTCARE,
};
use crate::error::{Error, Result};
use crate::ontology::{parse_entity_name, Ontology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserConfig {
    /// Turns before the user gives up.
    pub patience: usize,
    /// Probability that an informable slot is constrained when sampling a goal.
    pub constraint_prob: f64,
    /// Probability that an unconstrained slot is marked "dontcare".
    pub dontcare_prob: f64,
    /// Probability of volunteering one more pending inform in a turn.
    pub volunteer_prob: f64,
    pub max_requests: usize,
    /// Requests the user asks for in one turn.
    pub requests_per_turn: usize,
}

impl Default for UserConfig {
    fn default() -> Self {
        UserConfig {
            patience: 20,
            constraint_prob: 0.6,
            dontcare_prob: 0.1,
            volunteer_prob: 0.3,
            max_requests: 3,
            requests_per_turn: 2,
        }
    }
}

pub fn sample_goal<R: Rng + ?Sized>(ontology: &Ontology, cfg: &UserConfig, rng: &mut R) -> UserGoal {
    let slots = ontology.informable();
    let mut constraints = IndexMap::new();
    let mut reachable = false;
    for _ in 0..1000 {
        constraints.clear();
        for slot in slots {
            if rng.random_bool(cfg.constraint_prob) {
                let v = slot.values.choose(rng).expect("slots have values");
                constraints.insert(slot.name.clone(), Constraint::Value(v.clone()));
            }
        }
        if constraints.is_empty() {
            let slot = slots.choose(rng).expect("ontology has informable slots");
            let v = slot.values.choose(rng).expect("slots have values");
            constraints.insert(slot.name.clone(), Constraint::Value(v.clone()));
        }
        let probe = UserGoal { constraints: constraints.clone(), requests: Vec::new(), method: String::new() };
        if !probe.matching_entities(ontology).is_empty() {
            reachable = true;
            break;
        }
    }
    if !reachable {
        // Anchor on a real entity so the goal is always satisfiable.
        let e = rng.random_range(0..ontology.entities().len());
        constraints.clear();
        let s = rng.random_range(0..slots.len());
        constraints.insert(slots[s].name.clone(), Constraint::Value(ontology.entity_value(e, s).to_string()));
    }
    // Fill in dontcare marks and restore ontology slot order.
    let mut ordered = IndexMap::new();
    for slot in slots {
        match constraints.get(&slot.name) {
            Some(c) => {
                ordered.insert(slot.name.clone(), c.clone());
            }
            None => {
                if rng.random_bool(cfg.dontcare_prob) {
                    ordered.insert(slot.name.clone(), Constraint::DontCare);
                }
            }
        }
    }

    let n_req = rng.random_range(1..=cfg.max_requests.min(ontology.requestable().len()).max(1));
    let requests: Vec<String> = ontology.requestable().choose_multiple(rng, n_req).cloned().collect();
    let method = ontology.methods().choose(rng).expect("ontology has methods").clone();
    UserGoal { constraints: ordered, requests, method }
}

/// The user's pending acts plus bookkeeping about the conversation so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Agenda {
    stack: Vec<DialogueAct>,
    pub goal: UserGoal,
    pub patience: usize,
    accepted: Option<usize>,
    answered: HashSet<String>,
    last_acts: Vec<DialogueAct>,
    /// The user said bye because every request was answered.
    pub completed: bool,
    /// The user said bye or hung up.
    pub finished: bool,
}

impl Agenda {
    pub fn new<R: Rng + ?Sized>(goal: UserGoal, cfg: &UserConfig, rng: &mut R) -> Self {
        let mut stack: Vec<DialogueAct> =
            goal.constraints.iter().map(|(s, c)| DialogueAct::inform(Actor::User, s, c.as_str())).collect();
        stack.shuffle(rng);
        Agenda {
            stack,
            goal,
            patience: cfg.patience,
            accepted: None,
            answered: HashSet::new(),
            last_acts: Vec::new(),
            completed: false,
            finished: false,
        }
    }

    pub fn pending(&self) -> &[DialogueAct] {
        &self.stack
    }

    pub fn accepted_entity(&self) -> Option<usize> {
        self.accepted
    }

    fn drop_pending_inform(&mut self, slot: &str) {
        self.stack.retain(|a| !(a.act_type == ActType::Inform && a.args.iter().any(|x| x.slot == slot)));
    }

    fn constraint_inform(&self, slot: &str) -> DialogueAct {
        let value = self.goal.constraints.get(slot).map_or(DONTCARE, Constraint::as_str);
        DialogueAct::inform(Actor::User, slot, value)
    }

    fn remaining_requests(&self) -> Vec<String> {
        self.goal.requests.iter().filter(|r| !self.answered.contains(*r)).cloned().collect()
    }

    /// Pushes either the next requests or, when everything is answered, bye.
    fn push_requests_or_bye(&mut self, per_turn: usize) -> usize {
        let remaining = self.remaining_requests();
        if remaining.is_empty() {
            self.completed = true;
            self.stack.push(DialogueAct::user(ActType::Bye));
            return 1;
        }
        let asked: Vec<_> = remaining.into_iter().take(per_turn.max(1)).collect();
        for slot in asked.iter().rev() {
            self.stack.push(DialogueAct::request(Actor::User, slot));
        }
        asked.len()
    }

    fn first_violation(&self, ontology: &Ontology, entity: usize) -> Option<(String, String)> {
        self.goal.constraints.iter().find_map(|(slot, c)| {
            let Constraint::Value(v) = c else { return None };
            let s = ontology.slot_index(slot)?;
            (ontology.entity_value(entity, s) != v).then(|| (slot.clone(), v.clone()))
        })
    }

    fn pop(&mut self, n: usize) -> Vec<DialogueAct> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            match self.stack.pop() {
                Some(a) => out.push(a),
                None => break,
            }
        }
        out
    }
}

/// One user turn in response to `system_act`. Mutates the agenda.
pub fn user_respond<R: Rng + ?Sized>(
    agenda: &mut Agenda,
    system_act: &DialogueAct,
    ontology: &Ontology,
    cfg: &UserConfig,
    rng: &mut R,
) -> Vec<DialogueAct> {
    if agenda.finished {
        return vec![DialogueAct::user(ActType::Bye)];
    }
    agenda.patience = agenda.patience.saturating_sub(1);

    let pushed = match system_act.act_type {
        ActType::Hello => rng.random_range(1..=2usize),
        ActType::Request => {
            let slot = system_act.args.first().map(|a| a.slot.clone()).unwrap_or_default();
            agenda.drop_pending_inform(&slot);
            let act = agenda.constraint_inform(&slot);
            agenda.stack.push(act);
            1
        }
        ActType::Confirm => match system_act.single_pair() {
            Some((slot, value)) => {
                let slot = slot.to_string();
                let wanted = agenda.goal.value_constraint(&slot).map(str::to_string);
                agenda.drop_pending_inform(&slot);
                match wanted {
                    Some(g) if g != value => {
                        agenda.stack.push(DialogueAct::inform(Actor::User, &slot, &g));
                        agenda.stack.push(DialogueAct::user(ActType::Negate));
                        2
                    }
                    _ => {
                        agenda.stack.push(DialogueAct::user(ActType::Affirm));
                        1
                    }
                }
            }
            None => push_repeat(agenda),
        },
        ActType::Offer => match system_act.entity().and_then(parse_entity_name) {
            Some(e) if e < ontology.entities().len() => {
                if agenda.goal.matches_entity(ontology, e) {
                    if agenda.accepted != Some(e) {
                        agenda.accepted = Some(e);
                        agenda.answered.clear();
                    }
                    agenda.push_requests_or_bye(cfg.requests_per_turn)
                } else {
                    let (slot, value) = agenda.first_violation(ontology, e).expect("mismatch has a violation");
                    agenda.drop_pending_inform(&slot);
                    agenda.stack.push(DialogueAct::inform(Actor::User, &slot, &value));
                    agenda.stack.push(DialogueAct::user(ActType::Reqalts));
                    2
                }
            }
            _ => push_repeat(agenda),
        },
        ActType::Inform => {
            let about = system_act.entity().and_then(parse_entity_name);
            if about.is_some() && about == agenda.accepted {
                for arg in &system_act.args {
                    if agenda.goal.requests.contains(&arg.slot) {
                        agenda.answered.insert(arg.slot.clone());
                    }
                }
                agenda.push_requests_or_bye(cfg.requests_per_turn)
            } else {
                push_repeat(agenda)
            }
        }
        ActType::Bye => {
            agenda.finished = true;
            agenda.last_acts = vec![DialogueAct::user(ActType::Bye)];
            return agenda.last_acts.clone();
        }
        _ => push_repeat(agenda),
    };

    let mut out = agenda.pop(pushed);
    let says_bye = out.iter().any(|a| a.act_type == ActType::Bye);
    if !says_bye
        && agenda.stack.last().is_some_and(|a| a.act_type == ActType::Inform)
        && rng.random_bool(cfg.volunteer_prob)
    {
        out.extend(agenda.pop(1));
    }
    if out.is_empty() {
        out = agenda.last_acts.clone();
    }
    if out.is_empty() {
        out.push(DialogueAct::user(ActType::Repeat));
    }
    if agenda.patience == 0 && !says_bye {
        out = vec![DialogueAct::user(ActType::Bye)];
    }
    if out.iter().any(|a| a.act_type == ActType::Bye) {
        agenda.finished = true;
    }
    agenda.last_acts = out.clone();
    out
}

/// Re-issues the previous user turn, or the next pending act when there is none.
fn push_repeat(agenda: &mut Agenda) -> usize {
    if agenda.last_acts.is_empty() {
        return 1;
    }
    let acts = agenda.last_acts.clone();
    for a in acts.iter().rev() {
        agenda.stack.push(a.clone());
    }
    acts.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorModel {
    pub error_rate: f64,
    pub nbest: usize,
    pub value_substitution: f64,
    pub act_substitution: f64,
    pub deletion: f64,
    pub temperature: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            error_rate: 0.15,
            nbest: 3,
            value_substitution: 0.6,
            act_substitution: 0.2,
            deletion: 0.2,
            temperature: 1.0,
        }
    }
}

impl ErrorModel {
    pub fn with_rate(error_rate: f64) -> Self {
        ErrorModel { error_rate, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidErrorModel(m));
        if !(0.0..=1.0).contains(&self.error_rate) {
            return bad(format!("error rate {} outside [0,1]", self.error_rate));
        }
        if self.nbest < 1 {
            return bad("n-best size must be at least 1".into());
        }
        let w = [self.value_substitution, self.act_substitution, self.deletion];
        if w.iter().any(|x| *x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("confusion weights {w:?} must be non-negative and sum to 1"));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return bad(format!("temperature {} must be positive", self.temperature));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Confusion {
    Value,
    ActType,
    Deletion,
}

fn flip_type(t: ActType) -> Option<ActType> {
    use ActType::*;
    Some(match t {
        Inform => Deny,
        Deny => Inform,
        Affirm => Negate,
        Negate => Affirm,
        Reqalts => Repeat,
        Repeat => Reqalts,
        Hello => Bye,
        Bye => Hello,
        _ => return None,
    })
}

fn try_confusion<R: Rng + ?Sized>(
    kind: Confusion,
    acts: &[DialogueAct],
    ontology: &Ontology,
    rng: &mut R,
) -> Option<Vec<DialogueAct>> {
    match kind {
        Confusion::Value => {
            // (act index, arg index) pairs whose value or slot can be swapped.
            let mut sites = Vec::new();
            for (i, a) in acts.iter().enumerate() {
                for (j, arg) in a.args.iter().enumerate() {
                    let swappable = match (a.act_type, &arg.value) {
                        (ActType::Request, None) => ontology.requestable().len() > 1,
                        (_, Some(_)) => ontology.slot_index(&arg.slot).is_some(),
                        _ => false,
                    };
                    if swappable {
                        sites.push((i, j));
                    }
                }
            }
            let &(i, j) = sites.choose(rng)?;
            let mut out = acts.to_vec();
            let arg: &mut ActArg = &mut out[i].args[j];
            match &arg.value {
                None => {
                    let others: Vec<_> = ontology.requestable().iter().filter(|s| **s != arg.slot).collect();
                    arg.slot = (*others.choose(rng)?).clone();
                }
                Some(v) => {
                    let s = ontology.slot_index(&arg.slot)?;
                    let others: Vec<_> = ontology.informable()[s].values.iter().filter(|x| *x != v).collect();
                    arg.value = Some((*others.choose(rng)?).clone());
                }
            }
            Some(out)
        }
        Confusion::ActType => {
            let sites: Vec<usize> = (0..acts.len()).filter(|&i| flip_type(acts[i].act_type).is_some()).collect();
            let &i = sites.choose(rng)?;
            let mut out = acts.to_vec();
            out[i].act_type = flip_type(out[i].act_type)?;
            Some(out)
        }
        Confusion::Deletion => {
            if acts.is_empty() {
                return None;
            }
            let mut out = acts.to_vec();
            out.remove(rng.random_range(0..acts.len()));
            Some(out)
        }
    }
}

/// A corrupted copy of `acts` that differs from it, or `None` if no confusion applies.
fn confuse<R: Rng + ?Sized>(
    acts: &[DialogueAct],
    model: &ErrorModel,
    ontology: &Ontology,
    rng: &mut R,
) -> Option<Vec<DialogueAct>> {
    let order = [Confusion::Value, Confusion::ActType, Confusion::Deletion];
    let weights = [model.value_substitution, model.act_substitution, model.deletion];
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut first = 0;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            first = k;
            break;
        }
    }
    (0..3).find_map(|k| {
        let out = try_confusion(order[(first + k) % 3], acts, ontology, rng)?;
        (out.as_slice() != acts).then_some(out)
    })
}

/// Passes the true user acts through the semantic error channel.
pub fn corrupt<R: Rng + ?Sized>(
    acts: &[DialogueAct],
    model: &ErrorModel,
    ontology: &Ontology,
    rng: &mut R,
) -> Result<SluHypotheses> {
    model.validate()?;
    let k = model.nbest;
    let mut lists: Vec<Vec<DialogueAct>> = Vec::with_capacity(k);
    let top_is_error = rng.random_bool(model.error_rate);
    match (top_is_error, confuse(acts, model, ontology, rng)) {
        (true, Some(c)) => lists.push(c),
        _ => lists.push(acts.to_vec()),
    }
    let truth_at = if top_is_error && k > 1 && rng.random_bool(1.0 - model.error_rate) {
        Some(rng.random_range(1..k))
    } else {
        None
    };
    let mut attempts = 0;
    while lists.len() < k && attempts < 10 * k {
        attempts += 1;
        if truth_at == Some(lists.len()) && !lists.iter().any(|l| l.as_slice() == acts) {
            lists.push(acts.to_vec());
            continue;
        }
        if let Some(c) = confuse(acts, model, ontology, rng) {
            if !lists.contains(&c) {
                lists.push(c);
            }
        }
    }

    // Softmax over exponential noise; the smallest weights fall to the residual.
    let raw: Vec<f64> = (0..=k).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|x| ((x - max) / model.temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut weights: Vec<f64> = exps.iter().map(|x| x / total).collect();
    weights.sort_by(|a, b| b.total_cmp(a));

    Ok(SluHypotheses {
        items: lists.into_iter().zip(weights).map(|(acts, score)| SluHypothesis { acts, score }).collect(),
    })
}

/// Incremental success judge: a goal-consistent entity was offered and every
/// requested slot of that entity was informed afterwards.
#[derive(Debug, Clone, Default)]
pub struct SuccessJudge {
    informed: HashMap<usize, HashSet<String>>,
    success: bool,
}

impl SuccessJudge {
    pub fn observe(&mut self, goal: &UserGoal, ontology: &Ontology, system_act: &DialogueAct) {
        let Some(e) = system_act.entity().and_then(parse_entity_name) else { return };
        if e >= ontology.entities().len() {
            return;
        }
        match system_act.act_type {
            ActType::Offer if goal.matches_entity(ontology, e) => {
                self.informed.entry(e).or_default();
            }
            ActType::Inform => {
                if let Some(set) = self.informed.get_mut(&e) {
                    set.extend(system_act.args.iter().map(|a| a.slot.clone()));
                }
            }
            _ => {}
        }
        self.success |= self.informed.values().any(|set| goal.requests.iter().all(|r| set.contains(r)));
    }

    pub fn success(&self) -> bool {
        self.success
    }
}

pub fn is_success(goal: &UserGoal, ontology: &Ontology, episode: &[TurnRecord]) -> bool {
    let mut judge = SuccessJudge::default();
    for t in episode {
        judge.observe(goal, ontology, &t.system_act);
    }
    judge.success()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{uniform_belief, RewardBreakdown, TURN_RECORD_SCHEMA};
    use crate::ontology::{builtin_ontology, entity_name, load_ontology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn goal(constraints: &[(&str, &str)], requests: &[&str]) -> UserGoal {
        UserGoal {
            constraints: constraints.iter().map(|(s, v)| (s.to_string(), Constraint::Value(v.to_string()))).collect(),
            requests: requests.iter().map(|s| s.to_string()).collect(),
            method: "byconstraints".into(),
        }
    }

    fn offer(o: &Ontology, e: usize) -> DialogueAct {
        let mut args = vec![ActArg { slot: "entity".into(), value: Some(entity_name(e)) }];
        for (s, slot) in o.informable().iter().enumerate() {
            args.push(ActArg { slot: slot.name.clone(), value: Some(o.entity_value(e, s).into()) });
        }
        DialogueAct::new(Actor::System, ActType::Offer, args).unwrap()
    }

    fn inform_about(e: usize, slots: &[&str]) -> DialogueAct {
        let mut args = vec![ActArg { slot: "entity".into(), value: Some(entity_name(e)) }];
        args.extend(slots.iter().map(|s| ActArg { slot: s.to_string(), value: Some(format!("{s}-of-e{e}")) }));
        DialogueAct::new(Actor::System, ActType::Inform, args).unwrap()
    }

    #[test]
    fn sampled_goals_are_reachable_and_deterministic() {
        let cfg = UserConfig::default();
        for name in ["toy", "dstc2-like", "dstc3-like"] {
            let o = builtin_ontology(name).unwrap();
            for seed in 0..200 {
                let g = sample_goal(&o, &cfg, &mut rng(seed));
                assert!(!g.matching_entities(&o).is_empty());
                assert!(g.constraints.values().any(|c| matches!(c, Constraint::Value(_))));
                assert!((1..=3).contains(&g.requests.len()));
                assert_eq!(g, sample_goal(&o, &cfg, &mut rng(seed)));
            }
        }
    }

    #[test]
    fn reachability_filter_respects_database() {
        let doc = r#"
name = "all-chinese"
requestable = ["phone"]
methods = ["none", "byconstraints"]
[informable]
food = ["chinese", "indian", "thai"]
area = ["north", "south"]
[[entities]]
food = "chinese"
area = "north"
[[entities]]
food = "chinese"
area = "south"
"#;
        let o = load_ontology(doc).unwrap();
        for seed in 0..300 {
            let g = sample_goal(&o, &UserConfig::default(), &mut rng(seed));
            if let Some(v) = g.value_constraint("food") {
                assert_eq!(v, "chinese");
            }
        }
    }

    fn toy_agenda(g: UserGoal) -> (Ontology, Agenda, UserConfig) {
        let o = builtin_ontology("toy").unwrap();
        let cfg = UserConfig { volunteer_prob: 0.0, ..Default::default() };
        let a = Agenda::new(g, &cfg, &mut rng(0));
        (o, a, cfg)
    }

    #[test]
    fn answers_request_with_goal_value() {
        let (o, mut a, cfg) = toy_agenda(goal(&[("food", "chinese")], &["phone"]));
        let out = user_respond(&mut a, &DialogueAct::request(Actor::System, "food"), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::inform(Actor::User, "food", "chinese")]);
        let out = user_respond(&mut a, &DialogueAct::request(Actor::System, "area"), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::inform(Actor::User, "area", DONTCARE)]);
    }

    #[test]
    fn wrong_confirmation_is_negated_and_corrected() {
        let (o, mut a, cfg) = toy_agenda(goal(&[("food", "chinese")], &["phone"]));
        let out = user_respond(&mut a, &DialogueAct::confirm("food", "indian"), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::user(ActType::Negate), DialogueAct::inform(Actor::User, "food", "chinese")]);
        let out = user_respond(&mut a, &DialogueAct::confirm("food", "chinese"), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::user(ActType::Affirm)]);
    }

    #[test]
    fn matching_offer_then_informs_lead_to_bye() {
        let (o, mut a, cfg) = toy_agenda(goal(&[("food", "chinese"), ("area", "south")], &["phone"]));
        let out = user_respond(&mut a, &offer(&o, 1), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::request(Actor::User, "phone")]);
        let out = user_respond(&mut a, &inform_about(1, &["phone"]), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::user(ActType::Bye)]);
        assert!(a.completed && a.finished);
    }

    #[test]
    fn mismatched_offer_gets_reqalts() {
        let (o, mut a, cfg) = toy_agenda(goal(&[("food", "chinese"), ("area", "south")], &["phone"]));
        let out = user_respond(&mut a, &offer(&o, 0), &o, &cfg, &mut rng(1));
        assert_eq!(out, vec![DialogueAct::user(ActType::Reqalts), DialogueAct::inform(Actor::User, "area", "south")]);
    }

    #[test]
    fn patience_exhaustion_hangs_up() {
        let o = builtin_ontology("toy").unwrap();
        let cfg = UserConfig { patience: 3, volunteer_prob: 0.0, ..Default::default() };
        let mut a = Agenda::new(goal(&[("food", "chinese")], &["phone"]), &cfg, &mut rng(0));
        let rep = DialogueAct::system(ActType::Repeat);
        for _ in 0..2 {
            assert!(!user_respond(&mut a, &rep, &o, &cfg, &mut rng(2)).iter().any(|x| x.act_type == ActType::Bye));
        }
        assert_eq!(user_respond(&mut a, &rep, &o, &cfg, &mut rng(2)), vec![DialogueAct::user(ActType::Bye)]);
        assert!(a.finished && !a.completed);
    }

    #[test]
    fn agenda_never_holds_system_acts() {
        let o = builtin_ontology("dstc2-like").unwrap();
        let cfg = UserConfig::default();
        let mut r = rng(5);
        for _ in 0..50 {
            let g = sample_goal(&o, &cfg, &mut r);
            let mut a = Agenda::new(g, &cfg, &mut r);
            let acts = [
                DialogueAct::system(ActType::Hello),
                DialogueAct::request(Actor::System, "food"),
                offer(&o, r.random_range(0..o.entities().len())),
                DialogueAct::confirm("area", "north"),
                DialogueAct::system(ActType::Repeat),
            ];
            for _ in 0..25 {
                let out = user_respond(&mut a, acts.choose(&mut r).unwrap(), &o, &cfg, &mut r);
                assert!(out.iter().all(|x| x.actor == Actor::User && x.validate().is_ok()));
                assert!(a.pending().iter().all(|x| x.act_type.legal_for(Actor::User)));
            }
            assert!(a.finished);
        }
    }

    #[test]
    fn error_free_channel_keeps_truth_on_top() {
        let o = builtin_ontology("dstc2-like").unwrap();
        let m = ErrorModel::with_rate(0.0);
        let acts = vec![DialogueAct::inform(Actor::User, "food", "thai")];
        for seed in 0..500 {
            let h = corrupt(&acts, &m, &o, &mut rng(seed)).unwrap();
            assert_eq!(h.items[0].acts, acts);
            assert!(h.items.iter().all(|x| x.score <= h.items[0].score));
            h.check(m.nbest).unwrap();
        }
    }

    #[test]
    fn always_error_value_substitution_hides_true_value() {
        let o = builtin_ontology("dstc2-like").unwrap();
        let m = ErrorModel {
            error_rate: 1.0,
            value_substitution: 1.0,
            act_substitution: 0.0,
            deletion: 0.0,
            ..Default::default()
        };
        let acts = vec![DialogueAct::inform(Actor::User, "food", "thai")];
        for seed in 0..500 {
            let h = corrupt(&acts, &m, &o, &mut rng(seed)).unwrap();
            assert!(!h.items[0].acts[0].contains_pair(ActType::Inform, "food", "thai"));
        }
    }

    #[test]
    fn rejects_bad_error_models() {
        let o = builtin_ontology("toy").unwrap();
        let acts = vec![DialogueAct::user(ActType::Affirm)];
        let bad = ErrorModel { nbest: 0, ..Default::default() };
        assert!(matches!(corrupt(&acts, &bad, &o, &mut rng(0)), Err(Error::InvalidErrorModel(_))));
        let bad = ErrorModel { deletion: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn top_accuracy_tracks_error_rate() {
        let o = builtin_ontology("dstc2-like").unwrap();
        let m = ErrorModel::with_rate(0.3);
        let acts = vec![DialogueAct::inform(Actor::User, "food", "thai"), DialogueAct::request(Actor::User, "phone")];
        let mut r = rng(11);
        let n = 10_000;
        let hits = (0..n).filter(|_| corrupt(&acts, &m, &o, &mut r).unwrap().items[0].acts == acts).count();
        let acc = hits as f64 / n as f64;
        assert!((acc - 0.7).abs() < 0.02, "{acc}");
    }

    fn record(turn: usize, act: DialogueAct) -> TurnRecord {
        let o = builtin_ontology("toy").unwrap();
        TurnRecord {
            schema: TURN_RECORD_SCHEMA,
            turn,
            system_act: act,
            user_acts: vec![],
            slu: SluHypotheses::default(),
            aux_belief: uniform_belief(&o),
            executed_belief: uniform_belief(&o),
            rewards: RewardBreakdown::default(),
        }
    }

    #[test]
    fn success_judge_cases() {
        let o = builtin_ontology("toy").unwrap();
        let g = goal(&[("food", "chinese")], &["phone", "addr"]);
        let ok = [record(1, offer(&o, 0)), record(2, inform_about(0, &["phone", "addr"]))];
        assert!(is_success(&g, &o, &ok));
        let partial = [record(1, offer(&o, 0)), record(2, inform_about(0, &["phone"]))];
        assert!(!is_success(&g, &o, &partial));
        let before_offer = [record(1, inform_about(0, &["phone", "addr"])), record(2, offer(&o, 0))];
        assert!(!is_success(&g, &o, &before_offer));
        let wrong = [record(1, offer(&o, 2)), record(2, inform_about(2, &["phone", "addr"]))];
        assert!(!is_success(&g, &o, &wrong));
        let gave_up: Vec<_> = (1..=20).map(|t| record(t, DialogueAct::system(ActType::Repeat))).collect();
        assert!(!is_success(&g, &o, &gave_up));
    }
}
