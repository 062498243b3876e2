//! The abstract system action set, its grounding into dialogue acts, and
//! the policy's input encoding.

use serde::{Deserialize, Serialize};

use crate::dialogue::{ActArg, ActType, Actor, BeliefState, DialogueAct, ENTITY_KEY};
use crate::error::{Error, Result};
use crate::ontology::{entity_name, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemAction {
    Request(usize),
    Confirm(usize),
    OfferBest,
    InformRequested,
    Repeat,
    Bye,
}

/// Request and confirm per informable slot, then offer, inform, repeat, bye.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemActionSpace {
    actions: Vec<SystemAction>,
}

impl SystemActionSpace {
    pub fn new(ontology: &Ontology) -> Self {
        let n = ontology.informable().len();
        let mut actions: Vec<SystemAction> = (0..n).map(SystemAction::Request).collect();
        actions.extend((0..n).map(SystemAction::Confirm));
        actions.extend([SystemAction::OfferBest, SystemAction::InformRequested, SystemAction::Repeat, SystemAction::Bye]);
        SystemActionSpace { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<SystemAction> {
        self.actions
            .get(index)
            .copied()
            .ok_or(Error::DimensionMismatch { expected: self.actions.len(), actual: index + 1 })
    }

    pub fn index_of(&self, action: SystemAction) -> Option<usize> {
        self.actions.iter().position(|a| *a == action)
    }

    pub fn actions(&self) -> &[SystemAction] {
        &self.actions
    }

    pub fn label(&self, index: usize, ontology: &Ontology) -> String {
        match self.actions.get(index) {
            Some(SystemAction::Request(s)) => format!("request({})", ontology.informable()[*s].name),
            Some(SystemAction::Confirm(s)) => format!("confirm({})", ontology.informable()[*s].name),
            Some(SystemAction::OfferBest) => "offer".into(),
            Some(SystemAction::InformRequested) => "inform-requested".into(),
            Some(SystemAction::Repeat) => "repeat".into(),
            Some(SystemAction::Bye) => "bye".into(),
            None => format!("#{index}"),
        }
    }
}

/// Entity maximising the product over informable slots of `b(value) + b_none`
/// (lowest entity id on ties).
pub fn offer_best_entity(belief: &BeliefState, ontology: &Ontology) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (e, entity) in ontology.entities().iter().enumerate() {
        let score: f64 =
            entity.values.iter().zip(&belief.goal).map(|(&v, slot)| slot.values[v] + slot.none).product();
        if score > best.1 {
            best = (e, score);
        }
    }
    best.0
}

fn entity_act(act_type: ActType, e: usize, slots: impl IntoIterator<Item = (String, String)>) -> DialogueAct {
    let mut args = vec![ActArg { slot: ENTITY_KEY.into(), value: Some(entity_name(e)) }];
    args.extend(slots.into_iter().map(|(slot, value)| ActArg { slot, value: Some(value) }));
    DialogueAct { actor: Actor::System, act_type, args }
}

/// Slots an inform-requested act covers: those above 0.5, else the most likely one.
pub fn requested_slots(belief: &BeliefState) -> Vec<usize> {
    let above: Vec<usize> = (0..belief.request.len()).filter(|&i| belief.request[i] > 0.5).collect();
    if !above.is_empty() || belief.request.is_empty() {
        return above;
    }
    let mut best = 0;
    for (i, &p) in belief.request.iter().enumerate() {
        if p > belief.request[best] {
            best = i;
        }
    }
    vec![best]
}

/// Grounds an abstract action against the current belief.
pub fn execute_system_act(
    action: SystemAction,
    belief: &BeliefState,
    ontology: &Ontology,
    last_offer: Option<usize>,
) -> DialogueAct {
    match action {
        SystemAction::Request(s) => DialogueAct::request(Actor::System, &ontology.informable()[s].name),
        SystemAction::Confirm(s) => {
            let slot = &ontology.informable()[s];
            DialogueAct::confirm(&slot.name, &slot.values[belief.goal[s].top()])
        }
        SystemAction::OfferBest => {
            let e = offer_best_entity(belief, ontology);
            let attrs = ontology
                .informable()
                .iter()
                .enumerate()
                .map(|(s, slot)| (slot.name.clone(), ontology.entity_value(e, s).to_string()));
            entity_act(ActType::Offer, e, attrs.collect::<Vec<_>>())
        }
        SystemAction::InformRequested => match last_offer {
            Some(e) => {
                let slots = requested_slots(belief).into_iter().map(|r| {
                    let name = ontology.requestable()[r].clone();
                    let value = ontology.entity_attribute(e, &name);
                    (name, value)
                });
                entity_act(ActType::Inform, e, slots.collect::<Vec<_>>())
            }
            None => DialogueAct::system(ActType::Repeat),
        },
        SystemAction::Repeat => DialogueAct::system(ActType::Repeat),
        SystemAction::Bye => DialogueAct::system(ActType::Bye),
    }
}

pub const ENTITY_BUCKETS: usize = 4;
const GOAL_BLOCK: usize = 4;

pub fn policy_state_dim(ontology: &Ontology, n_actions: usize) -> usize {
    GOAL_BLOCK * ontology.informable().len()
        + ontology.requestable().len()
        + ontology.methods().len()
        + n_actions
        + 1
        + 1
        + ENTITY_BUCKETS
        + 1
}

/// Entities agreeing with every goal slot whose top value holds more than half the mass.
pub fn matching_entity_count(belief: &BeliefState, ontology: &Ontology) -> usize {
    let confident: Vec<(usize, usize)> = belief
        .goal
        .iter()
        .enumerate()
        .filter_map(|(s, slot)| {
            let top = slot.top();
            (slot.values.get(top).copied().unwrap_or(0.0) > 0.5).then_some((s, top))
        })
        .collect();
    ontology.entities().iter().filter(|e| confident.iter().all(|&(s, v)| e.values[s] == v)).count()
}

fn entity_bucket(count: usize) -> usize {
    match count {
        0 => 0,
        1 => 1,
        2 | 3 => 2,
        _ => 3,
    }
}

/// Policy input. Per goal slot: top mass, second mass, None mass and normalised
/// entropy; request probabilities; method distribution; one-hot of the last
/// system action (final position for the opening hello); turn / max_turns;
/// matching-entity-count bucket; whether an entity has been offered.
pub fn policy_state(
    belief: &BeliefState,
    ontology: &Ontology,
    n_actions: usize,
    last_action: Option<usize>,
    turn: usize,
    max_turns: usize,
    offered: bool,
) -> Vec<f64> {
    let mut v = Vec::with_capacity(policy_state_dim(ontology, n_actions));
    for slot in &belief.goal {
        let (mut first, mut second) = (0.0f64, 0.0f64);
        for &m in &slot.values {
            if m > first {
                second = first;
                first = m;
            } else if m > second {
                second = m;
            }
        }
        let n = slot.values.len() + 1;
        let h: f64 = slot.values.iter().chain([&slot.none]).filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        v.extend([first, second, slot.none, h / (n as f64).ln()]);
    }
    v.extend_from_slice(&belief.request);
    v.extend_from_slice(&belief.method);
    let mut one_hot = vec![0.0; n_actions + 1];
    one_hot[last_action.map_or(n_actions, |a| a.min(n_actions))] = 1.0;
    v.extend(one_hot);
    v.push(turn as f64 / max_turns.max(1) as f64);
    let mut bucket = [0.0; ENTITY_BUCKETS];
    bucket[entity_bucket(matching_entity_count(belief, ontology))] = 1.0;
    v.extend(bucket);
    v.push(if offered { 1.0 } else { 0.0 });
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::uniform_belief;
    use crate::ontology::builtin_ontology;

    fn toy() -> Ontology {
        builtin_ontology("toy").unwrap()
    }

    #[test]
    fn action_space_layout() {
        let o = toy();
        let space = SystemActionSpace::new(&o);
        assert_eq!(space.len(), 2 * o.informable().len() + 4);
        for (i, a) in space.actions().iter().enumerate() {
            assert_eq!(space.index_of(*a), Some(i));
        }
        assert!(space.get(space.len()).is_err());
        assert_eq!(space.label(0, &o), "request(food)");
    }

    #[test]
    fn uniform_belief_encoding() {
        let o = toy();
        let n = SystemActionSpace::new(&o).len();
        let v = policy_state(&uniform_belief(&o), &o, n, None, 0, 20, false);
        assert_eq!(v.len(), policy_state_dim(&o, n));
        for s in 0..o.informable().len() {
            assert_eq!(&v[4 * s..4 * s + 4], &[0.0, 0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn confirm_uses_top_value() {
        let o = toy();
        let mut b = uniform_belief(&o);
        let food = o.slot_index("food").unwrap();
        let chinese = o.value_index(food, "chinese").unwrap();
        b.goal[food].values[chinese] = 0.9;
        b.goal[food].none = 0.1;
        let act = execute_system_act(SystemAction::Confirm(food), &b, &o, None);
        assert_eq!(act.to_string(), "confirm(food=chinese)");
    }

    #[test]
    fn offer_picks_the_believed_entity() {
        let o = toy();
        for e in 0..o.entities().len() {
            let mut b = uniform_belief(&o);
            for (s, &v) in o.entities()[e].values.iter().enumerate() {
                b.goal[s].values[v] = 0.95;
                b.goal[s].none = 0.05;
            }
            assert_eq!(offer_best_entity(&b, &o), e);
            let act = execute_system_act(SystemAction::OfferBest, &b, &o, None);
            assert_eq!(act.entity(), Some(entity_name(e).as_str()));
        }
        // Nothing known: every entity ties and the lowest id wins.
        assert_eq!(offer_best_entity(&uniform_belief(&o), &o), 0);
    }

    #[test]
    fn inform_without_offer_repeats() {
        let o = toy();
        let b = uniform_belief(&o);
        assert_eq!(execute_system_act(SystemAction::InformRequested, &b, &o, None).act_type, ActType::Repeat);
        let mut b = b;
        b.request[1] = 0.8;
        let act = execute_system_act(SystemAction::InformRequested, &b, &o, Some(2));
        assert_eq!(act.act_type, ActType::Inform);
        assert_eq!(act.entity(), Some("e2"));
        assert!(act.value_of(&o.requestable()[1]).is_some());
    }

    #[test]
    fn order_statistics_ignore_value_order() {
        let o = builtin_ontology("dstc2-like").unwrap();
        let n = SystemActionSpace::new(&o).len();
        let mut a = uniform_belief(&o);
        a.goal[1].values[0] = 0.6;
        a.goal[1].values[2] = 0.3;
        a.goal[1].none = 0.1;
        let mut b = a.clone();
        b.goal[1].values.swap(0, 2);
        let (va, vb) = (policy_state(&a, &o, n, Some(3), 2, 20, true), policy_state(&b, &o, n, Some(3), 2, 20, true));
        assert_eq!(&va[4..8], &vb[4..8]);
        assert_eq!(va.len(), vb.len());
    }
}
