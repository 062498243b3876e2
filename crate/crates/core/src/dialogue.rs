//! Semantic acts, SLU hypothesis lists, user goals and belief states.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{FlatIndex, Ontology, SlotType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    User,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActType {
    Hello,
    Inform,
    Request,
    Confirm,
    Deny,
    Affirm,
    Negate,
    Offer,
    Bye,
    Reqalts,
    Repeat,
    Canthelp,
}

impl ActType {
    pub const ALL: [ActType; 12] = [
        ActType::Hello,
        ActType::Inform,
        ActType::Request,
        ActType::Confirm,
        ActType::Deny,
        ActType::Affirm,
        ActType::Negate,
        ActType::Offer,
        ActType::Bye,
        ActType::Reqalts,
        ActType::Repeat,
        ActType::Canthelp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActType::Hello => "hello",
            ActType::Inform => "inform",
            ActType::Request => "request",
            ActType::Confirm => "confirm",
            ActType::Deny => "deny",
            ActType::Affirm => "affirm",
            ActType::Negate => "negate",
            ActType::Offer => "offer",
            ActType::Bye => "bye",
            ActType::Reqalts => "reqalts",
            ActType::Repeat => "repeat",
            ActType::Canthelp => "canthelp",
        }
    }

    pub fn parse(s: &str) -> Option<ActType> {
        ActType::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// User: hello inform request deny affirm negate bye reqalts repeat.
    /// System: hello inform request confirm offer bye repeat canthelp.
    pub fn legal_for(self, actor: Actor) -> bool {
        use ActType::*;
        match actor {
            Actor::User => matches!(self, Hello | Inform | Request | Deny | Affirm | Negate | Bye | Reqalts | Repeat),
            Actor::System => matches!(self, Hello | Inform | Request | Confirm | Offer | Bye | Repeat | Canthelp),
        }
    }
}

/// Reserved argument key carrying an entity reference in offer/inform acts.
pub const ENTITY_KEY: &str = "entity";
/// Special value meaning "any value is acceptable".
pub const DONTCARE: &str = "dontcare";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActArg {
    pub slot: String,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DialogueAct {
    pub actor: Actor,
    pub act_type: ActType,
    pub args: Vec<ActArg>,
}

impl DialogueAct {
    pub fn new(actor: Actor, act_type: ActType, args: Vec<ActArg>) -> Result<Self> {
        let act = DialogueAct { actor, act_type, args };
        act.validate()?;
        Ok(act)
    }

    fn bare(actor: Actor, act_type: ActType) -> Self {
        DialogueAct { actor, act_type, args: Vec::new() }
    }

    pub fn user(act_type: ActType) -> Self {
        Self::bare(Actor::User, act_type)
    }

    pub fn system(act_type: ActType) -> Self {
        Self::bare(Actor::System, act_type)
    }

    pub fn inform(actor: Actor, slot: &str, value: &str) -> Self {
        DialogueAct {
            actor,
            act_type: ActType::Inform,
            args: vec![ActArg { slot: slot.into(), value: Some(value.into()) }],
        }
    }

    pub fn request(actor: Actor, slot: &str) -> Self {
        DialogueAct { actor, act_type: ActType::Request, args: vec![ActArg { slot: slot.into(), value: None }] }
    }

    pub fn deny(slot: &str, value: &str) -> Self {
        DialogueAct {
            actor: Actor::User,
            act_type: ActType::Deny,
            args: vec![ActArg { slot: slot.into(), value: Some(value.into()) }],
        }
    }

    pub fn confirm(slot: &str, value: &str) -> Self {
        DialogueAct {
            actor: Actor::System,
            act_type: ActType::Confirm,
            args: vec![ActArg { slot: slot.into(), value: Some(value.into()) }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::IllegalAct(format!("{self}: {msg}")));
        if !self.act_type.legal_for(self.actor) {
            return fail("act type not legal for this actor");
        }
        match self.act_type {
            ActType::Inform | ActType::Confirm | ActType::Deny => {
                if self.args.is_empty() || self.args.iter().any(|a| a.value.is_none()) {
                    return fail("needs slot=value arguments");
                }
            }
            ActType::Request => {
                if self.args.len() != 1 || self.args[0].value.is_some() {
                    return fail("needs exactly one bare slot");
                }
            }
            ActType::Offer => {
                if self.entity().is_none() {
                    return fail("needs an entity reference");
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `Some(value)` of the first argument for `slot`.
    pub fn value_of(&self, slot: &str) -> Option<&str> {
        self.args.iter().find(|a| a.slot == slot).and_then(|a| a.value.as_deref())
    }

    pub fn entity(&self) -> Option<&str> {
        self.value_of(ENTITY_KEY)
    }

    /// The single (slot, value) argument of a confirm/inform/deny act.
    pub fn single_pair(&self) -> Option<(&str, &str)> {
        match self.args.as_slice() {
            [ActArg { slot, value: Some(v) }] => Some((slot.as_str(), v.as_str())),
            _ => None,
        }
    }

    pub fn contains_pair(&self, act_type: ActType, slot: &str, value: &str) -> bool {
        self.act_type == act_type
            && self.args.iter().any(|a| a.slot == slot && a.value.as_deref() == Some(value))
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.act_type.as_str())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match &a.value {
                Some(v) => write!(f, "{}={}", a.slot, v)?,
                None => f.write_str(&a.slot)?,
            }
        }
        f.write_str(")")
    }
}

/// Parses `type(slot=value,...)`; the parenthesised part may be omitted for bare acts.
pub fn parse_act(actor: Actor, text: &str) -> Result<DialogueAct> {
    let text = text.trim();
    let err = || Error::ActParse(text.to_string());
    let (name, body) = match text.find('(') {
        Some(open) => {
            let body = text[open + 1..].strip_suffix(')').ok_or_else(err)?;
            (&text[..open], body)
        }
        None => (text, ""),
    };
    let act_type = ActType::parse(name.trim()).ok_or_else(err)?;
    let mut args = Vec::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let arg = match part.split_once('=') {
            Some((s, v)) => {
                let (s, v) = (s.trim(), v.trim());
                if s.is_empty() || v.is_empty() {
                    return Err(err());
                }
                ActArg { slot: s.into(), value: Some(v.into()) }
            }
            None => ActArg { slot: part.into(), value: None },
        };
        args.push(arg);
    }
    DialogueAct::new(actor, act_type, args)
}

/// Parses acts joined by `|`, e.g. `inform(food=chinese)|request(phone)`.
pub fn parse_acts(actor: Actor, text: &str) -> Result<Vec<DialogueAct>> {
    let acts = text.split('|').map(|p| parse_act(actor, p)).collect::<Result<Vec<_>>>()?;
    if acts.is_empty() {
        return Err(Error::ActParse(text.to_string()));
    }
    Ok(acts)
}

pub fn format_acts(acts: &[DialogueAct]) -> String {
    acts.iter().map(ToString::to_string).collect::<Vec<_>>().join("|")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SluHypothesis {
    pub acts: Vec<DialogueAct>,
    pub score: f64,
}

/// An N-best list: scores non-increasing, each in [0,1], summing to at most 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SluHypotheses {
    pub items: Vec<SluHypothesis>,
}

impl SluHypotheses {
    /// A single hypothesis holding `acts` with confidence `score`.
    pub fn certain(acts: Vec<DialogueAct>, score: f64) -> Self {
        SluHypotheses { items: vec![SluHypothesis { acts, score }] }
    }

    pub fn total_score(&self) -> f64 {
        self.items.iter().map(|h| h.score).sum()
    }

    pub fn top(&self) -> Option<&SluHypothesis> {
        self.items.first()
    }

    pub fn check(&self, max_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidErrorModel(m));
        if self.items.len() > max_len {
            return bad(format!("{} hypotheses exceed N-best size {max_len}", self.items.len()));
        }
        if self.items.iter().any(|h| !(0.0..=1.0).contains(&h.score)) {
            return bad("confidence outside [0,1]".into());
        }
        if self.total_score() > 1.0 + 1e-9 {
            return bad(format!("confidences sum to {}", self.total_score()));
        }
        if self.items.windows(2).any(|w| w[1].score > w[0].score) {
            return bad("confidences not sorted".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Value(String),
    DontCare,
}

impl Constraint {
    pub fn as_str(&self) -> &str {
        match self {
            Constraint::Value(v) => v,
            Constraint::DontCare => DONTCARE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// Informable slot -> constraint, in ontology slot order.
    pub constraints: IndexMap<String, Constraint>,
    pub requests: Vec<String>,
    pub method: String,
}

impl UserGoal {
    /// Whether entity `e` satisfies every value constraint.
    pub fn matches_entity(&self, ontology: &Ontology, e: usize) -> bool {
        self.constraints.iter().all(|(slot, c)| match c {
            Constraint::DontCare => true,
            Constraint::Value(v) => match ontology.slot_index(slot) {
                Some(s) => ontology.entity_value(e, s) == v,
                None => false,
            },
        })
    }

    pub fn matching_entities(&self, ontology: &Ontology) -> Vec<usize> {
        (0..ontology.entities().len()).filter(|&e| self.matches_entity(ontology, e)).collect()
    }

    pub fn value_constraint(&self, slot: &str) -> Option<&str> {
        match self.constraints.get(slot) {
            Some(Constraint::Value(v)) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSlotBelief {
    pub values: Vec<f64>,
    /// Mass on "not mentioned".
    pub none: f64,
}

impl GoalSlotBelief {
    /// Index of the largest value mass (lowest index on ties).
    pub fn top(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.values.iter().enumerate() {
            if m > self.values[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub goal: Vec<GoalSlotBelief>,
    pub request: Vec<f64>,
    pub method: Vec<f64>,
}

/// The part of a belief owned by one slot type.
#[derive(Debug, Clone, PartialEq)]
pub enum BeliefFragment {
    Goal(Vec<GoalSlotBelief>),
    Request(Vec<f64>),
    Method(Vec<f64>),
}

pub const BELIEF_TOLERANCE: f64 = 1e-6;

impl BeliefState {
    pub fn set_fragment(&mut self, fragment: BeliefFragment) {
        match fragment {
            BeliefFragment::Goal(g) => self.goal = g,
            BeliefFragment::Request(r) => self.request = r,
            BeliefFragment::Method(m) => self.method = m,
        }
    }

    pub fn check(&self) -> Result<()> {
        let in_unit = |x: f64| (-BELIEF_TOLERANCE..=1.0 + BELIEF_TOLERANCE).contains(&x);
        for (i, slot) in self.goal.iter().enumerate() {
            let sum: f64 = slot.values.iter().sum::<f64>() + slot.none;
            if !slot.values.iter().chain([&slot.none]).all(|&m| in_unit(m)) || (sum - 1.0).abs() > BELIEF_TOLERANCE {
                return Err(Error::InvalidBelief(format!("goal slot {i} masses {:?} none {}", slot.values, slot.none)));
            }
        }
        if !self.request.iter().all(|&p| in_unit(p)) {
            return Err(Error::InvalidBelief(format!("request probabilities {:?}", self.request)));
        }
        let msum: f64 = self.method.iter().sum();
        if !self.method.iter().all(|&p| in_unit(p)) || (msum - 1.0).abs() > BELIEF_TOLERANCE {
            return Err(Error::InvalidBelief(format!("method distribution {:?}", self.method)));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }
}

pub fn uniform_belief(ontology: &Ontology) -> BeliefState {
    let mut method = vec![0.0; ontology.methods().len()];
    method[0] = 1.0;
    BeliefState {
        goal: ontology
            .informable()
            .iter()
            .map(|s| GoalSlotBelief { values: vec![0.0; s.values.len()], none: 1.0 })
            .collect(),
        request: vec![0.0; ontology.requestable().len()],
        method,
    }
}

fn check_goal_layout(goal: &[GoalSlotBelief], index: &FlatIndex) -> Result<()> {
    let groups = index.groups();
    if groups.len() != goal.len() {
        return Err(Error::DimensionMismatch { expected: groups.len(), actual: goal.len() });
    }
    for (g, slot) in groups.iter().zip(goal) {
        if g.len() != slot.values.len() {
            return Err(Error::DimensionMismatch { expected: g.len(), actual: slot.values.len() });
        }
    }
    Ok(())
}

/// Flattens the fragment of `belief` selected by `index`. Goal vectors omit the None mass.
pub fn belief_vector(belief: &BeliefState, index: &FlatIndex) -> Result<Vec<f64>> {
    let v: Vec<f64> = match index.slot_type() {
        SlotType::Goal => {
            check_goal_layout(&belief.goal, index)?;
            belief.goal.iter().flat_map(|s| s.values.iter().copied()).collect()
        }
        SlotType::Request => belief.request.clone(),
        SlotType::Method => belief.method.clone(),
    };
    if v.len() != index.dimension() {
        return Err(Error::DimensionMismatch { expected: index.dimension(), actual: v.len() });
    }
    Ok(v)
}

/// Maps an unconstrained vector onto a valid belief fragment.
///
/// Entries are clamped to [0,1]. A goal slot whose clamped sum exceeds 1 is
/// rescaled to sum 1 with zero None mass; otherwise None takes the remainder.
/// Methods are renormalised (all-zero becomes uniform). Requests are only clamped.
pub fn vector_to_belief(raw: &[f64], index: &FlatIndex) -> Result<BeliefFragment> {
    if raw.len() != index.dimension() {
        return Err(Error::DimensionMismatch { expected: index.dimension(), actual: raw.len() });
    }
    let clamp = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    let clamped: Vec<f64> = raw.iter().map(|&x| clamp(x)).collect();
    Ok(match index.slot_type() {
        SlotType::Goal => BeliefFragment::Goal(
            index
                .groups()
                .iter()
                .map(|g| {
                    let mut values = clamped[g.clone()].to_vec();
                    let sum: f64 = values.iter().sum();
                    if sum > 1.0 {
                        values.iter_mut().for_each(|v| *v /= sum);
                        GoalSlotBelief { values, none: 0.0 }
                    } else {
                        GoalSlotBelief { values, none: 1.0 - sum }
                    }
                })
                .collect(),
        ),
        SlotType::Request => BeliefFragment::Request(clamped),
        SlotType::Method => {
            let sum: f64 = clamped.iter().sum();
            let n = clamped.len() as f64;
            BeliefFragment::Method(if sum > 0.0 {
                clamped.iter().map(|v| v / sum).collect()
            } else {
                vec![1.0 / n; clamped.len()]
            })
        }
    })
}

/// Per-turn reward components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub turn_penalty: f64,
    /// Basic score per tracking agent (goal, request, method); `None` when that agent is not acting.
    pub basic_score: [Option<f64>; 3],
    pub success_reward: Option<f64>,
}

pub const TURN_RECORD_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub schema: u32,
    pub turn: usize,
    pub system_act: DialogueAct,
    pub user_acts: Vec<DialogueAct>,
    pub slu: SluHypotheses,
    pub aux_belief: BeliefState,
    pub executed_belief: BeliefState,
    pub rewards: RewardBreakdown,
}

impl TurnRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("turn records always serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: TurnRecord = serde_json::from_str(line).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if rec.schema != TURN_RECORD_SCHEMA {
            return Err(Error::Checkpoint(format!("unsupported turn record schema {}", rec.schema)));
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{builtin_ontology, flat_index};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_belief_on_toy() {
        let toy = builtin_ontology("toy").unwrap();
        let b = uniform_belief(&toy);
        assert_eq!(b.goal[0].none, 1.0);
        assert_eq!(b.goal[0].values, vec![0.0, 0.0]);
        assert_eq!(b.request, vec![0.0, 0.0]);
        assert_eq!(b.method[0], 1.0);
        assert!(b.is_valid());
        let idx = flat_index(&toy, SlotType::Goal);
        assert_eq!(belief_vector(&b, &idx).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn belief_vector_places_mass() {
        let toy = builtin_ontology("toy").unwrap();
        let mut b = uniform_belief(&toy);
        b.goal[0].values[0] = 0.7;
        b.goal[0].none = 0.3;
        let idx = flat_index(&toy, SlotType::Goal);
        let v = belief_vector(&b, &idx).unwrap();
        assert_eq!(v[idx.position("food", Some("chinese")).unwrap()], 0.7);
        let BeliefFragment::Goal(g) = vector_to_belief(&v, &idx).unwrap() else { panic!() };
        for (a, b) in g.iter().zip(&b.goal) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(a.none, b.none, epsilon = 1e-12);
        }
    }

    #[test]
    fn clamp_and_rescale_rules() {
        let toy = builtin_ontology("toy").unwrap();
        let idx = flat_index(&toy, SlotType::Goal);
        let BeliefFragment::Goal(g) = vector_to_belief(&[0.3, 0.4, 0.8, 0.6], &idx).unwrap() else { panic!() };
        assert_abs_diff_eq!(g[0].values[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(g[0].values[1], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(g[0].none, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1].values[0], 0.8 / 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1].values[1], 0.6 / 1.4, epsilon = 1e-12);
        assert_eq!(g[1].none, 0.0);

        let BeliefFragment::Goal(g) = vector_to_belief(&[-0.2, 0.5, 0.0, 0.0], &idx).unwrap() else { panic!() };
        assert_eq!(g[0].values[0], 0.0);

        let ridx = flat_index(&toy, SlotType::Request);
        assert_eq!(vector_to_belief(&[1.5, -3.0], &ridx).unwrap(), BeliefFragment::Request(vec![1.0, 0.0]));
        let midx = flat_index(&toy, SlotType::Method);
        assert_eq!(vector_to_belief(&[0.0; 4], &midx).unwrap(), BeliefFragment::Method(vec![0.25; 4]));
        assert!(matches!(vector_to_belief(&[0.0; 3], &idx), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mismatched_index_is_rejected() {
        let toy = builtin_ontology("toy").unwrap();
        let d2 = builtin_ontology("dstc2-like").unwrap();
        let b = uniform_belief(&toy);
        assert!(belief_vector(&b, &flat_index(&d2, SlotType::Goal)).is_err());
        assert!(belief_vector(&b, &flat_index(&d2, SlotType::Request)).is_err());
    }

    #[test]
    fn act_legality() {
        assert!(DialogueAct::new(Actor::User, ActType::Offer, vec![]).is_err());
        assert!(DialogueAct::new(Actor::System, ActType::Affirm, vec![]).is_err());
        assert!(DialogueAct::new(Actor::User, ActType::Inform, vec![ActArg { slot: "food".into(), value: None }]).is_err());
        assert!(parse_act(Actor::User, "request(food=chinese)").is_err());
        assert!(parse_act(Actor::System, "offer(food=chinese)").is_err());
        assert!(parse_act(Actor::System, "offer(entity=e1,food=chinese)").is_ok());
    }

    #[test]
    fn parses_and_prints_acts() {
        let a = parse_act(Actor::User, " inform( food = chinese ) ").unwrap();
        assert_eq!(a, DialogueAct::inform(Actor::User, "food", "chinese"));
        assert_eq!(a.to_string(), "inform(food=chinese)");
        let acts = parse_acts(Actor::User, "negate|inform(food=indian)").unwrap();
        assert_eq!(acts.len(), 2);
        assert_eq!(format_acts(&acts), "negate()|inform(food=indian)");
        assert!(parse_act(Actor::User, "inform(food=").is_err());
        assert!(parse_act(Actor::User, "shout(food=thai)").is_err());
    }

    #[test]
    fn turn_record_line_round_trip() {
        let toy = builtin_ontology("toy").unwrap();
        let rec = TurnRecord {
            schema: TURN_RECORD_SCHEMA,
            turn: 3,
            system_act: DialogueAct::request(Actor::System, "food"),
            user_acts: vec![DialogueAct::inform(Actor::User, "food", "chinese")],
            slu: SluHypotheses::certain(vec![DialogueAct::inform(Actor::User, "food", "chinese")], 0.8),
            aux_belief: uniform_belief(&toy),
            executed_belief: uniform_belief(&toy),
            rewards: RewardBreakdown { turn_penalty: -0.05, basic_score: [Some(-0.1), None, None], success_reward: None },
        };
        let line = rec.to_json_line();
        assert!(!line.contains('\n'));
        assert_eq!(TurnRecord::from_json_line(&line).unwrap(), rec);
    }

    proptest! {
        #[test]
        fn repaired_vectors_are_valid_beliefs(raw in prop::collection::vec(-2.0f64..2.0, 21 + 8 + 4)) {
            let d2 = builtin_ontology("dstc2-like").unwrap();
            let mut b = uniform_belief(&d2);
            let idx = crate::ontology::Indices::new(&d2);
            let (g, rest) = raw.split_at(idx.goal.dimension());
            let (r, m) = rest.split_at(idx.request.dimension());
            b.set_fragment(vector_to_belief(g, &idx.goal).unwrap());
            b.set_fragment(vector_to_belief(r, &idx.request).unwrap());
            b.set_fragment(vector_to_belief(m, &idx.method).unwrap());
            prop_assert!(b.is_valid(), "{:?}", b);
        }

        #[test]
        fn repair_is_idempotent(raw in prop::collection::vec(-2.0f64..2.0, 21)) {
            let d2 = builtin_ontology("dstc2-like").unwrap();
            let idx = flat_index(&d2, SlotType::Goal);
            let mut b = uniform_belief(&d2);
            b.set_fragment(vector_to_belief(&raw, &idx).unwrap());
            let once = belief_vector(&b, &idx).unwrap();
            b.set_fragment(vector_to_belief(&once, &idx).unwrap());
            let twice = belief_vector(&b, &idx).unwrap();
            for (x, y) in once.iter().zip(&twice) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
