//! Polynomial (CMBP) belief tracker: six probabilistic features per
//! slot-value pair and one update polynomial per slot type.

use serde::{Deserialize, Serialize};

use crate::dialogue::{
    uniform_belief, vector_to_belief, ActType, BeliefState, DialogueAct, SluHypotheses, SluHypothesis,
};
use crate::ontology::{Indices, Ontology, SlotType};

/// Features for one (slot, value) pair, or one requestable slot, or one method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotValueFeatures {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_plus_other: f64,
    pub p_minus_other: f64,
    pub b_rest: f64,
    pub b_prev: f64,
}

pub const FEATURES_PER_ENTRY: usize = 6;

impl SlotValueFeatures {
    pub fn as_array(&self) -> [f64; FEATURES_PER_ENTRY] {
        [self.p_plus, self.p_minus, self.p_plus_other, self.p_minus_other, self.b_rest, self.b_prev]
    }

    fn clamped(self) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        SlotValueFeatures {
            p_plus: c(self.p_plus),
            p_minus: c(self.p_minus),
            p_plus_other: c(self.p_plus_other),
            p_minus_other: c(self.p_minus_other),
            b_rest: c(self.b_rest),
            b_prev: c(self.b_prev),
        }
    }
}

/// Features for every coordinate of the three flat indices, in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub goal: Vec<SlotValueFeatures>,
    pub request: Vec<SlotValueFeatures>,
    pub method: Vec<SlotValueFeatures>,
    pub turn: usize,
}

impl FeatureFrame {
    pub fn entries(&self, slot_type: SlotType) -> &[SlotValueFeatures] {
        match slot_type {
            SlotType::Goal => &self.goal,
            SlotType::Request => &self.request,
            SlotType::Method => &self.method,
        }
    }

    /// Tracking-agent input: the six features of every entry, concatenated.
    pub fn to_vector(&self, slot_type: SlotType) -> Vec<f64> {
        self.entries(slot_type).iter().flat_map(|f| f.as_array()).collect()
    }
}

/// The method each act signals, if any.
fn signalled_method(act: &DialogueAct, ontology: &Ontology) -> Option<&'static str> {
    match act.act_type {
        ActType::Inform if act.args.iter().any(|a| ontology.slot_index(&a.slot).is_some()) => Some("byconstraints"),
        ActType::Reqalts => Some("byalternatives"),
        ActType::Bye => Some("finished"),
        _ => None,
    }
}

/// Sum of scores of hypotheses satisfying `pred`.
fn mass(slu: &SluHypotheses, pred: impl Fn(&SluHypothesis) -> bool) -> f64 {
    slu.items.iter().filter(|h| pred(h)).map(|h| h.score).sum()
}

fn with_others(plus: &[f64], minus: &[f64], rest: impl Fn(usize) -> f64, prev: impl Fn(usize) -> f64) -> Vec<SlotValueFeatures> {
    let plus_total: f64 = plus.iter().sum();
    let minus_total: f64 = minus.iter().sum();
    (0..plus.len())
        .map(|i| {
            SlotValueFeatures {
                p_plus: plus[i],
                p_minus: minus[i],
                p_plus_other: plus_total - plus[i],
                p_minus_other: minus_total - minus[i],
                b_rest: rest(i),
                b_prev: prev(i),
            }
            .clamped()
        })
        .collect()
}

pub fn extract_features(
    slu: &SluHypotheses,
    prev: &BeliefState,
    system_act: &DialogueAct,
    ontology: &Ontology,
    turn: usize,
) -> FeatureFrame {
    let confirmed = match system_act.act_type {
        ActType::Confirm => system_act.single_pair(),
        _ => None,
    };
    let has = |h: &SluHypothesis, t: ActType| h.acts.iter().any(|a| a.act_type == t);

    let mut goal = Vec::with_capacity(ontology.goal_dim());
    for (s, slot) in ontology.informable().iter().enumerate() {
        let is_confirmed = |v: &str| confirmed == Some((slot.name.as_str(), v));
        let plus: Vec<f64> = slot
            .values
            .iter()
            .map(|v| {
                mass(slu, |h| {
                    h.acts.iter().any(|a| a.contains_pair(ActType::Inform, &slot.name, v))
                        || (is_confirmed(v) && has(h, ActType::Affirm))
                })
            })
            .collect();
        let minus: Vec<f64> = slot
            .values
            .iter()
            .map(|v| {
                mass(slu, |h| {
                    h.acts.iter().any(|a| a.contains_pair(ActType::Deny, &slot.name, v))
                        || (is_confirmed(v) && has(h, ActType::Negate))
                })
            })
            .collect();
        let b = &prev.goal[s];
        goal.extend(with_others(&plus, &minus, |_| b.none, |i| b.values[i]));
    }

    let plus: Vec<f64> = ontology
        .requestable()
        .iter()
        .map(|r| mass(slu, |h| h.acts.iter().any(|a| a.act_type == ActType::Request && a.args[0].slot == *r)))
        .collect();
    let minus = vec![0.0; plus.len()];
    let request = with_others(&plus, &minus, |i| 1.0 - prev.request[i], |i| prev.request[i]);

    let plus: Vec<f64> = ontology
        .methods()
        .iter()
        .map(|m| mass(slu, |h| h.acts.iter().any(|a| signalled_method(a, ontology) == Some(m.as_str()))))
        .collect();
    let minus = vec![0.0; plus.len()];
    let method = with_others(&plus, &minus, |_| prev.method[0], |i| prev.method[i]);

    FeatureFrame { goal, request, method, turn }
}

/// `(b + P⁺(1 − b)) · (1 − P⁻ − P̃⁺)`, clamped to [0,1].
pub fn cmbp_goal_update(f: &SlotValueFeatures) -> f64 {
    let f = f.clamped();
    ((f.b_prev + f.p_plus * (1.0 - f.b_prev)) * (1.0 - f.p_minus - f.p_plus_other)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestRule {
    /// Requests reset every turn to the current evidence.
    #[default]
    Reset,
    /// Evidence accumulates like a goal value, without competition.
    Accumulate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodRule {
    /// New evidence plus persistence of the unexplained previous mass.
    #[default]
    EvidencePersistence,
    /// The goal polynomial applied to methods.
    GoalPolynomial,
}

pub fn cmbp_request_update(f: &SlotValueFeatures) -> f64 {
    f.p_plus.clamp(0.0, 1.0)
}

pub fn cmbp_method_update(f: &SlotValueFeatures) -> f64 {
    (f.p_plus + f.b_prev * (1.0 - f.p_plus_other - f.p_plus)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub request_rule: RequestRule,
    pub method_rule: MethodRule,
}

/// Polynomial tracker bound to one ontology.
#[derive(Debug, Clone)]
pub struct PolynomialTracker {
    pub config: TrackerConfig,
}

impl PolynomialTracker {
    pub fn new(config: TrackerConfig) -> Self {
        PolynomialTracker { config }
    }

    fn request_value(&self, f: &SlotValueFeatures) -> f64 {
        match self.config.request_rule {
            RequestRule::Reset => cmbp_request_update(f),
            RequestRule::Accumulate => (f.b_prev + f.p_plus * (1.0 - f.b_prev)).clamp(0.0, 1.0),
        }
    }

    fn method_value(&self, f: &SlotValueFeatures) -> f64 {
        match self.config.method_rule {
            MethodRule::EvidencePersistence => cmbp_method_update(f),
            MethodRule::GoalPolynomial => cmbp_goal_update(f),
        }
    }

    /// Raw (pre-repair) outputs of the polynomial for one slot type.
    pub fn raw_outputs(&self, frame: &FeatureFrame, slot_type: SlotType) -> Vec<f64> {
        let entries = frame.entries(slot_type);
        match slot_type {
            SlotType::Goal => entries.iter().map(cmbp_goal_update).collect(),
            SlotType::Request => entries.iter().map(|f| self.request_value(f)).collect(),
            SlotType::Method => entries.iter().map(|f| self.method_value(f)).collect(),
        }
    }

    /// Belief update from precomputed features.
    pub fn update(&self, frame: &FeatureFrame, indices: &Indices, ontology: &Ontology) -> BeliefState {
        let mut next = uniform_belief(ontology);
        for t in SlotType::ALL {
            let raw = self.raw_outputs(frame, t);
            next.set_fragment(vector_to_belief(&raw, indices.get(t)).expect("feature frame matches indices"));
        }
        next
    }

    pub fn track(
        &self,
        prev: &BeliefState,
        slu: &SluHypotheses,
        system_act: &DialogueAct,
        ontology: &Ontology,
        indices: &Indices,
        turn: usize,
    ) -> BeliefState {
        let frame = extract_features(slu, prev, system_act, ontology, turn);
        self.update(&frame, indices, ontology)
    }
}

impl Default for PolynomialTracker {
    fn default() -> Self {
        Self::new(TrackerConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::Actor;
    use crate::ontology::builtin_ontology;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hyp(acts: Vec<DialogueAct>, score: f64) -> SluHypothesis {
        SluHypothesis { acts, score }
    }

    fn feats(b_prev: f64, p_plus: f64, p_minus: f64, p_plus_other: f64) -> SlotValueFeatures {
        SlotValueFeatures { p_plus, p_minus, p_plus_other, p_minus_other: 0.0, b_rest: 1.0 - b_prev, b_prev }
    }

    #[test]
    fn aggregates_scores_per_definition() {
        let toy = builtin_ontology("toy").unwrap();
        let slu = SluHypotheses {
            items: vec![
                hyp(vec![DialogueAct::inform(Actor::User, "food", "chinese")], 0.6),
                hyp(vec![DialogueAct::inform(Actor::User, "food", "indian")], 0.2),
                hyp(vec![DialogueAct::deny("food", "chinese")], 0.1),
            ],
        };
        let prev = uniform_belief(&toy);
        let f = extract_features(&slu, &prev, &DialogueAct::system(ActType::Hello), &toy, 1);
        let chinese = f.goal[0];
        assert_abs_diff_eq!(chinese.p_plus, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(chinese.p_minus, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(chinese.p_plus_other, 0.2, epsilon = 1e-12);
        assert_eq!(chinese.p_minus_other, 0.0);
        assert_eq!(chinese.b_rest, 1.0);
        assert_eq!(chinese.b_prev, 0.0);
        assert_abs_diff_eq!(f.goal[1].p_minus_other, 0.1, epsilon = 1e-12);
        assert_eq!(f.to_vector(SlotType::Goal).len(), 6 * 4);
    }

    #[test]
    fn empty_list_copies_previous_belief() {
        let toy = builtin_ontology("toy").unwrap();
        let mut prev = uniform_belief(&toy);
        prev.goal[1].values = vec![0.25, 0.5];
        prev.goal[1].none = 0.25;
        let f = extract_features(&SluHypotheses::default(), &prev, &DialogueAct::system(ActType::Hello), &toy, 1);
        for x in f.goal.iter().chain(&f.request).chain(&f.method) {
            assert_eq!([x.p_plus, x.p_minus, x.p_plus_other, x.p_minus_other], [0.0; 4]);
        }
        assert_eq!(f.goal[3].b_prev, 0.5);
        assert_eq!(f.goal[3].b_rest, 0.25);
    }

    #[test]
    fn affirm_resolves_against_confirmation() {
        let toy = builtin_ontology("toy").unwrap();
        let slu = SluHypotheses::certain(vec![DialogueAct::user(ActType::Affirm)], 0.9);
        let prev = uniform_belief(&toy);
        let f = extract_features(&slu, &prev, &DialogueAct::confirm("food", "chinese"), &toy, 1);
        assert_abs_diff_eq!(f.goal[0].p_plus, 0.9, epsilon = 1e-12);
        assert_eq!(f.goal[1].p_plus, 0.0);
        let slu = SluHypotheses::certain(vec![DialogueAct::user(ActType::Negate)], 0.8);
        let f = extract_features(&slu, &prev, &DialogueAct::confirm("food", "chinese"), &toy, 1);
        assert_abs_diff_eq!(f.goal[0].p_minus, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn goal_polynomial_values() {
        assert_abs_diff_eq!(cmbp_goal_update(&feats(0.5, 0.4, 0.1, 0.2)), 0.49, epsilon = 1e-12);
        assert_eq!(cmbp_goal_update(&SlotValueFeatures::default()), 0.0);
        assert_eq!(cmbp_goal_update(&feats(1.0, 0.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn request_and_method_rules() {
        let f = |p_plus, p_plus_other, b_prev| SlotValueFeatures { p_plus, p_plus_other, b_prev, ..Default::default() };
        assert_eq!(cmbp_request_update(&f(0.8, 0.0, 0.3)), 0.8);
        assert_eq!(cmbp_request_update(&f(0.0, 0.0, 0.3)), 0.0);
        assert_eq!(cmbp_request_update(&f(1.3, 0.0, 0.3)), 1.0);
        assert_abs_diff_eq!(cmbp_method_update(&f(0.0, 0.0, 0.6)), 0.6, epsilon = 1e-12);
        assert_eq!(cmbp_method_update(&f(1.0, 0.0, 0.2)), 1.0);
        assert_abs_diff_eq!(cmbp_method_update(&f(0.5, 0.5, 0.4)), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tracking_sequence() {
        let toy = builtin_ontology("toy").unwrap();
        let idx = Indices::new(&toy);
        let tracker = PolynomialTracker::default();
        let hello = DialogueAct::system(ActType::Hello);
        let chinese = SluHypotheses::certain(vec![DialogueAct::inform(Actor::User, "food", "chinese")], 0.7);
        let b1 = tracker.track(&uniform_belief(&toy), &chinese, &hello, &toy, &idx, 1);
        assert_abs_diff_eq!(b1.goal[0].values[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(b1.goal[0].none, 0.3, epsilon = 1e-12);
        let b2 = tracker.track(&b1, &chinese, &hello, &toy, &idx, 2);
        assert_abs_diff_eq!(b2.goal[0].values[0], 0.91, epsilon = 1e-12);
        let indian = SluHypotheses::certain(vec![DialogueAct::inform(Actor::User, "food", "indian")], 0.6);
        let b3 = tracker.track(&b1, &indian, &hello, &toy, &idx, 2);
        assert_abs_diff_eq!(b3.goal[0].values[0], 0.28, epsilon = 1e-12);
        assert!(b3.is_valid());
    }

    #[test]
    fn goal_update_is_monotone_without_negative_evidence() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for &b in &grid {
            for w in grid.windows(2) {
                assert!(cmbp_goal_update(&feats(b, w[1], 0.0, 0.0)) >= cmbp_goal_update(&feats(b, w[0], 0.0, 0.0)));
                assert!(cmbp_goal_update(&feats(w[1], b, 0.0, 0.0)) >= cmbp_goal_update(&feats(w[0], b, 0.0, 0.0)));
            }
        }
    }

    /// A polynomial of total degree ≤ 3 has vanishing fourth differences along
    /// every line; the third differences of this one do not vanish.
    #[test]
    fn goal_polynomial_has_total_degree_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eval = |x: [f64; 4]| {
            let [b, p, m, o] = x;
            // Raw polynomial without clamping, from the same update rule.
            (b + p * (1.0 - b)) * (1.0 - m - o)
        };
        let mut max_third: f64 = 0.0;
        for _ in 0..200 {
            let x0: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..0.2));
            let d: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let h = 0.05;
            let at = |k: f64| eval(std::array::from_fn(|i| x0[i] + k * h * d[i]));
            let fourth = at(0.0) - 4.0 * at(1.0) + 6.0 * at(2.0) - 4.0 * at(3.0) + at(4.0);
            let third = -at(0.0) + 3.0 * at(1.0) - 3.0 * at(2.0) + at(3.0);
            assert!(fourth.abs() < 1e-12, "{fourth}");
            max_third = max_third.max(third.abs());
            // The clamped implementation agrees inside the unit region.
            let f = feats(x0[0], x0[1], x0[2], x0[3]);
            assert_abs_diff_eq!(cmbp_goal_update(&f), eval(x0), epsilon = 1e-12);
        }
        assert!(max_third > 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn tracking_preserves_belief_invariants(seed in 0u64..10_000) {
            let d2 = builtin_ontology("dstc2-like").unwrap();
            let idx = Indices::new(&d2);
            let tracker = PolynomialTracker::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = uniform_belief(&d2);
            for turn in 0..20 {
                let mut items = Vec::new();
                let mut left = 1.0;
                for _ in 0..rng.random_range(0..4) {
                    let s = rng.random_range(0..d2.informable().len());
                    let slot = &d2.informable()[s];
                    let v = &slot.values[rng.random_range(0..slot.values.len())];
                    let act = match rng.random_range(0..5) {
                        0 => DialogueAct::deny(&slot.name, v),
                        1 => DialogueAct::user(ActType::Affirm),
                        2 => DialogueAct::request(Actor::User, &d2.requestable()[rng.random_range(0..8)]),
                        3 => DialogueAct::user(ActType::Reqalts),
                        _ => DialogueAct::inform(Actor::User, &slot.name, v),
                    };
                    let score = rng.random_range(0.0..left);
                    left -= score;
                    items.push(hyp(vec![act], score));
                }
                items.sort_by(|a, b| b.score.total_cmp(&a.score));
                let sys = DialogueAct::confirm("food", "thai");
                b = tracker.track(&b, &SluHypotheses { items }, &sys, &d2, &idx, turn);
                prop_assert!(b.is_valid(), "{:?}", b);
            }
        }
    }
}
