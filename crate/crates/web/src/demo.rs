//! Plain-Rust operations behind the page, testable without a browser.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dstlab::agents::Variant;
use dstlab::config::ExperimentConfig;
use dstlab::dialogue::{parse_acts, Actor, BeliefState};
use dstlab::ontology::{builtin_ontology, Ontology};
use dstlab::orchestrator::{ChatSession, Trainer};
use dstlab::tracker::{cmbp_goal_update, SlotValueFeatures};
use dstlab::usersim::{corrupt, ErrorModel};

pub fn goal_update(b_prev: f64, p_plus: f64, p_minus: f64, p_plus_other: f64) -> f64 {
    cmbp_goal_update(&SlotValueFeatures { b_prev, p_plus, p_minus, p_plus_other, ..Default::default() })
}

/// Row-major `steps × steps` grid: rows sweep the previous belief, columns P⁺, both over [0,1].
pub fn goal_surface(p_minus: f64, p_plus_other: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(2);
    let at = |i: usize| i as f64 / (steps - 1) as f64;
    (0..steps * steps).map(|k| goal_update(at(k / steps), at(k % steps), p_minus, p_plus_other)).collect()
}

#[derive(Debug, Serialize)]
pub struct Hypothesis {
    pub acts: String,
    pub score: f64,
    pub correct: bool,
}

/// What the tracker hears when the user says `acts` through a channel with error rate `error_rate`.
pub fn nbest(ontology: &str, acts: &str, error_rate: f64, seed: u64) -> Result<Vec<Hypothesis>, String> {
    let o = builtin_ontology(ontology).map_err(|e| e.to_string())?;
    let said = parse_acts(Actor::User, acts).map_err(|e| e.to_string())?;
    for a in &said {
        a.validate().map_err(|e| e.to_string())?;
    }
    let model = ErrorModel::with_rate(error_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heard = corrupt(&said, &model, &o, &mut rng).map_err(|e| e.to_string())?;
    Ok(heard
        .items
        .into_iter()
        .map(|h| Hypothesis { correct: h.acts == said, acts: dstlab::dialogue::format_acts(&h.acts), score: h.score })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct SlotView {
    pub slot: String,
    pub values: Vec<(String, f64)>,
    pub none: f64,
}

#[derive(Debug, Serialize)]
pub struct BeliefView {
    pub goal: Vec<SlotView>,
    pub request: Vec<(String, f64)>,
    pub method: Vec<(String, f64)>,
}

impl BeliefView {
    fn new(b: &BeliefState, o: &Ontology) -> Self {
        BeliefView {
            goal: o
                .informable()
                .iter()
                .zip(&b.goal)
                .map(|(s, g)| SlotView {
                    slot: s.name.clone(),
                    values: s.values.iter().cloned().zip(g.values.iter().copied()).collect(),
                    none: g.none,
                })
                .collect(),
            request: o.requestable().iter().cloned().zip(b.request.iter().copied()).collect(),
            method: o.methods().iter().cloned().zip(b.method.iter().copied()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TurnView {
    pub system: String,
    pub action: String,
    pub belief: BeliefView,
    pub finished: bool,
    /// Set once the dialogue ends.
    pub success: Option<bool>,
}

/// A manager whose policy was trained for a few episodes on the polynomial tracker.
pub struct ChatDemo {
    fresh: ChatSession,
    session: ChatSession,
    pub success_rate: f64,
}

impl ChatDemo {
    pub fn train(ontology: &str, episodes: usize, seed: u64) -> Result<Self, String> {
        let mut cfg = ExperimentConfig::desk(ontology);
        cfg.variant = Variant::Polynomial;
        cfg.schedule.n1 = episodes;
        cfg.schedule.window = episodes.clamp(1, 100);
        let mut t = Trainer::new(&cfg, seed).map_err(|e| e.to_string())?;
        t.run_phase(1).map_err(|e| e.to_string())?;
        let success_rate = t.metrics().moving_successes().last().copied().unwrap_or(0.0);
        let fresh = ChatSession::new(t.environment().clone(), t.policy().clone(), t.trackers().clone(), false)
            .map_err(|e| e.to_string())?;
        Ok(ChatDemo { session: fresh.clone(), fresh, success_rate })
    }

    pub fn opening(&self) -> String {
        self.session.last_system_act().to_string()
    }

    pub fn ontology(&self) -> &Ontology {
        &self.session.environment().ontology
    }

    pub fn reset(&mut self) {
        self.session = self.fresh.clone();
    }

    pub fn step(&mut self, text: &str, confidence: f64) -> Result<TurnView, String> {
        let acts = parse_acts(Actor::User, text).map_err(|e| e.to_string())?;
        let turn = self.session.step(acts, confidence).map_err(|e| e.to_string())?;
        Ok(TurnView {
            system: turn.system_act.to_string(),
            action: turn.action_label,
            belief: BeliefView::new(&turn.executed_belief, self.ontology()),
            finished: turn.finished,
            success: turn.finished.then(|| self.session.verdict()),
        })
    }
}
