//! Reward signals for the policy and the tracking agents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::SlotType;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub turn_penalty: f64,
    pub success_reward: f64,
    /// Trust factors for the goal, request and method agents.
    pub trust: [f64; 3],
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::dstc2()
    }
}

impl RewardConfig {
    pub fn dstc2() -> Self {
        RewardConfig { turn_penalty: -0.05, success_reward: 1.0, trust: [0.2, 0.2, 4.0] }
    }

    pub fn dstc3() -> Self {
        RewardConfig { trust: [0.07, 0.07, 4.0], ..Self::dstc2() }
    }

    pub fn trust_for(&self, slot_type: SlotType) -> f64 {
        match slot_type {
            SlotType::Goal => self.trust[0],
            SlotType::Request => self.trust[1],
            SlotType::Method => self.trust[2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.turn_penalty.is_finite() && self.turn_penalty <= 0.0) {
            return Err(Error::InvalidConfig(format!("turn penalty must be ≤ 0, got {}", self.turn_penalty)));
        }
        if !(self.success_reward.is_finite() && self.success_reward >= 0.0) {
            return Err(Error::InvalidConfig(format!("success reward must be ≥ 0, got {}", self.success_reward)));
        }
        if let Some(a) = self.trust.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidConfig(format!("trust factors must be ≥ 0, got {a}")));
        }
        Ok(())
    }
}

/// `−α‖b_e − b_a‖₂`.
pub fn basic_score(b_e: &[f64], b_a: &[f64], alpha: f64) -> Result<f64> {
    if b_e.len() != b_a.len() {
        return Err(Error::DimensionMismatch { expected: b_a.len(), actual: b_e.len() });
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let d2: f64 = b_e.iter().zip(b_a).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(-alpha * d2.sqrt())
}

fn terminal_reward(cfg: &RewardConfig, success: bool) -> f64 {
    if success {
        cfg.success_reward
    } else {
        0.0
    }
}

pub fn tracking_turn_reward(
    cfg: &RewardConfig,
    b_e: &[f64],
    b_a: &[f64],
    alpha: f64,
    terminal: bool,
    success: bool,
) -> Result<f64> {
    if terminal {
        return Ok(terminal_reward(cfg, success));
    }
    Ok(cfg.turn_penalty + basic_score(b_e, b_a, alpha)?)
}

pub fn policy_turn_reward(cfg: &RewardConfig, terminal: bool, success: bool) -> f64 {
    if terminal {
        terminal_reward(cfg, success)
    } else {
        cfg.turn_penalty
    }
}

pub const EVAL_TURN_PENALTY: f64 = 0.05;

pub fn evaluation_reward(success: bool, turns: usize) -> f64 {
    f64::from(u8::from(success)) - EVAL_TURN_PENALTY * turns as f64
}

/// The same metric over a success rate and mean turn count.
pub fn mean_evaluation_reward(success_rate: f64, mean_turns: f64) -> f64 {
    success_rate - EVAL_TURN_PENALTY * mean_turns
}
