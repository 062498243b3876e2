//! Experiment configuration: one TOML document describes a whole run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{DdpgConfig, DqnConfig, Variant};
use crate::error::{Error, Result};
use crate::ontology::{builtin_ontology, Ontology, BUILTIN_NAMES};
use crate::reward::RewardConfig;
use crate::tracker::TrackerConfig;
use crate::usersim::{ErrorModel, UserConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSchedule {
    /// Policy training with the polynomial tracker.
    pub n1: usize,
    /// Actor pre-training toward the polynomial tracker.
    pub n2: usize,
    /// Tracking-agent training with the policy frozen.
    pub n3: usize,
    /// Policy training with the tracking agents frozen.
    pub n4: usize,
    pub window: usize,
    pub max_turns: usize,
    /// Supervised actor steps per turn during pre-training.
    pub pretrain_steps: usize,
    pub pretrain_batch: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            n1: 2000,
            n2: 200,
            n3: 3000,
            n4: 3000,
            window: 1000,
            max_turns: 20,
            pretrain_steps: 4,
            pretrain_batch: 32,
        }
    }
}

impl TrainSchedule {
    pub fn total(&self) -> usize {
        self.n1 + self.n2 + self.n3 + self.n4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in ontology name or a path to an ontology file.
    pub ontology: String,
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub eval_episodes: usize,
    pub schedule: TrainSchedule,
    pub reward: RewardConfig,
    pub error_model: ErrorModel,
    pub user: UserConfig,
    pub tracker: TrackerConfig,
    pub dqn: DqnConfig,
    pub ddpg: DdpgConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk("dstc2-like")
    }
}

impl ExperimentConfig {
    /// Desk-scale settings with the noise level and trust factors of the named ontology.
    pub fn desk(ontology: &str) -> Self {
        let (error_rate, reward) = match ontology {
            "dstc3-like" => (0.30, RewardConfig::dstc3()),
            _ => (0.15, RewardConfig::dstc2()),
        };
        ExperimentConfig {
            ontology: ontology.to_string(),
            variant: Variant::TaAll,
            seeds: vec![1],
            output_dir: PathBuf::from("runs"),
            eval_episodes: 1000,
            schedule: TrainSchedule::default(),
            reward,
            error_model: ErrorModel::with_rate(error_rate),
            user: UserConfig::default(),
            tracker: TrackerConfig::default(),
            dqn: DqnConfig::default(),
            ddpg: DdpgConfig::default(),
        }
    }

    /// Full-length schedule.
    pub fn paper_scale(ontology: &str) -> Self {
        let mut cfg = Self::desk(ontology);
        let (n1, n3) = if ontology == "dstc3-like" { (20_000, 29_000) } else { (10_000, 19_000) };
        cfg.schedule.n1 = n1;
        cfg.schedule.n2 = 1000;
        cfg.schedule.n3 = n3;
        cfg.schedule.n4 = 30_000;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Apply `key=value` overrides with dotted keys, e.g. `schedule.n1=500`.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = toml::Table::try_from(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("override `{item}` is not key=value")))?;
            let value = parse_override_value(raw.trim());
            let path: Vec<&str> = key.trim().split('.').collect();
            let (last, parents) = path.split_last().expect("split yields at least one piece");
            let mut table = &mut doc;
            for p in parents {
                table = table
                    .get_mut(*p)
                    .and_then(toml::Value::as_table_mut)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown config section `{p}` in `{key}`")))?;
            }
            if !table.contains_key(*last) {
                return Err(Error::InvalidConfig(format!("unknown config key `{key}`")));
            }
            table.insert(last.to_string(), value);
        }
        let cfg: ExperimentConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Problems with the config, one entry per offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        let s = &self.schedule;
        need(s.window >= 1, "schedule.window must be at least 1");
        need(s.max_turns >= 1, "schedule.max_turns must be at least 1");
        need(s.pretrain_batch >= 1, "schedule.pretrain_batch must be at least 1");
        need(!self.seeds.is_empty(), "seeds must list at least one seed");
        need(self.reward.turn_penalty <= 0.0, "reward.turn_penalty must be ≤ 0");
        need(self.reward.success_reward >= 0.0, "reward.success_reward must be ≥ 0");
        need(self.reward.trust.iter().all(|a| *a >= 0.0), "reward.trust entries must be ≥ 0");
        let u = &self.user;
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        need(prob(u.constraint_prob), "user.constraint_prob must lie in [0,1]");
        need(prob(u.dontcare_prob), "user.dontcare_prob must lie in [0,1]");
        need(prob(u.volunteer_prob), "user.volunteer_prob must lie in [0,1]");
        need(u.patience >= 1, "user.patience must be at least 1");
        let d = &self.dqn;
        need(d.batch_size >= 1 && d.buffer_capacity >= d.batch_size, "dqn.batch_size must be in 1..=buffer_capacity");
        need((0.0..=1.0).contains(&d.discount), "dqn.discount must lie in [0,1]");
        need((0.0..=1.0).contains(&d.tau), "dqn.tau must lie in [0,1]");
        need(d.learning_rate >= 0.0, "dqn.learning_rate must be ≥ 0");
        need(prob(d.epsilon_start) && prob(d.epsilon_end), "dqn epsilons must lie in [0,1]");
        let a = &self.ddpg;
        need(a.batch_size >= 1 && a.buffer_capacity >= a.batch_size, "ddpg.batch_size must be in 1..=buffer_capacity");
        need((0.0..=1.0).contains(&a.discount), "ddpg.discount must lie in [0,1]");
        need((0.0..=1.0).contains(&a.tau), "ddpg.tau must lie in [0,1]");
        need(a.actor_lr >= 0.0 && a.critic_lr >= 0.0 && a.pretrain_lr >= 0.0, "ddpg learning rates must be ≥ 0");
        need(a.sigma_start >= 0.0 && a.sigma_end >= 0.0, "ddpg sigmas must be ≥ 0");
        if let Err(e) = self.error_model.validate() {
            out.push(format!("error_model: {e}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    /// The config with variant rules applied: no teaching zeroes every trust factor.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        if !cfg.variant.teaching() {
            cfg.reward.trust = [0.0; 3];
        }
        cfg
    }

    pub fn load_ontology(&self) -> Result<Ontology> {
        if BUILTIN_NAMES.contains(&self.ontology.as_str()) {
            builtin_ontology(&self.ontology)
        } else {
            Ontology::from_path(&self.ontology)
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
