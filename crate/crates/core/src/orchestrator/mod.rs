//! The dialogue manager: episodes, training phases, evaluation and chat.

pub mod actions;
pub mod chat;
pub mod episode;
pub mod metrics;
pub mod train;

pub use actions::{SystemAction, SystemActionSpace};
pub use chat::{ChatSession, ChatTurn};
pub use episode::{derive_seed, run_dialogue, EpisodeOptions, EpisodeResult, EpisodeSeeds, Environment, ManagerState};
pub use metrics::{aggregate, format_eval_table, AggregateSummary, EvalSummary, MetricsSeries};
pub use train::{evaluate_components, joint_train, ManagerCheckpoint, RunSummary, Trainer};
