//! A dialogue-management laboratory for on-line dialogue state tracking.
//!
//! A polynomial tracker acts as teacher for neural tracking agents trained
//! with a deterministic actor-critic method, while a Q-network dialogue
//! policy is trained against an agenda-based simulated user.

pub mod agents;
pub mod config;
pub mod dialogue;
pub mod error;
pub mod nn;
pub mod ontology;
pub mod orchestrator;
pub mod reward;
pub mod tracker;
pub mod usersim;

pub use error::{Error, Result};
