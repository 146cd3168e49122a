//! Deterministic stand-in for an AI agent acting under delegated access.
//!
//! The agent redeems a session key id handed over by its user, logs in
//! to the website by MAC-ing the login nonce, fetches the profile fields
//! its script names and optionally places a (simulated) purchase. Every
//! request and response is recorded in a [`ProtocolTranscript`]; the key
//! itself never leaves memory.

pub mod agent;
pub mod config;
pub mod decider;
pub mod transcript;
pub mod website_client;

pub use agent::{run_task, Agent, StageError};
pub use config::{AgentConfig, TaskScript};
pub use decider::{Action, AgentState, Decider, ScriptedDecider};
pub use transcript::{
    Channel, Direction, FieldOutcome, Operation, Outcome, ProtocolTranscript, Stage, StageFailure,
    TerminalStatus, TranscriptEvent,
};
pub use website_client::{WebsiteClient, WebsiteFailure};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("invalid configuration: {0}")]
    Config(String),
}
