use chrono::{DateTime, Utc};
use delegate_core::EntityName;
use delegate_website::{ProfileField, PurchaseRecord};
use serde::{Deserialize, Serialize};

use crate::config::TaskScript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AgentAuth,
    AgentWebsite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Request,
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    RequestSessionKey,
    GetChallenge,
    SubmitLogin,
    FetchField,
    Purchase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Request events carry no outcome of their own.
    Sent,
    Ok,
    Denied,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub channel: Channel,
    pub direction: Direction,
    pub operation: Operation,
    pub timestamp: DateTime<Utc>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub status: Option<u16>,
    /// Field name, or the error code returned by the peer.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AcquireKey,
    Login,
    FetchField,
    Purchase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Success,
    /// Completed, but the website refused some field or the purchase.
    SuccessWithDenials,
    /// Auth refused to issue the session key.
    Denied,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub status: Option<u16>,
    pub code: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldOutcome {
    pub field: ProfileField,
    pub status: u16,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub agent: EntityName,
    pub script: TaskScript,
    pub events: Vec<TranscriptEvent>,
    pub fields: Vec<FieldOutcome>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub purchase: Option<PurchaseRecord>,
    pub terminal_status: TerminalStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<StageFailure>,
}

impl ProtocolTranscript {
    pub fn requests_on(&self, channel: Channel) -> usize {
        self.events
            .iter()
            .filter(|e| e.channel == channel && e.direction == Direction::Request)
            .count()
    }

    pub fn responses_on(&self, channel: Channel) -> usize {
        self.events
            .iter()
            .filter(|e| e.channel == channel && e.direction == Direction::Response)
            .count()
    }

    pub fn redemptions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.operation == Operation::RequestSessionKey && e.direction == Direction::Request)
            .count()
    }

    pub fn timestamps_monotone(&self) -> bool {
        self.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }

    /// Copy with every timestamp cleared, for comparing reruns.
    pub fn without_timestamps(&self) -> Self {
        let mut copy = self.clone();
        for e in &mut copy.events {
            e.timestamp = DateTime::<Utc>::UNIX_EPOCH;
        }
        if let Some(p) = &mut copy.purchase {
            p.placed_at = DateTime::<Utc>::UNIX_EPOCH;
        }
        copy
    }
}
