//! Auth: a key distribution service extended for delegated access.
//!
//! A user asks Auth to create a session key for one of its agents at a given
//! trust level. Auth looks up the matching `Delegation` policy, stores a new
//! key with an empty owner list and the expected owner groups
//! `[agent group, target group]`, and hands the user only the key id. The
//! agent and then the website each redeem the key exactly once.

pub mod client;
mod error;
pub mod events;
pub mod http;
pub mod model;
pub mod service;
pub mod wire;

pub use client::{AuthClient, AuthClientError, Identity};
pub use error::{AuthError, ErrorBody, ErrorCode};
pub use model::{
    CachedSessionKey, CommunicationPolicy, DelegationCreated, DelegationTarget, Owner, PolicyId,
    PolicyTarget, RegisteredEntity, SessionKeyId, SessionKeyResponse,
};
pub use service::{AuthConfig, AuthService, AuthStats, Channel};
pub use wire::{AuthOperation, SignedRequest};
