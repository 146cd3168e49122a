//! Website that admits AI agents holding delegated session keys.
//!
//! Agents log in by MAC-ing a one-time nonce with a session key; the
//! website fetches the same key from Auth (once per key id), opens a
//! session for the key's relative validity and then answers profile and
//! purchase requests according to the scope configured for the agent's
//! trust group.

pub mod directory;
pub mod error;
pub mod http;
pub mod model;
pub mod service;

pub use directory::KeyDirectory;
pub use error::{WebsiteError, WebsiteErrorBody, WebsiteErrorCode};
pub use http::{DelegationRequest, FieldValue, LoginRequest, PurchaseRequest, ScopeUpdate};
pub use model::{
    AgentSession, AuditEvent, AuditKind, CachedWebsiteKey, ChallengeIssued, DelegationRecord,
    ProfileField, PurchaseRecord, PurchaseStatus, ScopePolicy, SessionIssued, SessionView,
    UserProfile,
};
pub use service::{HumanCredential, WebsiteConfig, WebsiteService, WebsiteStats};
