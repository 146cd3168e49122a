use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Machine-readable error classes on the Auth wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    AuthenticationFailed,
    Denied,
    DuplicateIssuance,
    UnknownKey,
    Expired,
    Replay,
    Conflict,
    InvalidRequest,
    NotFound,
    Internal,
}

impl ErrorCode {
    /// Unknown key ids share 403 with denials so ids cannot be probed.
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::AuthenticationFailed => 401,
            ErrorCode::Denied | ErrorCode::DuplicateIssuance | ErrorCode::UnknownKey => 403,
            ErrorCode::Expired => 410,
            ErrorCode::Replay | ErrorCode::Conflict => 409,
            ErrorCode::InvalidRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuthError {
    #[error("authentication failed: {0}")]
    Authentication(String),
    #[error("authorization denied: {0}")]
    Denied(String),
    #[error("session key {0} was already issued to this group")]
    DuplicateIssuance(u64),
    #[error("unknown session key {0}")]
    UnknownKey(u64),
    #[error("session key {0} has expired")]
    Expired(u64),
    #[error("replayed request nonce")]
    Replay,
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AuthError {
    pub fn code(&self) -> ErrorCode {
        match self {
            AuthError::Authentication(_) => ErrorCode::AuthenticationFailed,
            AuthError::Denied(_) => ErrorCode::Denied,
            AuthError::DuplicateIssuance(_) => ErrorCode::DuplicateIssuance,
            AuthError::UnknownKey(_) => ErrorCode::UnknownKey,
            AuthError::Expired(_) => ErrorCode::Expired,
            AuthError::Replay => ErrorCode::Replay,
            AuthError::Conflict(_) => ErrorCode::Conflict,
            AuthError::Invalid(_) => ErrorCode::InvalidRequest,
            AuthError::NotFound(_) => ErrorCode::NotFound,
            AuthError::Internal(_) => ErrorCode::Internal,
        }
    }
}

impl From<delegate_core::CoreError> for AuthError {
    fn from(e: delegate_core::CoreError) -> Self {
        match e {
            delegate_core::CoreError::Entropy(_) => AuthError::Internal(e.to_string()),
            other => AuthError::Invalid(other.to_string()),
        }
    }
}

/// JSON error body used by every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorCode,
    pub message: String,
}
