use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WebsiteErrorCode {
    ChallengeUnknown,
    ChallengeConsumed,
    ChallengeExpired,
    AuthenticationFailed,
    KeyExpired,
    SessionInvalid,
    SessionExpired,
    AccessDenied,
    Unauthorized,
    InvalidRequest,
    UpstreamUnavailable,
    Internal,
}

impl WebsiteErrorCode {
    pub fn http_status(self) -> u16 {
        use WebsiteErrorCode::*;
        match self {
            ChallengeUnknown | ChallengeConsumed | ChallengeExpired | AuthenticationFailed
            | KeyExpired | SessionInvalid | SessionExpired | Unauthorized => 401,
            AccessDenied => 403,
            InvalidRequest => 400,
            UpstreamUnavailable => 502,
            Internal => 500,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WebsiteError {
    #[error("unknown login challenge")]
    ChallengeUnknown,
    #[error("login challenge already used")]
    ChallengeConsumed,
    #[error("login challenge expired")]
    ChallengeExpired,
    #[error("authentication failed: {0}")]
    Authentication(String),
    #[error("session key {0} has expired")]
    KeyExpired(u64),
    #[error("no such session")]
    SessionInvalid,
    #[error("session expired")]
    SessionExpired,
    #[error("access denied: {0}")]
    Denied(String),
    #[error("user credential required")]
    Unauthorized,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("Auth unavailable: {0}")]
    Upstream(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl WebsiteError {
    pub fn code(&self) -> WebsiteErrorCode {
        use WebsiteErrorCode as C;
        match self {
            WebsiteError::ChallengeUnknown => C::ChallengeUnknown,
            WebsiteError::ChallengeConsumed => C::ChallengeConsumed,
            WebsiteError::ChallengeExpired => C::ChallengeExpired,
            WebsiteError::Authentication(_) => C::AuthenticationFailed,
            WebsiteError::KeyExpired(_) => C::KeyExpired,
            WebsiteError::SessionInvalid => C::SessionInvalid,
            WebsiteError::SessionExpired => C::SessionExpired,
            WebsiteError::Denied(_) => C::AccessDenied,
            WebsiteError::Unauthorized => C::Unauthorized,
            WebsiteError::Invalid(_) => C::InvalidRequest,
            WebsiteError::Upstream(_) => C::UpstreamUnavailable,
            WebsiteError::Internal(_) => C::Internal,
        }
    }
}

impl From<delegate_core::CoreError> for WebsiteError {
    fn from(e: delegate_core::CoreError) -> Self {
        WebsiteError::Internal(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebsiteErrorBody {
    pub error: WebsiteErrorCode,
    pub message: String,
}
