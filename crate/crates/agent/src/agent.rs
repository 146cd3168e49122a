//! Step-wise task runner that records every exchange in a transcript.

use delegate_auth::{AuthClient, AuthClientError, Identity};
use delegate_core::{compute_hmac, KeyMaterial, SharedClock, SharedRandom};
use delegate_website::ProfileField;
use serde::Serialize;

use crate::config::{AgentConfig, TaskScript};
use crate::decider::{Action, AgentState, Decider, ScriptedDecider};
use crate::transcript::{
    Channel, Direction, FieldOutcome, Operation, Outcome, ProtocolTranscript, Stage, StageFailure,
    TerminalStatus, TranscriptEvent,
};
use crate::website_client::{WebsiteClient, WebsiteFailure};

/// Why a stage of the task did not succeed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StageError {
    /// Auth answered and refused; `code` is Auth's error class.
    #[error("Auth refused ({code}): {message}")]
    AuthDenied { status: u16, code: String, message: String },
    #[error("Auth unavailable: {0}")]
    AuthUnavailable(String),
    #[error(transparent)]
    Website(#[from] WebsiteFailure),
    #[error("{0}")]
    Local(String),
}

impl StageError {
    fn status(&self) -> Option<u16> {
        match self {
            StageError::AuthDenied { status, .. } => Some(*status),
            StageError::Website(f) => f.status,
            _ => None,
        }
    }

    fn code(&self) -> Option<String> {
        match self {
            StageError::AuthDenied { code, .. } => Some(code.clone()),
            StageError::Website(f) => f.code.clone(),
            _ => None,
        }
    }
}

fn code_string(value: impl Serialize) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

impl From<AuthClientError> for StageError {
    fn from(e: AuthClientError) -> Self {
        match e {
            AuthClientError::Rejected { status, code, message } => StageError::AuthDenied {
                status,
                code: code_string(code),
                message,
            },
            other => StageError::AuthUnavailable(other.to_string()),
        }
    }
}

pub struct Agent {
    config: AgentConfig,
    auth: AuthClient,
    website: WebsiteClient,
    clock: SharedClock,
    decider: Box<dyn Decider>,
    state: AgentState,
    key: Option<KeyMaterial>,
    token: Option<String>,
    transcript: ProtocolTranscript,
}

impl Agent {
    pub fn new(config: AgentConfig, script: TaskScript, clock: SharedClock, rng: SharedRandom) -> Self {
        Self::with_decider(config, script, clock, rng, Box::new(ScriptedDecider))
    }

    pub fn with_decider(
        config: AgentConfig,
        script: TaskScript,
        clock: SharedClock,
        rng: SharedRandom,
        decider: Box<dyn Decider>,
    ) -> Self {
        let auth = AuthClient::new(&config.auth_url, clock.clone(), rng).with_identity(Identity {
            name: config.name.clone(),
            key: config.distribution_key.clone(),
            spec: config.crypto,
        });
        let website = WebsiteClient::new(&config.website_url);
        let transcript = ProtocolTranscript {
            agent: config.name.clone(),
            script: script.clone(),
            events: Vec::new(),
            fields: Vec::new(),
            purchase: None,
            terminal_status: TerminalStatus::Success,
            failure: None,
        };
        Self {
            config,
            auth,
            website,
            clock,
            decider,
            state: AgentState::new(script),
            key: None,
            token: None,
            transcript,
        }
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    /// Bearer token of the current website session, once logged in.
    pub fn session_token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn transcript(&self) -> &ProtocolTranscript {
        &self.transcript
    }

    fn record(
        &mut self,
        channel: Channel,
        direction: Direction,
        operation: Operation,
        outcome: Outcome,
        status: Option<u16>,
        detail: Option<String>,
    ) {
        self.transcript.events.push(TranscriptEvent {
            channel,
            direction,
            operation,
            timestamp: self.clock.now(),
            outcome,
            status,
            detail,
        });
    }

    fn record_result<T>(
        &mut self,
        channel: Channel,
        operation: Operation,
        ok_status: u16,
        detail: Option<String>,
        result: &Result<T, StageError>,
    ) {
        let (outcome, status, detail) = match result {
            Ok(_) => (Outcome::Ok, Some(ok_status), detail),
            Err(e @ (StageError::AuthDenied { .. } | StageError::Website(WebsiteFailure { status: Some(_), .. }))) => {
                let outcome = if e.status() == Some(403) { Outcome::Denied } else { Outcome::Failed };
                (outcome, e.status(), e.code().or(detail))
            }
            Err(e) => (Outcome::Failed, None, Some(e.to_string())),
        };
        self.record(channel, Direction::Response, operation, outcome, status, detail);
    }

    /// Uses `key` as the session key without contacting Auth, e.g. a key
    /// obtained by an earlier run or a deliberately wrong one.
    pub fn assume_key(&mut self, key: KeyMaterial) {
        self.key = Some(key);
        self.state.key_acquired = true;
    }

    /// Redeems the delegated key id from Auth. The key stays in memory.
    pub async fn acquire_key(&mut self) -> Result<(), StageError> {
        let id = self.state.script.session_key_id;
        self.record(Channel::AgentAuth, Direction::Request, Operation::RequestSessionKey, Outcome::Sent, None, None);
        let result = self.auth.request_session_key(id).await.map_err(StageError::from);
        self.record_result(Channel::AgentAuth, Operation::RequestSessionKey, 200, None, &result);
        let resp = result?;
        if resp.expected_owner_groups.first() != Some(&self.config.group) {
            return Err(StageError::Local(format!("key {id} was not delegated to {}", self.config.group)));
        }
        self.key = Some(resp.key);
        self.state.key_acquired = true;
        Ok(())
    }

    /// Fetches a challenge and answers it: two website requests.
    pub async fn login(&mut self) -> Result<(), StageError> {
        let key = self.key.clone().ok_or_else(|| StageError::Local("no session key".into()))?;
        self.record(Channel::AgentWebsite, Direction::Request, Operation::GetChallenge, Outcome::Sent, None, None);
        let result = self.website.challenge().await.map_err(StageError::from);
        self.record_result(Channel::AgentWebsite, Operation::GetChallenge, 200, None, &result);
        let challenge = result?;

        let tag = compute_hmac(&self.config.crypto, &key, challenge.nonce.as_bytes())
            .map_err(|e| StageError::Local(e.to_string()))?;
        self.record(Channel::AgentWebsite, Direction::Request, Operation::SubmitLogin, Outcome::Sent, None, None);
        let result = self
            .website
            .login(challenge.challenge_id, self.state.script.session_key_id, tag)
            .await
            .map_err(StageError::from);
        self.record_result(Channel::AgentWebsite, Operation::SubmitLogin, 200, None, &result);
        self.token = Some(result?.session_token);
        self.state.logged_in = true;
        Ok(())
    }

    async fn fetch_field(&mut self, field: ProfileField) -> Result<(), StageError> {
        let token = self.token.clone().ok_or_else(|| StageError::Local("not logged in".into()))?;
        let detail = Some(field.as_str().to_owned());
        self.record(Channel::AgentWebsite, Direction::Request, Operation::FetchField, Outcome::Sent, None, detail.clone());
        let result = self.website.field(&token, field).await.map_err(StageError::from);
        self.record_result(Channel::AgentWebsite, Operation::FetchField, 200, detail, &result);
        self.state.fields_attempted += 1;
        match result {
            Ok(v) => {
                self.transcript.fields.push(FieldOutcome {
                    field,
                    status: 200,
                    value: Some(v.value),
                });
                Ok(())
            }
            Err(e) if e.status() == Some(403) => {
                self.transcript.fields.push(FieldOutcome {
                    field,
                    status: 403,
                    value: None,
                });
                self.state.denied_fields.push(field);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    async fn purchase(&mut self, item: String) -> Result<(), StageError> {
        let token = self.token.clone().ok_or_else(|| StageError::Local("not logged in".into()))?;
        self.state.purchase_attempted = true;
        self.record(Channel::AgentWebsite, Direction::Request, Operation::Purchase, Outcome::Sent, None, Some(item.clone()));
        let result = self.website.purchase(&token, &item).await.map_err(StageError::from);
        self.record_result(Channel::AgentWebsite, Operation::Purchase, 201, Some(item), &result);
        match result {
            Ok(record) => {
                self.transcript.purchase = Some(record);
                Ok(())
            }
            Err(e) if e.status() == Some(403) => {
                self.transcript.terminal_status = TerminalStatus::SuccessWithDenials;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn halt(&mut self, stage: Stage, e: StageError) {
        self.state.halted = true;
        self.transcript.terminal_status = match (&e, stage) {
            (StageError::AuthDenied { .. }, Stage::AcquireKey) => TerminalStatus::Denied,
            _ => TerminalStatus::Failed,
        };
        self.transcript.failure = Some(StageFailure {
            stage,
            status: e.status(),
            code: e.code(),
            message: e.to_string(),
        });
    }

    /// Performs the decider's next action. Returns the action taken, or
    /// `None` once the task is finished.
    pub async fn step(&mut self) -> Option<Action> {
        let action = self.decider.decide_next_action(&self.state);
        let (stage, result) = match &action {
            Action::Finish => {
                self.state.halted = true;
                if self.transcript.failure.is_none() && !self.state.denied_fields.is_empty() {
                    self.transcript.terminal_status = TerminalStatus::SuccessWithDenials;
                }
                return None;
            }
            Action::AcquireKey => (Stage::AcquireKey, self.acquire_key().await),
            Action::Login => (Stage::Login, self.login().await),
            Action::FetchField(f) => (Stage::FetchField, self.fetch_field(*f).await),
            Action::Purchase(item) => (Stage::Purchase, self.purchase(item.clone()).await),
        };
        if let Err(e) = result {
            self.halt(stage, e);
        }
        Some(action)
    }

    pub async fn run(mut self) -> ProtocolTranscript {
        while self.step().await.is_some() {}
        self.transcript
    }
}

/// Runs `script` to completion with the scripted decider.
pub async fn run_task(
    config: AgentConfig,
    script: TaskScript,
    clock: SharedClock,
    rng: SharedRandom,
) -> ProtocolTranscript {
    Agent::new(config, script, clock, rng).run().await
}
