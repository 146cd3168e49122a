//! Choice of the agent's next step. The scripted decider stands in for a
//! language model; any other [`Decider`] drives the same protocol.

use delegate_website::ProfileField;

use crate::config::TaskScript;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    AcquireKey,
    Login,
    FetchField(ProfileField),
    Purchase(String),
    Finish,
}

/// Progress of one task, as visible to a decider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub script: TaskScript,
    pub key_acquired: bool,
    pub logged_in: bool,
    /// Fields of the script already attempted, granted or denied.
    pub fields_attempted: usize,
    pub denied_fields: Vec<ProfileField>,
    pub purchase_attempted: bool,
    pub halted: bool,
}

impl AgentState {
    pub fn new(script: TaskScript) -> Self {
        Self {
            script,
            key_acquired: false,
            logged_in: false,
            fields_attempted: 0,
            denied_fields: Vec::new(),
            purchase_attempted: false,
            halted: false,
        }
    }

    pub fn pending_fields(&self) -> &[ProfileField] {
        &self.script.fields_to_fetch[self.fields_attempted.min(self.script.fields_to_fetch.len())..]
    }
}

pub trait Decider: Send {
    fn decide_next_action(&mut self, state: &AgentState) -> Action;
}

/// Follows the script in order and never retries a denied step.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedDecider;

impl Decider for ScriptedDecider {
    fn decide_next_action(&mut self, state: &AgentState) -> Action {
        if state.halted {
            Action::Finish
        } else if !state.key_acquired {
            Action::AcquireKey
        } else if !state.logged_in {
            Action::Login
        } else if let Some(field) = state.pending_fields().first() {
            Action::FetchField(*field)
        } else {
            match &state.script.purchase_item {
                Some(item) if !state.purchase_attempted => Action::Purchase(item.clone()),
                _ => Action::Finish,
            }
        }
    }
}
