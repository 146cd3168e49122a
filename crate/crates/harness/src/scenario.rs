//! The four evaluation scenarios and their trial procedures.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use chrono::Duration as ChronoDuration;
use delegate_agent::{
    Channel, Operation, ProtocolTranscript, TaskScript, TerminalStatus, WebsiteClient,
};
use delegate_auth::AuthClientError;
use delegate_core::serde_util::duration_secs;
use delegate_core::{generate_session_key, CryptoSpec, TrustLevel};
use delegate_website::{ProfileField, ScopePolicy};
use serde::{Deserialize, Serialize};

use crate::fixture::{agent_name, FixtureSpec};
use crate::stack::LocalStack;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Authentication,
    FineGrainedAccess,
    UnauthorizedAccess,
    SessionManagement,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::Authentication,
        ScenarioName::FineGrainedAccess,
        ScenarioName::UnauthorizedAccess,
        ScenarioName::SessionManagement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Authentication => "authentication",
            ScenarioName::FineGrainedAccess => "fine_grained_access",
            ScenarioName::UnauthorizedAccess => "unauthorized_access",
            ScenarioName::SessionManagement => "session_management",
        }
    }

    /// Evaluation aspect the scenario covers, as a table heading.
    pub fn aspect(self) -> &'static str {
        match self {
            ScenarioName::Authentication => "Authentication",
            ScenarioName::FineGrainedAccess => "Fine-Grained Access Control",
            ScenarioName::UnauthorizedAccess => "Unauthorized Access Handling",
            ScenarioName::SessionManagement => "Session Management",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub trust: TrustLevel,
    pub fields: Vec<ProfileField>,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    #[serde(rename = "absolute_validity_secs", with = "duration_secs")]
    pub absolute_validity: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub trials: u32,
    pub params: ScenarioParams,
    /// Run trials concurrently. Ignored for session management, whose
    /// trials move the shared clock.
    pub parallel: bool,
}

pub const DEFAULT_TRIALS: u32 = 5;

impl Scenario {
    pub fn new(name: ScenarioName, trials: u32) -> Result<Self, HarnessError> {
        if trials == 0 {
            return Err(HarnessError::Usage("trials must be at least 1".into()));
        }
        let secs = Duration::from_secs;
        let params = match name {
            ScenarioName::Authentication => ScenarioParams {
                trust: TrustLevel::High,
                fields: Vec::new(),
                relative_validity: secs(3600),
                absolute_validity: secs(86_400),
            },
            ScenarioName::FineGrainedAccess => ScenarioParams {
                trust: TrustLevel::Low,
                fields: vec![ProfileField::Email, ProfileField::Phone],
                relative_validity: secs(600),
                absolute_validity: secs(7200),
            },
            ScenarioName::UnauthorizedAccess => ScenarioParams {
                trust: TrustLevel::High,
                fields: Vec::new(),
                relative_validity: secs(3600),
                absolute_validity: secs(86_400),
            },
            ScenarioName::SessionManagement => ScenarioParams {
                trust: TrustLevel::High,
                fields: vec![ProfileField::Email],
                relative_validity: secs(2),
                absolute_validity: secs(3600),
            },
        };
        Ok(Self {
            name,
            trials,
            params,
            parallel: false,
        })
    }

    pub fn fixture_spec(&self) -> FixtureSpec {
        FixtureSpec::default().with_validity(
            self.params.trust,
            self.params.relative_validity,
            self.params.absolute_validity,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: ScenarioName,
    pub trial: u32,
    pub case: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
    /// Key of the agent transcript in the report, when one was recorded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transcript: Option<String>,
}

impl TrialResult {
    fn new(scenario: ScenarioName, trial: u32, case: &str, expected: String, observed: String) -> Self {
        Self {
            scenario,
            trial,
            case: case.to_owned(),
            pass: expected == observed,
            expected,
            observed,
            transcript: None,
        }
    }
}

/// A scenario-level check that is not repeated per trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, expected: String, observed: String) -> Self {
        Self {
            name: name.to_owned(),
            pass: expected == observed,
            expected,
            observed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioRun {
    pub results: Vec<TrialResult>,
    pub checks: Vec<CheckResult>,
    pub transcripts: BTreeMap<String, ProtocolTranscript>,
}

impl ScenarioRun {
    fn record(&mut self, mut result: TrialResult, transcript: Option<ProtocolTranscript>) {
        if let Some(t) = transcript {
            let key = format!("{}/{}/{}", result.scenario, result.trial, result.case);
            self.transcripts.insert(key.clone(), t);
            result.transcript = Some(key);
        }
        self.results.push(result);
    }

    fn merge(&mut self, other: ScenarioRun) {
        self.results.extend(other.results);
        self.checks.extend(other.checks);
        self.transcripts.extend(other.transcripts);
    }
}

/// Starts a fresh stack for `scenario` and runs all of its trials.
pub async fn run_scenario(scenario: &Scenario, seed: u64) -> Result<ScenarioRun, HarnessError> {
    let stack = Arc::new(LocalStack::start(&scenario.fixture_spec(), seed).await?);
    run_trials(&stack, scenario).await
}

pub async fn run_trials(stack: &Arc<LocalStack>, scenario: &Scenario) -> Result<ScenarioRun, HarnessError> {
    let parallel = scenario.parallel && scenario.name != ScenarioName::SessionManagement;
    let mut run = ScenarioRun::default();
    if parallel {
        let mut set = tokio::task::JoinSet::new();
        for trial in 1..=scenario.trials {
            let stack = stack.clone();
            let scenario = scenario.clone();
            set.spawn(async move { run_trial(&stack, &scenario, trial).await });
        }
        let mut runs = Vec::new();
        while let Some(joined) = set.join_next().await {
            runs.push(joined.map_err(|e| HarnessError::Infrastructure(e.to_string()))??);
        }
        runs.sort_by_key(|r: &ScenarioRun| r.results.first().map(|t| t.trial));
        for r in runs {
            run.merge(r);
        }
    } else {
        for trial in 1..=scenario.trials {
            run.merge(run_trial(stack, scenario, trial).await?);
        }
    }
    match scenario.name {
        ScenarioName::FineGrainedAccess => run.checks.push(scope_sweep(stack).await?),
        ScenarioName::UnauthorizedAccess => {
            run.checks
                .push(concurrent_redemption(stack, scenario.params.trust, 16).await?)
        }
        _ => {}
    }
    Ok(run)
}

async fn run_trial(stack: &LocalStack, scenario: &Scenario, trial: u32) -> Result<ScenarioRun, HarnessError> {
    match scenario.name {
        ScenarioName::Authentication => authentication_trial(stack, scenario, trial).await,
        ScenarioName::FineGrainedAccess => fine_grained_trial(stack, scenario, trial).await,
        ScenarioName::UnauthorizedAccess => unauthorized_trial(stack, scenario, trial).await,
        ScenarioName::SessionManagement => session_trial(stack, scenario, trial).await,
    }
}

fn script(id: u64, fields: &[ProfileField]) -> TaskScript {
    TaskScript {
        session_key_id: id,
        fields_to_fetch: fields.to_vec(),
        purchase_item: None,
    }
}

/// Status of the login submission as seen by the agent.
fn login_outcome(t: &ProtocolTranscript) -> String {
    t.events
        .iter()
        .rev()
        .find(|e| e.operation == Operation::SubmitLogin && e.channel == Channel::AgentWebsite && e.status.is_some())
        .map(|e| format!("login {}", e.status.unwrap_or_default()))
        .unwrap_or_else(|| match &t.failure {
            Some(f) => format!("no login ({:?} failed: {})", f.stage, f.message),
            None => "no login".into(),
        })
}

async fn authentication_trial(stack: &LocalStack, sc: &Scenario, trial: u32) -> Result<ScenarioRun, HarnessError> {
    let mut run = ScenarioRun::default();
    let trust = sc.params.trust;

    let id = stack.delegate(trust).await?;
    let t = stack.agent(trust, script(id, &sc.params.fields)).run().await;
    let r = TrialResult::new(sc.name, trial, "valid_key", "login 200".into(), login_outcome(&t));
    run.record(r, Some(t));

    // The rightful agent collects the key so the website can redeem it;
    // a second instance then logs in with a key of its own making.
    let id = stack.delegate(trust).await?;
    let mut holder = stack.agent(trust, script(id, &[]));
    holder.acquire_key().await.map_err(|e| HarnessError::Infrastructure(format!("key {id}: {e}")))?;
    let wrong = generate_session_key(&CryptoSpec::default(), stack.fresh_rng().as_ref())
        .map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
    let mut forger = stack.agent(trust, script(id, &sc.params.fields));
    forger.assume_key(wrong);
    let t = forger.run().await;
    let r = TrialResult::new(sc.name, trial, "invalid_key", "login 401".into(), login_outcome(&t));
    run.record(r, Some(t));
    Ok(run)
}

fn field_summary(fields: impl IntoIterator<Item = (ProfileField, u16)>) -> String {
    fields
        .into_iter()
        .map(|(f, s)| format!("{f} {s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

async fn fine_grained_trial(stack: &LocalStack, sc: &Scenario, trial: u32) -> Result<ScenarioRun, HarnessError> {
    let mut run = ScenarioRun::default();
    let trust = sc.params.trust;
    let scope = ScopePolicy::default_for(trust);
    let expected = field_summary(
        sc.params
            .fields
            .iter()
            .map(|f| (*f, if scope.allows(*f) { 200 } else { 403 })),
    );
    let id = stack.delegate(trust).await?;
    let t = stack.agent(trust, script(id, &sc.params.fields)).run().await;
    let observed = match &t.failure {
        Some(f) => format!("{:?} failed: {}", f.stage, f.message),
        None => field_summary(t.fields.iter().map(|f| (f.field, f.status))),
    };
    run.record(TrialResult::new(sc.name, trial, "scoped_fetch", expected, observed), Some(t));
    Ok(run)
}

fn redemption_outcome<T>(r: &Result<T, AuthClientError>) -> String {
    match r {
        Ok(_) => "issued".into(),
        Err(AuthClientError::Rejected { status, code, .. }) => {
            let code = serde_json::to_value(code)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            format!("refused {status} {code}")
        }
        Err(e) => format!("error: {e}"),
    }
}

/// Some trust level other than `trust`.
fn other_trust(trust: TrustLevel) -> TrustLevel {
    match trust {
        TrustLevel::Low => TrustLevel::High,
        _ => TrustLevel::Low,
    }
}

async fn unauthorized_trial(stack: &LocalStack, sc: &Scenario, trial: u32) -> Result<ScenarioRun, HarnessError> {
    let mut run = ScenarioRun::default();
    let trust = sc.params.trust;
    let id = stack.delegate(trust).await?;

    let intruder = stack.agent(other_trust(trust), script(id, &[])).run().await;
    let observed = match &intruder.failure {
        Some(f) => format!(
            "refused {} {}",
            f.status.map(|s| s.to_string()).unwrap_or_default(),
            f.code.clone().unwrap_or_default()
        ),
        None => "issued".into(),
    };
    run.record(
        TrialResult::new(sc.name, trial, "out_of_group", "refused 403 denied".into(), observed),
        Some(intruder),
    );

    let owner = stack.client_for(agent_name(trust));
    let first = owner.request_session_key(id).await;
    let second = owner.request_session_key(id).await;
    let observed = format!("{}; then {}", redemption_outcome(&first), redemption_outcome(&second));
    run.record(
        TrialResult::new(
            sc.name,
            trial,
            "repeated_request",
            "issued; then refused 403 duplicate_issuance".into(),
            observed,
        ),
        None,
    );
    Ok(run)
}

async fn session_trial(stack: &LocalStack, sc: &Scenario, trial: u32) -> Result<ScenarioRun, HarnessError> {
    let mut run = ScenarioRun::default();
    let trust = sc.params.trust;
    let id = stack.delegate(trust).await?;
    let mut agent = stack.agent(trust, script(id, &sc.params.fields));
    while agent.step().await.is_some() {}
    let token = agent.session_token().map(str::to_owned);
    let transcript = agent.transcript().clone();
    let expected = "before 200, at expiry 401, after 401, removed".to_string();

    let (Some(token), Some(session)) = (
        token,
        stack.website.sessions().into_iter().find(|s| s.session_key_id == id),
    ) else {
        let observed = format!("no session ({:?})", transcript.terminal_status);
        run.record(TrialResult::new(sc.name, trial, "expiry", expected, observed), Some(transcript));
        return Ok(run);
    };
    let site = WebsiteClient::new(&stack.website_url);
    let probe = |r: Result<delegate_website::FieldValue, delegate_agent::WebsiteFailure>| match r {
        Ok(_) => "200".to_string(),
        Err(f) => f.status.map_or_else(|| "unreachable".into(), |s| s.to_string()),
    };
    let field = ProfileField::Email;

    stack.clock.set(session.expires_at - ChronoDuration::milliseconds(1));
    let before = probe(site.field(&token, field).await);
    stack.clock.set(session.expires_at);
    let at = probe(site.field(&token, field).await);
    let removed = !stack.website.sessions().iter().any(|s| s.session_id == session.session_id);
    stack.clock.advance(ChronoDuration::seconds(1));
    let after = probe(site.field(&token, field).await);
    let observed = format!(
        "before {before}, at expiry {at}, after {after}, {}",
        if removed { "removed" } else { "still listed" }
    );
    let mut r = TrialResult::new(sc.name, trial, "expiry", expected, observed);
    if transcript.terminal_status != TerminalStatus::Success {
        r.pass = false;
    }
    run.record(r, Some(transcript));
    Ok(run)
}

/// Every subset of the four fields, for every trust group, over HTTP:
/// a field is served iff it is in the configured scope.
pub async fn scope_sweep(stack: &LocalStack) -> Result<CheckResult, HarnessError> {
    let admin = stack.website_admin();
    let site = WebsiteClient::new(&stack.website_url);
    let mut decisions = 0;
    let mut mismatches = Vec::new();
    for trust in TrustLevel::ALL {
        let id = stack.delegate(trust).await?;
        let mut agent = stack.agent(trust, script(id, &[]));
        while agent.step().await.is_some() {}
        let token = agent
            .session_token()
            .ok_or_else(|| HarnessError::Infrastructure(format!("{trust} agent could not log in")))?
            .to_owned();
        for mask in 0u8..16 {
            let fields: Vec<ProfileField> = ProfileField::ALL
                .into_iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| f)
                .collect();
            let scope = ScopePolicy::new(trust.group(), fields.clone(), false)
                .map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
            admin.put_scope(&scope).await?;
            for field in ProfileField::ALL {
                let status = match site.field(&token, field).await {
                    Ok(_) => 200,
                    Err(f) => f.status.unwrap_or(0),
                };
                let want = if fields.contains(&field) { 200 } else { 403 };
                decisions += 1;
                if status != want {
                    mismatches.push(format!("{trust}/{mask:04b}/{field}: {status}"));
                }
            }
        }
        admin.put_scope(&ScopePolicy::default_for(trust)).await?;
    }
    let observed = if mismatches.is_empty() {
        format!("{decisions} decisions, 0 mismatches")
    } else {
        format!("{decisions} decisions, {} mismatches: {}", mismatches.len(), mismatches.join("; "))
    };
    Ok(CheckResult::new(
        "scope_sweep_16_subsets",
        "192 decisions, 0 mismatches".into(),
        observed,
    ))
}

/// `contenders` simultaneous redemptions of one fresh key id by its
/// rightful agent: exactly one may succeed.
pub async fn concurrent_redemption(
    stack: &LocalStack,
    trust: TrustLevel,
    contenders: usize,
) -> Result<CheckResult, HarnessError> {
    let id = stack.delegate(trust).await?;
    let barrier = Arc::new(tokio::sync::Barrier::new(contenders));
    let mut set = tokio::task::JoinSet::new();
    for _ in 0..contenders {
        let client = stack.client_for(agent_name(trust));
        let barrier = barrier.clone();
        set.spawn(async move {
            barrier.wait().await;
            redemption_outcome(&client.request_session_key(id).await)
        });
    }
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    while let Some(joined) = set.join_next().await {
        let outcome = joined.map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
        *tally.entry(outcome).or_default() += 1;
    }
    let render = |t: &BTreeMap<String, usize>| {
        t.iter().map(|(k, v)| format!("{v}x {k}")).collect::<Vec<_>>().join(", ")
    };
    let expected = BTreeMap::from([
        ("issued".to_string(), 1),
        ("refused 403 duplicate_issuance".to_string(), contenders - 1),
    ]);
    Ok(CheckResult::new(
        &format!("concurrent_redemption_{contenders}"),
        render(&expected),
        render(&tally),
    ))
}
