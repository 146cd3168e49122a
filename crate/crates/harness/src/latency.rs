//! Total-latency model for a distributed deployment and end-to-end timing
//! of agent runs.

use std::time::{Duration, Instant};

use delegate_agent::{TaskScript, TerminalStatus};
use delegate_core::TrustLevel;
use delegate_website::ProfileField;
use serde::{Deserialize, Serialize};

use crate::stack::LocalStack;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModelParams {
    /// Measured end-to-end latency of a local run.
    pub l_e2e: Duration,
    /// One-way agent to Auth latency.
    pub l_a2a: Duration,
    /// One-way website to Auth latency.
    pub l_w2a: Duration,
    /// One-way agent to website latency.
    pub l_a2w: Duration,
    /// Number of sensitive fields retrieved.
    pub n: u32,
}

impl LatencyModelParams {
    /// Builds parameters from seconds, rejecting negative or non-finite values.
    pub fn from_secs(l_e2e: f64, l_a2a: f64, l_w2a: f64, l_a2w: f64, n: i64) -> Result<Self, HarnessError> {
        let d = |name: &str, v: f64| {
            Duration::try_from_secs_f64(v)
                .map_err(|_| HarnessError::Usage(format!("{name} must be a non-negative number of seconds, got {v}")))
        };
        Ok(Self {
            l_e2e: d("L_e2e", l_e2e)?,
            l_a2a: d("L_a2A", l_a2a)?,
            l_w2a: d("L_w2A", l_w2a)?,
            l_a2w: d("L_a2w", l_a2w)?,
            n: u32::try_from(n).map_err(|_| HarnessError::Usage(format!("n must be a non-negative count, got {n}")))?,
        })
    }

    /// Agent-website interactions: the login page, the HMAC submission and
    /// one request per retrieved field.
    pub fn x(&self) -> Option<u32> {
        self.n.checked_add(2)
    }
}

/// `L_e2e + 4·L_a2A + 4·L_w2A + (2 + n)·L_a2w`, exactly.
pub fn compute_total_latency(p: &LatencyModelParams) -> Result<Duration, HarnessError> {
    let overflow = || HarnessError::Usage("total latency overflows".into());
    let x = p.x().ok_or_else(overflow)?;
    p.l_a2a
        .checked_mul(4)
        .and_then(|a| a.checked_add(p.l_w2a.checked_mul(4)?))
        .and_then(|s| s.checked_add(p.l_a2w.checked_mul(x)?))
        .and_then(|s| s.checked_add(p.l_e2e))
        .ok_or_else(overflow)
}

/// One row of the end-to-end measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct E2eCase {
    pub label: String,
    /// Trust level of the delegation.
    pub trust: TrustLevel,
    /// Trust level of the agent that runs; differs from `trust` for the
    /// unauthorized case, which is timed until Auth's refusal.
    pub agent_trust: TrustLevel,
    pub fields: Vec<ProfileField>,
}

impl E2eCase {
    pub fn authorized(trust: TrustLevel, fields: Vec<ProfileField>) -> Self {
        Self {
            label: trust.to_string(),
            trust,
            agent_trust: trust,
            fields,
        }
    }

    pub fn unauthorized() -> Self {
        Self {
            label: "unauthorized".into(),
            trust: TrustLevel::High,
            agent_trust: TrustLevel::Low,
            fields: vec![ProfileField::Email],
        }
    }

    pub fn is_unauthorized(&self) -> bool {
        self.trust != self.agent_trust
    }

    /// High, medium and low trust fetching email, plus the refused case.
    pub fn standard() -> Vec<Self> {
        let mut cases: Vec<_> = TrustLevel::ALL
            .into_iter()
            .map(|t| Self::authorized(t, vec![ProfileField::Email]))
            .collect();
        cases.push(Self::unauthorized());
        cases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2eStats {
    pub case: E2eCase,
    pub samples_ms: Vec<f64>,
    pub mean_ms: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_ms: f64,
    pub failures: Vec<String>,
}

pub const MIN_REPETITIONS: usize = 5;

pub fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Wall-clock time from the agent's start until it holds the permitted
/// data (or, for the unauthorized case, until Auth refuses it).
pub async fn measure_e2e(stack: &LocalStack, case: &E2eCase, repetitions: usize) -> Result<E2eStats, HarnessError> {
    if repetitions < MIN_REPETITIONS {
        return Err(HarnessError::Usage(format!(
            "at least {MIN_REPETITIONS} repetitions are needed, got {repetitions}"
        )));
    }
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for rep in 1..=repetitions {
        let id = stack.delegate(case.trust).await?;
        let agent = stack.agent(
            case.agent_trust,
            TaskScript {
                session_key_id: id,
                fields_to_fetch: case.fields.clone(),
                purchase_item: None,
            },
        );
        let started = Instant::now();
        let t = agent.run().await;
        let elapsed = started.elapsed();
        let expected = if case.is_unauthorized() {
            TerminalStatus::Denied
        } else {
            TerminalStatus::Success
        };
        if t.terminal_status == expected {
            samples.push(elapsed.as_secs_f64() * 1000.0);
        } else {
            failures.push(format!("repetition {rep}: {:?} {:?}", t.terminal_status, t.failure));
        }
    }
    if samples.is_empty() {
        return Err(HarnessError::NoSuccessfulRuns(case.label.clone()));
    }
    let (mean_ms, std_ms) = mean_and_std(&samples);
    Ok(E2eStats {
        case: case.clone(),
        samples_ms: samples,
        mean_ms,
        std_ms,
        failures,
    })
}
