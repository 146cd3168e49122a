//! Message counting per channel and the agent-website request law.

use std::collections::BTreeMap;

use delegate_agent::{Channel, Direction, ProtocolTranscript, TaskScript};
use delegate_auth::SessionKeyId;
use delegate_core::{EntityName, TrustLevel};
use delegate_website::ProfileField;
use serde::{Deserialize, Serialize};

use crate::stack::LocalStack;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelTally {
    pub requests: u64,
    pub responses: u64,
}

impl ChannelTally {
    pub fn messages(&self) -> u64 {
        self.requests + self.responses
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounters {
    pub agent_auth: ChannelTally,
    /// Known only when the website's redemption counters are supplied.
    pub website_auth: Option<ChannelTally>,
    pub agent_website: ChannelTally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCount {
    pub agent: EntityName,
    pub session_key_id: SessionKeyId,
    pub n: usize,
    /// Agent-website requests the law predicts, `2 + n`.
    pub expected_x: usize,
    pub observed_x: usize,
    pub agent_auth_messages: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub website_auth_messages: Option<u64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    pub counters: MessageCounters,
    pub runs: Vec<RunCount>,
    /// Indices into `runs` whose request count deviates from `2 + n`.
    pub flagged: Vec<usize>,
}

impl CountReport {
    pub fn all_pass(&self) -> bool {
        self.flagged.is_empty()
    }
}

fn check_well_formed(i: usize, t: &ProtocolTranscript) -> Result<(), HarnessError> {
    if t.script.purchase_item.is_some() {
        return Err(HarnessError::Usage(format!(
            "transcript {i} includes a purchase; only pure-fetch runs obey x = 2 + n"
        )));
    }
    let mut open: BTreeMap<Channel, i64> = BTreeMap::new();
    for (j, e) in t.events.iter().enumerate() {
        let pending = open.entry(e.channel).or_default();
        match e.direction {
            Direction::Request => *pending += 1,
            Direction::Response => {
                *pending -= 1;
                if *pending < 0 {
                    return Err(HarnessError::MalformedTranscript(format!(
                        "transcript {i} event {j}: response without a request"
                    )));
                }
            }
        }
    }
    if !t.timestamps_monotone() {
        return Err(HarnessError::MalformedTranscript(format!(
            "transcript {i}: timestamps go backwards"
        )));
    }
    Ok(())
}

/// Tallies messages per channel and flags every run whose agent-website
/// request count differs from `2 + n`. `website_redemptions` are the
/// website's Auth calls per key id, if known.
pub fn verify_message_counts(
    transcripts: &[ProtocolTranscript],
    website_redemptions: Option<&BTreeMap<SessionKeyId, u64>>,
) -> Result<CountReport, HarnessError> {
    let mut counters = MessageCounters {
        website_auth: website_redemptions.map(|_| ChannelTally::default()),
        ..MessageCounters::default()
    };
    let mut runs = Vec::new();
    let mut flagged = Vec::new();
    for (i, t) in transcripts.iter().enumerate() {
        check_well_formed(i, t)?;
        let tally = |c| ChannelTally {
            requests: t.requests_on(c) as u64,
            responses: t.responses_on(c) as u64,
        };
        let (aa, aw) = (tally(Channel::AgentAuth), tally(Channel::AgentWebsite));
        counters.agent_auth.requests += aa.requests;
        counters.agent_auth.responses += aa.responses;
        counters.agent_website.requests += aw.requests;
        counters.agent_website.responses += aw.responses;
        let id = t.script.session_key_id;
        let website_auth_messages = website_redemptions.map(|m| m.get(&id).copied().unwrap_or(0) * 2);
        if let (Some(total), Some(calls)) = (counters.website_auth.as_mut(), website_redemptions.and_then(|m| m.get(&id))) {
            total.requests += calls;
            total.responses += calls;
        }
        let n = t.script.fields_to_fetch.len();
        let observed_x = aw.requests as usize;
        let pass = observed_x == n + 2;
        if !pass {
            flagged.push(i);
        }
        runs.push(RunCount {
            agent: t.agent.clone(),
            session_key_id: id,
            n,
            expected_x: n + 2,
            observed_x,
            agent_auth_messages: aa.messages(),
            website_auth_messages,
            pass,
        });
    }
    Ok(CountReport {
        counters,
        runs,
        flagged,
    })
}

/// Pure-fetch runs of the `trust` agent for each `n` in `ns`, checked
/// against the request law with the website's own redemption counters.
pub async fn message_count_sweep(
    stack: &LocalStack,
    trust: TrustLevel,
    ns: impl IntoIterator<Item = usize>,
) -> Result<(CountReport, Vec<ProtocolTranscript>), HarnessError> {
    let mut transcripts = Vec::new();
    for n in ns {
        let id = stack.delegate(trust).await?;
        let fields: Vec<ProfileField> = ProfileField::ALL.into_iter().cycle().take(n).collect();
        let script = TaskScript {
            session_key_id: id,
            fields_to_fetch: fields,
            purchase_item: None,
        };
        transcripts.push(stack.agent(trust, script).run().await);
    }
    let redemptions = stack.website.stats().redemptions_by_key;
    let report = verify_message_counts(&transcripts, Some(&redemptions))?;
    Ok((report, transcripts))
}
