//! Results report: JSON document plus a rendered text table.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use delegate_agent::ProtocolTranscript;
use serde::{Deserialize, Serialize};

use crate::counts::CountReport;
use crate::latency::E2eStats;
use crate::scenario::{CheckResult, Scenario, ScenarioName, ScenarioRun, TrialResult};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioBlock {
    pub scenario: ScenarioName,
    pub aspect: String,
    pub trials: u32,
    pub passed: usize,
    pub total: usize,
    pub results: Vec<TrialResult>,
    pub checks: Vec<CheckResult>,
}

impl ScenarioBlock {
    pub fn all_pass(&self) -> bool {
        self.passed == self.total && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub generated_at: DateTime<Utc>,
    pub seed: u64,
    pub scenarios: Vec<ScenarioBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message_counts: Option<CountReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub latency: Vec<E2eStats>,
    pub transcripts: BTreeMap<String, ProtocolTranscript>,
}

impl Report {
    pub fn new(seed: u64) -> Self {
        Self {
            generated_at: Utc::now(),
            seed,
            scenarios: Vec::new(),
            message_counts: None,
            latency: Vec::new(),
            transcripts: BTreeMap::new(),
        }
    }

    pub fn add_scenario(&mut self, scenario: &Scenario, run: ScenarioRun) {
        let passed = run.results.iter().filter(|r| r.pass).count();
        self.scenarios.push(ScenarioBlock {
            scenario: scenario.name,
            aspect: scenario.name.aspect().into(),
            trials: scenario.trials,
            passed,
            total: run.results.len(),
            results: run.results,
            checks: run.checks,
        });
        self.transcripts.extend(run.transcripts);
    }

    pub fn all_pass(&self) -> bool {
        self.scenarios.iter().all(ScenarioBlock::all_pass)
            && self.message_counts.as_ref().is_none_or(CountReport::all_pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Writes the JSON report to `path`.
pub fn emit_report(report: &Report, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, report.to_json() + "\n").map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per distinct (aspect, case) with its pass rate across trials.
pub fn render_table(report: &Report) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "Aspect".into(),
        "Scenario".into(),
        "Expected".into(),
        "Observed".into(),
        "Pass".into(),
    ]];
    for block in &report.scenarios {
        let mut cases: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
        for r in &block.results {
            cases.entry(r.case.as_str()).or_default().push(r);
        }
        for (case, results) in cases {
            let passed = results.iter().filter(|r| r.pass).count();
            let observed = match results.iter().find(|r| !r.pass) {
                Some(r) => r.observed.clone(),
                None => results[0].observed.clone(),
            };
            rows.push([
                block.aspect.clone(),
                format!("{}/{case}", block.scenario),
                results[0].expected.clone(),
                observed,
                format!("{passed}/{} ({:.0}%)", results.len(), 100.0 * passed as f64 / results.len() as f64),
            ]);
        }
        for c in &block.checks {
            rows.push([
                block.aspect.clone(),
                format!("{}/{}", block.scenario, c.name),
                c.expected.clone(),
                c.observed.clone(),
                if c.pass { "pass" } else { "FAIL" }.into(),
            ]);
        }
    }
    let widths: Vec<usize> = (0..5)
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
            out.push('\n');
        }
    }
    if let Some(counts) = &report.message_counts {
        out.push_str(&format!(
            "\nagent-website requests vs 2 + n: {}/{} runs match\n",
            counts.runs.len() - counts.flagged.len(),
            counts.runs.len()
        ));
        for r in &counts.runs {
            out.push_str(&format!(
                "  n={} x={} agent-auth msgs={} website-auth msgs={}\n",
                r.n,
                r.observed_x,
                r.agent_auth_messages,
                r.website_auth_messages.map_or("?".into(), |m| m.to_string())
            ));
        }
    }
    if !report.latency.is_empty() {
        out.push_str("\nend-to-end latency (ms, local, no network)\n");
        for s in &report.latency {
            out.push_str(&format!(
                "  {:<13} mean {:>8.2}  std {:>7.2}  n={}{}\n",
                s.case.label,
                s.mean_ms,
                s.std_ms,
                s.samples_ms.len(),
                if s.failures.is_empty() { String::new() } else { format!("  ({} failed)", s.failures.len()) }
            ));
        }
    }
    out
}
