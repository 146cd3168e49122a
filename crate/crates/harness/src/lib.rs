//! Evaluation harness for the delegated-access stack.
//!
//! Provisions the example fixture (a user, a website and three agents of
//! different trust), runs the authentication, fine-grained access,
//! unauthorized access and session management scenarios against Auth and
//! the website, checks agent-website message counts against `x = 2 + n`,
//! evaluates the total-latency model and writes a report.

pub mod counts;
mod error;
pub mod fixture;
pub mod latency;
pub mod report;
pub mod scenario;
pub mod stack;

pub use counts::{message_count_sweep, verify_message_counts, ChannelTally, CountReport, MessageCounters, RunCount};
pub use error::HarnessError;
pub use fixture::{provision_fixture, FixtureDescription, FixtureKeys, FixtureSpec, WebsiteAdmin};
pub use latency::{compute_total_latency, measure_e2e, E2eCase, E2eStats, LatencyModelParams};
pub use report::{emit_report, render_table, Report, ScenarioBlock};
pub use scenario::{
    concurrent_redemption, run_scenario, run_trials, scope_sweep, CheckResult, Scenario, ScenarioName,
    ScenarioParams, ScenarioRun, TrialResult, DEFAULT_TRIALS,
};
pub use stack::LocalStack;
