use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use delegate_agent::{Channel, Direction, ProtocolTranscript, TaskScript};
use delegate_auth::AuthClient;
use delegate_core::{ManualClock, SeededRandom, TrustLevel};
use delegate_harness::{
    emit_report, message_count_sweep, provision_fixture, render_table, run_scenario, run_trials,
    verify_message_counts, FixtureSpec, HarnessError, LocalStack, Report, Scenario, ScenarioName,
};
use delegate_website::ProfileField;

async fn pure_fetch(stack: &LocalStack, n: usize) -> ProtocolTranscript {
    let id = stack.delegate(TrustLevel::High).await.unwrap();
    let fields: Vec<_> = ProfileField::ALL.into_iter().take(n).collect();
    stack.agent(TrustLevel::High, TaskScript::new(id, fields, None).unwrap()).run().await
}

#[tokio::test]
async fn provisioning_twice_leaves_the_same_fixture() {
    let stack = LocalStack::start(&FixtureSpec::default(), 1).await.unwrap();
    let again = provision_fixture(
        &stack.admin_client(),
        Some(&stack.website_admin()),
        &FixtureSpec::default(),
        stack.keys(),
    )
    .await
    .unwrap();
    let stats = stack.auth.stats();
    assert_eq!(stats.entities, 5);
    assert_eq!(stats.policies, 3);
    assert_eq!(again.policies, stack.fixture.policies);
    assert_eq!(stack.website_admin().scopes().await.unwrap().len(), 3);
}

#[tokio::test]
async fn provisioning_against_a_dead_auth_names_the_endpoint() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let clock = Arc::new(ManualClock::new(chrono::Utc::now()));
    let rng = Arc::new(SeededRandom::new(3));
    let keys = delegate_harness::FixtureKeys::generate(rng.as_ref()).unwrap();
    let admin = AuthClient::new(&url, clock, rng).with_admin_token("t");
    let err = provision_fixture(&admin, None, &FixtureSpec::default(), &keys).await.unwrap_err();
    match err {
        HarnessError::Provision { endpoint, .. } => assert_eq!(endpoint, format!("{url}/entities")),
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test]
async fn keys_written_by_provisioning_are_reloaded() {
    let dir = tempfile::tempdir().unwrap();
    let a = delegate_harness::FixtureKeys::load_or_create(dir.path(), &SeededRandom::new(1)).unwrap();
    let b = delegate_harness::FixtureKeys::load_or_create(dir.path(), &SeededRandom::new(2)).unwrap();
    assert_eq!(a.get("Business").as_bytes(), b.get("Business").as_bytes());
}

#[tokio::test]
async fn every_scenario_passes_all_trials() {
    for name in ScenarioName::ALL {
        let scenario = Scenario::new(name, 5).unwrap();
        let run = run_scenario(&scenario, 11).await.unwrap();
        for r in &run.results {
            assert!(r.pass, "{name} trial {} {}: {} vs {}", r.trial, r.case, r.expected, r.observed);
        }
        assert!(run.checks.iter().all(|c| c.pass), "{name}: {:?}", run.checks);
    }
}

#[tokio::test]
async fn parallel_trials_reach_the_same_verdicts() {
    let mut scenario = Scenario::new(ScenarioName::UnauthorizedAccess, 5).unwrap();
    scenario.parallel = true;
    let stack = Arc::new(LocalStack::start(&scenario.fixture_spec(), 4).await.unwrap());
    let run = run_trials(&stack, &scenario).await.unwrap();
    assert_eq!(run.results.len(), 10);
    assert!(run.results.iter().all(|r| r.pass));
}

#[tokio::test]
async fn reruns_with_the_same_seed_produce_identical_verdicts_and_transcripts() {
    let scenario = Scenario::new(ScenarioName::FineGrainedAccess, 3).unwrap();
    let a = run_scenario(&scenario, 99).await.unwrap();
    let b = run_scenario(&scenario, 99).await.unwrap();
    assert_eq!(a.results, b.results);
    assert_eq!(a.checks, b.checks);
    assert_eq!(a.transcripts, b.transcripts);
}

#[test]
fn zero_trials_is_a_usage_error() {
    assert!(matches!(
        Scenario::new(ScenarioName::Authentication, 0),
        Err(HarnessError::Usage(_))
    ));
}

#[tokio::test]
async fn report_lists_every_trial_exactly_once() {
    let mut report = Report::new(7);
    for (i, name) in ScenarioName::ALL.into_iter().enumerate() {
        let scenario = Scenario::new(name, 2).unwrap();
        report.add_scenario(&scenario, run_scenario(&scenario, 20 + i as u64).await.unwrap());
    }
    let mut seen = BTreeSet::new();
    for block in &report.scenarios {
        for r in &block.results {
            assert!(seen.insert((r.scenario, r.trial, r.case.clone())), "duplicate {r:?}");
            if let Some(key) = &r.transcript {
                assert!(report.transcripts.contains_key(key));
            }
        }
    }
    assert_eq!(seen.len(), 2 * (2 + 1 + 2 + 1));
    let table = render_table(&report);
    for name in ScenarioName::ALL {
        assert!(table.contains(name.aspect()));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_report(&report, &path).unwrap();
    let back: Report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn an_empty_report_is_valid() {
    let report = Report::new(0);
    assert!(report.all_pass());
    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert!(render_table(&report).starts_with("Aspect"));
}

#[test]
fn an_unwritable_report_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.json");
    assert!(matches!(emit_report(&Report::new(0), &path), Err(HarnessError::Io { .. })));
}

#[tokio::test]
async fn pure_fetch_runs_obey_the_request_law() {
    let stack = LocalStack::start(&FixtureSpec::default(), 5).await.unwrap();
    let (report, transcripts) = message_count_sweep(&stack, TrustLevel::High, 0..=4).await.unwrap();
    assert!(report.all_pass(), "{report:?}");
    for (n, run) in report.runs.iter().enumerate() {
        assert_eq!((run.n, run.observed_x), (n, n + 2));
        assert_eq!(run.agent_auth_messages, 2);
        assert_eq!(run.website_auth_messages, Some(2));
    }
    assert_eq!(report.counters.agent_website.requests, (2..=6).sum::<u64>());
    assert_eq!(transcripts.len(), 5);
}

#[tokio::test]
async fn a_duplicated_login_is_flagged() {
    let stack = LocalStack::start(&FixtureSpec::default(), 6).await.unwrap();
    let mut t = pure_fetch(&stack, 2).await;
    let login: Vec<_> = t
        .events
        .iter()
        .filter(|e| e.channel == Channel::AgentWebsite)
        .take(4)
        .cloned()
        .collect();
    let at = t.events.iter().position(|e| e.channel == Channel::AgentWebsite).unwrap() + 4;
    let stamp = t.events[at - 1].timestamp;
    t.events.splice(at..at, login.into_iter().map(|mut e| {
        e.timestamp = stamp;
        e
    }));
    let report = verify_message_counts(&[t], None).unwrap();
    assert_eq!(report.flagged, vec![0]);
    assert_eq!(report.runs[0].observed_x, 6);
}

#[tokio::test]
async fn a_purchase_transcript_is_rejected() {
    let stack = LocalStack::start(&FixtureSpec::default(), 8).await.unwrap();
    let id = stack.delegate(TrustLevel::High).await.unwrap();
    let script = TaskScript::new(id, vec![ProfileField::Email], Some("book".into())).unwrap();
    let t = stack.agent(TrustLevel::High, script).run().await;
    assert!(matches!(verify_message_counts(&[t], None), Err(HarnessError::Usage(_))));
}

#[tokio::test]
async fn a_response_without_a_request_is_malformed() {
    let stack = LocalStack::start(&FixtureSpec::default(), 9).await.unwrap();
    let mut t = pure_fetch(&stack, 1).await;
    let first = t.events.iter().position(|e| e.direction == Direction::Request).unwrap();
    t.events.remove(first);
    assert!(matches!(
        verify_message_counts(&[t], None),
        Err(HarnessError::MalformedTranscript(_))
    ));
}

#[tokio::test]
async fn backwards_timestamps_are_malformed() {
    let stack = LocalStack::start(&FixtureSpec::default(), 10).await.unwrap();
    let mut t = pure_fetch(&stack, 1).await;
    let last = t.events.len() - 1;
    t.events[last].timestamp = t.events[0].timestamp - chrono::Duration::seconds(1);
    assert!(matches!(
        verify_message_counts(&[t], None),
        Err(HarnessError::MalformedTranscript(_))
    ));
}

#[tokio::test]
async fn session_expiry_scenario_uses_the_configured_validity() {
    let scenario = Scenario::new(ScenarioName::SessionManagement, 1).unwrap();
    assert_eq!(scenario.params.relative_validity, Duration::from_secs(2));
    let stack = LocalStack::start(&scenario.fixture_spec(), 12).await.unwrap();
    let high = stack.fixture.policies.iter().find(|p| p.trust == TrustLevel::High).unwrap();
    assert_eq!(high.validity.relative, Duration::from_secs(2));
}
