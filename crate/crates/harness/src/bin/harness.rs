use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use delegate_auth::AuthClient;
use delegate_core::{OsRandom, SystemClock, TrustLevel};
use delegate_harness::{
    compute_total_latency, emit_report, measure_e2e, message_count_sweep, provision_fixture,
    render_table, run_trials, E2eCase, FixtureKeys, FixtureSpec, LatencyModelParams, LocalStack,
    Report, Scenario, ScenarioName, WebsiteAdmin, DEFAULT_TRIALS,
};

/// Provisioning, evaluation scenarios and latency model.
#[derive(Debug, Parser)]
#[command(name = "harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register the example entities and policies and install default scopes.
    Provision(ProvisionArgs),
    /// Run evaluation scenarios against an in-process Auth and website.
    Run(RunArgs),
    /// Evaluate the total-latency model (all durations in seconds).
    Latency(LatencyArgs),
}

#[derive(Debug, clap::Args)]
struct ProvisionArgs {
    #[arg(long, env = "HARNESS_AUTH_URL", default_value = "http://127.0.0.1:7400")]
    auth_url: String,
    #[arg(long, env = "HARNESS_ADMIN_TOKEN")]
    admin_token: String,
    /// Website to install scopes on; skipped when absent.
    #[arg(long, env = "HARNESS_WEBSITE_URL")]
    website_url: Option<String>,
    #[arg(long, env = "HARNESS_USER_PASSWORD", requires = "website_url")]
    user_password: Option<String>,
    /// Directory of `<entity>.key` files; missing keys are generated.
    #[arg(long, default_value = "keys")]
    keys_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// `all` or one scenario name.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Run trials concurrently (session management always runs sequentially).
    #[arg(long)]
    parallel: bool,
    /// Repetitions per end-to-end latency case; 0 skips the measurement.
    #[arg(long, default_value_t = 5)]
    e2e_repetitions: usize,
}

#[derive(Debug, clap::Args)]
struct LatencyArgs {
    #[arg(long = "l-e2e", allow_negative_numbers = true)]
    l_e2e: f64,
    #[arg(long = "l-a2a", allow_negative_numbers = true)]
    l_a2a: f64,
    #[arg(long = "l-w2a", allow_negative_numbers = true)]
    l_w2a: f64,
    #[arg(long = "l-a2w", allow_negative_numbers = true)]
    l_a2w: f64,
    #[arg(long, allow_negative_numbers = true)]
    n: i64,
}

async fn provision(args: ProvisionArgs) -> anyhow::Result<bool> {
    let keys = FixtureKeys::load_or_create(&args.keys_dir, &OsRandom)?;
    let auth = AuthClient::new(&args.auth_url, Arc::new(SystemClock), Arc::new(OsRandom))
        .with_admin_token(args.admin_token);
    let site = args
        .website_url
        .as_ref()
        .map(|url| WebsiteAdmin::new(url, delegate_harness::fixture::USER, args.user_password.clone().unwrap_or_default()));
    let fixture = provision_fixture(&auth, site.as_ref(), &FixtureSpec::default(), &keys).await?;
    println!("{}", serde_json::to_string_pretty(&fixture)?);
    eprintln!("distribution keys in {}", args.keys_dir.display());
    Ok(true)
}

async fn run(args: RunArgs) -> anyhow::Result<bool> {
    let names: Vec<ScenarioName> = match args.scenario.as_str() {
        "all" => ScenarioName::ALL.to_vec(),
        one => vec![one.parse()?],
    };
    let mut report = Report::new(args.seed);
    for (i, name) in names.into_iter().enumerate() {
        let mut scenario = Scenario::new(name, args.trials)?;
        scenario.parallel = args.parallel;
        let stack = Arc::new(LocalStack::start(&scenario.fixture_spec(), args.seed.wrapping_add(i as u64)).await?);
        let outcome = run_trials(&stack, &scenario)
            .await
            .with_context(|| format!("scenario {name}"))?;
        report.add_scenario(&scenario, outcome);
    }

    let stack = LocalStack::start(&FixtureSpec::default(), args.seed.wrapping_add(100)).await?;
    let (counts, transcripts) = message_count_sweep(&stack, TrustLevel::High, 0..=4).await?;
    for (n, t) in transcripts.into_iter().enumerate() {
        report.transcripts.insert(format!("message_counts/n{n}"), t);
    }
    report.message_counts = Some(counts);
    if args.e2e_repetitions > 0 {
        for case in E2eCase::standard() {
            report.latency.push(measure_e2e(&stack, &case, args.e2e_repetitions).await?);
        }
    }

    print!("{}", render_table(&report));
    if let Some(path) = &args.report {
        emit_report(&report, path)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(report.all_pass())
}

fn latency(args: LatencyArgs) -> anyhow::Result<bool> {
    let p = LatencyModelParams::from_secs(args.l_e2e, args.l_a2a, args.l_w2a, args.l_a2w, args.n)?;
    let total = compute_total_latency(&p)?;
    println!("x = 2 + n = {}", p.x().unwrap_or(u32::MAX));
    println!("L_total = {:.9} s", total.as_secs_f64());
    Ok(true)
}

#[tokio::main]
async fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Provision(a) => provision(a).await,
        Command::Run(a) => run(a).await,
        Command::Latency(a) => latency(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("harness: {e:#}");
            ExitCode::FAILURE
        }
    }
}
