use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use delegate_agent::{run_task, AgentConfig, TaskScript, TerminalStatus};
use delegate_core::{EntityName, GroupName, KeyMaterial, OsRandom, SystemClock};
use delegate_website::ProfileField;

/// Scripted agent acting on a website with a delegated session key.
#[derive(Debug, Parser)]
#[command(name = "agent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Redeem a key id, log in, fetch fields and optionally purchase.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long, env = "AGENT_NAME")]
    name: EntityName,
    #[arg(long, env = "AGENT_GROUP")]
    group: GroupName,
    #[arg(long, env = "AGENT_AUTH_URL", default_value = "http://127.0.0.1:7400")]
    auth_url: String,
    #[arg(long, env = "AGENT_WEBSITE_URL", default_value = "http://127.0.0.1:7500")]
    website_url: String,
    /// File holding the agent's distribution key as hex.
    #[arg(long, env = "AGENT_KEY_PATH")]
    key_path: PathBuf,
    /// Session key id handed over by the user.
    #[arg(long)]
    key_id: u64,
    #[arg(long, value_delimiter = ',')]
    fields: Vec<ProfileField>,
    #[arg(long)]
    purchase: Option<String>,
    /// Write the transcript here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

async fn run(args: RunArgs) -> anyhow::Result<TerminalStatus> {
    let text = std::fs::read_to_string(&args.key_path)
        .with_context(|| format!("reading {}", args.key_path.display()))?;
    let key = KeyMaterial::from_hex(text.trim())
        .with_context(|| format!("parsing key in {}", args.key_path.display()))?;
    let config = AgentConfig::new(args.name, args.group, key, args.auth_url, args.website_url)?;
    let script = TaskScript::new(args.key_id, args.fields, args.purchase)?;
    let transcript = run_task(config, script, Arc::new(SystemClock), Arc::new(OsRandom)).await;
    let json = serde_json::to_string_pretty(&transcript)?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(transcript.terminal_status)
}

#[tokio::main]
async fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    match run(args).await {
        Ok(TerminalStatus::Success | TerminalStatus::SuccessWithDenials) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("agent: {e:#}");
            ExitCode::FAILURE
        }
    }
}
