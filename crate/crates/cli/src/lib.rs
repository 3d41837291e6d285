//! `relaylab` operator tooling: run the server, set up experiments through the admin
//! API, drive scripted agents over the participant channel, export corpora.

pub mod api;
pub mod error;
pub mod script;
pub mod simulate;
pub mod tokens;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use relaylab_core::config::ExperimentDocument;
use relaylab_core::ExperimentId;
use relaylab_gateway::{Server, ServerConfig};
use serde_json::json;

use api::AdminClient;
use error::{CliError, CliResult};
use script::ScriptFile;
use tokens::{TokenEntry, TokensFile};

#[derive(Debug, Parser)]
#[command(name = "relaylab", version, about = "Dialogue experiment relay: server and operator tooling")]
pub struct Cli {
    /// Base URL of the relay server.
    #[arg(long, global = true, env = "RELAYLAB_SERVER", default_value = "http://127.0.0.1:8080")]
    pub server: String,
    /// Bearer token for the admin API.
    #[arg(long, global = true, env = "RELAYLAB_ADMIN_TOKEN", default_value = "")]
    pub admin_token: String,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the relay server.
    Serve { config: PathBuf },
    /// Create an experiment, register its participants and generate the schedule.
    Setup {
        config: PathBuf,
        /// Where participant tokens are written.
        #[arg(long, default_value = "tokens.json")]
        tokens_out: PathBuf,
    },
    /// Open the conversations of a round (rounds count from 0).
    StartRound { experiment: ExperimentId, round: usize },
    /// Run scripted agents over the participant channel and check the transcripts.
    Simulate {
        script: PathBuf,
        #[arg(long, default_value = "tokens.json")]
        tokens: PathBuf,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Write the transcript export as JSON lines.
    Export {
        experiment: ExperimentId,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace display names with stable pseudonyms.
        #[arg(long, alias = "redact")]
        redact_names: bool,
    },
    /// Audit an experiment's stored deliveries; exits 1 on any violation.
    Integrity { experiment: ExperimentId },
    /// Close every conversation of a round.
    CloseRound { experiment: ExperimentId, round: usize },
}

pub async fn run(cli: Cli) -> CliResult<()> {
    let client = AdminClient::new(&cli.server, &cli.admin_token);
    match &cli.command {
        Command::Serve { config } => serve(config).await,
        Command::Setup { config, tokens_out } => setup(&client, config, tokens_out, cli.json).await,
        Command::StartRound { experiment, round } => {
            let result = client.start_round(experiment, *round).await?;
            emit(cli.json, &result, || {
                format!("round {round} started: {} conversations", result.conversation_ids.len())
            });
            Ok(())
        }
        Command::CloseRound { experiment, round } => {
            let result = client.close_round(experiment, *round).await?;
            emit(cli.json, &result, || {
                format!("round {round} closed: {} conversations", result.conversation_ids.len())
            });
            Ok(())
        }
        Command::Simulate {
            script,
            tokens,
            timeout_secs,
        } => {
            let script = ScriptFile::load(script)?;
            let tokens = TokensFile::load(tokens)?;
            let report =
                simulate::simulate(&client, &tokens, &script, Duration::from_secs(*timeout_secs)).await?;
            emit(cli.json, &report, || render_simulation(&report));
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "{} transcript mismatches, {} integrity violations",
                    report.mismatches.len(),
                    report.integrity_violations
                )))
            }
        }
        Command::Export {
            experiment,
            out,
            redact_names,
        } => {
            let bytes = client.export(experiment, *redact_names).await?;
            let lines = bytes.iter().filter(|b| **b == b'\n').count();
            match out {
                Some(path) => {
                    std::fs::write(path, &bytes).map_err(CliError::io(path))?;
                    let summary = json!({ "path": path, "lines": lines });
                    emit(cli.json, &summary, || format!("wrote {lines} lines to {}", path.display()));
                }
                None => std::io::stdout()
                    .write_all(&bytes)
                    .map_err(CliError::io("<stdout>"))?,
            }
            Ok(())
        }
        Command::Integrity { experiment } => {
            let report = client.integrity(experiment).await?;
            emit(cli.json, &report, || {
                let mut text = format!(
                    "{} conversations, {} messages, {} deliveries, {} violations",
                    report.conversations,
                    report.messages,
                    report.deliveries,
                    report.violations.len()
                );
                for v in &report.violations {
                    text.push_str(&format!("\n  {}", serde_json::to_string(v).unwrap_or_default()));
                }
                text
            });
            if report.violations.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(format!("{} integrity violations", report.violations.len())))
            }
        }
    }
}

fn emit<T: serde::Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
    } else {
        println!("{}", human());
    }
}

async fn serve(path: &Path) -> CliResult<()> {
    let config = ServerConfig::load(path).map_err(|e| match e {
        relaylab_gateway::GatewayError::Io(source) => CliError::Io {
            path: path.to_owned(),
            source,
        },
        other => CliError::Invalid(other.to_string()),
    })?;
    let server = Server::bind(&config).await.map_err(|e| CliError::Invalid(e.to_string()))?;
    let addr = server.local_addr().map_err(CliError::io(&config.listen.addr))?;
    println!("listening on {addr}");
    std::io::stdout().flush().ok();
    tracing::info!(%addr, storage = %config.storage.path.display(), "relay started");
    server.run().await.map_err(|e| CliError::Transport(e.to_string()))
}

async fn setup(client: &AdminClient, path: &Path, tokens_out: &Path, json_out: bool) -> CliResult<()> {
    let document = ExperimentDocument::load(path).map_err(|e| match e {
        relaylab_core::Error::Io(source) => CliError::Io {
            path: path.to_owned(),
            source,
        },
        other => CliError::Invalid(other.to_string()),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = document.resolve(base)?;

    let experiment = client.create_experiment(&config).await?;
    let mut participants = Vec::new();
    for name in &document.participants {
        let registration = client.register(&experiment.id, name).await?;
        participants.push(TokenEntry {
            label: name.clone(),
            participant_id: registration.participant.id,
            token: registration.token,
        });
    }
    let schedule = client.generate_schedule(&experiment.id).await?;
    let tokens = TokensFile {
        experiment_id: experiment.id.clone(),
        participants,
    };
    tokens.save(tokens_out)?;

    let name = |id| tokens.label_of(id).unwrap_or("?").to_owned();
    let rounds: Vec<Vec<[String; 2]>> = schedule
        .rounds
        .iter()
        .map(|r| r.pairs.iter().map(|p| [name(&p.first), name(&p.second)]).collect())
        .collect();
    let distinct: BTreeSet<_> = schedule
        .rounds
        .iter()
        .flat_map(|r| r.pairs.iter().map(|p| p.unordered_key()))
        .collect();
    let summary = json!({
        "experiment_id": experiment.id,
        "participants": tokens.participants.len(),
        "rounds": rounds,
        "byes": schedule.rounds.iter().map(|r| r.bye.as_ref().map(&name)).collect::<Vec<_>>(),
        "pairs": schedule.pair_count(),
        "distinct_pairs": distinct.len(),
        "tokens_file": tokens_out,
    });
    emit(json_out, &summary, || {
        let mut text = format!(
            "experiment {} ({})\nregistered {} participants",
            experiment.id,
            experiment.name,
            tokens.participants.len()
        );
        for (i, round) in rounds.iter().enumerate() {
            let pairs: Vec<String> = round.iter().map(|[a, b]| format!("{a} + {b}")).collect();
            text.push_str(&format!("\nround {i}: {}", pairs.join(", ")));
            if let Some(bye) = &schedule.rounds[i].bye {
                text.push_str(&format!(" (bye: {})", name(bye)));
            }
        }
        text.push_str(&format!(
            "\nschedule: {} rounds, {} pairs ({} distinct)\ntokens written to {}",
            rounds.len(),
            schedule.pair_count(),
            distinct.len(),
            tokens_out.display()
        ));
        text
    });
    Ok(())
}

fn render_simulation(report: &simulate::SimulationReport) -> String {
    let mut text = String::new();
    for conv in &report.conversations {
        text.push_str(&format!(
            "conversation {} [{}]: {} messages, {} altered deliveries\n",
            conv.conversation_id,
            conv.members.join(", "),
            conv.messages,
            conv.altered_deliveries
        ));
        for (owner, lines) in &conv.views {
            text.push_str(&format!("  view of {owner}\n"));
            for line in lines {
                text.push_str(&format!("    {:>3} {}: {}\n", line.seq, line.author, line.body));
            }
        }
    }
    for m in &report.mismatches {
        text.push_str(&format!(
            "mismatch in {} view {} seq {} ({})\n  - expected: {}\n  + actual:   {}\n",
            m.conversation_id, m.view, m.seq, m.what, m.expected, m.actual
        ));
    }
    if report.integrity_violations > 0 {
        text.push_str(&format!("integrity: {} violations\n", report.integrity_violations));
    }
    text.push_str(if report.passed() { "PASS" } else { "FAIL" });
    text
}
