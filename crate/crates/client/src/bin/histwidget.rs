use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use histwidget_client::{Client, ClientError, DEFAULT_SERVER};
use histwidget_core::api::ReplayRequest;
use histwidget_core::replay::WidgetKind;
use serde::Serialize;

/// Validate graphs, print schemas and replay action logs against a
/// histwidget service.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Base URL of the service.
    #[arg(long, global = true, env = "HISTWIDGET_SERVER", default_value = DEFAULT_SERVER)]
    server: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a graph file loads.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Print the schema summary of a graph as JSON.
    Schema {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Replay an action log and write the export of the final state.
    Replay {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "explorer", value_parser = ["explorer", "alignment"])]
        widget: String,
        #[arg(long, required_if_eq("widget", "alignment"))]
        candidates: Option<PathBuf>,
    },
}

/// 1: the input was rejected. 2: a file or the service could not be reached.
enum Failure {
    Invalid(String),
    Io(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Transport(_) => Failure::Io(e.to_string()),
            ClientError::Api { .. } => Failure::Invalid(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    // going through Value sorts object keys
    let v = serde_json::to_value(v).expect("plain data");
    serde_json::to_string_pretty(&v).expect("plain data")
}

async fn run(cli: Cli) -> Result<(), Failure> {
    let client = Client::new(cli.server);
    match cli.command {
        Command::Validate { graph } => {
            let summary = client.validate_graph(read(&graph)?).await?;
            println!(
                "{}: ok ({} nodes, {} edges, {} node types)",
                graph.display(),
                summary.nodes,
                summary.edges,
                summary.node_types
            );
        }
        Command::Schema { graph } => {
            let schema = client.schema(read(&graph)?).await?;
            println!("{}", pretty(&schema));
        }
        Command::Replay {
            graph,
            log,
            out,
            widget,
            candidates,
        } => {
            let req = ReplayRequest {
                widget_type: widget.parse::<WidgetKind>().expect("restricted by clap"),
                graph: read(&graph)?,
                candidates: candidates.as_deref().map(read).transpose()?,
                log: read(&log)?,
            };
            let mut resp = client.replay(&req).await?;
            fs::write(&out, pretty(&resp.export) + "\n")
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", out.display())))?;
            resp.report.final_export_path = Some(out.display().to_string());
            println!("{}", pretty(&resp.report));
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
