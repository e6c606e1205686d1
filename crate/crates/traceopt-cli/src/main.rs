//! Command-line front end. Every verb talks to the HTTP service: either an
//! existing one named with `--server`, or an in-process instance spawned on
//! an ephemeral loopback port for the duration of the command.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use traceopt_api as api;
use traceopt_client::ServiceClient;
use traceopt_core::pipeline::{BackendSpec, RunConfig};
use traceopt_service::AppState;

#[derive(Parser)]
#[command(name = "traceopt", about = "Rewrite long reasoning trajectories into shorter correct ones")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base URL of a running service. When omitted, an in-process service
    /// is spawned for the duration of the command.
    #[arg(long, global = true)]
    server: Option<String>,

    /// Use a scripted mock backend loaded from this JSONL fixture for both
    /// the policy and the judge.
    #[arg(long, global = true)]
    mock: Option<PathBuf>,

    /// Override the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the tolerated per-problem failure rate (0.0 - 1.0).
    #[arg(long, global = true)]
    max_failure_rate: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a response file into thinking patterns.
    Segment {
        /// Path to a file holding the raw response text.
        #[arg(long)]
        input: PathBuf,
    },
    /// Sample responses for every dataset problem.
    Sample {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize selected sampled responses into shorter trajectories.
    Optimize {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the preference-pair dataset.
    BuildPairs {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        optimized: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a pairs file with the preference loss.
    ScoreSimpo {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare base samples against optimized trajectories.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        method: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the efficiency table from a previous evaluation or run.
    Report {
        /// Directory holding report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline: sample, optimize, pair, evaluate.
    Pipeline {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8321")]
        addr: SocketAddr,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_toml_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(fixture) = &cli.mock {
        let spec = BackendSpec::Mock {
            fixture: fixture.clone(),
        };
        config.policy_backend = spec.clone();
        config.judge_backend = spec;
    }
    if let Some(seed) = cli.seed {
        config.run_seed = seed;
    }
    if let Some(rate) = cli.max_failure_rate {
        config.max_failure_rate = rate;
    }
    config.validate()?;
    Ok(config)
}

async fn connect(cli: &Cli) -> Result<(ServiceClient, Option<tokio::task::JoinHandle<()>>)> {
    if let Some(server) = &cli.server {
        return Ok((ServiceClient::new(server.clone()), None));
    }
    let config = load_config(cli)?;
    let state = Arc::new(AppState::new(config)?);
    let (addr, handle) = traceopt_service::serve(state, "127.0.0.1:0".parse().unwrap()).await?;
    Ok((ServiceClient::new(format!("http://{addr}")), Some(handle)))
}

fn path_str(path: &PathBuf) -> String {
    path.display().to_string()
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();

    // Reading a previous run's report is purely local; no service needed.
    if let Command::Report { out } = &cli.command {
        let path = out.join("report.json");
        let content = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let report: api::EfficiencyReport = serde_json::from_str(&content)?;
        println!("{}", report.render_table());
        return Ok(());
    }

    if let Command::Serve { addr } = &cli.command {
        let config = load_config(&cli)?;
        let state = Arc::new(AppState::new(config)?);
        let (bound, handle) = traceopt_service::serve(state, *addr).await?;
        eprintln!("listening on http://{bound}");
        handle.await?;
        return Ok(());
    }

    let (client, _service) = connect(&cli).await?;
    match &cli.command {
        Command::Segment { input } => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let resp = client
                .segment(&api::SegmentRequest {
                    response_text: text,
                })
                .await?;
            println!("{}", serde_json::to_string_pretty(&resp)?);
        }
        Command::Sample { dataset, out } => {
            let resp = client
                .sample(&api::SampleRequest {
                    dataset_path: path_str(dataset),
                    out_path: path_str(out),
                })
                .await?;
            println!("wrote {} sampled responses to {}", resp.responses_written, out.display());
        }
        Command::Optimize {
            dataset,
            samples,
            out,
        } => {
            let resp = client
                .optimize(&api::OptimizeRequest {
                    dataset_path: path_str(dataset),
                    samples_path: path_str(samples),
                    out_path: path_str(out),
                })
                .await?;
            println!("wrote {} optimized trajectories to {}", resp.optimized_written, out.display());
        }
        Command::BuildPairs {
            dataset,
            samples,
            optimized,
            out,
        } => {
            let resp = client
                .build_pairs(&api::BuildPairsRequest {
                    dataset_path: path_str(dataset),
                    samples_path: path_str(samples),
                    optimized_path: path_str(optimized),
                    out_path: path_str(out),
                })
                .await?;
            println!(
                "wrote {} pairs to {} (dropped: {} failed, {} incorrect, {} degenerate)",
                resp.pairs_written,
                out.display(),
                resp.drops.optimization_failed,
                resp.drops.chosen_incorrect,
                resp.drops.degenerate,
            );
        }
        Command::ScoreSimpo { pairs, out } => {
            let resp = client
                .score_simpo(&api::ScoreSimpoRequest {
                    pairs_path: path_str(pairs),
                    out_path: path_str(out),
                })
                .await?;
            println!("{}", serde_json::to_string_pretty(&resp.summary)?);
        }
        Command::Evaluate {
            dataset,
            base,
            method,
            out,
        } => {
            let resp = client
                .evaluate(&api::EvaluateRequest {
                    dataset_path: path_str(dataset),
                    base_path: path_str(base),
                    method_path: path_str(method),
                    out_dir: path_str(out),
                })
                .await?;
            println!("{}", resp.report.render_table());
        }
        Command::Pipeline { dataset, out } => {
            let resp = client
                .pipeline(&api::PipelineRequest {
                    dataset_path: path_str(dataset),
                    out_dir: path_str(out),
                })
                .await?;
            println!("{}", serde_json::to_string_pretty(&resp.manifest)?);
        }
        Command::Report { .. } | Command::Serve { .. } => unreachable!("handled above"),
    }
    Ok(())
}
