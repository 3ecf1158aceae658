use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use molscape_core::dataset::load_dataset;
use molscape_service::{pipeline, router, AppState, Engine, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "molscape", version, about = "Compound-space projections and views for virtual screening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Pipeline settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "artifacts")]
    artifacts_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and record its shapes and descriptor scaling.
    Preprocess(Common),
    /// Fit a t-SNE layout and trust scores per representation.
    FitTsne(Common),
    /// Train a parametric projector per fitted layout.
    TrainProjector(Common),
    /// Serve the HTTP API over prepared artifacts.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

async fn serve(common: &Common, config: PipelineConfig, port: u16) -> Result<(), PipelineError> {
    let engine = Engine::load(&common.manifest, &common.artifacts_dir, config)?;
    let missing: Vec<String> = engine
        .views
        .iter()
        .filter(|(r, v)| v.projector.is_none() && **r != molscape_core::dr::Representation::Embeddings)
        .map(|(r, _)| r.to_string())
        .collect();
    if !missing.is_empty() {
        info!("no projector for {}; new compounds will not be placed there", missing.join(", "));
    }
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener =
        tokio::net::TcpListener::bind(addr).await.map_err(|e| PipelineError::Config(format!("{addr}: {e}")))?;
    info!("listening on http://{addr}");
    axum::serve(listener, router(AppState::new(engine))).await.map_err(|e| PipelineError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Preprocess(c) => {
            let d = load_dataset(&c.manifest)?;
            pipeline::preprocess(&d, &c.artifacts_dir).map(|_| ())
        }
        Command::FitTsne(c) => {
            let config = PipelineConfig::read(c.config.as_deref())?;
            let d = load_dataset(&c.manifest)?;
            pipeline::fit_tsne_all(&d, &c.artifacts_dir, &config, c.seed).map(|_| ())
        }
        Command::TrainProjector(c) => {
            let config = PipelineConfig::read(c.config.as_deref())?;
            let d = load_dataset(&c.manifest)?;
            pipeline::train_projectors(&d, &c.artifacts_dir, &config, c.seed).map(|_| ())
        }
        Command::Serve { common, port } => {
            let config = PipelineConfig::read(common.config.as_deref())?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Config(e.to_string()))?;
            runtime.block_on(serve(&common, config, port))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
