use std::path::PathBuf;

use clap::{Parser, Subcommand};
use reqrank_core::corpus::synthetic::SyntheticSpec;
use reqrank_core::eval::PoolPolicy;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::pipeline;
use crate::roster::Roster;
use crate::service;

#[derive(Debug, Parser)]
#[command(
    name = "reqrank",
    version,
    about = "Text-request to item retrieval: ingest, train, evaluate, serve"
)]
pub struct Cli {
    /// Pipeline config (TOML); falls back to $REQRANK_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cutoffs for eval (comma separated) or result count for query.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Roster tag to train, evaluate, index or query.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Evaluate on sampled pools of this size.
    #[arg(long, global = true)]
    pub pool_size: Option<usize>,
    /// Output file (train) or directory (eval, synth).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the separable synthetic corpus as raw input files.
    Synth {
        #[arg(long, default_value_t = 1000)]
        requests: usize,
        #[arg(long, default_value_t = 3)]
        items_per_category: usize,
        /// Requests use synonyms of the item-side category words.
        #[arg(long)]
        obfuscate: bool,
    },
    /// Load or adapt raw data, tag, sample negatives and split.
    Ingest,
    /// Train a WLITE model on the train split.
    Train,
    /// Build catalog indices for the roster.
    Index,
    /// Score evaluation pools with every roster model.
    Eval,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// Rank the catalog for one free-text request.
    Query { text: String },
}

impl Cli {
    fn config(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::discover(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.ingest.seed = seed;
            cfg.ingest.split.seed = seed;
            cfg.train.seed = seed;
            cfg.eval.seed = seed;
        }
        if !self.k.is_empty() && !matches!(self.command, Command::Query { .. }) {
            cfg.eval.k = self.k.clone();
        }
        if let Some(size) = self.pool_size {
            cfg.eval.pool = PoolPolicy::Sampled { size };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        // a closed pipe (`| head`) is not an error
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::runtime(e)),
        _ => Ok(()),
    }
}

fn print<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    emit(&text)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Synth {
        requests,
        items_per_category,
        obfuscate,
    } = cli.command
    {
        let out = cli
            .out
            .clone()
            .ok_or_else(|| CliError::usage("synth needs --out <dir>"))?;
        if requests == 0 || items_per_category == 0 {
            return Err(CliError::usage("--requests and --items-per-category must be positive"));
        }
        let mut spec = SyntheticSpec {
            requests,
            items_per_category,
            obfuscate,
            ..Default::default()
        };
        if let Some(seed) = cli.seed {
            spec.seed = seed;
        }
        return print(&pipeline::synth(&spec, &out)?);
    }
    let cfg = cli.config()?;
    let model = cli.model.as_deref();
    match cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Ingest => print(&pipeline::ingest(&cfg)?),
        Command::Train => {
            let summary = pipeline::train_cmd(&cfg, model, cli.out.as_deref())?;
            print(&summary.log.epochs.last())
        }
        Command::Index => print(&pipeline::index_cmd(&cfg, model)?),
        Command::Eval => {
            let out = pipeline::eval_cmd(&cfg, model, cli.out.as_deref())?;
            let dir = cli.out.as_deref().unwrap_or(&cfg.paths.reports);
            let table = std::fs::read_to_string(dir.join(pipeline::EVAL_TABLE)).map_err(CliError::runtime)?;
            emit(&table)?;
            tracing::info!(
                models = out.models.len(),
                "wrote {}",
                dir.join(pipeline::EVAL_JSON).display()
            );
            Ok(())
        }
        Command::Serve { port } => {
            let rt = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
            rt.block_on(service::serve(cfg, port))
        }
        Command::Query { ref text } => {
            let k = match cli.k.as_slice() {
                [] => 3,
                [k] => *k,
                _ => return Err(CliError::usage("query takes a single --k")),
            };
            let roster = Roster::load(&cfg, 1)?;
            let resp = roster
                .query(text, k, model)
                .map_err(|e| CliError::usage(e.to_string()))?;
            print(&resp)
        }
    }
}
