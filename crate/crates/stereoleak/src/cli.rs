//! Command-line front end. Usage errors exit with 2, failures while reading
//! or processing data with 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, Settings, CONFIG_ENV};
use crate::error::Result;
use crate::pipeline::{self, Summary};

pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stereoleak", version, about = "Measure cross-lingual stereotype leakage in language models")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the registry and, if given, the survey export and probe dumps.
    Validate,
    /// Gate, aggregate and summarize survey responses.
    IngestSurvey,
    /// Turn probe dumps into model profiles.
    Score,
    /// Fit the leakage regression for every model and target language.
    Fit,
    /// Extract leaked-trait candidates.
    Leaks,
    /// Render flow graphs, coefficient tables and radar series.
    Report,
    /// Run the planted-coefficient and null Monte-Carlo suites.
    Simulate,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Registry file (default: bundled registry).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// Survey export directory.
    #[arg(long, global = true)]
    pub survey: Option<PathBuf>,
    /// Directory of probe dumps (*.jsonl).
    #[arg(long, global = true)]
    pub probes: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Attention-check records a respondent must have, all passed (default 4).
    #[arg(long, global = true)]
    pub required_checks: Option<usize>,
    /// Annotators below which a cell is flagged for low coverage (default 5).
    #[arg(long, global = true)]
    pub min_annotators: Option<u32>,
    /// How ratings of one cell are combined (default mean).
    #[arg(long, global = true, value_parser = ["mean", "median"])]
    pub aggregator: Option<String>,
    /// Variance-component criterion (default REML).
    #[arg(long, global = true, value_parser = ["REML", "ML"])]
    pub method: Option<String>,
    /// Random-intercept grouping factor (default social-group).
    #[arg(long, global = true, value_parser = ["social-group", "trait-pair"])]
    pub grouping: Option<String>,
    /// Significance level (default 0.05).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Divide alpha by the number of predictors.
    #[arg(long, global = true)]
    pub bonferroni: bool,
    /// Z-scoring stratum (default pooled).
    #[arg(long, global = true, value_parser = ["pooled", "per-pair"])]
    pub standardize: Option<String>,
    /// Fit on standardized or raw scores (default standardized).
    #[arg(long, global = true, value_parser = ["standardized", "raw"])]
    pub score_mode: Option<String>,
    /// Models that also get a fit with the monolingual predictor (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub monolingual_models: Option<Vec<String>>,
    /// Model poles per group considered for leaked traits.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Minimum source-language association toward a leaked pole (z-units).
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Target-language association must stay below this (z-units).
    #[arg(long, global = true)]
    pub target_ceiling: Option<f64>,
    /// Leave same-language edges out of flow graphs.
    #[arg(long, global = true)]
    pub cross_only: bool,
    /// Simulation seed (default 7).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulation replicates per suite (default 500).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
}

impl From<Flags> for Settings {
    fn from(f: Flags) -> Settings {
        Settings {
            registry: f.registry,
            survey: f.survey,
            probes: f.probes,
            out: f.out,
            required_checks: f.required_checks,
            min_annotators: f.min_annotators,
            aggregator: f.aggregator,
            method: f.method,
            grouping: f.grouping,
            alpha: f.alpha,
            bonferroni: f.bonferroni.then_some(true),
            standardize: f.standardize,
            score_mode: f.score_mode,
            monolingual_models: f.monolingual_models,
            k: f.k,
            theta: f.theta,
            target_ceiling: f.target_ceiling,
            cross_only: f.cross_only.then_some(true),
            seed: f.seed,
            reps: f.reps,
        }
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Summary> {
    match command {
        Command::Validate => pipeline::validate(cfg),
        Command::IngestSurvey => pipeline::ingest_survey(cfg),
        Command::Score => pipeline::score(cfg),
        Command::Fit => pipeline::fit(cfg),
        Command::Leaks => pipeline::leaks(cfg),
        Command::Report => pipeline::report(cfg),
        Command::Simulate => pipeline::simulate(cfg),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let outcome = RunConfig::from_sources(cli.flags.into(), cli.config.as_deref())
        .and_then(|cfg| execute(cli.command, &cfg));
    match outcome {
        Ok(summary) => {
            let _ = writeln!(stdout, "{summary}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "stereoleak: error[{}]: {e}", e.category());
            EXIT_DATA
        }
    }
}
