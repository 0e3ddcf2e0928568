//! Run configuration: a flat TOML file whose keys match the long CLI flags
//! (with `_` for `-`). Command-line flags win over the file, the file over
//! built-in defaults. Relative paths in the file are taken from the file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stereoleak_core::leakage::{ExtractionParams, Grouping, ScoreMode, DEFAULT_ALPHA};
use stereoleak_core::mixedfx::FitMethod;
use stereoleak_core::scoring::StandardizeMode;
use stereoleak_core::survey::{AggregationConfig, Aggregator, DEFAULT_MIN_ANNOTATORS, DEFAULT_REQUIRED_CHECKS};

use crate::error::{read_to_string, Error, Result};

pub const CONFIG_ENV: &str = "STEREOLEAK_CONFIG";
pub const DEFAULT_OUT: &str = "stereoleak-out";
pub const DEFAULT_REPS: usize = 500;
pub const DEFAULT_SEED: u64 = 7;

/// Every setting optional; used for both the file and the flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub registry: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub probes: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub required_checks: Option<usize>,
    pub min_annotators: Option<u32>,
    pub aggregator: Option<String>,
    pub method: Option<String>,
    pub grouping: Option<String>,
    pub alpha: Option<f64>,
    pub bonferroni: Option<bool>,
    pub standardize: Option<String>,
    pub score_mode: Option<String>,
    pub monolingual_models: Option<Vec<String>>,
    pub k: Option<usize>,
    pub theta: Option<f64>,
    pub target_ceiling: Option<f64>,
    pub cross_only: Option<bool>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
}

macro_rules! merge {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    /// `self` wins field by field.
    pub fn over(self, lower: Settings) -> Settings {
        merge!(
            self, lower, registry, survey, probes, out, required_checks, min_annotators, aggregator, method,
            grouping, alpha, bonferroni, standardize, score_mode, monolingual_models, k, theta, target_ceiling,
            cross_only, seed, reps
        )
    }

    pub fn parse(file: &str, text: &str) -> Result<Settings> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{file}: {e}")))
    }

    /// Reads a config file and anchors its relative paths at the file's directory.
    pub fn load(path: &Path) -> Result<Settings> {
        let mut s = Self::parse(&path.display().to_string(), &read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut s.registry, &mut s.survey, &mut s.probes, &mut s.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }
}

pub fn parse_method(s: &str) -> Result<FitMethod> {
    match s.to_ascii_uppercase().as_str() {
        "REML" => Ok(FitMethod::Reml),
        "ML" => Ok(FitMethod::Ml),
        _ => Err(Error::Config(format!("method `{s}`: expected REML or ML"))),
    }
}

pub fn parse_grouping(s: &str) -> Result<Grouping> {
    match s {
        "social-group" => Ok(Grouping::SocialGroup),
        "trait-pair" => Ok(Grouping::TraitPair),
        _ => Err(Error::Config(format!("grouping `{s}`: expected social-group or trait-pair"))),
    }
}

pub fn parse_standardize(s: &str) -> Result<StandardizeMode> {
    match s {
        "pooled" => Ok(StandardizeMode::Pooled),
        "per-pair" => Ok(StandardizeMode::PerPair),
        _ => Err(Error::Config(format!("standardize `{s}`: expected pooled or per-pair"))),
    }
}

pub fn parse_score_mode(s: &str) -> Result<ScoreMode> {
    match s {
        "standardized" => Ok(ScoreMode::Standardized),
        "raw" => Ok(ScoreMode::Raw),
        _ => Err(Error::Config(format!("score_mode `{s}`: expected standardized or raw"))),
    }
}

pub fn parse_aggregator(s: &str) -> Result<Aggregator> {
    match s {
        "mean" => Ok(Aggregator::Mean),
        "median" => Ok(Aggregator::Median),
        _ => Err(Error::Config(format!("aggregator `{s}`: expected mean or median"))),
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub registry: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub probes: Option<PathBuf>,
    pub out: PathBuf,
    pub required_checks: usize,
    pub aggregation: AggregationConfig,
    pub method: FitMethod,
    pub grouping: Grouping,
    pub alpha: f64,
    pub bonferroni: bool,
    pub standardize: StandardizeMode,
    pub score_mode: ScoreMode,
    /// Multilingual models that also get a fit with the monolingual predictor.
    pub monolingual_models: Vec<String>,
    pub extraction: ExtractionParams,
    pub cross_only: bool,
    pub seed: u64,
    pub reps: usize,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<RunConfig> {
        for (name, path) in [("registry", &s.registry), ("survey", &s.survey), ("probes", &s.probes)] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Error::Config(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        let alpha = s.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha {alpha} must lie in (0, 1)")));
        }
        let defaults = ExtractionParams::default();
        let extraction = ExtractionParams {
            k: s.k.unwrap_or(defaults.k),
            theta: s.theta.unwrap_or(defaults.theta),
            target_ceiling: s.target_ceiling.unwrap_or(defaults.target_ceiling),
        };
        if extraction.k < 1 || !(extraction.theta > 0.0) {
            return Err(Error::Config("k must be at least 1 and theta positive".into()));
        }
        Ok(RunConfig {
            registry: s.registry,
            survey: s.survey,
            probes: s.probes,
            out: s.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            required_checks: s.required_checks.unwrap_or(DEFAULT_REQUIRED_CHECKS),
            aggregation: AggregationConfig {
                min_annotators: s.min_annotators.unwrap_or(DEFAULT_MIN_ANNOTATORS),
                aggregator: s.aggregator.as_deref().map(parse_aggregator).transpose()?.unwrap_or_default(),
            },
            method: s.method.as_deref().map(parse_method).transpose()?.unwrap_or_default(),
            grouping: s.grouping.as_deref().map(parse_grouping).transpose()?.unwrap_or_default(),
            alpha,
            bonferroni: s.bonferroni.unwrap_or(false),
            standardize: s.standardize.as_deref().map(parse_standardize).transpose()?.unwrap_or_default(),
            score_mode: s.score_mode.as_deref().map(parse_score_mode).transpose()?.unwrap_or_default(),
            monolingual_models: s.monolingual_models.unwrap_or_else(|| vec!["mbert".into()]),
            extraction,
            cross_only: s.cross_only.unwrap_or(false),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            reps: s.reps.unwrap_or(DEFAULT_REPS),
        })
    }

    /// Flags over the optional config file over defaults.
    pub fn from_sources(flags: Settings, file: Option<&Path>) -> Result<RunConfig> {
        let from_file = file.map(Settings::load).transpose()?.unwrap_or_default();
        Self::resolve(flags.over(from_file))
    }

    pub fn require_survey(&self) -> Result<&Path> {
        self.survey.as_deref().ok_or_else(|| Error::Config("no survey directory given (--survey)".into()))
    }

    pub fn require_probes(&self) -> Result<&Path> {
        self.probes.as_deref().ok_or_else(|| Error::Config("no probe directory given (--probes)".into()))
    }
}
