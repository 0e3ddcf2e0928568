//! The pipeline steps behind the CLI subcommands. Each step reads its
//! inputs, writes versioned files under the output directory and returns a
//! one-line summary.

use std::fmt;
use std::path::{Path, PathBuf};

use stereoleak_core::flow::{coefficient_matrices, flow_graph, radar};
use stereoleak_core::leakage::{
    assemble_design, extract_leaked_traits, fit_leakage, standardize_human, LeakageResult, LeakageSpec,
    ModelProfiles, ScoreMode,
};
use stereoleak_core::scoring::{score_model, ScoringMethod};
use stereoleak_core::survey::{aggregate_human_scores, demographic_summary, quality_gate, HumanProfileSet};
use stereoleak_core::{Language, Registry, Source, StereotypeProfile};

use crate::config::RunConfig;
use crate::error::{write_file, Error, Result};
use crate::probe_file::load_probe_dir;
use crate::registry_file::load_registry;
use crate::render::{flow_dot, radar_csv, tables_text, tables_tsv};
use crate::results::{
    load_required, save, to_json, DemographicsFile, FlowFile, HumanProfilesFile, LeakageFile, LeaksFile,
    ModelProfilesFile, QualityFile, RadarFile, ScoredModelEntry, DEMOGRAPHICS, HUMAN_PROFILES, LEAKAGE_RESULTS,
    LEAKED_TRAITS, MODEL_PROFILES, QUALITY_REPORT, SIMULATION,
};
use crate::simulate::{self, SimConfig};
use crate::survey_file::load_survey;

/// Demographic keys always tabulated, answered or not.
pub const DEMOGRAPHIC_KEYS: [&str; 1] = ["gender"];

pub const REPORT_DIR: &str = "report";

/// `stereoleak <command> status=ok key=value ...`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub command: &'static str,
    pub fields: Vec<(String, String)>,
}

impl Summary {
    fn new(command: &'static str) -> Self {
        Self { command, fields: Vec::new() }
    }

    fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stereoleak {} status=ok", self.command)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

pub fn registry(cfg: &RunConfig) -> Result<Registry> {
    let registry = load_registry(cfg.registry.as_deref())?;
    registry.check_canonical()?;
    Ok(registry)
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

pub fn validate(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let mut s = Summary::new("validate")
        .with("languages", registry.languages().len())
        .with("pairs", registry.trait_pairs().len())
        .with("groups", registry.groups().len());
    if let Some(dir) = &cfg.survey {
        s = s.with("respondents", load_survey(dir, &registry)?.len());
    }
    if let Some(dir) = &cfg.probes {
        let dumps = load_probe_dir(dir)?;
        for d in &dumps {
            for r in &d.records {
                registry.validate_reference(&r.language, &r.group, &r.pair)?;
            }
        }
        s = s
            .with("dumps", dumps.len())
            .with("records", dumps.iter().map(|d| d.records.len()).sum::<usize>())
            .with("warnings", dumps.iter().map(|d| d.warnings.len()).sum::<usize>());
    }
    Ok(s)
}

pub fn ingest_survey(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let responses = load_survey(cfg.require_survey()?, &registry)?;
    let demographics = demographic_summary(&responses, &DEMOGRAPHIC_KEYS);
    let total = responses.len();
    let gate = quality_gate(responses, cfg.required_checks);
    let set = aggregate_human_scores(&gate.passed, &registry, cfg.aggregation)?;
    save(&out(cfg, HUMAN_PROFILES), &HumanProfilesFile { required_checks: cfg.required_checks, set: set.clone() })?;
    save(&out(cfg, QUALITY_REPORT), &QualityFile { report: gate.report.clone() })?;
    save(&out(cfg, DEMOGRAPHICS), &DemographicsFile { report: demographics })?;
    let mut s = Summary::new("ingest-survey").with("respondents", total).with("passed", gate.report.passed);
    for lang in registry.language_codes() {
        let passed = gate.report.per_language.get(lang).map_or(0, |g| g.passed);
        s = s.with(format!("passed_{lang}"), passed);
    }
    Ok(s.with("coverage_flags", set.flags.len()))
}

pub fn score(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let dumps = load_probe_dir(cfg.require_probes()?)?;
    if dumps.is_empty() {
        return Err(Error::Format(format!("no .jsonl probe dumps in {}", cfg.require_probes()?.display())));
    }
    let mut models = Vec::new();
    let mut n_records = 0;
    let mut n_warnings = 0;
    for d in &dumps {
        n_records += d.records.len();
        n_warnings += d.warnings.len();
        let method = ScoringMethod::infer(&d.records)
            .ok_or_else(|| Error::Format(format!("probe dump for {} has no records", d.header.model_id)))?;
        let scored = score_model(&d.records, &registry, method, d.header.monolingual)?;
        if models.iter().any(|m: &ScoredModelEntry| m.model_id == d.header.model_id) {
            return Err(Error::Format(format!("several probe dumps for model {}", d.header.model_id)));
        }
        models.push(ScoredModelEntry {
            model_id: d.header.model_id.clone(),
            monolingual: d.header.monolingual,
            method,
            profiles: scored.profiles.into_values().collect(),
            ignored_records: scored.ignored_records,
            unparseable_responses: scored.unparseable_responses,
            skipped_keys: scored.skipped_keys,
        });
    }
    models.sort_by(|a, b| (a.monolingual, &a.model_id).cmp(&(b.monolingual, &b.model_id)));
    let unparseable: usize = models.iter().map(|m| m.unparseable_responses).sum();
    let skipped: usize = models.iter().map(|m| m.skipped_keys.len()).sum();
    save(&out(cfg, MODEL_PROFILES), &ModelProfilesFile { models: models.clone() })?;
    Ok(Summary::new("score")
        .with("models", models.len())
        .with("records", n_records)
        .with("warnings", n_warnings)
        .with("unparseable", unparseable)
        .with("skipped_keys", skipped))
}

/// Human and model profiles on the regression scale.
pub struct Prepared {
    pub human: HumanProfileSet,
    pub models: ModelProfiles,
    pub model_ids: Vec<String>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let human: HumanProfilesFile = load_required(&out(cfg, HUMAN_PROFILES), "ingest-survey")?;
    let scored: ModelProfilesFile = load_required(&out(cfg, MODEL_PROFILES), "score")?;
    let mut models = ModelProfiles::new();
    for p in scored.models.iter().flat_map(|m| m.profiles.iter()) {
        models.insert(p.clone());
    }
    let model_ids = models.model_ids();
    Ok(match cfg.score_mode {
        ScoreMode::Standardized => Prepared {
            human: standardize_human(&human.set, cfg.standardize)?,
            models: models.standardized(cfg.standardize)?,
            model_ids,
        },
        ScoreMode::Raw => Prepared { human: human.set, models, model_ids },
    })
}

pub fn leakage_spec(cfg: &RunConfig, model: &str, target: Language, include_monolingual: bool) -> LeakageSpec {
    let mut spec = LeakageSpec::new(model, target);
    spec.include_monolingual = include_monolingual;
    spec.grouping = cfg.grouping;
    spec.alpha = cfg.alpha;
    spec.bonferroni = cfg.bonferroni;
    spec.score_mode = cfg.score_mode;
    spec.lmm.method = cfg.method;
    spec
}

/// Every (model, predictor set, target) fit, in that order.
pub fn fit_all(cfg: &RunConfig, registry: &Registry, prepared: &Prepared) -> Result<Vec<LeakageResult>> {
    let has_monolingual = prepared.models.iter().any(|p| matches!(p.source, Source::MonolingualModel(_)));
    let mut results = Vec::new();
    for model in &prepared.model_ids {
        let variants: &[bool] =
            if has_monolingual && cfg.monolingual_models.contains(model) { &[false, true] } else { &[false] };
        for &include in variants {
            for target in registry.language_codes() {
                let spec = leakage_spec(cfg, model, target.clone(), include);
                let design = assemble_design(&prepared.human, &prepared.models, &spec, registry)?;
                results.push(fit_leakage(&spec, &design)?);
            }
        }
    }
    Ok(results)
}

pub fn fit(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let prepared = prepare(cfg)?;
    let results = fit_all(cfg, &registry, &prepared)?;
    let significant = results.iter().flat_map(|r| &r.per_predictor).filter(|e| e.significant).count();
    let boundary = results.iter().filter(|r| r.fit.metadata.boundary_lower || r.fit.metadata.boundary_upper).count();
    let dropped: usize = results.iter().map(|r| r.n_dropped).sum();
    let n = results.len();
    save(&out(cfg, LEAKAGE_RESULTS), &LeakageFile { standardize: cfg.standardize, results })?;
    Ok(Summary::new("fit")
        .with("fits", n)
        .with("significant", significant)
        .with("boundary_fits", boundary)
        .with("dropped_rows", dropped))
}

pub fn leaks(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let prepared = prepare(cfg)?;
    if cfg.score_mode == ScoreMode::Raw {
        return Err(Error::Config("leaked-trait extraction needs standardized profiles".into()));
    }
    let mut leaks = Vec::new();
    for model in &prepared.model_ids {
        for target in registry.language_codes() {
            let Some(model_target) = prepared.models.get(&Source::Model(model.clone()), target) else { continue };
            let empty = StereotypeProfile::new(target.clone(), Source::Human, stereoleak_core::ScoreScale::Standardized);
            let human_target = prepared.human.profile(target).unwrap_or(&empty);
            for source in registry.language_codes().filter(|s| *s != target) {
                let Some(human_source) = prepared.human.profile(source) else { continue };
                leaks.extend(extract_leaked_traits(model_target, human_target, human_source, &registry, cfg.extraction)?);
            }
        }
    }
    let n = leaks.len();
    save(&out(cfg, LEAKED_TRAITS), &LeaksFile { standardize: cfg.standardize, params: cfg.extraction, leaks })?;
    Ok(Summary::new("leaks").with("leaked_traits", n))
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes flow graphs, coefficient tables and radar series under `report/`.
pub fn report(cfg: &RunConfig) -> Result<Summary> {
    let registry = registry(cfg)?;
    let file: LeakageFile = load_required(&out(cfg, LEAKAGE_RESULTS), "fit")?;
    let dir = cfg.out.join(REPORT_DIR);
    let (flows, edges) = write_flows(&dir, &file.results, cfg.cross_only)?;
    let tables = write_tables(&dir, &file.results)?;

    let mut radars = 0;
    let human_path = out(cfg, HUMAN_PROFILES);
    if human_path.exists() {
        let human: HumanProfilesFile = crate::results::load(&human_path)?;
        for g in registry.groups() {
            let complete: Vec<&StereotypeProfile> = registry
                .language_codes()
                .filter_map(|l| human.set.profile(l))
                .filter(|p| registry.trait_pairs().iter().all(|tp| p.get(&g.id, &tp.id).is_some()))
                .collect();
            if complete.is_empty() {
                continue;
            }
            let data = radar(&complete, &g.id, &registry)?;
            let stem = dir.join("radar").join(file_stem(g.id.as_str()));
            write_file(&stem.with_extension("csv"), &radar_csv(&data))?;
            write_file(&stem.with_extension("json"), &to_json(&RadarFile { radar: data }))?;
            radars += 1;
        }
    }
    Ok(Summary::new("report").with("flows", flows).with("edges", edges).with("tables", tables).with("radars", radars))
}

/// One DOT and one JSON flow file per model, from fits without the
/// monolingual predictor. Returns (graphs, edges).
pub fn write_flows(dir: &Path, results: &[LeakageResult], cross_only: bool) -> Result<(usize, usize)> {
    let mut models: Vec<&str> = results.iter().map(|r| r.spec.model_id.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let mut edges = 0;
    for m in &models {
        let rs: Vec<LeakageResult> =
            results.iter().filter(|r| r.spec.model_id == *m && !r.spec.include_monolingual).cloned().collect();
        if rs.is_empty() {
            continue;
        }
        let graph = flow_graph(&rs, cross_only)?;
        edges += graph.edges.len();
        let stem = dir.join(format!("flow_{}", file_stem(m)));
        write_file(&stem.with_extension("dot"), &flow_dot(&graph))?;
        write_file(&stem.with_extension("json"), &to_json(&FlowFile { cross_only, graph }))?;
    }
    Ok((models.len(), edges))
}

/// `coefficients.tsv` and `coefficients.txt`. Returns the number of matrices.
pub fn write_tables(dir: &Path, results: &[LeakageResult]) -> Result<usize> {
    let matrices = coefficient_matrices(results)?;
    write_file(&dir.join("coefficients.tsv"), &tables_tsv(&matrices))?;
    write_file(&dir.join("coefficients.txt"), &tables_text(&matrices))?;
    Ok(matrices.len())
}

pub fn simulate(cfg: &RunConfig) -> Result<Summary> {
    let sim = SimConfig { seed: cfg.seed, reps: cfg.reps, alpha: cfg.alpha, method: cfg.method, ..Default::default() };
    let file = simulate::run(&sim)?;
    save(&out(cfg, SIMULATION), &file)?;
    let mut s = Summary::new("simulate").with("seed", sim.seed).with("reps", sim.reps);
    for c in &file.recovery.coefficients {
        s = s.with(format!("mean_{}", c.name), format!("{:.4}", c.mean_estimate));
        s = s.with(format!("coverage_{}", c.name), format!("{:.3}", c.coverage));
    }
    for c in file.null.coefficients.iter().skip(1) {
        s = s.with(format!("null_flag_{}", c.name), format!("{:.3}", c.flag_rate));
    }
    Ok(s.with("null_no_flag", format!("{:.3}", file.null.no_flag_rate)))
}
