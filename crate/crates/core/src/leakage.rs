//! The leakage regression: a model's target-language profile regressed on
//! the human profiles of every source language (and, optionally, on a
//! monolingual model of the target language), with a random intercept per
//! social group. A positive coefficient with p below alpha marks leakage from
//! that source.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixedfx::{fit_lmm, pearson, DesignMatrix, FitMethod, LmmConfig, MixedFit};
use crate::profile::{CellKey, ScoreScale, Source, StereotypeProfile};
use crate::registry::{GroupCategory, GroupId, Language, PairId, Pole, Registry};
use crate::scoring::{standardize, StandardizeMode};
use crate::survey::HumanProfileSet;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Random-intercept grouping factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    #[default]
    SocialGroup,
    TraitPair,
}

/// Whether the regression runs on z-scored or on raw profiles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreMode {
    #[default]
    Standardized,
    Raw,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predictor {
    Human(Language),
    MonolingualModel(Language),
}

impl Predictor {
    pub fn language(&self) -> &Language {
        match self {
            Predictor::Human(l) | Predictor::MonolingualModel(l) => l,
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Human(l) => write!(f, "Human({l})"),
            Predictor::MonolingualModel(l) => write!(f, "MonolingualModel({l})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageSpec {
    pub model_id: String,
    pub target_language: Language,
    /// Source languages whose human profiles enter as predictors, in order.
    pub predictors: Vec<Language>,
    pub include_monolingual: bool,
    pub grouping: Grouping,
    pub alpha: f64,
    /// Divide alpha by the number of tested predictors.
    pub bonferroni: bool,
    pub score_mode: ScoreMode,
    pub lmm: LmmConfig,
}

impl LeakageSpec {
    pub fn new(model_id: impl Into<String>, target_language: Language) -> Self {
        Self {
            model_id: model_id.into(),
            target_language,
            predictors: Language::canonical().to_vec(),
            include_monolingual: false,
            grouping: Grouping::SocialGroup,
            alpha: DEFAULT_ALPHA,
            bonferroni: false,
            score_mode: ScoreMode::Standardized,
            lmm: LmmConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::InvalidParameter("no predictors".into()));
        }
        let distinct: BTreeSet<&Language> = self.predictors.iter().collect();
        if distinct.len() != self.predictors.len() {
            return Err(Error::InvalidParameter("duplicate predictor languages".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    pub fn predictor_list(&self) -> Vec<Predictor> {
        let mut v: Vec<Predictor> = self.predictors.iter().cloned().map(Predictor::Human).collect();
        if self.include_monolingual {
            v.push(Predictor::MonolingualModel(self.target_language.clone()));
        }
        v
    }

    pub fn effective_alpha(&self) -> f64 {
        if self.bonferroni {
            self.alpha / self.predictor_list().len() as f64
        } else {
            self.alpha
        }
    }
}

/// Model profiles available to the assembler, keyed by (source, language).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelProfiles {
    profiles: Vec<StereotypeProfile>,
}

impl ModelProfiles {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: StereotypeProfile) {
        self.profiles.retain(|p| !(p.source == profile.source && p.language == profile.language));
        self.profiles.push(profile);
        self.profiles.sort_by(|a, b| (&a.source, &a.language).cmp(&(&b.source, &b.language)));
    }

    pub fn get(&self, source: &Source, language: &Language) -> Option<&StereotypeProfile> {
        self.profiles.iter().find(|p| &p.source == source && &p.language == language)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StereotypeProfile> {
        self.profiles.iter()
    }

    pub fn model_ids(&self) -> Vec<String> {
        let ids: BTreeSet<String> = self
            .profiles
            .iter()
            .filter_map(|p| match &p.source {
                Source::Model(m) => Some(m.clone()),
                _ => None,
            })
            .collect();
        ids.into_iter().collect()
    }

    /// The monolingual model profile for a language; an error if several exist.
    pub fn monolingual(&self, language: &Language) -> Result<Option<&StereotypeProfile>> {
        let found: Vec<&StereotypeProfile> = self
            .profiles
            .iter()
            .filter(|p| matches!(p.source, Source::MonolingualModel(_)) && &p.language == language)
            .collect();
        match found.len() {
            0 => Ok(None),
            1 => Ok(Some(found[0])),
            _ => Err(Error::Consistency(format!("several monolingual profiles for {language}"))),
        }
    }

    /// Z-scores every profile.
    pub fn standardized(&self, mode: StandardizeMode) -> Result<Self> {
        Ok(Self { profiles: self.profiles.iter().map(|p| standardize(p, mode)).collect::<Result<_>>()? })
    }
}

/// Z-scores every language profile of a human set. Empty profiles are dropped.
pub fn standardize_human(set: &HumanProfileSet, mode: StandardizeMode) -> Result<HumanProfileSet> {
    let mut out = set.clone();
    out.profiles = set
        .profiles
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .map(|(l, p)| Ok((l.clone(), standardize(p, mode)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembledDesign {
    pub design: DesignMatrix,
    pub predictors: Vec<Predictor>,
    pub n_dropped: usize,
    /// Missing-cell reason -> number of rows it affected.
    pub dropped_reasons: BTreeMap<String, usize>,
}

fn check_scale(p: &StereotypeProfile, mode: ScoreMode) -> Result<()> {
    if mode == ScoreMode::Standardized && p.scale != ScoreScale::Standardized {
        return Err(Error::Validation(format!(
            "profile {} / {} is on scale {}, expected Standardized",
            p.source,
            p.language,
            p.scale.name()
        )));
    }
    Ok(())
}

/// One row per (group, pair) with the response and every predictor present.
pub fn assemble_design(
    human: &HumanProfileSet,
    models: &ModelProfiles,
    spec: &LeakageSpec,
    registry: &Registry,
) -> Result<AssembledDesign> {
    spec.validate()?;
    let response_source = Source::Model(spec.model_id.clone());
    let response = models.get(&response_source, &spec.target_language);
    if let Some(r) = response {
        check_scale(r, spec.score_mode)?;
    }
    let predictors = spec.predictor_list();
    let mut columns: Vec<Option<&StereotypeProfile>> = Vec::with_capacity(predictors.len());
    for pred in &predictors {
        let prof = match pred {
            Predictor::Human(l) => {
                registry.require_language(l)?;
                human.profile(l).filter(|p| !p.is_empty())
            }
            Predictor::MonolingualModel(l) => models.monolingual(l)?,
        };
        if let Some(p) = prof {
            check_scale(p, spec.score_mode)?;
        }
        columns.push(prof);
    }

    let p = predictors.len() + 1;
    let mut y = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut groups = Vec::new();
    let mut meta = Vec::new();
    let mut dropped = 0usize;
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    let response_reason = format!("missing response {response_source} in {}", spec.target_language);

    for g in registry.groups() {
        for tp in registry.trait_pairs() {
            let mut missing = false;
            let yv = response.and_then(|r| r.value(&g.id, &tp.id));
            if yv.is_none() {
                *reasons.entry(response_reason.clone()).or_default() += 1;
                missing = true;
            }
            let mut xs = vec![1.0];
            for (pred, col) in predictors.iter().zip(&columns) {
                match col.and_then(|c| c.value(&g.id, &tp.id)) {
                    Some(v) => xs.push(v),
                    None => {
                        *reasons.entry(format!("missing predictor {pred}")).or_default() += 1;
                        missing = true;
                    }
                }
            }
            if missing {
                dropped += 1;
                continue;
            }
            y.push(yv.expect("checked"));
            rows.extend(xs);
            groups.push(match spec.grouping {
                Grouping::SocialGroup => g.id.to_string(),
                Grouping::TraitPair => tp.id.to_string(),
            });
            meta.push(CellKey { group: g.id.clone(), pair: tp.id.clone() });
        }
    }
    if y.is_empty() {
        return Err(Error::Empty(format!(
            "no complete rows for {} / {} ({dropped} dropped)",
            spec.model_id, spec.target_language
        )));
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(predictors.iter().map(ToString::to_string));
    let x = Matrix::from_row_major(y.len(), p, rows)?;
    let design = DesignMatrix::new(y, x, names, groups, meta)?;
    Ok(AssembledDesign { design, predictors, n_dropped: dropped, dropped_reasons: reasons })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorEffect {
    pub predictor: Predictor,
    pub coefficient: f64,
    pub se: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// The significance rule: a positive coefficient with p below alpha.
pub fn is_significant(coefficient: f64, p_value: f64, alpha: f64) -> bool {
    coefficient > 0.0 && p_value < alpha
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageResult {
    pub spec: LeakageSpec,
    pub fit: MixedFit,
    pub per_predictor: Vec<PredictorEffect>,
    pub n_rows: usize,
    pub n_dropped: usize,
    pub dropped_reasons: BTreeMap<String, usize>,
}

impl LeakageResult {
    pub fn effect(&self, predictor: &Predictor) -> Option<&PredictorEffect> {
        self.per_predictor.iter().find(|e| &e.predictor == predictor)
    }

    pub fn intercept(&self) -> f64 {
        self.fit.beta[0]
    }
}

/// Fits the mixed model and classifies each predictor.
pub fn fit_leakage(spec: &LeakageSpec, assembled: &AssembledDesign) -> Result<LeakageResult> {
    spec.validate()?;
    if assembled.predictors != spec.predictor_list() {
        return Err(Error::MismatchedKeys("design predictors differ from the spec".into()));
    }
    let mut fit = fit_lmm(&assembled.design, &spec.lmm)?;
    fit.metadata.grouping = match spec.grouping {
        Grouping::SocialGroup => "social group".into(),
        Grouping::TraitPair => "trait pair".into(),
    };
    let alpha = spec.effective_alpha();
    let per_predictor = assembled
        .predictors
        .iter()
        .enumerate()
        .map(|(j, pred)| {
            let (c, s, p) = (fit.beta[j + 1], fit.se[j + 1], fit.p_values[j + 1]);
            PredictorEffect { predictor: pred.clone(), coefficient: c, se: s, p_value: p, significant: is_significant(c, p, alpha) }
        })
        .collect();
    Ok(LeakageResult {
        spec: spec.clone(),
        n_rows: assembled.design.n(),
        n_dropped: assembled.n_dropped,
        dropped_reasons: assembled.dropped_reasons.clone(),
        fit,
        per_predictor,
    })
}

/// Monolingual-model coefficients per target language, in EN, RU, ZH, HI order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonolingualTable {
    pub model_id: String,
    pub languages: Vec<Language>,
    pub coefficients: Vec<f64>,
    pub p_values: Vec<f64>,
}

pub fn monolingual_report(results: &[LeakageResult]) -> Result<MonolingualTable> {
    let mut model_id: Option<&str> = None;
    let mut languages = Vec::new();
    let mut coefficients = Vec::new();
    let mut p_values = Vec::new();
    for lang in Language::canonical() {
        let r = results
            .iter()
            .find(|r| r.spec.target_language == lang && r.spec.include_monolingual)
            .ok_or_else(|| Error::Empty(format!("no monolingual-variant result for {lang}")))?;
        let e = r
            .effect(&Predictor::MonolingualModel(lang.clone()))
            .ok_or_else(|| Error::Empty(format!("result for {lang} lacks the monolingual predictor")))?;
        match model_id {
            None => model_id = Some(&r.spec.model_id),
            Some(m) if m != r.spec.model_id => {
                return Err(Error::MismatchedKeys(format!("results from {m} and {}", r.spec.model_id)))
            }
            _ => {}
        }
        languages.push(lang);
        coefficients.push(e.coefficient);
        p_values.push(e.p_value);
    }
    Ok(MonolingualTable { model_id: model_id.unwrap_or_default().into(), languages, coefficients, p_values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryCorrelation {
    pub category: GroupCategory,
    pub mean_r: f64,
    /// (group, language pair) correlations averaged.
    pub n_correlations: usize,
    pub groups_used: usize,
    /// Groups with fewer than two complete language profiles.
    pub groups_skipped: usize,
    /// Language pairs skipped for zero variance.
    pub pairs_skipped: usize,
}

/// Mean Pearson correlation of complete 16-pair profiles between every
/// unordered pair of languages, over the groups of a category.
pub fn category_correlation(
    human: &HumanProfileSet,
    category: GroupCategory,
    registry: &Registry,
) -> Result<CategoryCorrelation> {
    let mut rs = Vec::new();
    let (mut used, mut skipped_groups, mut skipped_pairs) = (0, 0, 0);
    for g in registry.groups().iter().filter(|g| g.category == category) {
        let vectors: Vec<Vec<f64>> = registry
            .language_codes()
            .filter_map(|l| {
                let prof = human.profile(l)?;
                registry.trait_pairs().iter().map(|tp| prof.value(&g.id, &tp.id)).collect::<Option<Vec<f64>>>()
            })
            .collect();
        if vectors.len() < 2 {
            skipped_groups += 1;
            continue;
        }
        used += 1;
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                match pearson(&vectors[i], &vectors[j]) {
                    Ok(r) => rs.push(r),
                    Err(Error::Degenerate(_)) => skipped_pairs += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if rs.is_empty() {
        return Err(Error::Empty(format!("no computable language pair for {category:?}")));
    }
    Ok(CategoryCorrelation {
        category,
        mean_r: rs.iter().sum::<f64>() / rs.len() as f64,
        n_correlations: rs.len(),
        groups_used: used,
        groups_skipped: skipped_groups,
        pairs_skipped: skipped_pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    /// Poles per group taken from the top of the model ranking.
    pub k: usize,
    /// Minimum source-language human association toward the pole (z-units).
    pub theta: f64,
    /// Target-language human association must stay below this (z-units).
    pub target_ceiling: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self { k: 5, theta: 0.5, target_ceiling: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakedTrait {
    pub source_language: Language,
    pub target_language: Language,
    pub model_id: String,
    pub group: GroupId,
    pub pair: PairId,
    pub pole: Pole,
    /// English name of the pole.
    pub trait_name: String,
    /// 1 = the pole the model associates most strongly with the group.
    pub model_rank: usize,
    pub model_value: f64,
    /// Absent when no target-language annotator rated the group.
    pub human_target_value: Option<f64>,
    pub human_source_value: f64,
}

/// Poles the target-language model associates with a group that target
/// humans do not, but source humans do.
pub fn extract_leaked_traits(
    model_target: &StereotypeProfile,
    human_target: &StereotypeProfile,
    human_source: &StereotypeProfile,
    registry: &Registry,
    params: ExtractionParams,
) -> Result<Vec<LeakedTrait>> {
    if params.k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(params.theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta {} must be positive", params.theta)));
    }
    for p in [model_target, human_target, human_source] {
        check_scale(p, ScoreMode::Standardized)?;
    }
    if model_target.language != human_target.language {
        return Err(Error::MismatchedKeys("model and human target languages differ".into()));
    }
    let model_id = model_target.source.model_id().unwrap_or_default().to_string();

    let mut out = Vec::new();
    for g in registry.groups() {
        let mut poles: Vec<(usize, Pole, f64)> = Vec::new();
        for (pi, tp) in registry.trait_pairs().iter().enumerate() {
            if let Some(d) = model_target.value(&g.id, &tp.id) {
                poles.push((pi, Pole::Right, d));
                poles.push((pi, Pole::Left, -d));
            }
        }
        poles.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        for (rank0, &(pi, pole, mv)) in poles.iter().take(params.k).enumerate() {
            let tp = &registry.trait_pairs()[pi];
            let toward = |prof: &StereotypeProfile| prof.value(&g.id, &tp.id).map(|v| v * pole.sign());
            let Some(src) = toward(human_source) else { continue };
            let tgt = toward(human_target);
            if src >= params.theta && tgt.map_or(true, |t| t < params.target_ceiling) {
                out.push(LeakedTrait {
                    source_language: human_source.language.clone(),
                    target_language: model_target.language.clone(),
                    model_id: model_id.clone(),
                    group: g.id.clone(),
                    pair: tp.id.clone(),
                    pole,
                    trait_name: tp.pole_name(pole).to_string(),
                    model_rank: rank0 + 1,
                    model_value: mv,
                    human_target_value: tgt,
                    human_source_value: src,
                });
            }
        }
    }
    // stable: ties keep registry group order
    out.sort_by_key(|t| t.model_rank);
    Ok(out)
}

/// REML unless the spec says otherwise; exported for callers building specs.
pub fn default_method() -> FitMethod {
    FitMethod::Reml
}
