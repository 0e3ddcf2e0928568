//! Report data: leakage flow graphs, coefficient matrices and radar series.
//! Text rendering of these lives in the std crate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leakage::{LeakageResult, Predictor};
use crate::profile::{Source, StereotypeProfile};
use crate::registry::{GroupId, Language, Registry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    /// Human source language.
    pub source: Language,
    /// Language the model was probed in.
    pub target: Language,
    pub weight: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub model_id: String,
    pub sources: Vec<Language>,
    pub targets: Vec<Language>,
    pub edges: Vec<FlowEdge>,
}

fn common_model(results: &[LeakageResult]) -> Result<&str> {
    let first = results.first().ok_or_else(|| Error::Empty("no leakage results".into()))?;
    let id = first.spec.model_id.as_str();
    if let Some(other) = results.iter().find(|r| r.spec.model_id != id) {
        return Err(Error::MismatchedKeys(format!("results from {id} and {}", other.spec.model_id)));
    }
    Ok(id)
}

fn language_order(langs: BTreeSet<Language>) -> Vec<Language> {
    let canon = Language::canonical();
    let mut v: Vec<Language> = langs.into_iter().collect();
    v.sort_by_key(|l| (canon.iter().position(|c| c == l).unwrap_or(canon.len()), l.clone()));
    v
}

/// Significant human-source effects as edges; monolingual predictors are not flows.
pub fn flow_graph(results: &[LeakageResult], cross_only: bool) -> Result<FlowGraph> {
    let model_id = common_model(results)?.to_string();
    let mut sources = BTreeSet::new();
    let mut targets = BTreeSet::new();
    let mut edges = Vec::new();
    for r in results {
        let target = &r.spec.target_language;
        targets.insert(target.clone());
        for e in &r.per_predictor {
            let Predictor::Human(src) = &e.predictor else { continue };
            sources.insert(src.clone());
            if e.significant && !(cross_only && src == target) {
                edges.push(FlowEdge { source: src.clone(), target: target.clone(), weight: e.coefficient, p_value: e.p_value });
            }
        }
    }
    let sources = language_order(sources);
    let targets = language_order(targets);
    let pos = |v: &[Language], l: &Language| v.iter().position(|x| x == l);
    edges.sort_by_key(|e| (pos(&sources, &e.source), pos(&targets, &e.target)));
    Ok(FlowGraph { model_id, sources, targets, edges })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub coefficient: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Row of a coefficient matrix. The monolingual predictor differs per target,
/// so its effects share one row.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatrixRow {
    Human(Language),
    Monolingual,
}

impl fmt::Display for MatrixRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixRow::Human(l) => write!(f, "Human({l})"),
            MatrixRow::Monolingual => f.write_str("Monolingual"),
        }
    }
}

/// Source × target coefficient matrix of one model and predictor set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrix {
    pub model_id: String,
    /// True for fits that include the monolingual predictor.
    pub include_monolingual: bool,
    pub rows: Vec<MatrixRow>,
    pub targets: Vec<Language>,
    /// `cells[row][target]`, absent where the predictor was not in that fit.
    pub cells: Vec<Vec<Option<MatrixCell>>>,
}

/// One matrix per (model, predictor set), models in name order, plain fits first.
pub fn coefficient_matrices(results: &[LeakageResult]) -> Result<Vec<CoefficientMatrix>> {
    if results.is_empty() {
        return Err(Error::Empty("no leakage results".into()));
    }
    let mut by_model: BTreeMap<(&str, bool), Vec<&LeakageResult>> = BTreeMap::new();
    for r in results {
        by_model.entry((&r.spec.model_id, r.spec.include_monolingual)).or_default().push(r);
    }
    let canon = Language::canonical();
    let rank = |l: &Language| canon.iter().position(|c| c == l).unwrap_or(canon.len());
    let mut out = Vec::new();
    for ((model, include_monolingual), rs) in by_model {
        let targets = language_order(rs.iter().map(|r| r.spec.target_language.clone()).collect());
        if let Some(t) = targets.iter().find(|t| rs.iter().filter(|r| &r.spec.target_language == *t).count() > 1) {
            return Err(Error::MismatchedKeys(format!("several results for {model} / {t}")));
        }
        let rows: BTreeSet<MatrixRow> = rs
            .iter()
            .flat_map(|r| r.per_predictor.iter())
            .map(|e| match &e.predictor {
                Predictor::Human(l) => MatrixRow::Human(l.clone()),
                Predictor::MonolingualModel(_) => MatrixRow::Monolingual,
            })
            .collect();
        let mut rows: Vec<MatrixRow> = rows.into_iter().collect();
        rows.sort_by_key(|row| match row {
            MatrixRow::Human(l) => (0u8, rank(l), l.clone()),
            MatrixRow::Monolingual => (1, 0, Language::new("")),
        });
        let cells = rows
            .iter()
            .map(|row| {
                targets
                    .iter()
                    .map(|t| {
                        let r = rs.iter().find(|r| &r.spec.target_language == t)?;
                        let pred = match row {
                            MatrixRow::Human(l) => Predictor::Human(l.clone()),
                            MatrixRow::Monolingual => Predictor::MonolingualModel(t.clone()),
                        };
                        r.effect(&pred).map(|e| MatrixCell {
                            coefficient: e.coefficient,
                            p_value: e.p_value,
                            significant: e.significant,
                        })
                    })
                    .collect()
            })
            .collect();
        out.push(CoefficientMatrix { model_id: model.to_string(), include_monolingual, rows, targets, cells });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarSeries {
    pub language: Language,
    pub source: Source,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarData {
    pub group: GroupId,
    /// Right-pole names in registry trait order.
    pub axes: Vec<String>,
    pub series: Vec<RadarSeries>,
}

/// One series per profile over every trait pair for a group.
pub fn radar(profiles: &[&StereotypeProfile], group: &GroupId, registry: &Registry) -> Result<RadarData> {
    registry.require_group(group)?;
    if profiles.is_empty() {
        return Err(Error::Empty("no profiles for radar".into()));
    }
    let axes = registry.trait_pairs().iter().map(|tp| tp.right_pole.clone()).collect();
    let mut series = Vec::new();
    for p in profiles {
        let mut values = Vec::new();
        let mut missing = Vec::new();
        for tp in registry.trait_pairs() {
            match p.value(group, &tp.id) {
                Some(v) => values.push(v),
                None => missing.push(tp.id.to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::Validation(format!(
                "profile {} / {} lacks pairs for {group}: {}",
                p.source,
                p.language,
                missing.join(", ")
            )));
        }
        series.push(RadarSeries { language: p.language.clone(), source: p.source.clone(), values });
    }
    Ok(RadarData { group: group.clone(), axes, series })
}
