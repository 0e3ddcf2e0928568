//! Human survey responses: consistency checks, the attention-check gate,
//! aggregation into per-language profiles, and demographic tallies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{CellKey, ScoreScale, Source, StereotypeProfile};
use crate::registry::{GroupCategory, GroupId, Language, PairId, Registry};
use crate::stats;

/// Minimum number of groups a respondent must mark as familiar.
pub const MIN_FAMILIAR_GROUPS: usize = 4;
pub const DEFAULT_REQUIRED_CHECKS: usize = 4;
pub const DEFAULT_MIN_ANNOTATORS: u32 = 5;
pub const NO_ANSWER: &str = "no answer";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionCheck {
    pub check_id: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub language: Language,
    pub familiar_groups: BTreeSet<GroupId>,
    pub ratings: BTreeMap<GroupId, BTreeMap<PairId, f64>>,
    pub attention_checks: Vec<AttentionCheck>,
    pub demographics: Option<BTreeMap<String, String>>,
}

impl SurveyResponse {
    pub fn n_ratings(&self) -> usize {
        self.ratings.values().map(BTreeMap::len).sum()
    }

    /// Checks identifiers against the registry and the survey's own rules:
    /// ratings within [-50, 50], only familiar groups rated, at least four
    /// familiar groups, and every rated group rated on every trait pair.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        let who = &self.respondent_id;
        registry.require_language(&self.language)?;
        for g in &self.familiar_groups {
            registry.require_group(g)?;
        }
        if self.familiar_groups.len() < MIN_FAMILIAR_GROUPS {
            return Err(Error::Consistency(format!(
                "respondent {who} marked {} familiar groups, at least {MIN_FAMILIAR_GROUPS} required",
                self.familiar_groups.len()
            )));
        }
        for (g, pairs) in &self.ratings {
            if !self.familiar_groups.contains(g) {
                return Err(Error::Consistency(format!(
                    "respondent {who} rated group {g} which is not marked familiar"
                )));
            }
            for (p, &v) in pairs {
                registry.validate_reference(&self.language, g, p)?;
                ScoreScale::BipolarSlider.check_pole(v)?;
            }
            if let Some(missing) = registry.trait_pairs().iter().find(|tp| !pairs.contains_key(&tp.id)) {
                return Err(Error::Consistency(format!(
                    "respondent {who} rated group {g} but not trait pair {}",
                    missing.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageGate {
    pub total: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub required_checks: usize,
    pub total: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub per_language: BTreeMap<Language, LanguageGate>,
    /// Respondents failed because they had fewer check records than required.
    pub missing_checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOutcome {
    pub passed: Vec<SurveyResponse>,
    pub failed: Vec<SurveyResponse>,
    pub report: QualityReport,
}

/// A response passes iff it carries at least `required_checks` check records
/// and every recorded check passed. Responses without enough records fail.
pub fn quality_gate(responses: Vec<SurveyResponse>, required_checks: usize) -> GateOutcome {
    let mut report = QualityReport { required_checks, ..Default::default() };
    let mut passed = Vec::new();
    let mut failed = Vec::new();
    for r in responses {
        let entry = report.per_language.entry(r.language.clone()).or_default();
        entry.total += 1;
        report.total += 1;
        let complete = r.attention_checks.len() >= required_checks;
        if !complete {
            report.missing_checks.push(r.respondent_id.clone());
        }
        if complete && r.attention_checks.iter().all(|c| c.passed) {
            entry.passed += 1;
            report.passed += 1;
            passed.push(r);
        } else {
            failed.push(r);
        }
    }
    report.pass_rate = if report.total == 0 { 0.0 } else { report.passed as f64 / report.total as f64 };
    GateOutcome { passed, failed, report }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    #[default]
    Mean,
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub min_annotators: u32,
    pub aggregator: Aggregator,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self { min_annotators: DEFAULT_MIN_ANNOTATORS, aggregator: Aggregator::Mean }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub language: Language,
    pub group: GroupId,
    pub annotators: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageFlag {
    pub language: Language,
    pub group: GroupId,
    pub annotators: u32,
    pub required: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanProfileSet {
    pub aggregator: Aggregator,
    pub min_annotators: u32,
    pub profiles: BTreeMap<Language, StereotypeProfile>,
    pub coverage: Vec<Coverage>,
    pub flags: Vec<CoverageFlag>,
}

impl HumanProfileSet {
    pub fn profile(&self, language: &Language) -> Option<&StereotypeProfile> {
        self.profiles.get(language)
    }

    pub fn annotators(&self, language: &Language, group: &GroupId) -> u32 {
        self.coverage
            .iter()
            .find(|c| &c.language == language && &c.group == group)
            .map_or(0, |c| c.annotators)
    }

    pub fn is_flagged(&self, language: &Language, group: &GroupId) -> bool {
        self.flags.iter().any(|f| &f.language == language && &f.group == group)
    }
}

/// Orders responses by respondent id and removes exact duplicates; two
/// different responses under one id are an error.
fn canonical_order(responses: &[SurveyResponse]) -> Result<Vec<&SurveyResponse>> {
    let mut sorted: Vec<&SurveyResponse> = responses.iter().collect();
    sorted.sort_by(|a, b| a.respondent_id.cmp(&b.respondent_id));
    let mut out: Vec<&SurveyResponse> = Vec::with_capacity(sorted.len());
    for r in sorted {
        if let Some(last) = out.last() {
            if last.respondent_id == r.respondent_id {
                if *last == r {
                    continue;
                }
                return Err(Error::Consistency(format!(
                    "conflicting responses for respondent {}",
                    r.respondent_id
                )));
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Averages gated responses into one Human profile per language.
///
/// Cells with no annotators are absent. Shared groups below the minimum are
/// flagged in every language; non-shared groups only in their origin language.
pub fn aggregate_human_scores(
    passed: &[SurveyResponse],
    registry: &Registry,
    config: AggregationConfig,
) -> Result<HumanProfileSet> {
    let ordered = canonical_order(passed)?;

    // (language, group) -> annotators; (language, group, pair) -> ratings
    let mut annotators: BTreeMap<(Language, GroupId), u32> = BTreeMap::new();
    let mut ratings: BTreeMap<(Language, GroupId, PairId), Vec<f64>> = BTreeMap::new();
    for r in &ordered {
        for (g, pairs) in &r.ratings {
            *annotators.entry((r.language.clone(), g.clone())).or_default() += 1;
            for (p, &v) in pairs {
                ratings.entry((r.language.clone(), g.clone(), p.clone())).or_default().push(v);
            }
        }
    }

    let mut profiles = BTreeMap::new();
    for lang in registry.language_codes() {
        profiles.insert(
            lang.clone(),
            StereotypeProfile::new(lang.clone(), Source::Human, ScoreScale::BipolarSlider),
        );
    }
    for ((lang, g, p), vals) in &ratings {
        let profile = profiles
            .get_mut(lang)
            .ok_or_else(|| Error::Unknown { kind: "language", token: lang.to_string() })?;
        let value = match config.aggregator {
            Aggregator::Mean => stats::mean(vals),
            Aggregator::Median => stats::median(vals),
        }
        .expect("non-empty rating list");
        profile.insert(CellKey { group: g.clone(), pair: p.clone() }, value, vals.len() as u32)?;
    }

    let mut coverage = Vec::new();
    let mut flags = Vec::new();
    for lang in registry.language_codes() {
        for group in registry.groups() {
            let n = annotators.get(&(lang.clone(), group.id.clone())).copied().unwrap_or(0);
            coverage.push(Coverage { language: lang.clone(), group: group.id.clone(), annotators: n });
            let needs_minimum = match group.category {
                GroupCategory::NonSharedNonShared => group.origin_language.as_ref() == Some(lang),
                _ => true,
            };
            if needs_minimum && n < config.min_annotators {
                flags.push(CoverageFlag {
                    language: lang.clone(),
                    group: group.id.clone(),
                    annotators: n,
                    required: config.min_annotators,
                });
            }
        }
    }

    Ok(HumanProfileSet {
        aggregator: config.aggregator,
        min_annotators: config.min_annotators,
        profiles,
        coverage,
        flags,
    })
}

/// Frequency tables of demographic answers, per language and key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemographicReport {
    /// language -> key -> answer -> count
    pub per_language: BTreeMap<Language, BTreeMap<String, BTreeMap<String, u32>>>,
}

impl DemographicReport {
    pub fn is_empty(&self) -> bool {
        self.per_language.is_empty()
    }

    /// Share of `answer` for `key` in one language.
    pub fn share(&self, language: &Language, key: &str, answer: &str) -> Option<f64> {
        let table = self.per_language.get(language)?.get(key)?;
        let total: u32 = table.values().sum();
        if total == 0 {
            return None;
        }
        Some(f64::from(table.get(answer).copied().unwrap_or(0)) / f64::from(total))
    }

    /// Per-language shares of `answer` averaged over languages.
    pub fn averaged_share(&self, key: &str, answer: &str) -> Option<f64> {
        let shares: Vec<f64> =
            self.per_language.keys().filter_map(|l| self.share(l, key, answer)).collect();
        stats::mean(&shares)
    }
}

/// Tallies demographic answers. Keys are the union of `expected_keys` and
/// every key any respondent answered; a missing or blank answer counts as
/// [`NO_ANSWER`].
pub fn demographic_summary(responses: &[SurveyResponse], expected_keys: &[&str]) -> DemographicReport {
    let mut keys: BTreeSet<String> = expected_keys.iter().map(|k| k.to_string()).collect();
    for r in responses {
        if let Some(d) = &r.demographics {
            keys.extend(d.keys().cloned());
        }
    }
    let mut report = DemographicReport::default();
    for r in responses {
        let tables = report.per_language.entry(r.language.clone()).or_default();
        for key in &keys {
            let answer = r
                .demographics
                .as_ref()
                .and_then(|d| d.get(key))
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .unwrap_or(NO_ANSWER);
            *tables.entry(key.clone()).or_default().entry(answer.to_string()).or_default() += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{LanguageEntry, PoleForms, SocialGroup, TraitDimension, TraitPair};
    use alloc::vec;

    pub(crate) fn tiny_registry() -> Registry {
        let langs = ["EN", "RU"]
            .iter()
            .map(|c| LanguageEntry { code: Language::new(*c), display_name: c.to_string(), neutral_subject: None })
            .collect();
        let pair = |id: &str, l: &str, r: &str| TraitPair {
            id: PairId::new(id),
            left_pole: l.into(),
            right_pole: r.into(),
            dimension: TraitDimension::Agency,
            surface_forms: ["EN", "RU"]
                .iter()
                .map(|c| (Language::new(*c), PoleForms { left: l.into(), right: r.into() }))
                .collect(),
        };
        let group = |id: &str, cat, origin: Option<&str>| SocialGroup {
            id: GroupId::new(id),
            name: id.into(),
            category: cat,
            origin_language: origin.map(Language::new),
            surface_forms: ["EN", "RU"].iter().map(|c| (Language::new(*c), id.to_string())).collect(),
        };
        Registry::new(
            langs,
            vec![pair("powerless_powerful", "powerless", "powerful"), pair("cold_warm", "cold", "warm")],
            vec![
                group("woman", GroupCategory::SharedShared, None),
                group("man", GroupCategory::SharedShared, None),
                group("gay", GroupCategory::SharedShared, None),
                group("feminist", GroupCategory::SharedNonShared, None),
                group("vdv_soldier", GroupCategory::NonSharedNonShared, Some("RU")),
            ],
        )
        .unwrap()
    }

    fn response(id: &str, lang: &str, rated: &[(&str, f64)], checks: &[bool]) -> SurveyResponse {
        let mut familiar: BTreeSet<GroupId> =
            ["woman", "man", "gay", "feminist"].iter().map(|g| GroupId::new(*g)).collect();
        let mut ratings = BTreeMap::new();
        for (g, v) in rated {
            familiar.insert(GroupId::new(*g));
            let mut m = BTreeMap::new();
            m.insert(PairId::new("powerless_powerful"), *v);
            m.insert(PairId::new("cold_warm"), -*v);
            ratings.insert(GroupId::new(*g), m);
        }
        SurveyResponse {
            respondent_id: id.into(),
            language: Language::new(lang),
            familiar_groups: familiar,
            ratings,
            attention_checks: checks
                .iter()
                .enumerate()
                .map(|(i, &p)| AttentionCheck { check_id: format!("q{i}"), passed: p })
                .collect(),
            demographics: None,
        }
    }

    #[test]
    fn gate_rules() {
        let out = quality_gate(
            vec![
                response("a", "EN", &[], &[true, true, true, true]),
                response("b", "EN", &[], &[true, true, true, false]),
                response("c", "RU", &[], &[true, true]),
            ],
            4,
        );
        assert_eq!(out.passed.len(), 1);
        assert_eq!(out.failed.len(), 2);
        assert_eq!(out.report.missing_checks, vec!["c".to_string()]);
        assert_eq!(out.report.per_language[&Language::en()], LanguageGate { total: 2, passed: 1 });
        assert!((out.report.pass_rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn validate_catches_rule_breaks() {
        let reg = tiny_registry();
        let ok = response("a", "EN", &[("woman", 10.0)], &[]);
        ok.validate(&reg).unwrap();

        let mut few = ok.clone();
        few.familiar_groups = ["woman", "man", "gay"].iter().map(|g| GroupId::new(*g)).collect();
        assert!(matches!(few.validate(&reg), Err(Error::Consistency(_))));

        let mut unfamiliar = ok.clone();
        unfamiliar.familiar_groups.remove(&GroupId::new("woman"));
        unfamiliar.familiar_groups.insert(GroupId::new("vdv_soldier"));
        assert!(matches!(unfamiliar.validate(&reg), Err(Error::Consistency(_))));

        let out_of_range = response("a", "EN", &[("woman", 51.0)], &[]);
        assert!(matches!(out_of_range.validate(&reg), Err(Error::OutOfRange { .. })));

        let mut partial = ok.clone();
        partial.ratings.get_mut(&GroupId::new("woman")).unwrap().remove(&PairId::new("cold_warm"));
        assert!(matches!(partial.validate(&reg), Err(Error::Consistency(_))));
    }

    #[test]
    fn mean_of_five_and_flags() {
        let reg = tiny_registry();
        let vals = [10.0, -20.0, 30.0, 0.0, 5.0];
        let mut rs: Vec<SurveyResponse> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| response(&format!("en{i}"), "EN", &[("woman", v)], &[]))
            .collect();
        // four RU annotators for a shared group, five RU annotators for the RU-origin group
        for i in 0..4 {
            rs.push(response(&format!("ru{i}"), "RU", &[("woman", 1.0), ("vdv_soldier", 20.0)], &[]));
        }
        rs.push(response("ru4", "RU", &[("vdv_soldier", 20.0)], &[]));

        let set = aggregate_human_scores(&rs, &reg, AggregationConfig::default()).unwrap();
        let en = set.profile(&Language::en()).unwrap();
        let cell = en.get(&"woman".into(), &PairId::new("powerless_powerful")).unwrap();
        assert_eq!(cell.value, 5.0);
        assert_eq!(cell.n_observations, 5);
        assert!(!set.is_flagged(&Language::en(), &"woman".into()));
        assert!(set.is_flagged(&Language::ru(), &"woman".into()));

        // vdv: present in RU, absent in EN, no EN flag
        assert!(set.profile(&Language::ru()).unwrap().has_group(&"vdv_soldier".into()));
        assert!(!en.has_group(&"vdv_soldier".into()));
        assert!(!set.is_flagged(&Language::en(), &"vdv_soldier".into()));
        assert!(!set.is_flagged(&Language::ru(), &"vdv_soldier".into()));
        assert_eq!(set.annotators(&Language::en(), &"vdv_soldier".into()), 0);
        // shared groups nobody rated are flagged
        assert!(set.is_flagged(&Language::en(), &"man".into()));
    }

    #[test]
    fn conflicting_duplicates_rejected() {
        let reg = tiny_registry();
        let a = response("x", "EN", &[("woman", 1.0)], &[]);
        let b = response("x", "EN", &[("woman", 2.0)], &[]);
        assert!(aggregate_human_scores(&[a.clone(), a.clone()], &reg, AggregationConfig::default()).is_ok());
        assert!(aggregate_human_scores(&[a, b], &reg, AggregationConfig::default()).is_err());
    }

    #[test]
    fn median_option() {
        let reg = tiny_registry();
        let rs: Vec<SurveyResponse> = [1.0, 2.0, 40.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| response(&format!("r{i}"), "EN", &[("woman", v)], &[]))
            .collect();
        let cfg = AggregationConfig { aggregator: Aggregator::Median, ..Default::default() };
        let set = aggregate_human_scores(&rs, &reg, cfg).unwrap();
        assert_eq!(set.profile(&Language::en()).unwrap().value(&"woman".into(), &PairId::new("powerless_powerful")), Some(2.0));
    }

    #[test]
    fn demographics_no_answer_and_empty() {
        assert!(demographic_summary(&[], &["gender"]).is_empty());
        let rs = vec![response("a", "EN", &[], &[]), response("b", "EN", &[], &[])];
        let rep = demographic_summary(&rs, &["gender", "age"]);
        assert_eq!(rep.share(&Language::en(), "gender", NO_ANSWER), Some(1.0));
        assert_eq!(rep.share(&Language::en(), "age", NO_ANSWER), Some(1.0));
    }
}
