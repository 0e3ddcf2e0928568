//! Model association scores from probe records.
//!
//! Three per-pole scorers (template log-probability, weight sensitivity,
//! forced-choice counting) feed [`pair_differential`], which orients every
//! trait pair like the survey slider (right pole positive). [`standardize`]
//! then moves whole profiles onto z-units so human and model profiles can
//! share one regression.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{AssociationScore, CellKey, ScoreScale, Source, StereotypeProfile};
use crate::registry::{GroupId, Language, PairId, Pole, PoleForms, Registry};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProbeKind {
    LogProb,
    Sensitivity,
    ChatResponse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbePayload {
    LogProb {
        logprob_nats: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline_logprob_nats: Option<f64>,
    },
    Sensitivity {
        weight_change: f64,
    },
    ChatResponse {
        raw_text: String,
        repetition_index: u32,
    },
}

impl ProbePayload {
    pub fn kind(&self) -> ProbeKind {
        match self {
            Self::LogProb { .. } => ProbeKind::LogProb,
            Self::Sensitivity { .. } => ProbeKind::Sensitivity,
            Self::ChatResponse { .. } => ProbeKind::ChatResponse,
        }
    }
}

/// One raw model measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub model_id: String,
    pub language: Language,
    pub group: GroupId,
    pub pair: PairId,
    /// Absent for chat responses, which cover both poles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<Pole>,
    pub template_id: String,
    pub kind: ProbeKind,
    pub payload: ProbePayload,
}

impl ProbeRecord {
    /// Checks the payload invariants and that `kind` agrees with the payload.
    pub fn validate(&self) -> Result<()> {
        if self.payload.kind() != self.kind {
            return Err(Error::Consistency(format!(
                "record kind {:?} does not match payload {:?}",
                self.kind,
                self.payload.kind()
            )));
        }
        match &self.payload {
            ProbePayload::LogProb { logprob_nats, baseline_logprob_nats } => {
                if !logprob_nats.is_finite() || baseline_logprob_nats.is_some_and(|b| !b.is_finite()) {
                    return Err(Error::Validation("non-finite log-probability".into()));
                }
            }
            ProbePayload::Sensitivity { weight_change } => {
                if !weight_change.is_finite() || *weight_change < 0.0 {
                    return Err(Error::Validation(format!("weight_change {weight_change} must be a finite value >= 0")));
                }
            }
            ProbePayload::ChatResponse { .. } => {}
        }
        match (self.kind, self.pole) {
            (ProbeKind::ChatResponse, _) => Ok(()),
            (_, None) => Err(Error::Validation(format!("{:?} record without pole", self.kind))),
            _ => Ok(()),
        }
    }

    fn source(&self, monolingual: bool) -> Source {
        if monolingual {
            Source::MonolingualModel(self.model_id.clone())
        } else {
            Source::Model(self.model_id.clone())
        }
    }
}

/// A score for one pole of one (group, pair) in one language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleScore {
    pub source: Source,
    pub language: Language,
    pub group: GroupId,
    pub pair: PairId,
    pub pole: Pole,
    pub value: f64,
    pub scale: ScoreScale,
    pub n: u32,
}

type PoleKey<'a> = (&'a str, &'a Language, &'a GroupId, &'a PairId, Option<Pole>);

fn key_of(r: &ProbeRecord) -> PoleKey<'_> {
    (&r.model_id, &r.language, &r.group, &r.pair, r.pole)
}

fn common_key(records: &[ProbeRecord], kind: ProbeKind) -> Result<&ProbeRecord> {
    let first = records.first().ok_or_else(|| Error::Empty("no probe records".into()))?;
    for r in records {
        r.validate()?;
        if r.kind != kind {
            return Err(Error::MismatchedKeys(format!("expected {kind:?} records, found {:?}", r.kind)));
        }
        if key_of(r) != key_of(first) {
            return Err(Error::MismatchedKeys(format!(
                "records for {}/{}/{} mixed with {}/{}/{}",
                first.language, first.group, first.pair, r.language, r.group, r.pair
            )));
        }
    }
    Ok(first)
}

/// Template-averaged log-probability of a pole, optionally minus the
/// neutral-subject baseline.
pub fn ilps_score(records: &[ProbeRecord], normalize_by_baseline: bool, monolingual: bool) -> Result<PoleScore> {
    let first = common_key(records, ProbeKind::LogProb)?;
    let mut vals = Vec::with_capacity(records.len());
    for r in records {
        if let ProbePayload::LogProb { logprob_nats, baseline_logprob_nats } = r.payload {
            let v = if normalize_by_baseline {
                let base = baseline_logprob_nats.ok_or_else(|| {
                    Error::Validation(format!("template {} has no baseline log-probability", r.template_id))
                })?;
                logprob_nats - base
            } else {
                logprob_nats
            };
            vals.push(v);
        }
    }
    pole_score(first, monolingual, &vals, ScoreScale::LogProb, 1.0)
}

/// Negated mean weight change: a pole that needs less change to become the
/// top prediction scores higher.
pub fn set_score(records: &[ProbeRecord], monolingual: bool) -> Result<PoleScore> {
    let first = common_key(records, ProbeKind::Sensitivity)?;
    let vals: Vec<f64> = records
        .iter()
        .filter_map(|r| match r.payload {
            ProbePayload::Sensitivity { weight_change } => Some(weight_change),
            _ => None,
        })
        .collect();
    pole_score(first, monolingual, &vals, ScoreScale::Sensitivity, -1.0)
}

fn pole_score(first: &ProbeRecord, monolingual: bool, vals: &[f64], scale: ScoreScale, sign: f64) -> Result<PoleScore> {
    // sorting makes the sum independent of record order
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let value = sign * stats::mean(&sorted).ok_or_else(|| Error::Empty("no probe records".into()))?;
    let value = if value == 0.0 { 0.0 } else { value };
    Ok(PoleScore {
        source: first.source(monolingual),
        language: first.language.clone(),
        group: first.group.clone(),
        pair: first.pair.clone(),
        pole: first.pole.expect("validated"),
        value,
        scale,
        n: vals.len() as u32,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTally {
    pub left: u32,
    pub right: u32,
    pub unparseable: u32,
}

impl CountTally {
    pub fn parseable(&self) -> u32 {
        self.left + self.right
    }

    /// Exact fraction (numerator, denominator) for a pole.
    pub fn fraction(&self, pole: Pole) -> (u32, u32) {
        let num = match pole {
            Pole::Left => self.left,
            Pole::Right => self.right,
        };
        (num, self.parseable())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountScores {
    pub left: PoleScore,
    pub right: PoleScore,
    pub tally: CountTally,
    /// Raw texts that named neither or both poles.
    pub unparseable: Vec<String>,
}

/// Which pole, if exactly one, a chat response names. Occurrences of a form
/// that sit inside an occurrence of the other (e.g. "confident" inside
/// "unconfident") do not count.
pub fn classify_response(raw_text: &str, forms: &PoleForms) -> Option<Pole> {
    let text = raw_text.to_lowercase();
    let left = forms.left.trim().to_lowercase();
    let right = forms.right.trim().to_lowercase();
    let (long, short, long_pole) = if left.len() >= right.len() {
        (&left, &right, Pole::Left)
    } else {
        (&right, &left, Pole::Right)
    };
    let has_long = text.contains(long.as_str());
    let masked = if short.len() < long.len() && long.contains(short.as_str()) {
        text.replace(long.as_str(), "\u{0}")
    } else {
        text.clone()
    };
    let has_short = masked.contains(short.as_str());
    match (has_long, has_short) {
        (true, false) => Some(long_pole),
        (false, true) => Some(long_pole.opposite()),
        _ => None,
    }
}

/// Fractions of forced-choice responses choosing each pole.
pub fn count_score(records: &[ProbeRecord], forms: &PoleForms, monolingual: bool) -> Result<CountScores> {
    let first = records.first().ok_or_else(|| Error::Empty("no chat responses".into()))?;
    let mut seen = alloc::collections::BTreeSet::new();
    let mut tally = CountTally::default();
    let mut unparseable = Vec::new();
    for r in records {
        r.validate()?;
        if r.kind != ProbeKind::ChatResponse {
            return Err(Error::MismatchedKeys(format!("expected ChatResponse records, found {:?}", r.kind)));
        }
        if (&r.model_id, &r.language, &r.group, &r.pair) != (&first.model_id, &first.language, &first.group, &first.pair) {
            return Err(Error::MismatchedKeys(format!(
                "chat records for {}/{} mixed with {}/{}",
                first.group, first.pair, r.group, r.pair
            )));
        }
        let ProbePayload::ChatResponse { raw_text, repetition_index } = &r.payload else {
            unreachable!("validated kind");
        };
        if !seen.insert((r.template_id.clone(), *repetition_index)) {
            return Err(Error::Consistency(format!(
                "duplicate repetition index {repetition_index} for {}/{}",
                r.group, r.pair
            )));
        }
        match classify_response(raw_text, forms) {
            Some(Pole::Left) => tally.left += 1,
            Some(Pole::Right) => tally.right += 1,
            None => {
                tally.unparseable += 1;
                unparseable.push(raw_text.clone());
            }
        }
    }
    let n = tally.parseable();
    if n == 0 {
        return Err(Error::Unparseable { samples: unparseable.into_iter().take(3).collect() });
    }
    let make = |pole: Pole| {
        let (num, den) = tally.fraction(pole);
        PoleScore {
            source: first.source(monolingual),
            language: first.language.clone(),
            group: first.group.clone(),
            pair: first.pair.clone(),
            pole,
            value: f64::from(num) / f64::from(den),
            scale: ScoreScale::CountFraction,
            n,
        }
    };
    Ok(CountScores { left: make(Pole::Left), right: make(Pole::Right), tally, unparseable })
}

/// Right-pole score minus left-pole score.
pub fn pair_differential(left: &PoleScore, right: &PoleScore) -> Result<AssociationScore> {
    if left.pole != Pole::Left || right.pole != Pole::Right {
        return Err(Error::MismatchedKeys("pair_differential expects (left, right) pole scores".into()));
    }
    if (&left.source, &left.language, &left.group, &left.pair) != (&right.source, &right.language, &right.group, &right.pair) {
        return Err(Error::MismatchedKeys(format!(
            "left {}/{} vs right {}/{}",
            left.group, left.pair, right.group, right.pair
        )));
    }
    if left.scale != right.scale {
        return Err(Error::MismatchedKeys(format!(
            "scales {} and {} differ",
            left.scale.name(),
            right.scale.name()
        )));
    }
    let value = right.value - left.value;
    left.scale.check_cell(value)?;
    Ok(AssociationScore {
        group: left.group.clone(),
        pair: left.pair.clone(),
        language: left.language.clone(),
        source: left.source.clone(),
        value,
        scale: left.scale,
        n_observations: left.n.min(right.n),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StandardizeMode {
    /// One stratum: every (group, pair) cell of the profile.
    #[default]
    Pooled,
    /// One stratum per trait pair.
    PerPair,
}

/// z-scores a profile within its strata using the n-1 sample deviation.
pub fn standardize(profile: &StereotypeProfile, mode: StandardizeMode) -> Result<StereotypeProfile> {
    let mut strata: BTreeMap<Option<&PairId>, Vec<f64>> = BTreeMap::new();
    for (k, c) in profile.cells() {
        let key = match mode {
            StandardizeMode::Pooled => None,
            StandardizeMode::PerPair => Some(&k.pair),
        };
        strata.entry(key).or_default().push(c.value);
    }
    if strata.is_empty() {
        return Err(Error::Degenerate(format!("profile {} / {} is empty", profile.source, profile.language)));
    }
    let mut moments: BTreeMap<Option<PairId>, (f64, f64)> = BTreeMap::new();
    for (key, vals) in &strata {
        let label = key.map_or_else(|| "profile".to_string(), |p| format!("pair {p}"));
        if vals.len() < 2 {
            return Err(Error::Degenerate(format!("{label} has fewer than 2 cells")));
        }
        let m = stats::mean(vals).expect("non-empty");
        let sd = stats::sample_sd(vals).expect("n >= 2");
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::Degenerate(format!("{label} has zero variance")));
        }
        moments.insert(key.cloned(), (m, sd));
    }
    Ok(profile.map_values(ScoreScale::Standardized, |k: &CellKey, v| {
        let key = match mode {
            StandardizeMode::Pooled => None,
            StandardizeMode::PerPair => Some(k.pair.clone()),
        };
        let (m, sd) = moments[&key];
        (v - m) / sd
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoringMethod {
    Ilps { normalize_by_baseline: bool },
    Sensitivity,
    CountFraction,
}

impl ScoringMethod {
    /// Sensitivity if any sensitivity records exist, else log-probability,
    /// else chat counting.
    pub fn infer(records: &[ProbeRecord]) -> Option<Self> {
        let has = |k| records.iter().any(|r| r.kind == k);
        if has(ProbeKind::Sensitivity) {
            Some(Self::Sensitivity)
        } else if has(ProbeKind::LogProb) {
            Some(Self::Ilps { normalize_by_baseline: false })
        } else if has(ProbeKind::ChatResponse) {
            Some(Self::CountFraction)
        } else {
            None
        }
    }

    fn kind(self) -> ProbeKind {
        match self {
            Self::Ilps { .. } => ProbeKind::LogProb,
            Self::Sensitivity => ProbeKind::Sensitivity,
            Self::CountFraction => ProbeKind::ChatResponse,
        }
    }
}

/// Unstandardized per-language profiles built from one model's records.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredModel {
    pub profiles: BTreeMap<Language, StereotypeProfile>,
    /// Records of other kinds than the chosen method, ignored.
    pub ignored_records: usize,
    /// Chat responses that named neither or both poles.
    pub unparseable_responses: usize,
    /// (group, pair) keys skipped because one pole was missing or nothing parsed.
    pub skipped_keys: Vec<String>,
}

/// Scores every (language, group, pair) in a record set and forms the
/// bipolar differentials.
pub fn score_model(records: &[ProbeRecord], registry: &Registry, method: ScoringMethod, monolingual: bool) -> Result<ScoredModel> {
    let kind = method.kind();
    let mut ignored = 0usize;
    let mut buckets: BTreeMap<(String, Language, GroupId, PairId), Vec<ProbeRecord>> = BTreeMap::new();
    for r in records {
        if r.kind != kind {
            ignored += 1;
            continue;
        }
        registry.validate_reference(&r.language, &r.group, &r.pair)?;
        buckets
            .entry((r.model_id.clone(), r.language.clone(), r.group.clone(), r.pair.clone()))
            .or_default()
            .push(r.clone());
    }
    let mut profiles: BTreeMap<Language, StereotypeProfile> = BTreeMap::new();
    let mut unparseable = 0usize;
    let mut skipped = Vec::new();
    let scale = match method {
        ScoringMethod::Ilps { .. } => ScoreScale::LogProb,
        ScoringMethod::Sensitivity => ScoreScale::Sensitivity,
        ScoringMethod::CountFraction => ScoreScale::CountFraction,
    };
    for ((model, lang, group, pair), recs) in buckets {
        let (left, right) = match method {
            ScoringMethod::CountFraction => {
                let (_, forms) = registry.validate_reference(&lang, &group, &pair)?;
                match count_score(&recs, forms, monolingual) {
                    Ok(c) => {
                        unparseable += c.unparseable.len();
                        (c.left, c.right)
                    }
                    Err(Error::Unparseable { .. }) => {
                        unparseable += recs.len();
                        skipped.push(format!("{model}/{lang}/{group}/{pair}: no parseable responses"));
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            _ => {
                let (l, r): (Vec<ProbeRecord>, Vec<ProbeRecord>) =
                    recs.into_iter().partition(|r| r.pole == Some(Pole::Left));
                if l.is_empty() || r.is_empty() {
                    skipped.push(format!("{model}/{lang}/{group}/{pair}: missing pole"));
                    continue;
                }
                match method {
                    ScoringMethod::Ilps { normalize_by_baseline } => (
                        ilps_score(&l, normalize_by_baseline, monolingual)?,
                        ilps_score(&r, normalize_by_baseline, monolingual)?,
                    ),
                    _ => (set_score(&l, monolingual)?, set_score(&r, monolingual)?),
                }
            }
        };
        let diff = pair_differential(&left, &right)?;
        profiles
            .entry(lang.clone())
            .or_insert_with(|| StereotypeProfile::new(lang.clone(), diff.source.clone(), scale))
            .insert_score(diff)?;
    }
    Ok(ScoredModel { profiles, ignored_records: ignored, unparseable_responses: unparseable, skipped_keys: skipped })
}
