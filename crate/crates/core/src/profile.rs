//! Association scores and per-(source, language) stereotype profiles.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{GroupId, Language, PairId};

/// Scale a score is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScoreScale {
    /// Survey slider, -50 (left pole) to +50 (right pole).
    BipolarSlider,
    /// Natural-log probability.
    LogProb,
    /// Negated weight-change magnitude.
    Sensitivity,
    /// Fraction of forced-choice responses.
    CountFraction,
    /// z-units within a declared stratum.
    Standardized,
}

impl ScoreScale {
    pub fn name(self) -> &'static str {
        match self {
            Self::BipolarSlider => "BipolarSlider",
            Self::LogProb => "LogProb",
            Self::Sensitivity => "Sensitivity",
            Self::CountFraction => "CountFraction",
            Self::Standardized => "Standardized",
        }
    }

    /// Bounds check for a single-pole score.
    pub fn check_pole(self, value: f64) -> Result<()> {
        let ok = value.is_finite()
            && match self {
                Self::BipolarSlider => (-50.0..=50.0).contains(&value),
                Self::CountFraction => (0.0..=1.0).contains(&value),
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange { value, scale: self.name() })
        }
    }

    /// Bounds check for a bipolar (right minus left) cell value. A count
    /// fraction differential lies in [-1, 1].
    pub fn check_cell(self, value: f64) -> Result<()> {
        let ok = value.is_finite()
            && match self {
                Self::BipolarSlider => (-50.0..=50.0).contains(&value),
                Self::CountFraction => (-1.0..=1.0).contains(&value),
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange { value, scale: self.name() })
        }
    }
}

/// Who produced a score.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Human,
    Model(String),
    MonolingualModel(String),
}

impl Source {
    pub fn model_id(&self) -> Option<&str> {
        match self {
            Source::Human => None,
            Source::Model(m) | Source::MonolingualModel(m) => Some(m),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Human => f.write_str("Human"),
            Source::Model(m) => write!(f, "Model({m})"),
            Source::MonolingualModel(m) => write!(f, "MonolingualModel({m})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub group: GroupId,
    pub pair: PairId,
}

impl CellKey {
    pub fn new(group: impl Into<GroupId>, pair: impl Into<PairId>) -> Self {
        Self { group: group.into(), pair: pair.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub value: f64,
    pub n_observations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationScore {
    pub group: GroupId,
    pub pair: PairId,
    pub language: Language,
    pub source: Source,
    pub value: f64,
    pub scale: ScoreScale,
    pub n_observations: u32,
}

/// All scores of one source in one language, on one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereotypeProfile {
    pub language: Language,
    pub source: Source,
    pub scale: ScoreScale,
    #[serde(with = "cells_as_list")]
    cells: BTreeMap<CellKey, ProfileCell>,
}

impl StereotypeProfile {
    pub fn new(language: Language, source: Source, scale: ScoreScale) -> Self {
        Self { language, source, scale, cells: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: CellKey, value: f64, n_observations: u32) -> Result<()> {
        self.scale.check_cell(value)?;
        if self.source == Source::Human && n_observations == 0 {
            return Err(Error::Validation(format!(
                "human score for {}/{} with zero observations",
                key.group, key.pair
            )));
        }
        self.cells.insert(key, ProfileCell { value, n_observations });
        Ok(())
    }

    /// Adds a score after checking it belongs to this profile.
    pub fn insert_score(&mut self, score: AssociationScore) -> Result<()> {
        if score.language != self.language || score.source != self.source || score.scale != self.scale {
            return Err(Error::MismatchedKeys(format!(
                "score ({}, {}, {}) does not belong to profile ({}, {}, {})",
                score.source,
                score.language,
                score.scale.name(),
                self.source,
                self.language,
                self.scale.name()
            )));
        }
        self.insert(CellKey { group: score.group, pair: score.pair }, score.value, score.n_observations)
    }

    pub fn get(&self, group: &GroupId, pair: &PairId) -> Option<&ProfileCell> {
        self.cells.get(&CellKey { group: group.clone(), pair: pair.clone() })
    }

    pub fn value(&self, group: &GroupId, pair: &PairId) -> Option<f64> {
        self.get(group, pair).map(|c| c.value)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &ProfileCell)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn has_group(&self, group: &GroupId) -> bool {
        self.cells.keys().any(|k| &k.group == group)
    }

    pub fn score(&self, key: &CellKey) -> Option<AssociationScore> {
        self.cells.get(key).map(|c| AssociationScore {
            group: key.group.clone(),
            pair: key.pair.clone(),
            language: self.language.clone(),
            source: self.source.clone(),
            value: c.value,
            scale: self.scale,
            n_observations: c.n_observations,
        })
    }

    pub(crate) fn map_values(&self, scale: ScoreScale, f: impl Fn(&CellKey, f64) -> f64) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|(k, c)| (k.clone(), ProfileCell { value: f(k, c.value), n_observations: c.n_observations }))
            .collect();
        Self { language: self.language.clone(), source: self.source.clone(), scale, cells }
    }
}

mod cells_as_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        group: GroupId,
        pair: PairId,
        value: f64,
        n_observations: u32,
    }

    pub fn serialize<S: Serializer>(cells: &BTreeMap<CellKey, ProfileCell>, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(cells.iter().map(|(k, c)| Entry {
            group: k.group.clone(),
            pair: k.pair.clone(),
            value: c.value,
            n_observations: c.n_observations,
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<BTreeMap<CellKey, ProfileCell>, D::Error> {
        let entries: Vec<Entry> = Vec::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| (CellKey { group: e.group, pair: e.pair }, ProfileCell { value: e.value, n_observations: e.n_observations }))
            .collect())
    }
}
