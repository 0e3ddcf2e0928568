//! Languages, ABC trait pairs and social groups.
//!
//! A [`Registry`] is immutable once built. Construction checks identifier
//! uniqueness and the category/origin rules; [`Registry::check_canonical`]
//! additionally checks the fixed 16-pair / 30-group shape of the study.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Language code such as `EN`.
    Language
);
string_id!(GroupId);
string_id!(PairId);

impl Language {
    pub fn en() -> Self {
        Self::new("EN")
    }
    pub fn ru() -> Self {
        Self::new("RU")
    }
    pub fn zh() -> Self {
        Self::new("ZH")
    }
    pub fn hi() -> Self {
        Self::new("HI")
    }

    /// The four study languages in reporting order.
    pub fn canonical() -> [Language; 4] {
        [Self::en(), Self::ru(), Self::zh(), Self::hi()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageEntry {
    pub code: Language,
    pub display_name: String,
    /// Third-person plural pronoun used as the neutral subject for baseline probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral_subject: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraitDimension {
    Agency,
    Beliefs,
    Communion,
}

impl TraitDimension {
    pub const ALL: [TraitDimension; 3] = [Self::Agency, Self::Beliefs, Self::Communion];

    /// Number of pairs the ABC model assigns to this dimension.
    pub fn expected_pairs(self) -> usize {
        match self {
            Self::Agency | Self::Communion => 6,
            Self::Beliefs => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pole {
    Left,
    Right,
}

impl Pole {
    /// +1 for the right pole (positive slider direction), -1 for the left.
    pub fn sign(self) -> f64 {
        match self {
            Pole::Left => -1.0,
            Pole::Right => 1.0,
        }
    }

    pub fn opposite(self) -> Pole {
        match self {
            Pole::Left => Pole::Right,
            Pole::Right => Pole::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleForms {
    pub left: String,
    pub right: String,
}

impl PoleForms {
    pub fn get(&self, pole: Pole) -> &str {
        match pole {
            Pole::Left => &self.left,
            Pole::Right => &self.right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitPair {
    pub id: PairId,
    pub left_pole: String,
    pub right_pole: String,
    pub dimension: TraitDimension,
    pub surface_forms: BTreeMap<Language, PoleForms>,
}

impl TraitPair {
    pub fn pole_name(&self, pole: Pole) -> &str {
        match pole {
            Pole::Left => &self.left_pole,
            Pole::Right => &self.right_pole,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroupCategory {
    SharedShared,
    SharedNonShared,
    NonSharedNonShared,
}

impl GroupCategory {
    pub const ALL: [GroupCategory; 3] =
        [Self::SharedShared, Self::SharedNonShared, Self::NonSharedNonShared];

    pub fn is_shared(self) -> bool {
        !matches!(self, Self::NonSharedNonShared)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialGroup {
    pub id: GroupId,
    /// English canonical name, e.g. "VDV soldier".
    pub name: String,
    pub category: GroupCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_language: Option<Language>,
    pub surface_forms: BTreeMap<Language, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    languages: Vec<LanguageEntry>,
    pairs: Vec<TraitPair>,
    groups: Vec<SocialGroup>,
}

fn registry_err(record: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Registry { record: record.into(), message: message.into() }
}

impl Registry {
    pub fn new(
        languages: Vec<LanguageEntry>,
        pairs: Vec<TraitPair>,
        groups: Vec<SocialGroup>,
    ) -> Result<Self> {
        let mut codes = BTreeSet::new();
        for l in &languages {
            if l.code.as_str().is_empty() {
                return Err(registry_err("language", "empty code"));
            }
            if !codes.insert(l.code.clone()) {
                return Err(registry_err(format!("language {}", l.code), "duplicate code"));
            }
        }

        let mut pair_ids = BTreeSet::new();
        for p in &pairs {
            let rec = format!("trait pair {}", p.id);
            if !pair_ids.insert(p.id.clone()) {
                return Err(registry_err(rec, "duplicate id"));
            }
            if p.left_pole == p.right_pole {
                return Err(registry_err(rec, "left and right poles are identical"));
            }
            for (lang, forms) in &p.surface_forms {
                if !codes.contains(lang) {
                    return Err(registry_err(rec, format!("unregistered language {lang}")));
                }
                if forms.left.trim().is_empty() || forms.right.trim().is_empty() {
                    return Err(registry_err(rec, format!("empty surface form in {lang}")));
                }
            }
        }

        let mut group_ids = BTreeSet::new();
        for g in &groups {
            let rec = format!("group {}", g.id);
            if !group_ids.insert(g.id.clone()) {
                return Err(registry_err(rec, "duplicate id"));
            }
            match (g.category, &g.origin_language) {
                (GroupCategory::NonSharedNonShared, None) => {
                    return Err(registry_err(rec, "non-shared group without origin_language"));
                }
                (GroupCategory::NonSharedNonShared, Some(o)) if !codes.contains(o) => {
                    return Err(registry_err(rec, format!("unregistered origin language {o}")));
                }
                (c, Some(_)) if c.is_shared() => {
                    return Err(registry_err(rec, "shared group must not carry origin_language"));
                }
                _ => {}
            }
            for (lang, form) in &g.surface_forms {
                if !codes.contains(lang) {
                    return Err(registry_err(rec, format!("unregistered language {lang}")));
                }
                if form.trim().is_empty() {
                    return Err(registry_err(rec, format!("empty surface form in {lang}")));
                }
            }
        }

        Ok(Self { languages, pairs, groups })
    }

    /// Checks the fixed shape of the study: 16 pairs split 6/4/6 across the
    /// ABC dimensions, and 30 groups split 10/8/12 with three non-shared
    /// groups per registered language.
    pub fn check_canonical(&self) -> Result<()> {
        if self.pairs.len() != 16 {
            return Err(registry_err("trait pairs", format!("expected 16, found {}", self.pairs.len())));
        }
        for dim in TraitDimension::ALL {
            let n = self.pairs.iter().filter(|p| p.dimension == dim).count();
            if n != dim.expected_pairs() {
                return Err(registry_err(
                    "trait pairs",
                    format!("{dim:?} has {n} pairs, expected {}", dim.expected_pairs()),
                ));
            }
        }
        let counts = self.category_counts();
        if counts != (10, 8, 12) {
            return Err(registry_err("groups", format!("category counts {counts:?}, expected (10, 8, 12)")));
        }
        for l in &self.languages {
            let n = self
                .groups
                .iter()
                .filter(|g| g.origin_language.as_ref() == Some(&l.code))
                .count();
            if n != 3 {
                return Err(registry_err(
                    format!("language {}", l.code),
                    format!("{n} non-shared groups originate here, expected 3"),
                ));
            }
        }
        Ok(())
    }

    pub fn languages(&self) -> &[LanguageEntry] {
        &self.languages
    }

    pub fn language_codes(&self) -> impl Iterator<Item = &Language> {
        self.languages.iter().map(|l| &l.code)
    }

    pub fn language(&self, code: &Language) -> Option<&LanguageEntry> {
        self.languages.iter().find(|l| &l.code == code)
    }

    /// Trait pairs in table order (Agency, Beliefs, Communion).
    pub fn trait_pairs(&self) -> &[TraitPair] {
        &self.pairs
    }

    pub fn groups(&self) -> &[SocialGroup] {
        &self.groups
    }

    pub fn pair(&self, id: &PairId) -> Option<&TraitPair> {
        self.pairs.iter().find(|p| &p.id == id)
    }

    pub fn group(&self, id: &GroupId) -> Option<&SocialGroup> {
        self.groups.iter().find(|g| &g.id == id)
    }

    pub fn pair_index(&self, id: &PairId) -> Option<usize> {
        self.pairs.iter().position(|p| &p.id == id)
    }

    pub fn group_index(&self, id: &GroupId) -> Option<usize> {
        self.groups.iter().position(|g| &g.id == id)
    }

    pub fn category_counts(&self) -> (usize, usize, usize) {
        let count = |c| self.groups.iter().filter(|g| g.category == c).count();
        (
            count(GroupCategory::SharedShared),
            count(GroupCategory::SharedNonShared),
            count(GroupCategory::NonSharedNonShared),
        )
    }

    pub fn require_language(&self, code: &Language) -> Result<&LanguageEntry> {
        self.language(code)
            .ok_or_else(|| Error::Unknown { kind: "language", token: code.to_string() })
    }

    pub fn require_group(&self, id: &GroupId) -> Result<&SocialGroup> {
        self.group(id)
            .ok_or_else(|| Error::Unknown { kind: "group", token: id.to_string() })
    }

    pub fn require_pair(&self, id: &PairId) -> Result<&TraitPair> {
        self.pair(id)
            .ok_or_else(|| Error::Unknown { kind: "trait pair", token: id.to_string() })
    }

    /// Resolves a (language, group, pair) reference to its surface forms.
    pub fn validate_reference(
        &self,
        language: &Language,
        group: &GroupId,
        pair: &PairId,
    ) -> Result<(&str, &PoleForms)> {
        self.require_language(language)?;
        let g = self.require_group(group)?;
        let p = self.require_pair(pair)?;
        let group_form = g.surface_forms.get(language).ok_or_else(|| Error::MissingSurfaceForm {
            item: format!("group {}", g.id),
            language: language.to_string(),
        })?;
        let pole_forms = p.surface_forms.get(language).ok_or_else(|| Error::MissingSurfaceForm {
            item: format!("trait pair {}", p.id),
            language: language.to_string(),
        })?;
        Ok((group_form, pole_forms))
    }

    /// Resolves a trait name (either pole, English canonical) to its pair and pole.
    pub fn find_pole(&self, name: &str) -> Option<(&TraitPair, Pole)> {
        self.pairs.iter().find_map(|p| {
            if p.left_pole == name {
                Some((p, Pole::Left))
            } else if p.right_pole == name {
                Some((p, Pole::Right))
            } else {
                None
            }
        })
    }
}
