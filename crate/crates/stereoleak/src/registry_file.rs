//! Registry file: TOML with `registry_version = 1`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stereoleak_core::registry::{LanguageEntry, PoleForms, SocialGroup, TraitDimension, TraitPair};
use stereoleak_core::{GroupCategory, GroupId, Language, PairId, Registry};

use crate::error::{read_to_string, Error, Result};

pub const REGISTRY_VERSION: u32 = 1;

/// The study registry shipped with the crate.
pub const BUNDLED: &str = include_str!("../data/registry.toml");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    registry_version: u32,
    languages: Vec<LanguageEntry>,
    trait_pairs: Vec<PairRecord>,
    groups: Vec<GroupRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    id: PairId,
    dimension: TraitDimension,
    left: String,
    right: String,
    forms: BTreeMap<Language, [String; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupRecord {
    id: GroupId,
    name: String,
    category: GroupCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Language>,
    forms: BTreeMap<Language, String>,
}

pub fn parse_registry(text: &str) -> Result<Registry> {
    let file: RegistryFile = toml::from_str(text).map_err(|e| Error::Format(format!("registry: {e}")))?;
    if file.registry_version != REGISTRY_VERSION {
        return Err(Error::Format(format!(
            "registry_version {} is not supported (expected {REGISTRY_VERSION})",
            file.registry_version
        )));
    }
    let pairs = file
        .trait_pairs
        .into_iter()
        .map(|p| TraitPair {
            id: p.id,
            left_pole: p.left,
            right_pole: p.right,
            dimension: p.dimension,
            surface_forms: p.forms.into_iter().map(|(l, [a, b])| (l, PoleForms { left: a, right: b })).collect(),
        })
        .collect();
    let groups = file
        .groups
        .into_iter()
        .map(|g| SocialGroup {
            id: g.id,
            name: g.name,
            category: g.category,
            origin_language: g.origin,
            surface_forms: g.forms,
        })
        .collect();
    Ok(Registry::new(file.languages, pairs, groups)?)
}

pub fn load_registry(path: Option<&Path>) -> Result<Registry> {
    match path {
        Some(p) => parse_registry(&read_to_string(p)?),
        None => bundled(),
    }
}

pub fn bundled() -> Result<Registry> {
    parse_registry(BUNDLED)
}
