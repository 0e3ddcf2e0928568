//! Versioned JSON result files. Each file is one object whose schema key
//! (e.g. `"leakage_schema": 1`) sits beside the payload fields. Keys are
//! written in sorted order and floats in shortest round-trip form, so equal
//! inputs give byte-identical files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use stereoleak_core::leakage::{ExtractionParams, LeakageResult, LeakedTrait};
use stereoleak_core::scoring::{ScoringMethod, StandardizeMode};
use stereoleak_core::survey::{DemographicReport, HumanProfileSet, QualityReport};
use stereoleak_core::StereotypeProfile;

use crate::error::{read_to_string, write_file, Error, Result};

pub const HUMAN_PROFILES: &str = "human_profiles.json";
pub const QUALITY_REPORT: &str = "quality_report.json";
pub const DEMOGRAPHICS: &str = "demographics.json";
pub const MODEL_PROFILES: &str = "model_profiles.json";
pub const LEAKAGE_RESULTS: &str = "leakage_results.json";
pub const LEAKED_TRAITS: &str = "leaked_traits.json";
pub const SIMULATION: &str = "simulation.json";

/// A payload type and the schema key it is stored under.
pub trait Versioned: Serialize + DeserializeOwned {
    const SCHEMA_KEY: &'static str;
    const VERSION: u64 = 1;
}

/// Aggregated human profiles on the slider scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanProfilesFile {
    pub required_checks: usize,
    pub set: HumanProfileSet,
}

impl Versioned for HumanProfilesFile {
    const SCHEMA_KEY: &'static str = "profiles_schema";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityFile {
    pub report: QualityReport,
}

impl Versioned for QualityFile {
    const SCHEMA_KEY: &'static str = "quality_schema";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemographicsFile {
    pub report: DemographicReport,
}

impl Versioned for DemographicsFile {
    const SCHEMA_KEY: &'static str = "demographics_schema";
}

/// Unstandardized profiles of one probed model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredModelEntry {
    pub model_id: String,
    pub monolingual: bool,
    pub method: ScoringMethod,
    pub profiles: Vec<StereotypeProfile>,
    pub ignored_records: usize,
    pub unparseable_responses: usize,
    pub skipped_keys: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProfilesFile {
    pub models: Vec<ScoredModelEntry>,
}

impl Versioned for ModelProfilesFile {
    const SCHEMA_KEY: &'static str = "profiles_schema";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageFile {
    pub standardize: StandardizeMode,
    pub results: Vec<LeakageResult>,
}

impl Versioned for LeakageFile {
    const SCHEMA_KEY: &'static str = "leakage_schema";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaksFile {
    pub standardize: StandardizeMode,
    pub params: ExtractionParams,
    pub leaks: Vec<LeakedTrait>,
}

impl Versioned for LeaksFile {
    const SCHEMA_KEY: &'static str = "leaks_schema";
}

pub fn to_json<T: Versioned>(body: &T) -> String {
    let mut value = serde_json::to_value(body).expect("result types serialize");
    let obj = value.as_object_mut().expect("result types are objects");
    obj.insert(T::SCHEMA_KEY.to_string(), Value::from(T::VERSION));
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

pub fn from_json<T: Versioned>(file: &str, text: &str) -> Result<T> {
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(file, e.line() as u64, e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| Error::parse(file, 1, "expected a JSON object"))?;
    match obj.remove(T::SCHEMA_KEY).and_then(|v| v.as_u64()) {
        Some(v) if v == T::VERSION => {}
        Some(v) => return Err(Error::Format(format!("{file}: unsupported {} {v}", T::SCHEMA_KEY))),
        None => return Err(Error::Format(format!("{file}: missing {}", T::SCHEMA_KEY))),
    }
    serde_json::from_value(value).map_err(|e| Error::Format(format!("{file}: {e}")))
}

pub fn save<T: Versioned>(path: &Path, body: &T) -> Result<()> {
    write_file(path, &to_json(body))
}

pub fn load<T: Versioned>(path: &Path) -> Result<T> {
    from_json(&path.display().to_string(), &read_to_string(path)?)
}

/// Like [`load`], but a missing file is reported as missing results.
pub fn load_required<T: Versioned>(path: &Path, produced_by: &str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingResults(format!("{} not found; run `{produced_by}` first", path.display())));
    }
    load(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFile {
    pub cross_only: bool,
    pub graph: stereoleak_core::flow::FlowGraph,
}

impl Versioned for FlowFile {
    const SCHEMA_KEY: &'static str = "flow_schema";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarFile {
    pub radar: stereoleak_core::flow::RadarData,
}

impl Versioned for RadarFile {
    const SCHEMA_KEY: &'static str = "radar_schema";
}
