//! Probe dumps: newline-delimited JSON. The first line is a header
//! `{"probe_schema": 1, "model_id": "...", "logprob_base": "e"}`; every later
//! non-blank line is one [`ProbeRecord`]. Unknown fields are ignored and
//! reported as warnings; missing fields are errors.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use stereoleak_core::scoring::ProbeRecord;

use crate::error::{read_to_string, write_file, Error, Result};

pub const PROBE_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeHeader {
    pub probe_schema: u32,
    pub model_id: String,
    pub logprob_base: String,
    /// Marks a dump from a monolingual model used as an extra predictor.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub monolingual: bool,
    /// Multi-token aggregation used by the probe, e.g. "mean".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_token: Option<String>,
    /// Description of the sensitivity proxy used by the probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity_proxy: Option<String>,
}

impl ProbeHeader {
    pub fn new(model_id: impl Into<String>, monolingual: bool) -> Self {
        Self {
            probe_schema: PROBE_SCHEMA,
            model_id: model_id.into(),
            logprob_base: "e".into(),
            monolingual,
            multi_token: None,
            sensitivity_proxy: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeDump {
    pub header: ProbeHeader,
    pub records: Vec<ProbeRecord>,
    /// Ignored unknown fields, as `line: field`.
    pub warnings: Vec<String>,
}

const HEADER_FIELDS: &[&str] =
    &["probe_schema", "model_id", "logprob_base", "monolingual", "multi_token", "sensitivity_proxy"];
const RECORD_FIELDS: &[&str] = &["model_id", "language", "group", "pair", "pole", "template_id", "kind", "payload"];
const PAYLOAD_FIELDS: &[&str] =
    &["logprob_nats", "baseline_logprob_nats", "weight_change", "raw_text", "repetition_index"];

fn unknown(obj: &Map<String, Value>, known: &[&str], prefix: &str, line: u64, out: &mut Vec<String>) {
    for k in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        out.push(format!("{line}: ignored field {prefix}{k}"));
    }
}

/// Parses a dump held in memory. `file` names it in error messages.
pub fn parse_probe_dump(file: &str, text: &str) -> Result<ProbeDump> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (hline, htext) = lines.next().ok_or_else(|| Error::parse(file, 1, "empty dump, header line required"))?;
    let hvalue: Value = serde_json::from_str(htext).map_err(|e| Error::parse(file, hline, e.to_string()))?;
    let mut warnings = Vec::new();
    if let Some(obj) = hvalue.as_object() {
        unknown(obj, HEADER_FIELDS, "", hline, &mut warnings);
    }
    let header: ProbeHeader =
        serde_json::from_value(hvalue).map_err(|e| Error::parse(file, hline, format!("header: {e}")))?;
    if header.probe_schema != PROBE_SCHEMA {
        return Err(Error::parse(file, hline, format!("unsupported probe_schema {}", header.probe_schema)));
    }
    if header.logprob_base != "e" {
        return Err(Error::parse(file, hline, format!("logprob_base must be \"e\", found {:?}", header.logprob_base)));
    }

    let mut records = Vec::new();
    for (line, l) in lines {
        let value: Value = serde_json::from_str(l).map_err(|e| Error::parse(file, line, e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| Error::parse(file, line, "record must be a JSON object"))?;
        unknown(obj, RECORD_FIELDS, "", line, &mut warnings);
        if let Some(p) = obj.get("payload").and_then(Value::as_object) {
            unknown(p, PAYLOAD_FIELDS, "payload.", line, &mut warnings);
        }
        let record: ProbeRecord = serde_json::from_value(value).map_err(|e| Error::parse(file, line, e.to_string()))?;
        if record.model_id != header.model_id {
            return Err(Error::parse(
                file,
                line,
                format!("record model_id {} differs from header {}", record.model_id, header.model_id),
            ));
        }
        record.validate().map_err(|e| Error::parse(file, line, e.to_string()))?;
        records.push(record);
    }
    Ok(ProbeDump { header, records, warnings })
}

pub fn load_probe_dump(path: &Path) -> Result<ProbeDump> {
    parse_probe_dump(&path.display().to_string(), &read_to_string(path)?)
}

/// One JSON object per line, header first.
pub fn write_probe_dump(dump: &ProbeDump) -> String {
    let mut out = serde_json::to_string(&dump.header).expect("header serializes");
    out.push('\n');
    for r in &dump.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn save_probe_dump(path: &Path, dump: &ProbeDump) -> Result<()> {
    write_file(path, &write_probe_dump(dump))
}

/// Loads every `*.jsonl` file in a directory, in file-name order.
pub fn load_probe_dir(dir: &Path) -> Result<Vec<ProbeDump>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "jsonl") {
            paths.insert(path);
        }
    }
    paths.iter().map(|p| load_probe_dump(p)).collect()
}
