//! Survey export: a directory of delimited files, each opening with the line
//! `survey_schema: 1`.
//!
//! | file              | columns                                        |
//! |-------------------|------------------------------------------------|
//! | `ratings.csv`     | respondent_id, language, group_id, pair_id, rating |
//! | `familiarity.csv` | respondent_id, group_id                        |
//! | `checks.csv`      | respondent_id, language, check_id, passed      |
//! | `demographics.csv`| respondent_id, key, value (optional file)      |

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use stereoleak_core::survey::{AttentionCheck, SurveyResponse};
use stereoleak_core::{GroupId, Language, PairId, Registry};

use crate::error::{read_to_string, write_file, Error, Result};

pub const SCHEMA_LINE: &str = "survey_schema: 1";

pub const RATINGS: &str = "ratings.csv";
pub const FAMILIARITY: &str = "familiarity.csv";
pub const CHECKS: &str = "checks.csv";
pub const DEMOGRAPHICS: &str = "demographics.csv";

/// The contents of one survey export.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurveyFiles {
    pub ratings: String,
    pub familiarity: String,
    pub checks: String,
    pub demographics: Option<String>,
}

#[derive(Default)]
struct Builder {
    language: Option<(Language, String, u64)>,
    familiar: BTreeSet<GroupId>,
    ratings: BTreeMap<GroupId, BTreeMap<PairId, f64>>,
    checks: Vec<AttentionCheck>,
    demographics: Option<BTreeMap<String, String>>,
}

impl Builder {
    fn set_language(&mut self, lang: &str, file: &str, line: u64) -> Result<()> {
        match &self.language {
            Some((l, f0, l0)) if l.as_str() != lang => Err(Error::parse(
                file,
                line,
                format!("language {lang} contradicts {l} given at {f0}:{l0}"),
            )),
            Some(_) => Ok(()),
            None => {
                self.language = Some((Language::new(lang), file.to_string(), line));
                Ok(())
            }
        }
    }
}

/// Rows of one file after its schema line, with 1-based file line numbers.
fn rows<'a>(file: &'a str, text: &'a str, columns: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end_matches('\r').trim() != SCHEMA_LINE {
        return Err(Error::parse(file, 1, format!("first line must be `{SCHEMA_LINE}`")));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(file, 2, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != columns {
        return Err(Error::parse(file, 2, format!("expected columns {}, found {}", columns.join(","), header.join(","))));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() + 1);
            Error::parse(file, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() + 1);
        if rec.len() != columns.len() {
            return Err(Error::parse(file, line, format!("expected {} fields, found {}", columns.len(), rec.len())));
        }
        out.push((line, rec.iter().map(|f| f.trim().to_string()).collect()));
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "pass" | "passed" | "yes" => Some(true),
        "false" | "0" | "fail" | "failed" | "no" => Some(false),
        _ => None,
    }
}

/// Parses and validates a survey export. Responses come out in respondent-id order.
pub fn parse_survey(files: &SurveyFiles, registry: &Registry) -> Result<Vec<SurveyResponse>> {
    let mut people: BTreeMap<String, Builder> = BTreeMap::new();

    for (line, f) in rows(RATINGS, &files.ratings, &["respondent_id", "language", "group_id", "pair_id", "rating"])? {
        let b = people.entry(f[0].clone()).or_default();
        b.set_language(&f[1], RATINGS, line)?;
        let value: f64 = f[4]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(RATINGS, line, format!("rating `{}` is not a number", f[4])))?;
        let cell = b.ratings.entry(GroupId::new(&f[2])).or_default();
        if cell.insert(PairId::new(&f[3]), value).is_some() {
            return Err(Error::parse(RATINGS, line, format!("duplicate rating for {} / {} / {}", f[0], f[2], f[3])));
        }
    }
    for (line, f) in rows(FAMILIARITY, &files.familiarity, &["respondent_id", "group_id"])? {
        let b = people.entry(f[0].clone()).or_default();
        if !b.familiar.insert(GroupId::new(&f[1])) {
            return Err(Error::parse(FAMILIARITY, line, format!("duplicate familiarity {} / {}", f[0], f[1])));
        }
    }
    for (line, f) in rows(CHECKS, &files.checks, &["respondent_id", "language", "check_id", "passed"])? {
        let b = people.entry(f[0].clone()).or_default();
        b.set_language(&f[1], CHECKS, line)?;
        let passed = parse_bool(&f[3]).ok_or_else(|| Error::parse(CHECKS, line, format!("`{}` is not a pass/fail value", f[3])))?;
        if b.checks.iter().any(|c| c.check_id == f[2]) {
            return Err(Error::parse(CHECKS, line, format!("duplicate check {} / {}", f[0], f[2])));
        }
        b.checks.push(AttentionCheck { check_id: f[2].clone(), passed });
    }
    if let Some(text) = &files.demographics {
        for (line, f) in rows(DEMOGRAPHICS, text, &["respondent_id", "key", "value"])? {
            let b = people
                .get_mut(&f[0])
                .ok_or_else(|| Error::parse(DEMOGRAPHICS, line, format!("unknown respondent {}", f[0])))?;
            let d = b.demographics.get_or_insert_with(BTreeMap::new);
            if d.insert(f[1].clone(), f[2].clone()).is_some() {
                return Err(Error::parse(DEMOGRAPHICS, line, format!("duplicate answer {} / {}", f[0], f[1])));
            }
        }
    }

    let mut out = Vec::with_capacity(people.len());
    for (id, b) in people {
        let (language, _, _) = b
            .language
            .ok_or_else(|| Error::Format(format!("respondent {id} has neither ratings nor checks, so no language")))?;
        let mut checks = b.checks;
        checks.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        let r = SurveyResponse {
            respondent_id: id,
            language,
            familiar_groups: b.familiar,
            ratings: b.ratings,
            attention_checks: checks,
            demographics: b.demographics,
        };
        r.validate(registry)?;
        out.push(r);
    }
    Ok(out)
}

pub fn read_survey_dir(dir: &Path) -> Result<SurveyFiles> {
    let demo = dir.join(DEMOGRAPHICS);
    Ok(SurveyFiles {
        ratings: read_to_string(&dir.join(RATINGS))?,
        familiarity: read_to_string(&dir.join(FAMILIARITY))?,
        checks: read_to_string(&dir.join(CHECKS))?,
        demographics: if demo.exists() { Some(read_to_string(&demo)?) } else { None },
    })
}

pub fn load_survey(dir: &Path, registry: &Registry) -> Result<Vec<SurveyResponse>> {
    parse_survey(&read_survey_dir(dir)?, registry)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
    format!("{SCHEMA_LINE}\n{body}")
}

/// Serializes responses into the export format.
pub fn write_survey(responses: &[SurveyResponse]) -> SurveyFiles {
    let ratings = responses.iter().flat_map(|r| {
        r.ratings.iter().flat_map(move |(g, pairs)| {
            pairs.iter().map(move |(p, v)| {
                vec![r.respondent_id.clone(), r.language.to_string(), g.to_string(), p.to_string(), v.to_string()]
            })
        })
    });
    let familiarity = responses
        .iter()
        .flat_map(|r| r.familiar_groups.iter().map(move |g| vec![r.respondent_id.clone(), g.to_string()]));
    let checks = responses.iter().flat_map(|r| {
        r.attention_checks.iter().map(move |c| {
            vec![r.respondent_id.clone(), r.language.to_string(), c.check_id.clone(), c.passed.to_string()]
        })
    });
    let any_demo = responses.iter().any(|r| r.demographics.is_some());
    let demographics = any_demo.then(|| {
        csv_text(
            &["respondent_id", "key", "value"],
            responses.iter().flat_map(|r| {
                r.demographics
                    .iter()
                    .flatten()
                    .map(move |(k, v)| vec![r.respondent_id.clone(), k.clone(), v.clone()])
            }),
        )
    });
    SurveyFiles {
        ratings: csv_text(&["respondent_id", "language", "group_id", "pair_id", "rating"], ratings),
        familiarity: csv_text(&["respondent_id", "group_id"], familiarity),
        checks: csv_text(&["respondent_id", "language", "check_id", "passed"], checks),
        demographics,
    }
}

pub fn write_survey_dir(dir: &Path, files: &SurveyFiles) -> Result<()> {
    write_file(&dir.join(RATINGS), &files.ratings)?;
    write_file(&dir.join(FAMILIARITY), &files.familiarity)?;
    write_file(&dir.join(CHECKS), &files.checks)?;
    if let Some(d) = &files.demographics {
        write_file(&dir.join(DEMOGRAPHICS), d)?;
    }
    Ok(())
}
