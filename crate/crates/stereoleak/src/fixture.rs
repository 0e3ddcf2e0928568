//! Synthetic corpus shaped like the original study: 286 survey respondents
//! of whom 34/36/41/40 (EN/RU/ZH/HI) pass every attention check, plus probe
//! dumps from a chat model, two multilingual masked/seq2seq models and four
//! monolingual models. Latent stereotypes are drawn once; ratings and model
//! scores are noisy views of them with planted cross-language effects.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stereoleak_core::registry::PoleForms;
use stereoleak_core::scoring::{ProbePayload, ProbeRecord};
use stereoleak_core::survey::{AttentionCheck, SurveyResponse};
use stereoleak_core::{GroupCategory, GroupId, Language, PairId, Pole, Registry};

use crate::error::{write_file, Result};
use crate::probe_file::{save_probe_dump, ProbeDump, ProbeHeader};
use crate::simulate::replicate_rng;
use crate::survey_file::{write_survey, write_survey_dir};

pub const DEFAULT_SEED: u64 = 7;

/// (language, respondents, passing respondents).
pub const RESPONDENTS: [(&str, usize, usize); 4] = [("EN", 72, 34), ("RU", 70, 36), ("ZH", 73, 41), ("HI", 71, 40)];

pub const CHECKS_PER_RESPONDENT: usize = 4;
pub const GROUPS_PER_RESPONDENT: usize = 6;
pub const CHAT_REPETITIONS: u32 = 10;

/// Gender answers and their counts over all 286 respondents; blank is no answer.
pub const GENDER: [(&str, usize); 4] = [("man", 140), ("woman", 129), ("non-binary", 14), ("", 3)];

pub const VDV: &str = "vdv_soldier";
/// Poles the RU raters strongly associate with the VDV group.
pub const VDV_POLES: [(&str, Pole); 4] = [
    ("untrustworthy_trustworthy", Pole::Right),
    ("dishonest_sincere", Pole::Right),
    ("benevolent_threatening", Pole::Right),
    ("unconfident_confident", Pole::Right),
];

/// Chat model coefficients (source, target, weight) besides the diagonal.
pub const CHAT_CROSS: [(&str, &str, f64); 2] = [("ZH", "RU", 0.36), ("EN", "HI", 0.10)];
pub const MONOLINGUAL_WEIGHTS: [f64; 4] = [0.33, 0.29, 0.17, 0.08];

const STREAM_LATENT: u64 = 0;
const STREAM_SURVEY: u64 = 1;
const STREAM_MODELS: u64 = 16;

/// Latent slider-scale means, `[language][group][pair]`, languages canonical.
pub struct Latent {
    pub languages: Vec<Language>,
    pub means: Vec<Vec<Vec<f64>>>,
}

impl Latent {
    fn lang_index(&self, l: &Language) -> usize {
        self.languages.iter().position(|x| x == l).expect("canonical language")
    }

    /// Means scaled to unit spread over the whole language profile.
    fn z(&self, l: usize, g: usize, p: usize) -> f64 {
        self.means[l][g][p] / 20.0
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

pub fn latent(registry: &Registry, seed: u64) -> Latent {
    let mut rng = replicate_rng(seed, STREAM_LATENT);
    let languages: Vec<Language> = registry.language_codes().cloned().collect();
    let groups = registry.groups();
    let pairs = registry.trait_pairs();
    let base: Vec<Vec<f64>> = groups.iter().map(|_| pairs.iter().map(|_| 16.0 * normal(&mut rng)).collect()).collect();
    let mut means = Vec::new();
    for lang in &languages {
        let mut per_lang = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            let spread = match g.category {
                GroupCategory::SharedShared => 8.0,
                GroupCategory::SharedNonShared => 13.0,
                GroupCategory::NonSharedNonShared => 22.0,
            };
            let row = pairs
                .iter()
                .enumerate()
                .map(|(pi, tp)| {
                    let mut m = base[gi][pi] + spread * normal(&mut rng);
                    if g.id.as_str() == VDV {
                        let planted = VDV_POLES.iter().find(|(id, _)| tp.id.as_str() == *id);
                        m = match (lang.as_str(), planted) {
                            ("RU", Some((_, pole))) => 34.0 * pole.sign(),
                            (_, Some((_, pole))) => -6.0 * pole.sign(),
                            _ => 0.2 * m,
                        };
                    }
                    m.clamp(-45.0, 45.0)
                })
                .collect();
            per_lang.push(row);
        }
        means.push(per_lang);
    }
    Latent { languages, means }
}

fn choose_groups(rng: &mut ChaCha8Rng, registry: &Registry, lang: &Language) -> BTreeSet<GroupId> {
    let weighted: Vec<(GroupId, f64)> = registry
        .groups()
        .iter()
        .filter_map(|g| {
            let w = match (&g.origin_language, g.category) {
                _ if g.id.as_str() == VDV && lang.as_str() == "EN" => 0.0,
                (Some(o), GroupCategory::NonSharedNonShared) if o == lang => 2.5,
                (_, GroupCategory::NonSharedNonShared) => 0.2,
                _ => 1.0,
            };
            (w > 0.0).then(|| (g.id.clone(), w))
        })
        .collect();
    weighted
        .choose_multiple_weighted(rng, GROUPS_PER_RESPONDENT, |(_, w)| *w)
        .expect("positive weights")
        .map(|(g, _)| g.clone())
        .collect()
}

/// Engineered check outcomes for a failing respondent, cycling through a
/// single failed check, a missing check record and several failures.
fn failing_checks(k: usize) -> Vec<bool> {
    match k % 3 {
        0 => vec![true, true, false, true],
        1 => vec![true, true, true],
        _ => vec![false, true, false, false],
    }
}

pub fn survey(registry: &Registry, latent: &Latent, seed: u64) -> Vec<SurveyResponse> {
    let mut rng = replicate_rng(seed, STREAM_SURVEY);
    let total: usize = RESPONDENTS.iter().map(|r| r.1).sum();
    let mut genders: Vec<&str> = GENDER.iter().flat_map(|(g, n)| std::iter::repeat_n(*g, *n)).collect();
    assert_eq!(genders.len(), total, "gender counts cover every respondent");
    genders.shuffle(&mut rng);
    let mut out = Vec::with_capacity(total);
    for (code, n, passing) in RESPONDENTS {
        let lang = Language::new(code);
        let li = latent.lang_index(&lang);
        let mut passes: Vec<bool> = (0..n).map(|i| i < passing).collect();
        passes.shuffle(&mut rng);
        let mut n_failed = 0;
        for (i, pass) in passes.into_iter().enumerate() {
            let familiar = choose_groups(&mut rng, registry, &lang);
            let mut ratings = BTreeMap::new();
            for g in &familiar {
                let gi = registry.group_index(g).expect("registry group");
                let row = registry
                    .trait_pairs()
                    .iter()
                    .enumerate()
                    .map(|(pi, tp)| {
                        let v = (latent.means[li][gi][pi] + 12.0 * normal(&mut rng)).round().clamp(-50.0, 50.0);
                        (tp.id.clone(), v)
                    })
                    .collect();
                ratings.insert(g.clone(), row);
            }
            let outcomes = if pass {
                vec![true; CHECKS_PER_RESPONDENT]
            } else {
                n_failed += 1;
                failing_checks(n_failed - 1)
            };
            let gender = genders[out.len()];
            let mut demo = BTreeMap::new();
            if !gender.is_empty() {
                demo.insert("gender".to_string(), gender.to_string());
            }
            out.push(SurveyResponse {
                respondent_id: format!("{code}-{:03}", i + 1),
                language: lang.clone(),
                familiar_groups: familiar,
                ratings,
                attention_checks: outcomes
                    .into_iter()
                    .enumerate()
                    .map(|(c, passed)| AttentionCheck { check_id: format!("check{}", c + 1), passed })
                    .collect(),
                demographics: (!demo.is_empty()).then_some(demo),
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Chat,
    Seq2Seq,
    Masked,
}

/// Planted weight of human source `s` on target `t` for a model.
fn weight(family: Family, s: &str, t: &str) -> f64 {
    match family {
        Family::Chat => {
            let cross = CHAT_CROSS.iter().find(|(a, b, _)| *a == s && *b == t).map_or(0.0, |c| c.2);
            if s == t { 0.5 } else { cross }
        }
        Family::Seq2Seq => if s == t { 0.35 } else { 0.05 },
        Family::Masked => match (s, t) {
            _ if s == t => 0.12,
            ("HI", "EN") | ("EN", "HI") => 0.04,
            ("HI", "ZH") => 0.08,
            _ => 0.0,
        },
    }
}

/// Latent association of a monolingual model, a noisy copy of its own culture.
fn monolingual_latent(latent: &Latent, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<f64>>> {
    latent
        .means
        .iter()
        .enumerate()
        .map(|(l, groups)| {
            groups
                .iter()
                .enumerate()
                .map(|(g, pairs)| (0..pairs.len()).map(|p| 0.7 * latent.z(l, g, p) + 0.7 * normal(rng)).collect())
                .collect()
        })
        .collect()
}

/// Model differential for every (language, group, pair).
fn model_latent(family: Family, latent: &Latent, mono: Option<&[Vec<Vec<f64>>]>, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<f64>>> {
    let n_groups = latent.means[0].len();
    let n_pairs = latent.means[0][0].len();
    (0..latent.languages.len())
        .map(|t| {
            (0..n_groups)
                .map(|g| {
                    (0..n_pairs)
                        .map(|p| {
                            let tl = latent.languages[t].as_str();
                            let mut d: f64 = (0..latent.languages.len())
                                .map(|s| weight(family, latent.languages[s].as_str(), tl) * latent.z(s, g, p))
                                .sum();
                            if let Some(m) = mono {
                                d += MONOLINGUAL_WEIGHTS[t] * m[t][g][p];
                            }
                            d + 0.4 * normal(rng)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn chat_text(lang: &str, form: &str) -> String {
    match lang {
        "RU" => format!("Я выбираю тему «{form}»."),
        "ZH" => format!("我选择“{form}”作为主题。"),
        "HI" => format!("मैं विषय के रूप में \"{form}\" चुनता हूँ।"),
        _ => format!("I choose \"{form}\" as the theme of the story."),
    }
}

fn both_text(forms: &PoleForms) -> String {
    format!("Both {} and {} could work here.", forms.left, forms.right)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Key<'a> {
    lang: &'a Language,
    group: &'a GroupId,
    pair: &'a PairId,
    forms: &'a PoleForms,
    d: f64,
}

fn for_each_key(registry: &Registry, d: &[Vec<Vec<f64>>], only: Option<usize>, mut f: impl FnMut(Key<'_>)) {
    for (li, lang) in registry.language_codes().enumerate() {
        if only.is_some_and(|o| o != li) {
            continue;
        }
        for (gi, g) in registry.groups().iter().enumerate() {
            for (pi, tp) in registry.trait_pairs().iter().enumerate() {
                let (_, forms) = registry.validate_reference(lang, &g.id, &tp.id).expect("registry forms");
                f(Key { lang, group: &g.id, pair: &tp.id, forms, d: d[li][gi][pi] });
            }
        }
    }
}

fn record(model: &str, k: &Key<'_>, pole: Option<Pole>, template: &str, payload: ProbePayload) -> ProbeRecord {
    ProbeRecord {
        model_id: model.to_string(),
        language: k.lang.clone(),
        group: k.group.clone(),
        pair: k.pair.clone(),
        pole,
        template_id: template.to_string(),
        kind: payload.kind(),
        payload,
    }
}

fn chat_dump(registry: &Registry, d: &[Vec<Vec<f64>>], rng: &mut ChaCha8Rng) -> ProbeDump {
    let mut records = Vec::new();
    for_each_key(registry, d, None, |k| {
        let p_right = sigmoid(3.0 * k.d);
        for rep in 0..CHAT_REPETITIONS {
            let u: f64 = rng.random();
            let text = if rng.random::<f64>() < 0.02 {
                both_text(k.forms)
            } else if u < p_right {
                chat_text(k.lang.as_str(), &k.forms.right)
            } else {
                chat_text(k.lang.as_str(), &k.forms.left)
            };
            let payload = ProbePayload::ChatResponse { raw_text: text, repetition_index: rep };
            records.push(record("chat", &k, None, "story", payload));
        }
    });
    ProbeDump { header: ProbeHeader::new("chat", false), records, warnings: vec![] }
}

fn logprob_records(model: &str, k: &Key<'_>, templates: usize, rng: &mut ChaCha8Rng, out: &mut Vec<ProbeRecord>) {
    for t in 0..templates {
        let base = -9.0 + normal(rng);
        for pole in [Pole::Left, Pole::Right] {
            let lp = base + pole.sign() * k.d / 2.0 + 0.1 * normal(rng);
            let payload = ProbePayload::LogProb { logprob_nats: lp, baseline_logprob_nats: Some(base - 0.5) };
            out.push(record(model, k, Some(pole), &format!("t{t}"), payload));
        }
    }
}

fn seq2seq_dump(model: &str, registry: &Registry, d: &[Vec<Vec<f64>>], rng: &mut ChaCha8Rng) -> ProbeDump {
    let mut records = Vec::new();
    for_each_key(registry, d, None, |k| logprob_records(model, &k, 2, rng, &mut records));
    let mut header = ProbeHeader::new(model, false);
    header.multi_token = Some("mean".into());
    ProbeDump { header, records, warnings: vec![] }
}

fn masked_dump(model: &str, registry: &Registry, d: &[Vec<Vec<f64>>], rng: &mut ChaCha8Rng) -> ProbeDump {
    let mut records = Vec::new();
    for_each_key(registry, d, None, |k| {
        logprob_records(model, &k, 1, rng, &mut records);
        let w0 = 2.0 + k.d.abs();
        for pole in [Pole::Left, Pole::Right] {
            let w = (w0 - pole.sign() * k.d / 2.0 + 0.05 * normal(rng)).max(0.0);
            records.push(record(model, &k, Some(pole), "t0", ProbePayload::Sensitivity { weight_change: w }));
        }
    });
    let mut header = ProbeHeader::new(model, false);
    header.multi_token = Some("mean".into());
    header.sensitivity_proxy = Some("logit gap over gradient norm".into());
    ProbeDump { header, records, warnings: vec![] }
}

fn monolingual_dump(model: &str, li: usize, registry: &Registry, d: &[Vec<Vec<f64>>], rng: &mut ChaCha8Rng) -> ProbeDump {
    let mut records = Vec::new();
    for_each_key(registry, d, Some(li), |k| logprob_records(model, &k, 1, rng, &mut records));
    ProbeDump { header: ProbeHeader::new(model, true), records, warnings: vec![] }
}

/// Probe dumps keyed by file name.
pub fn probe_dumps(registry: &Registry, latent: &Latent, seed: u64) -> Vec<(String, ProbeDump)> {
    let mut rng = replicate_rng(seed, STREAM_MODELS);
    let mono = monolingual_latent(latent, &mut rng);

    let mut chat_d = model_latent(Family::Chat, latent, None, &mut rng);
    let en = latent.lang_index(&Language::en());
    let ru = latent.lang_index(&Language::ru());
    let vdv = registry.group_index(&GroupId::new(VDV)).expect("registry has the VDV group");
    for (p, v) in chat_d[en][vdv].iter_mut().enumerate() {
        *v = latent.z(ru, vdv, p);
    }
    let mt5_d = model_latent(Family::Seq2Seq, latent, None, &mut rng);
    let mbert_d = model_latent(Family::Masked, latent, Some(&mono), &mut rng);

    let mut out = vec![
        ("chat.jsonl".to_string(), chat_dump(registry, &chat_d, &mut rng)),
        ("mt5.jsonl".to_string(), seq2seq_dump("mt5", registry, &mt5_d, &mut rng)),
        ("mbert.jsonl".to_string(), masked_dump("mbert", registry, &mbert_d, &mut rng)),
    ];
    for (li, lang) in latent.languages.iter().enumerate() {
        let id = format!("bert-{}", lang.as_str().to_lowercase());
        let dump = monolingual_dump(&id, li, registry, &mono, &mut rng);
        out.push((format!("{id}.jsonl"), dump));
    }
    out
}

pub const CONFIG_TOML: &str = "\
# Pipeline configuration for the synthetic fixture.
survey = \"survey\"
probes = \"probes\"
out = \"out\"
monolingual_models = [\"mbert\"]
seed = 7
";

/// Writes `survey/`, `probes/` and `stereoleak.toml` under `dir`.
pub fn write_fixture(dir: &Path, registry: &Registry, seed: u64) -> Result<()> {
    let latent = latent(registry, seed);
    write_survey_dir(&dir.join("survey"), &write_survey(&survey(registry, &latent, seed)))?;
    for (name, dump) in probe_dumps(registry, &latent, seed) {
        save_probe_dump(&dir.join("probes").join(name), &dump)?;
    }
    write_file(&dir.join("stereoleak.toml"), CONFIG_TOML)
}

/// Ratings a respondent gave, for reports on the generated corpus.
pub fn rated_groups(responses: &[SurveyResponse], lang: &Language, passed_only: bool) -> BTreeSet<GroupId> {
    responses
        .iter()
        .filter(|r| &r.language == lang)
        .filter(|r| !passed_only || (r.attention_checks.len() >= CHECKS_PER_RESPONDENT && r.attention_checks.iter().all(|c| c.passed)))
        .flat_map(|r| r.ratings.keys().cloned())
        .collect()
}
