use std::path::Path;

use stereoleak::config::{RunConfig, Settings};
use stereoleak::fixture::{self, write_fixture, DEFAULT_SEED};
use stereoleak::pipeline;
use stereoleak::registry_file::bundled;
use stereoleak::results::{load, LeakageFile, LeaksFile, LEAKAGE_RESULTS, LEAKED_TRAITS};
use stereoleak_core::leakage::Predictor;
use stereoleak_core::Language;

fn run_fixture(dir: &Path) -> RunConfig {
    write_fixture(dir, &bundled().unwrap(), DEFAULT_SEED).unwrap();
    let cfg = RunConfig::from_sources(Settings::default(), Some(&dir.join("stereoleak.toml"))).unwrap();
    pipeline::ingest_survey(&cfg).unwrap();
    pipeline::score(&cfg).unwrap();
    pipeline::fit(&cfg).unwrap();
    pipeline::leaks(&cfg).unwrap();
    cfg
}

#[test]
fn fixture_reproduces_the_planted_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_fixture(dir.path());

    let leaks: LeaksFile = load(&cfg.out.join(LEAKED_TRAITS)).unwrap();
    let vdv: Vec<&str> = leaks
        .leaks
        .iter()
        .filter(|l| l.model_id == "chat" && l.group.as_str() == fixture::VDV)
        .filter(|l| l.target_language == Language::en() && l.source_language == Language::ru())
        .map(|l| l.trait_name.as_str())
        .collect();
    for pole in ["trustworthy", "sincere", "threatening", "confident"] {
        assert!(vdv.contains(&pole), "{pole} missing from {vdv:?}");
    }

    let fits: LeakageFile = load(&cfg.out.join(LEAKAGE_RESULTS)).unwrap();
    let chat_ru = fits
        .results
        .iter()
        .find(|r| r.spec.model_id == "chat" && r.spec.target_language == Language::ru())
        .unwrap();
    let zh = chat_ru.effect(&Predictor::Human(Language::zh())).unwrap();
    assert!(zh.significant && (zh.coefficient - 0.36).abs() < 0.1, "{zh:?}");

    let mono: Vec<_> = fits.results.iter().filter(|r| r.spec.include_monolingual).collect();
    assert_eq!(mono.len(), 4);
    assert!(mono.iter().all(|r| r.spec.model_id == "mbert"));
    for r in &fits.results {
        for e in &r.per_predictor {
            assert_eq!(e.significant, e.coefficient > 0.0 && e.p_value < 0.05);
        }
    }
}

#[test]
fn raw_score_mode_refuses_leak_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_fixture(dir.path());
    let raw = RunConfig { score_mode: stereoleak_core::leakage::ScoreMode::Raw, ..cfg };
    assert!(pipeline::fit(&raw).is_ok());
    assert!(pipeline::leaks(&raw).is_err());
}
