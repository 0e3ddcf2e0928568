mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::canonical_registry;
use proptest::prelude::*;
use stereoleak_core::registry::PoleForms;
use stereoleak_core::scoring::{
    count_score, ilps_score, pair_differential, set_score, standardize, PoleScore, ProbeKind, ProbePayload,
    ProbeRecord, StandardizeMode,
};
use stereoleak_core::survey::{
    aggregate_human_scores, quality_gate, AggregationConfig, Aggregator, AttentionCheck, SurveyResponse,
};
use stereoleak_core::{CellKey, GroupId, Language, PairId, Pole, ScoreScale, Source, StereotypeProfile};

fn pole_score(pole: Pole, value: f64) -> PoleScore {
    PoleScore {
        source: Source::Model("m".into()),
        language: Language::en(),
        group: GroupId::new("woman"),
        pair: PairId::new("cold_warm"),
        pole,
        value,
        scale: ScoreScale::LogProb,
        n: 3,
    }
}

fn record(kind: ProbeKind, payload: ProbePayload, template: usize) -> ProbeRecord {
    ProbeRecord {
        model_id: "m".into(),
        language: Language::en(),
        group: GroupId::new("woman"),
        pair: PairId::new("cold_warm"),
        pole: if kind == ProbeKind::ChatResponse { None } else { Some(Pole::Right) },
        template_id: format!("t{template}"),
        kind,
        payload,
    }
}

fn profile(values: &[f64]) -> StereotypeProfile {
    let mut p = StereotypeProfile::new(Language::en(), Source::Model("m".into()), ScoreScale::LogProb);
    for (i, v) in values.iter().enumerate() {
        p.insert(CellKey::new(format!("g{}", i / 4), format!("p{}", i % 4)), *v, 1).unwrap();
    }
    p
}

fn spread(values: &[f64]) -> bool {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo > 1e-3
}

fn per_pair_spread(values: &[f64]) -> bool {
    (0..4).all(|p| spread(&values.iter().skip(p).step_by(4).cloned().collect::<Vec<_>>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn differential_is_antisymmetric(a in -40.0f64..0.0, b in -40.0f64..0.0) {
        let ab = pair_differential(&pole_score(Pole::Left, a), &pole_score(Pole::Right, b)).unwrap();
        let ba = pair_differential(&pole_score(Pole::Left, b), &pole_score(Pole::Right, a)).unwrap();
        prop_assert_eq!(ab.value, -ba.value);
    }

    #[test]
    fn standardize_ignores_affine_maps(
        values in prop::collection::vec(-50.0f64..50.0, 12..=24).prop_filter("multiple of 4", |v| v.len() % 4 == 0),
        alpha in 0.01f64..100.0,
        beta in -100.0f64..100.0,
    ) {
        prop_assume!(per_pair_spread(&values));
        let base = profile(&values);
        let moved = profile(&values.iter().map(|v| alpha * v + beta).collect::<Vec<_>>());
        for mode in [StandardizeMode::Pooled, StandardizeMode::PerPair] {
            let a = standardize(&base, mode).unwrap();
            let b = standardize(&moved, mode).unwrap();
            for ((_, x), (_, y)) in a.cells().zip(b.cells()) {
                prop_assert!((x.value - y.value).abs() < 1e-9);
            }
            let again = standardize(&a, mode).unwrap();
            for ((_, x), (_, y)) in a.cells().zip(again.cells()) {
                prop_assert!((x.value - y.value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn count_fractions_sum_to_one(choices in prop::collection::vec(0u8..4, 1..30)) {
        prop_assume!(choices.iter().any(|c| *c < 2));
        let forms = PoleForms { left: "cold".into(), right: "warm".into() };
        let text = |c: u8| match c {
            0 => "The story is about a cold person.",
            1 => "I choose warm.",
            2 => "Both cold and warm.",
            _ => "No preference.",
        };
        let records: Vec<ProbeRecord> = choices
            .iter()
            .enumerate()
            .map(|(i, &c)| record(
                ProbeKind::ChatResponse,
                ProbePayload::ChatResponse { raw_text: text(c).into(), repetition_index: i as u32 },
                0,
            ))
            .collect();
        let s = count_score(&records, &forms, false).unwrap();
        let (l, dl) = s.tally.fraction(Pole::Left);
        let (r, dr) = s.tally.fraction(Pole::Right);
        prop_assert_eq!(dl, dr);
        prop_assert_eq!(l + r, dl);
        prop_assert!((s.left.value + s.right.value - 1.0).abs() < 1e-12);
        prop_assert_eq!(s.tally.left as usize, choices.iter().filter(|c| **c == 0).count());
        prop_assert_eq!(s.tally.right as usize, choices.iter().filter(|c| **c == 1).count());
    }

    #[test]
    fn probe_scores_ignore_record_order(
        vals in prop::collection::vec(-30.0f64..0.0, 1..12),
        rot in 0usize..12,
    ) {
        let mk = |vs: &[f64], kind: ProbeKind| -> Vec<ProbeRecord> {
            vs.iter().enumerate().map(|(i, &v)| {
                let payload = match kind {
                    ProbeKind::LogProb => ProbePayload::LogProb { logprob_nats: v, baseline_logprob_nats: Some(v / 2.0) },
                    _ => ProbePayload::Sensitivity { weight_change: -v },
                };
                record(kind, payload, i)
            }).collect()
        };
        let mut shuffled = vals.clone();
        shuffled.rotate_left(rot % vals.len());
        shuffled.reverse();
        for norm in [false, true] {
            let a = ilps_score(&mk(&vals, ProbeKind::LogProb), norm, false).unwrap();
            let b = ilps_score(&mk(&shuffled, ProbeKind::LogProb), norm, false).unwrap();
            prop_assert_eq!(a.value, b.value);
        }
        let a = set_score(&mk(&vals, ProbeKind::Sensitivity), false).unwrap();
        let b = set_score(&mk(&shuffled, ProbeKind::Sensitivity), false).unwrap();
        prop_assert_eq!(a.value, b.value);
    }
}

fn survey(id: usize, lang: &str, groups: &[usize], seed: u64, checks: &[bool]) -> SurveyResponse {
    let reg = canonical_registry();
    let mut ratings = BTreeMap::new();
    let mut familiar = BTreeSet::new();
    for (k, &g) in groups.iter().enumerate() {
        let gid = reg.groups()[g].id.clone();
        familiar.insert(gid.clone());
        let row = reg
            .trait_pairs()
            .iter()
            .enumerate()
            .map(|(p, tp)| {
                let x = seed.wrapping_mul(6364136223846793005).wrapping_add(((k * 16 + p) as u64).wrapping_mul(1442695040888963407));
                (tp.id.clone(), ((x >> 33) % 101) as f64 - 50.0)
            })
            .collect();
        ratings.insert(gid, row);
    }
    SurveyResponse {
        respondent_id: format!("r{id:03}"),
        language: Language::new(lang),
        familiar_groups: familiar,
        ratings,
        attention_checks: checks
            .iter()
            .enumerate()
            .map(|(i, &passed)| AttentionCheck { check_id: format!("c{i}"), passed })
            .collect(),
        demographics: None,
    }
}

fn responses(seeds: &[u64]) -> Vec<SurveyResponse> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let lang = ["EN", "RU", "ZH", "HI"][i % 4];
            let start = (s % 15) as usize;
            survey(i, lang, &[start, start + 1, start + 2, start + 3], s, &[true; 4])
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_ignores_response_order(seeds in prop::collection::vec(any::<u64>(), 4..24), rot in 0usize..24) {
        let reg = canonical_registry();
        let rs = responses(&seeds);
        let mut shuffled = rs.clone();
        shuffled.rotate_left(rot % rs.len());
        shuffled.reverse();
        for aggregator in [Aggregator::Mean, Aggregator::Median] {
            let cfg = AggregationConfig { aggregator, ..Default::default() };
            let a = aggregate_human_scores(&rs, &reg, cfg).unwrap();
            let b = aggregate_human_scores(&shuffled, &reg, cfg).unwrap();
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn aggregated_cells_stay_within_ratings(seeds in prop::collection::vec(any::<u64>(), 4..24)) {
        let reg = canonical_registry();
        let rs = responses(&seeds);
        let set = aggregate_human_scores(&rs, &reg, AggregationConfig::default()).unwrap();
        for (lang, prof) in &set.profiles {
            for (key, cell) in prof.cells() {
                let vals: Vec<f64> = rs
                    .iter()
                    .filter(|r| &r.language == lang)
                    .filter_map(|r| r.ratings.get(&key.group).and_then(|m| m.get(&key.pair)).copied())
                    .collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= cell.value && cell.value <= hi);
                prop_assert_eq!(cell.n_observations as usize, vals.len());
            }
        }
    }

    #[test]
    fn quality_gate_partitions(outcomes in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..6), 0..40)) {
        let rs: Vec<SurveyResponse> = outcomes
            .iter()
            .enumerate()
            .map(|(i, c)| survey(i, ["EN", "RU"][i % 2], &[0, 1, 2, 3], i as u64, c))
            .collect();
        let n = rs.len();
        let expected = outcomes.iter().filter(|c| c.len() >= 4 && c.iter().all(|b| *b)).count();
        let out = quality_gate(rs, 4);
        prop_assert_eq!(out.passed.len() + out.failed.len(), n);
        prop_assert_eq!(out.passed.len(), expected);
        prop_assert_eq!(out.report.passed, expected);
    }
}
