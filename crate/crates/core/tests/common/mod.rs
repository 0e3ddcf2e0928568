#![allow(dead_code)]

pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stereoleak_core::linalg::Matrix;
use stereoleak_core::mixedfx::DesignMatrix;
use stereoleak_core::registry::{LanguageEntry, PoleForms, SocialGroup, TraitDimension, TraitPair};
use stereoleak_core::{GroupCategory, GroupId, Language, PairId, Registry};
use stereoleak_core::{ScoreScale, Source, StereotypeProfile, CellKey};

/// Plain-vector copy of a synthetic random-intercept data set.
pub struct Synthetic {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub groups: Vec<usize>,
}

impl Synthetic {
    pub fn design(&self) -> DesignMatrix {
        let p = self.x[0].len();
        let mut names = vec!["intercept".to_string()];
        names.extend((1..p).map(|j| format!("x{j}")));
        DesignMatrix::new(
            self.y.clone(),
            Matrix::from_rows(&self.x).unwrap(),
            names,
            self.groups.iter().map(|g| format!("g{g:02}")).collect(),
            vec![],
        )
        .unwrap()
    }
}

/// `q` groups × `per_group` rows; intercept plus standard-normal predictors.
pub fn simulate(seed: u64, q: usize, per_group: usize, beta: &[f64], sigma_u2: f64, sigma_e2: f64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut groups = Vec::new();
    for g in 0..q {
        let u: f64 = sigma_u2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        for _ in 0..per_group {
            let mut row = vec![1.0];
            row.extend((1..beta.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let e: f64 = sigma_e2.sqrt() * rng.sample::<f64, _>(StandardNormal);
            y.push(row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + u + e);
            x.push(row);
            groups.push(g);
        }
    }
    Synthetic { y, x, groups }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub const PAIRS: [(&str, &str, TraitDimension); 16] = [
    ("powerless", "powerful", TraitDimension::Agency),
    ("low status", "high status", TraitDimension::Agency),
    ("dominated", "dominating", TraitDimension::Agency),
    ("poor", "wealthy", TraitDimension::Agency),
    ("unconfident", "confident", TraitDimension::Agency),
    ("unassertive", "competitive", TraitDimension::Agency),
    ("religious", "science-oriented", TraitDimension::Beliefs),
    ("conventional", "alternative", TraitDimension::Beliefs),
    ("conservative", "liberal", TraitDimension::Beliefs),
    ("traditional", "modern", TraitDimension::Beliefs),
    ("untrustworthy", "trustworthy", TraitDimension::Communion),
    ("dishonest", "sincere", TraitDimension::Communion),
    ("cold", "warm", TraitDimension::Communion),
    ("benevolent", "threatening", TraitDimension::Communion),
    ("repellent", "likable", TraitDimension::Communion),
    ("egotistic", "altruistic", TraitDimension::Communion),
];

pub const SHARED: [&str; 10] = [
    "man", "woman", "gay", "lesbian", "single_mother", "housewife", "software_engineer", "wealthy_person",
    "poor_person", "disabled_person",
];
pub const SHARED_NON_SHARED: [&str; 8] = [
    "asian_person", "black_person", "muslim_person", "immigrant", "government_official", "civil_servant",
    "feminist", "veteran",
];
pub const NON_SHARED: [(&str, &str); 12] = [
    ("texan", "EN"), ("mormon", "EN"), ("puerto_rican", "EN"),
    ("vdv_soldier", "RU"), ("muscovite", "RU"), ("chechenets", "RU"),
    ("migrant_worker", "ZH"), ("hui_person", "ZH"), ("shanghainese_person", "ZH"),
    ("brahmin_person", "HI"), ("gujarati_person", "HI"), ("shudra_person", "HI"),
];

pub fn pair_id(left: &str, right: &str) -> String {
    format!("{left}_{right}").replace([' ', '-'], "_")
}

/// English surface forms reused for every language.
pub fn canonical_registry() -> Registry {
    let langs: Vec<LanguageEntry> = Language::canonical()
        .into_iter()
        .map(|code| LanguageEntry { display_name: code.to_string(), code, neutral_subject: None })
        .collect();
    let forms = |f: &dyn Fn() -> PoleForms| Language::canonical().into_iter().map(|l| (l, f())).collect();
    let pairs = PAIRS
        .iter()
        .map(|(l, r, dim)| TraitPair {
            id: PairId::new(pair_id(l, r)),
            left_pole: l.to_string(),
            right_pole: r.to_string(),
            dimension: *dim,
            surface_forms: forms(&|| PoleForms { left: l.to_string(), right: r.to_string() }),
        })
        .collect();
    let group = |id: &str, category, origin: Option<&str>| SocialGroup {
        id: GroupId::new(id),
        name: id.replace('_', " "),
        category,
        origin_language: origin.map(Language::new),
        surface_forms: Language::canonical().into_iter().map(|l| (l, id.replace('_', " "))).collect(),
    };
    let mut groups: Vec<SocialGroup> = SHARED.iter().map(|g| group(g, GroupCategory::SharedShared, None)).collect();
    groups.extend(SHARED_NON_SHARED.iter().map(|g| group(g, GroupCategory::SharedNonShared, None)));
    groups.extend(NON_SHARED.iter().map(|(g, o)| group(g, GroupCategory::NonSharedNonShared, Some(o))));
    let reg = Registry::new(langs, pairs, groups).unwrap();
    reg.check_canonical().unwrap();
    reg
}

/// Profile over the registry with `f(group index, pair index)` as cell values.
pub fn profile_from(
    registry: &Registry,
    language: &str,
    source: Source,
    scale: ScoreScale,
    f: impl Fn(usize, usize) -> Option<f64>,
) -> StereotypeProfile {
    let mut p = StereotypeProfile::new(Language::new(language), source, scale);
    for (gi, g) in registry.groups().iter().enumerate() {
        for (pi, tp) in registry.trait_pairs().iter().enumerate() {
            if let Some(v) = f(gi, pi) {
                p.insert(CellKey { group: g.id.clone(), pair: tp.id.clone() }, v, 5).unwrap();
            }
        }
    }
    p
}
