//! Deterministic synthetic person corpora for tests, benchmarks, and the
//! weak-label training pipeline. Stands in for a real annotated collection:
//! every record gets gender/race/top-color/bottom-color from small
//! vocabularies, optionally a clothes entity linked by `wearing`, and the
//! first records form a planted cluster of identical persons so relevance
//! behavior is checkable.

use crate::property::{Entity, Modality, PropertyRecord, PropertyValue, Relation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::str::FromStr;

pub const GENDERS: [&str; 2] = ["male", "female"];
pub const RACES: [&str; 4] = ["white", "black", "asian", "hispanic"];
pub const COLORS: [&str; 10] = [
    "red", "blue", "black", "white", "gray", "green", "yellow", "brown", "navy", "purple",
];
pub const GARMENTS: [&str; 6] = ["shirt", "jeans", "jacket", "dress", "pants", "hoodie"];

/// Target proportion of each modality in a generated corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalityMix {
    pub text: f64,
    pub image: f64,
    pub video: f64,
}

impl Default for ModalityMix {
    fn default() -> Self {
        ModalityMix {
            text: 1.0 / 3.0,
            image: 1.0 / 3.0,
            video: 1.0 / 3.0,
        }
    }
}

impl FromStr for ModalityMix {
    type Err = String;

    /// `text:0.3,image:0.4,video:0.3`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut mix = ModalityMix {
            text: 0.0,
            image: 0.0,
            video: 0.0,
        };
        for part in s.split(',') {
            let (name, value) = part
                .split_once(':')
                .ok_or_else(|| format!("bad mix component `{part}`"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| format!("bad mix weight `{value}`: {e}"))?;
            match name.trim() {
                "text" => mix.text = value,
                "image" => mix.image = value,
                "video" => mix.video = value,
                other => return Err(format!("unknown modality `{other}`")),
            }
        }
        if mix.text < 0.0 || mix.image < 0.0 || mix.video < 0.0 {
            return Err("mix weights must be non-negative".into());
        }
        if mix.text + mix.image + mix.video <= 0.0 {
            return Err("mix weights must not all be zero".into());
        }
        Ok(mix)
    }
}

/// Largest-remainder quota per modality; counts deviate from the exact
/// proportion by at most one.
fn quotas(mix: &ModalityMix, n: usize) -> [(Modality, usize); 3] {
    let total = mix.text + mix.image + mix.video;
    let shares = [
        (Modality::Text, mix.text / total),
        (Modality::Image, mix.image / total),
        (Modality::Video, mix.video / total),
    ];
    let mut counts: Vec<(Modality, usize, f64)> = shares
        .iter()
        .map(|&(m, w)| {
            let exact = w * n as f64;
            (m, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut assigned: usize = counts.iter().map(|&(_, c, _)| c).sum();
    // hand out the remainder to the largest fractional parts, stable order
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| counts[b].2.partial_cmp(&counts[a].2).unwrap());
    let mut at = 0;
    while assigned < n {
        counts[order[at % 3]].1 += 1;
        assigned += 1;
        at += 1;
    }
    [
        (counts[0].0, counts[0].1),
        (counts[1].0, counts[1].1),
        (counts[2].0, counts[2].1),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PersonDraw {
    gender: &'static str,
    race: &'static str,
    top: &'static str,
    bottom: &'static str,
    garment: &'static str,
}

fn draw(rng: &mut ChaCha8Rng) -> PersonDraw {
    PersonDraw {
        gender: GENDERS[rng.gen_range(0..GENDERS.len())],
        race: RACES[rng.gen_range(0..RACES.len())],
        top: COLORS[rng.gen_range(0..COLORS.len())],
        bottom: COLORS[rng.gen_range(0..COLORS.len())],
        garment: GARMENTS[rng.gen_range(0..GARMENTS.len())],
    }
}

fn build_record(id: String, modality: Modality, p: PersonDraw, with_clothes: bool) -> PropertyRecord {
    let mut person_attrs = BTreeMap::new();
    person_attrs.insert("gender".to_string(), PropertyValue::scalar(p.gender));
    person_attrs.insert("race".to_string(), PropertyValue::scalar(p.race));
    person_attrs.insert("top-color".to_string(), PropertyValue::scalar(p.top));
    person_attrs.insert("bottom-color".to_string(), PropertyValue::scalar(p.bottom));
    let mut entities = vec![Entity {
        id: "p1".into(),
        entity_type: "Person".into(),
        primary: true,
        attrs: person_attrs,
    }];
    let mut relations = Vec::new();
    if with_clothes {
        let mut attrs = BTreeMap::new();
        attrs.insert("type".to_string(), PropertyValue::scalar(p.garment));
        attrs.insert("color".to_string(), PropertyValue::scalar(p.top));
        entities.push(Entity {
            id: "c1".into(),
            entity_type: "Clothes".into(),
            primary: false,
            attrs,
        });
        relations.push(Relation {
            name: "wearing".into(),
            subject: "p1".into(),
            object: "c1".into(),
            role: None,
        });
    }
    PropertyRecord {
        id,
        modality,
        metadata: BTreeMap::new(),
        entities,
        relations,
    }
}

/// Generate `n` deterministic person records. The first three records share
/// identical attributes (a planted duplicate cluster) and every fifth
/// record clones an earlier draw, so exact-duplicate pairs always exist.
/// With `with_clothes`, every record gains a clothes entity and a `wearing`
/// relation (uniform graph sizes either way).
pub fn synth_corpus(seed: u64, n: usize, mix: &ModalityMix, with_clothes: bool) -> Vec<PropertyRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modalities: Vec<Modality> = Vec::with_capacity(n);
    for (modality, count) in quotas(mix, n) {
        modalities.resize(modalities.len() + count, modality);
    }
    modalities.shuffle(&mut rng);

    let mut draws: Vec<PersonDraw> = Vec::with_capacity(n);
    for i in 0..n {
        let p = if (1..3).contains(&i) {
            draws[0] // planted cluster of three
        } else if i >= 5 && i % 5 == 4 {
            draws[rng.gen_range(0..draws.len())]
        } else {
            draw(&mut rng)
        };
        draws.push(p);
    }
    draws
        .into_iter()
        .zip(modalities)
        .enumerate()
        .map(|(i, (p, modality))| {
            build_record(format!("S{:04}", i + 1), modality, p, with_clothes)
        })
        .collect()
}
