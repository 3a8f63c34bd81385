//! Human attribute recognition from unstructured text.
//!
//! Two stages: candidate sentences are selected by key-phrase similarity
//! (exact pattern match, word-vector cosine, taxonomy similarity, a stacked
//! combination, or scores from an external classifier), then a POS-driven
//! scan walks each candidate pulling out gender/race/height values and
//! `(clothes-name, descriptions)` pairs.
//!
//! Tags come from outside in CoNLL form; [`tagger`] provides a small
//! rule-based fallback so the pipeline runs without one.

pub mod tagger;

use crate::lexicon::{cosine_sim, EmbeddingStore, Taxonomy};
use crate::property::{Entity, Modality, PropertyRecord, PropertyValue, Relation};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

const COLOR_CONCEPT: &str = "color";

#[derive(Debug, Error)]
pub enum HartError {
    #[error("model `{0}` requires a threshold (--theta)")]
    MissingTheta(String),
    #[error("model `{0}` requires word vectors")]
    MissingEmbeddings(String),
    #[error("model `{0}` requires an external score file")]
    MissingScores(String),
}

/// One sentence with its part-of-speech tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    /// `(token, tag)` pairs, Penn-style tags.
    pub tokens: Vec<(String, String)>,
    pub raw: String,
}

impl TaggedSentence {
    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i].0
    }

    pub fn class(&self, i: usize) -> TagClass {
        TagClass::of(&self.tokens[i].1)
    }
}

/// Tag classes the search algorithm distinguishes. `Ptcp`, `Adv` and the
/// verb classes form the name-carrying set; `Det`/`Conj`/`Prep` extend a
/// property name; pronouns, untagged tokens and anything else end the scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagClass {
    Noun,
    Adj,
    Vbd,
    Vbg,
    Verb,
    Ptcp,
    Adv,
    Det,
    Conj,
    Prep,
    Prp,
    Epsilon,
    Other,
}

impl TagClass {
    pub fn of(tag: &str) -> TagClass {
        match tag {
            "" => TagClass::Epsilon,
            "VBD" => TagClass::Vbd,
            "VBG" => TagClass::Vbg,
            "VBN" | "RP" | "PTCP" => TagClass::Ptcp,
            "VB" | "VBZ" | "VBP" | "VERB" => TagClass::Verb,
            "DT" | "PDT" | "DET" => TagClass::Det,
            "CC" | "CONJ" => TagClass::Conj,
            "IN" | "TO" | "PREP" => TagClass::Prep,
            "PRP" | "PRP$" => TagClass::Prp,
            t if t.starts_with("NN") || t == "NOUN" => TagClass::Noun,
            t if t.starts_with("JJ") || t == "ADJ" => TagClass::Adj,
            t if t.starts_with("RB") || t == "ADV" => TagClass::Adv,
            _ => TagClass::Other,
        }
    }

    /// Determiner / conjunction / preposition: name-extending tokens.
    pub fn is_dcp(self) -> bool {
        matches!(self, TagClass::Det | TagClass::Conj | TagClass::Prep)
    }

    /// Participle / adverb / verb: name-carrying tokens.
    pub fn is_pav(self) -> bool {
        matches!(
            self,
            TagClass::Ptcp | TagClass::Adv | TagClass::Verb | TagClass::Vbd | TagClass::Vbg
        )
    }

    /// Pronoun or untagged: ends a property-name mention.
    pub fn is_p_eps(self) -> bool {
        matches!(self, TagClass::Prp | TagClass::Epsilon)
    }
}

// ---------------------------------------------------------------------------
// candidate sentence extraction
// ---------------------------------------------------------------------------

/// Which similarity model selects candidate sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionModel {
    Re,
    Embedding,
    Taxonomy,
    StackedReEmbedding,
    StackedReTaxonomy,
    External,
}

impl FromStr for ExtractionModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "re" => Ok(ExtractionModel::Re),
            "embedding" => Ok(ExtractionModel::Embedding),
            "taxonomy" => Ok(ExtractionModel::Taxonomy),
            "stacked-re-embedding" => Ok(ExtractionModel::StackedReEmbedding),
            "stacked-re-taxonomy" => Ok(ExtractionModel::StackedReTaxonomy),
            "external" => Ok(ExtractionModel::External),
            other => Err(format!("unknown extraction model `{other}`")),
        }
    }
}

impl ExtractionModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractionModel::Re => "re",
            ExtractionModel::Embedding => "embedding",
            ExtractionModel::Taxonomy => "taxonomy",
            ExtractionModel::StackedReEmbedding => "stacked-re-embedding",
            ExtractionModel::StackedReTaxonomy => "stacked-re-taxonomy",
            ExtractionModel::External => "external",
        }
    }
}

pub const DEFAULT_KEY_PHRASES: [&str; 4] = ["clothes", "wear", "shirts", "pants"];

#[derive(Debug, Clone)]
pub struct CandidateConfig {
    pub key_phrases: Vec<String>,
    pub model: ExtractionModel,
    pub theta: Option<f64>,
}

impl CandidateConfig {
    pub fn new(model: ExtractionModel, theta: Option<f64>) -> Result<Self, HartError> {
        if theta.is_none() && model != ExtractionModel::Re {
            return Err(HartError::MissingTheta(model.as_str().into()));
        }
        Ok(CandidateConfig {
            key_phrases: DEFAULT_KEY_PHRASES.iter().map(|s| s.to_string()).collect(),
            model,
            theta,
        })
    }
}

/// External resources the soft scorers draw on.
#[derive(Clone, Copy)]
pub struct HartResources<'a> {
    pub taxonomy: &'a Taxonomy,
    pub embeddings: Option<&'a EmbeddingStore>,
    /// Sentence-index → score, from an external classifier run.
    pub external_scores: Option<&'a BTreeMap<usize, f64>>,
}

/// Outcome of candidate extraction; a stacked model reports which stage
/// produced the candidates, and an empty result is an explicit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateSet {
    FromRe(Vec<usize>),
    FromSoft(Vec<usize>),
    Empty,
}

impl CandidateSet {
    pub fn indices(&self) -> &[usize] {
        match self {
            CandidateSet::FromRe(v) | CandidateSet::FromSoft(v) => v,
            CandidateSet::Empty => &[],
        }
    }
}

/// Exact pattern stage: a sentence qualifies when some key phrase occurs
/// followed by at least one non-period character.
pub fn extract_candidates_re(sentences: &[String], phrases: &[String]) -> Vec<usize> {
    let phrases: Vec<String> = phrases.iter().map(|p| p.to_lowercase()).collect();
    sentences
        .iter()
        .enumerate()
        .filter(|(_, sentence)| {
            let lower = sentence.to_lowercase();
            phrases.iter().any(|phrase| {
                lower.match_indices(phrase.as_str()).any(|(at, _)| {
                    lower[at + phrase.len()..]
                        .chars()
                        .next()
                        .is_some_and(|c| c != '.')
                })
            })
        })
        .map(|(i, _)| i)
        .collect()
}

fn token_words(sentence: &str) -> Vec<String> {
    tagger::tokenize(sentence)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect()
}

fn embedding_score(phrase: &str, words: &[String], store: &EmbeddingStore) -> f64 {
    let Some(anchor) = store.phrase(phrase) else {
        return 0.0;
    };
    words
        .iter()
        .filter_map(|w| store.get(w))
        .filter_map(|v| cosine_sim(&anchor, v).ok())
        .fold(0.0, f64::max)
}

fn taxonomy_score(phrase: &str, words: &[String], tax: &Taxonomy) -> f64 {
    let Some(anchor) = tax.lookup(phrase) else {
        return 0.0;
    };
    words
        .iter()
        .filter_map(|w| tax.lookup(w))
        .filter_map(|c| tax.wpdist(anchor, c).ok())
        .fold(0.0, f64::max)
}

/// Soft stage: keep a sentence when the best token-to-phrase similarity
/// clears the threshold. Tokens without a vector or concept score 0.
pub fn extract_candidates_sim(
    sentences: &[String],
    phrases: &[String],
    model: ExtractionModel,
    theta: f64,
    res: &HartResources,
) -> Result<Vec<usize>, HartError> {
    let mut kept = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        let score = match model {
            ExtractionModel::Embedding | ExtractionModel::StackedReEmbedding => {
                let store = res
                    .embeddings
                    .ok_or_else(|| HartError::MissingEmbeddings(model.as_str().into()))?;
                let words = token_words(sentence);
                phrases
                    .iter()
                    .map(|p| embedding_score(p, &words, store))
                    .fold(0.0, f64::max)
            }
            ExtractionModel::Taxonomy | ExtractionModel::StackedReTaxonomy => {
                let words = token_words(sentence);
                phrases
                    .iter()
                    .map(|p| taxonomy_score(p, &words, res.taxonomy))
                    .fold(0.0, f64::max)
            }
            ExtractionModel::External => {
                let scores = res
                    .external_scores
                    .ok_or_else(|| HartError::MissingScores(model.as_str().into()))?;
                scores.get(&i).copied().unwrap_or(0.0)
            }
            ExtractionModel::Re => unreachable!("re has no soft score"),
        };
        if score > theta {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Run the configured model. Stacked variants try the exact pattern first
/// and only fall back to the soft scorer when no phrase matched anywhere.
pub fn extract_candidates(
    sentences: &[String],
    cfg: &CandidateConfig,
    res: &HartResources,
) -> Result<CandidateSet, HartError> {
    let soft = |model| {
        let theta = cfg
            .theta
            .ok_or_else(|| HartError::MissingTheta(cfg.model.as_str().into()))?;
        extract_candidates_sim(sentences, &cfg.key_phrases, model, theta, res)
    };
    let outcome = match cfg.model {
        ExtractionModel::Re => {
            let hits = extract_candidates_re(sentences, &cfg.key_phrases);
            if hits.is_empty() {
                CandidateSet::Empty
            } else {
                CandidateSet::FromRe(hits)
            }
        }
        ExtractionModel::Embedding | ExtractionModel::Taxonomy | ExtractionModel::External => {
            let hits = soft(cfg.model)?;
            if hits.is_empty() {
                CandidateSet::Empty
            } else {
                CandidateSet::FromSoft(hits)
            }
        }
        ExtractionModel::StackedReEmbedding | ExtractionModel::StackedReTaxonomy => {
            let re_hits = extract_candidates_re(sentences, &cfg.key_phrases);
            if !re_hits.is_empty() {
                CandidateSet::FromRe(re_hits)
            } else {
                let hits = soft(cfg.model)?;
                if hits.is_empty() {
                    CandidateSet::Empty
                } else {
                    CandidateSet::FromSoft(hits)
                }
            }
        }
    };
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// finite-valued property patterns
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HumanProp {
    Gender,
    Race,
    Height,
    Clothes,
}

/// What a property pattern returned: concrete values for the finite-valued
/// properties, the partial sentence for clothes, or nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropMatch {
    Values(Vec<String>),
    Partial(String),
    None,
}

/// Word lists behind the finite-valued patterns; extensible via config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropVocabulary {
    pub gender: Vec<String>,
    pub race: Vec<String>,
    /// A race word only counts when one of these follows it ("White male",
    /// "white ethnicity"), which keeps clothing colors out.
    pub race_context: Vec<String>,
}

impl Default for PropVocabulary {
    fn default() -> Self {
        let words = |items: &[&str]| items.iter().map(|s| s.to_string()).collect();
        PropVocabulary {
            gender: words(&[
                "female",
                "woman",
                "non-binary",
                "nonbinary",
                "male",
                "man",
                "boy",
                "girl",
                "lady",
            ]),
            race: words(&[
                "white", "black", "asian", "hispanic", "caucasian", "latino", "latina",
            ]),
            race_context: words(&[
                "male",
                "female",
                "man",
                "woman",
                "boy",
                "girl",
                "person",
                "lady",
                "guy",
                "ethnicity",
                "descent",
            ]),
        }
    }
}

/// Compiled search patterns for the finite-valued properties.
pub struct PropExtractor {
    gender: Regex,
    race: Regex,
}

static HEIGHT_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"(?i)\b(\d)\s*(?:'|ft\b|feet\b|foot\b)\s*(?:(\d{1,2})\s*(?:"|''|in\b|inches\b)?)?"#)
        .expect("height pattern compiles")
});

static WEARING_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)\bwearing\b.*").expect("clothes pattern compiles"));

fn word_alternation(words: &[String]) -> String {
    let mut sorted: Vec<&String> = words.iter().collect();
    // longest first so `woman` wins over `man` at the same position
    sorted.sort_by_key(|w| std::cmp::Reverse(w.len()));
    sorted
        .iter()
        .map(|w| regex::escape(w))
        .collect::<Vec<_>>()
        .join("|")
}

impl PropExtractor {
    pub fn new(vocab: &PropVocabulary) -> Self {
        let gender = Regex::new(&format!(r"(?i)\b({})\b", word_alternation(&vocab.gender)))
            .expect("gender pattern compiles");
        let race = Regex::new(&format!(
            r"(?i)\b({})\b\s+(?:{})\b",
            word_alternation(&vocab.race),
            word_alternation(&vocab.race_context)
        ))
        .expect("race pattern compiles");
        PropExtractor { gender, race }
    }

    /// Apply the property's search pattern to one sentence.
    pub fn re_prop_values(&self, sentence: &str, prop: HumanProp) -> PropMatch {
        match prop {
            HumanProp::Gender => {
                let values: Vec<String> = self
                    .gender
                    .captures_iter(sentence)
                    .map(|c| c[1].to_string())
                    .collect();
                if values.is_empty() {
                    PropMatch::None
                } else {
                    PropMatch::Values(values)
                }
            }
            HumanProp::Race => {
                let values: Vec<String> = self
                    .race
                    .captures_iter(sentence)
                    .map(|c| c[1].to_string())
                    .collect();
                if values.is_empty() {
                    PropMatch::None
                } else {
                    PropMatch::Values(values)
                }
            }
            HumanProp::Height => match HEIGHT_RE.find(sentence) {
                Some(m) => PropMatch::Values(vec![m.as_str().trim().to_string()]),
                None => PropMatch::None,
            },
            HumanProp::Clothes => match WEARING_RE.find(sentence) {
                Some(m) => PropMatch::Partial(m.as_str().to_string()),
                None => PropMatch::None,
            },
        }
    }
}

impl Default for PropExtractor {
    fn default() -> Self {
        PropExtractor::new(&PropVocabulary::default())
    }
}

// ---------------------------------------------------------------------------
// iterative property search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClothingItem {
    pub name: String,
    pub descriptions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeResult {
    pub gender: Option<String>,
    pub race: Option<String>,
    pub height: Option<String>,
    pub clothes: Vec<ClothingItem>,
}

/// True when the token's concept descends from (or is) `color`.
pub fn match_color(token: &str, tax: &Taxonomy) -> bool {
    tax.lookup(token)
        .is_some_and(|c| tax.ancestors(c).any(|a| a == COLOR_CONCEPT))
}

/// Skip the leading relation marker: an optional pronoun run followed by
/// consecutive verb-group tokens ("was wearing", "wearing", "She had").
fn scan_start(sentence: &TaggedSentence, range: &[usize]) -> usize {
    let mut j = 0;
    while j < range.len() && sentence.class(range[j]).is_p_eps() {
        j += 1;
    }
    let at_verb = |k: usize| {
        matches!(
            sentence.class(range[k]),
            TagClass::Vbd | TagClass::Vbg | TagClass::Ptcp | TagClass::Adv
        )
    };
    if j < range.len() && matches!(sentence.class(range[j]), TagClass::Vbd | TagClass::Vbg) {
        while j < range.len() && at_verb(j) {
            j += 1;
        }
        return j;
    }
    0
}

/// Walk the token range accumulating name-index and description state:
/// determiners/conjunctions/prepositions and verb-group tokens extend the
/// pending name, adjectives reset it and become descriptions, nouns either
/// join the descriptions (colors) or finalize a `(name, descriptions)` pair,
/// and pronouns or unclassified tokens end the scan.
fn scan_clothes(sentence: &TaggedSentence, range: &[usize], tax: &Taxonomy) -> Vec<ClothingItem> {
    let mut items: Vec<ClothingItem> = Vec::new();
    let mut name_idx: Vec<usize> = Vec::new();
    let mut descs: Vec<String> = Vec::new();
    let start = scan_start(sentence, range);

    for pos in start..range.len() {
        let i = range[pos];
        let class = sentence.class(i);
        if class.is_dcp() || class.is_pav() {
            if class.is_pav() && pos > start && sentence.class(range[pos - 1]).is_p_eps() {
                break;
            }
            name_idx.push(pos);
        } else if class == TagClass::Adj {
            name_idx.clear();
            descs.push(sentence.token(i).to_string());
        } else if class == TagClass::Noun {
            let token = sentence.token(i);
            if match_color(token, tax) {
                descs.push(token.to_string());
                name_idx.clear();
                continue;
            }
            // property name: the noun plus the contiguous trailing run of
            // name-carrying (P_PAV) tokens backtracked from the name index
            let mut parts: Vec<&str> = Vec::new();
            let mut expect = pos;
            for &idx in name_idx.iter().rev() {
                if idx + 1 != expect || !sentence.class(range[idx]).is_pav() {
                    break;
                }
                parts.push(sentence.token(range[idx]));
                expect = idx;
            }
            parts.reverse();
            parts.push(token);

            let prev_noun = pos > 0 && sentence.class(range[pos - 1]) == TagClass::Noun;
            let extends = prev_noun
                && items.last().is_some_and(|item| {
                    item.name.split(' ').next_back() == Some(sentence.token(range[pos - 1]))
                });
            if extends {
                let last = items.last_mut().expect("prev noun implies an item");
                last.name.push(' ');
                last.name.push_str(token);
                last.descriptions.append(&mut descs);
            } else {
                items.push(ClothingItem {
                    name: parts.join(" "),
                    descriptions: std::mem::take(&mut descs),
                });
            }
            name_idx.clear();
            descs.clear();
        } else {
            break;
        }
    }
    items
}

/// Token range the clothes scan should cover: from the `wearing` token when
/// present, otherwise the whole sentence minus already-extracted values.
fn clothes_range(sentence: &TaggedSentence, consumed: &[String]) -> Vec<usize> {
    if let Some(at) = sentence
        .tokens
        .iter()
        .position(|(t, _)| t.eq_ignore_ascii_case("wearing"))
    {
        return (at..sentence.tokens.len()).collect();
    }
    let mut leftover: Vec<String> = consumed
        .iter()
        .flat_map(|v| v.split_whitespace())
        .map(str::to_lowercase)
        .collect();
    (0..sentence.tokens.len())
        .filter(|&i| {
            let token = sentence.token(i).to_lowercase();
            if let Some(at) = leftover.iter().position(|v| *v == token) {
                leftover.remove(at);
                false
            } else {
                true
            }
        })
        .collect()
}

/// Run the full property search over candidate sentences. The first match
/// wins for single-valued properties; clothes accumulate across sentences.
pub fn posi_har(
    tagged: &[TaggedSentence],
    extractor: &PropExtractor,
    tax: &Taxonomy,
) -> AttributeResult {
    let mut result = AttributeResult::default();
    for sentence in tagged {
        let mut consumed: Vec<String> = Vec::new();
        for (prop, slot) in [
            (HumanProp::Gender, &mut result.gender),
            (HumanProp::Race, &mut result.race),
            (HumanProp::Height, &mut result.height),
        ] {
            if let PropMatch::Values(values) = extractor.re_prop_values(&sentence.raw, prop) {
                consumed.extend(values.iter().cloned());
                if slot.is_none() {
                    *slot = values.into_iter().next();
                }
            }
        }
        let range = clothes_range(sentence, &consumed);
        result.clothes.extend(scan_clothes(sentence, &range, tax));
    }
    result
}

/// Materialize the extraction as a property record: one primary person plus
/// one clothes entity per item, linked by `wearing` relations. Values are
/// lower-cased for cross-modal comparability.
pub fn result_to_record(result: &AttributeResult, id: &str) -> PropertyRecord {
    let mut person_attrs = BTreeMap::new();
    for (name, value) in [
        ("gender", &result.gender),
        ("race", &result.race),
        ("height", &result.height),
    ] {
        if let Some(v) = value {
            person_attrs.insert(name.to_string(), PropertyValue::scalar(v.to_lowercase()));
        }
    }
    let mut entities = vec![Entity {
        id: "p1".into(),
        entity_type: "Person".into(),
        primary: true,
        attrs: person_attrs,
    }];
    let mut relations = Vec::new();
    for (n, item) in result.clothes.iter().enumerate() {
        let cid = format!("c{}", n + 1);
        let mut attrs = BTreeMap::new();
        attrs.insert("type".to_string(), PropertyValue::scalar(item.name.to_lowercase()));
        match item.descriptions.len() {
            0 => {}
            1 => {
                attrs.insert(
                    "color".to_string(),
                    PropertyValue::scalar(item.descriptions[0].to_lowercase()),
                );
            }
            _ => {
                attrs.insert(
                    "color".to_string(),
                    PropertyValue::list(item.descriptions.iter().map(|d| d.to_lowercase())),
                );
            }
        }
        entities.push(Entity {
            id: cid.clone(),
            entity_type: "Clothes".into(),
            primary: false,
            attrs,
        });
        relations.push(Relation {
            name: "wearing".into(),
            subject: "p1".into(),
            object: cid,
            role: None,
        });
    }
    let mut record = PropertyRecord {
        id: id.to_string(),
        modality: Modality::Text,
        metadata: BTreeMap::new(),
        entities,
        relations,
    };
    record.validate().expect("constructed record is valid");
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hart::tagger::parse_conll;

    fn sentences(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn phrases(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const E1: &str = "Person was a White male with medium build , wearing blue shirt and black jeans .";
    const E1_TAGS: &str = "Person\tNN\nwas\tVBD\na\tDT\nWhite\tJJ\nmale\tNN\nwith\tIN\nmedium\tJJ\nbuild\tNN\n,\t,\nwearing\tVBG\nblue\tJJ\nshirt\tNN\nand\tCC\nblack\tJJ\njeans\tNNS\n.\t.\n";

    const E5: &str = "She had a black tank top with jean shorts .";
    const E5_TAGS: &str = "She\tPRP\nhad\tVBD\na\tDT\nblack\tJJ\ntank\tNN\ntop\tNN\nwith\tIN\njean\tNN\nshorts\tNNS\n.\t.\n";

    const E9: &str = "The man was seen in Vernon St. and was wearing brown dockers with a red and blue buttoned up shirt .";
    const E9_TAGS: &str = "The\tDT\nman\tNN\nwas\tVBD\nseen\tVBN\nin\tIN\nVernon\tNNP\nSt.\tNNP\nand\tCC\nwas\tVBD\nwearing\tVBG\nbrown\tJJ\ndockers\tNNS\nwith\tIN\na\tDT\nred\tJJ\nand\tCC\nblue\tJJ\nbuttoned\tVBN\nup\tRP\nshirt\tNN\n.\t.\n";

    fn tagged(raw: &str, conll: &str) -> TaggedSentence {
        let mut s = parse_conll(conll).remove(0);
        s.raw = raw.to_string();
        s
    }

    #[test]
    fn re_extraction_keeps_matching_sentences() {
        let s = sentences(&["He ran fast.", "He was wearing a red hat."]);
        assert_eq!(extract_candidates_re(&s, &phrases(&["wear"])), vec![1]);
    }

    #[test]
    fn re_extraction_empty_input() {
        assert!(extract_candidates_re(&[], &phrases(&["wear"])).is_empty());
    }

    #[test]
    fn re_needs_a_following_character() {
        let s = sentences(&["He likes what he might wear.", "They wear."]);
        assert!(extract_candidates_re(&s, &phrases(&["wear"])).is_empty());
        let s = sentences(&["They wear hats."]);
        assert_eq!(extract_candidates_re(&s, &phrases(&["wear"])), vec![0]);
    }

    #[test]
    fn embedding_scorer_at_half_theta() {
        let store = EmbeddingStore::bundled();
        let tax = Taxonomy::bundled();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: Some(&store),
            external_scores: None,
        };
        let s = sentences(&["He ran fast .", E5]);
        let kept = extract_candidates_sim(
            &s,
            &phrases(&["clothes"]),
            ExtractionModel::Embedding,
            0.5,
            &res,
        )
        .unwrap();
        assert_eq!(kept, vec![1]);
    }

    #[test]
    fn taxonomy_scorer_at_high_theta_needs_literal_token() {
        let tax = Taxonomy::bundled();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: None,
            external_scores: None,
        };
        let s = sentences(&[
            "The clothes were scattered .",
            "The garments were scattered .",
            "He ran fast .",
        ]);
        let kept = extract_candidates_sim(
            &s,
            &phrases(&["clothes"]),
            ExtractionModel::Taxonomy,
            0.9,
            &res,
        )
        .unwrap();
        // wpdist(clothes, clothes) = 1 > 0.9; wpdist(clothes, garment) = 0.8
        assert_eq!(kept, vec![0]);
        let kept = extract_candidates_sim(
            &s,
            &phrases(&["clothes"]),
            ExtractionModel::Taxonomy,
            0.7,
            &res,
        )
        .unwrap();
        assert_eq!(kept, vec![0, 1]);
    }

    #[test]
    fn stacked_prefers_re_hits() {
        let tax = Taxonomy::bundled();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: None,
            external_scores: None,
        };
        let cfg = CandidateConfig::new(ExtractionModel::StackedReTaxonomy, Some(0.7)).unwrap();
        let s = sentences(&["He was wearing a hat.", "The garments were scattered."]);
        let got = extract_candidates(&s, &cfg, &res).unwrap();
        assert_eq!(got, CandidateSet::FromRe(vec![0]));
        assert_eq!(got.indices(), extract_candidates_re(&s, &cfg.key_phrases));
    }

    #[test]
    fn stacked_falls_back_to_taxonomy() {
        let tax = Taxonomy::bundled();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: None,
            external_scores: None,
        };
        let cfg = CandidateConfig::new(ExtractionModel::StackedReTaxonomy, Some(0.7)).unwrap();
        let s = sentences(&["The garments look nice on him."]);
        assert_eq!(
            extract_candidates(&s, &cfg, &res).unwrap(),
            CandidateSet::FromSoft(vec![0])
        );
    }

    #[test]
    fn stacked_reports_empty_distinctly() {
        let tax = Taxonomy::bundled();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: None,
            external_scores: None,
        };
        let cfg = CandidateConfig::new(ExtractionModel::StackedReTaxonomy, Some(0.7)).unwrap();
        let s = sentences(&["Nothing relevant here."]);
        assert_eq!(extract_candidates(&s, &cfg, &res).unwrap(), CandidateSet::Empty);
    }

    #[test]
    fn external_scores_drive_selection() {
        let tax = Taxonomy::bundled();
        let scores: BTreeMap<usize, f64> = [(0, 0.95), (1, 0.2)].into_iter().collect();
        let res = HartResources {
            taxonomy: &tax,
            embeddings: None,
            external_scores: Some(&scores),
        };
        let s = sentences(&["A", "B"]);
        let kept =
            extract_candidates_sim(&s, &phrases(&["clothes"]), ExtractionModel::External, 0.85, &res)
                .unwrap();
        assert_eq!(kept, vec![0]);
    }

    #[test]
    fn theta_required_for_soft_models() {
        assert!(matches!(
            CandidateConfig::new(ExtractionModel::Taxonomy, None),
            Err(HartError::MissingTheta(_))
        ));
        assert!(CandidateConfig::new(ExtractionModel::Re, None).is_ok());
    }

    #[test]
    fn finite_prop_patterns_on_e1() {
        let extractor = PropExtractor::default();
        assert_eq!(
            extractor.re_prop_values(E1, HumanProp::Gender),
            PropMatch::Values(vec!["male".into()])
        );
        assert_eq!(
            extractor.re_prop_values(E1, HumanProp::Race),
            PropMatch::Values(vec!["White".into()])
        );
        match extractor.re_prop_values(E1, HumanProp::Clothes) {
            PropMatch::Partial(p) => {
                assert_eq!(p, "wearing blue shirt and black jeans .")
            }
            other => panic!("expected partial sentence, got {other:?}"),
        }
    }

    #[test]
    fn clothes_pattern_empty_without_wearing() {
        let extractor = PropExtractor::default();
        assert_eq!(extractor.re_prop_values(E5, HumanProp::Clothes), PropMatch::None);
    }

    #[test]
    fn height_pattern() {
        let extractor = PropExtractor::default();
        match extractor.re_prop_values("The suspect was 5'10\" tall.", HumanProp::Height) {
            PropMatch::Values(v) => assert_eq!(v, vec!["5'10\"".to_string()]),
            other => panic!("expected height value, got {other:?}"),
        }
        assert_eq!(
            extractor.re_prop_values("No height here.", HumanProp::Height),
            PropMatch::None
        );
    }

    #[test]
    fn race_word_needs_person_context() {
        let extractor = PropExtractor::default();
        // "black jeans" must not read as a race
        assert_eq!(
            extractor.re_prop_values("She wore black jeans.", HumanProp::Race),
            PropMatch::None
        );
        assert_eq!(
            extractor.re_prop_values("A person with white ethnicity was seen.", HumanProp::Race),
            PropMatch::Values(vec!["white".into()])
        );
    }

    #[test]
    fn posi_har_e1() {
        let tax = Taxonomy::bundled();
        let got = posi_har(&[tagged(E1, E1_TAGS)], &PropExtractor::default(), &tax);
        assert_eq!(got.gender.as_deref(), Some("male"));
        assert_eq!(got.race.as_deref(), Some("White"));
        assert_eq!(
            got.clothes,
            vec![
                ClothingItem {
                    name: "shirt".into(),
                    descriptions: vec!["blue".into()]
                },
                ClothingItem {
                    name: "jeans".into(),
                    descriptions: vec!["black".into()]
                },
            ]
        );
    }

    #[test]
    fn posi_har_e5() {
        let tax = Taxonomy::bundled();
        let got = posi_har(&[tagged(E5, E5_TAGS)], &PropExtractor::default(), &tax);
        assert_eq!(got.gender, None);
        assert_eq!(
            got.clothes,
            vec![
                ClothingItem {
                    name: "tank top".into(),
                    descriptions: vec!["black".into()]
                },
                ClothingItem {
                    name: "jean shorts".into(),
                    descriptions: vec![]
                },
            ]
        );
    }

    #[test]
    fn posi_har_e9() {
        let tax = Taxonomy::bundled();
        let got = posi_har(&[tagged(E9, E9_TAGS)], &PropExtractor::default(), &tax);
        assert_eq!(
            got.clothes,
            vec![
                ClothingItem {
                    name: "dockers".into(),
                    descriptions: vec!["brown".into()]
                },
                ClothingItem {
                    name: "buttoned up shirt".into(),
                    descriptions: vec!["red".into(), "blue".into()]
                },
            ]
        );
    }

    #[test]
    fn match_color_examples() {
        let tax = Taxonomy::bundled();
        assert!(match_color("grey", &tax));
        assert!(!match_color("jean", &tax));
        assert!(match_color("color", &tax)); // self-ancestor by convention
        assert!(!match_color("unheard-of", &tax));
    }

    #[test]
    fn clothes_names_use_sentence_tokens_in_order() {
        let tax = Taxonomy::bundled();
        for (raw, tags) in [(E1, E1_TAGS), (E5, E5_TAGS), (E9, E9_TAGS)] {
            let sentence = tagged(raw, tags);
            let got = posi_har(std::slice::from_ref(&sentence), &PropExtractor::default(), &tax);
            let tokens: Vec<&str> = sentence.tokens.iter().map(|(t, _)| t.as_str()).collect();
            for item in &got.clothes {
                let parts: Vec<&str> = item.name.split(' ').collect();
                let found = tokens
                    .windows(parts.len())
                    .any(|w| w == parts.as_slice());
                assert!(found, "name `{}` not a token window of `{raw}`", item.name);
            }
        }
    }

    #[test]
    fn record_conversion_links_clothes_by_wearing() {
        let result = AttributeResult {
            gender: Some("male".into()),
            race: Some("White".into()),
            height: None,
            clothes: vec![
                ClothingItem {
                    name: "shirt".into(),
                    descriptions: vec!["blue".into()],
                },
                ClothingItem {
                    name: "jeans".into(),
                    descriptions: vec!["black".into()],
                },
            ],
        };
        let record = result_to_record(&result, "DOC1");
        assert_eq!(record.entities.len(), 3);
        assert_eq!(record.relations.len(), 2);
        assert!(record.relations.iter().all(|r| r.name == "wearing"));
        let person = record.entity("p1").unwrap();
        assert_eq!(person.attrs["race"], PropertyValue::scalar("white"));
        let c1 = record.entity("c1").unwrap();
        assert_eq!(c1.attrs["type"], PropertyValue::scalar("shirt"));
        assert_eq!(c1.attrs["color"], PropertyValue::scalar("blue"));
    }

    #[cfg(test)]
    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_sentences() -> impl Strategy<Value = Vec<String>> {
            proptest::collection::vec(
                "[a-z ]{0,30}(wear|clothes|hat)?[a-z .]{0,10}",
                0..6,
            )
        }

        proptest! {
            #[test]
            fn re_output_is_subset_of_input(s in arb_sentences()) {
                let hits = extract_candidates_re(&s, &phrases(&["wear", "clothes"]));
                prop_assert!(hits.iter().all(|&i| i < s.len()));
                prop_assert!(hits.windows(2).all(|w| w[0] < w[1]));
            }

            #[test]
            fn raising_theta_never_grows_candidates(s in arb_sentences(),
                                                    lo in 0.0_f64..0.5,
                                                    hi in 0.5_f64..1.0) {
                let tax = Taxonomy::bundled();
                let store = EmbeddingStore::bundled();
                let res = HartResources {
                    taxonomy: &tax,
                    embeddings: Some(&store),
                    external_scores: None,
                };
                let q = phrases(&["clothes"]);
                let at_lo = extract_candidates_sim(&s, &q, ExtractionModel::Embedding, lo, &res)
                    .unwrap();
                let at_hi = extract_candidates_sim(&s, &q, ExtractionModel::Embedding, hi, &res)
                    .unwrap();
                prop_assert!(at_hi.iter().all(|i| at_lo.contains(i)));
            }

            #[test]
            fn posi_har_is_total(tokens in proptest::collection::vec(
                ("[a-z]{1,8}", prop_oneof![
                    Just("NN"), Just("JJ"), Just("VBD"), Just("VBG"), Just("VBN"),
                    Just("DT"), Just("CC"), Just("IN"), Just("RB"), Just("RP"),
                    Just("PRP"), Just("."), Just("")
                ]),
                0..12,
            )) {
                let tax = Taxonomy::bundled();
                let raw = tokens.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>().join(" ");
                let sentence = TaggedSentence {
                    tokens: tokens
                        .into_iter()
                        .map(|(t, g)| (t, g.to_string()))
                        .collect(),
                    raw,
                };
                // must terminate and never panic on arbitrary tag soup
                let _ = posi_har(&[sentence], &PropExtractor::default(), &tax);
            }
        }
    }
}
