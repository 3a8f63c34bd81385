//! Tokenizer, CoNLL reader, and a small rule-based fallback tagger
//! (closed-class word lists plus suffix rules) for running the extractor
//! without an external tagger.

use super::TaggedSentence;
use crate::lexicon::Taxonomy;

/// Whitespace split with leading/trailing punctuation peeled off into their
/// own tokens. Interior punctuation (`5'10"`, `St.` followed by more text)
/// stays attached.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in sentence.split_whitespace() {
        let mut rest = chunk;
        let mut lead = Vec::new();
        while let Some(c) = rest.chars().next() {
            if is_clingy_punct(c) {
                lead.push(c.to_string());
                rest = &rest[c.len_utf8()..];
            } else {
                break;
            }
        }
        let mut tail = Vec::new();
        while let Some(c) = rest.chars().last() {
            if is_clingy_punct(c) && !(c == '.' && rest.chars().filter(|&x| x == '.').count() > 1) {
                tail.push(c.to_string());
                rest = &rest[..rest.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        tokens.extend(lead);
        if !rest.is_empty() {
            tokens.push(rest.to_string());
        }
        tokens.extend(tail.into_iter().rev());
    }
    tokens
}

fn is_clingy_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '(' | ')' | '“' | '”')
}

const DETERMINERS: [&str; 7] = ["a", "an", "the", "this", "that", "these", "those"];
const CONJUNCTIONS: [&str; 4] = ["and", "or", "but", "nor"];
const PREPOSITIONS: [&str; 13] = [
    "with", "in", "on", "at", "of", "from", "to", "by", "near", "under", "over", "for", "across",
];
const PRONOUNS: [&str; 12] = [
    "he", "she", "it", "they", "we", "i", "you", "his", "her", "their", "him", "them",
];
const PAST_VERBS: [&str; 6] = ["was", "were", "had", "did", "wore", "saw"];
const BASE_VERBS: [&str; 7] = ["is", "are", "am", "be", "been", "has", "have"];
const PARTICIPLES: [&str; 5] = ["seen", "worn", "up", "off", "out"];
const ADVERBS: [&str; 5] = ["very", "quite", "too", "last", "recently"];
const ADJECTIVES: [&str; 9] = [
    "medium", "dark", "light", "tall", "short", "missing", "young", "old", "small",
];

/// Tag one token. Colors come from the taxonomy so `blue jeans` reads as
/// adjective + noun; the default is noun.
pub fn tag_token(token: &str, tax: &Taxonomy) -> String {
    let lower = token.to_lowercase();
    let is = |set: &[&str]| set.contains(&lower.as_str());
    if token.chars().all(|c| !c.is_alphanumeric()) {
        return ".".into();
    }
    if token.chars().all(|c| c.is_ascii_digit()) {
        return "CD".into();
    }
    if is(&DETERMINERS) {
        return "DT".into();
    }
    if is(&CONJUNCTIONS) {
        return "CC".into();
    }
    if is(&PREPOSITIONS) {
        return "IN".into();
    }
    if is(&PRONOUNS) {
        return "PRP".into();
    }
    if is(&PAST_VERBS) {
        return "VBD".into();
    }
    if is(&BASE_VERBS) {
        return "VB".into();
    }
    if is(&PARTICIPLES) {
        return "VBN".into();
    }
    if is(&ADVERBS) {
        return "RB".into();
    }
    if is(&ADJECTIVES) || super::match_color(&lower, tax) {
        return "JJ".into();
    }
    if lower.ends_with("ing") && lower.len() > 4 {
        return "VBG".into();
    }
    if lower.ends_with("ed") && lower.len() > 3 {
        return "VBD".into();
    }
    "NN".into()
}

/// Tokenize and tag one sentence with the fallback rules.
pub fn tag_sentence(sentence: &str, tax: &Taxonomy) -> TaggedSentence {
    let tokens = tokenize(sentence)
        .into_iter()
        .map(|t| {
            let tag = tag_token(&t, tax);
            (t, tag)
        })
        .collect();
    TaggedSentence {
        tokens,
        raw: sentence.to_string(),
    }
}

/// Read CoNLL-style `token<TAB>tag` lines; a blank line separates
/// sentences. The reconstructed raw text joins tokens with spaces.
pub fn parse_conll(text: &str) -> Vec<TaggedSentence> {
    let mut sentences = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    for raw in text.lines() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(finish(std::mem::take(&mut current)));
            }
            continue;
        }
        let (token, tag) = line.split_once('\t').unwrap_or((line, ""));
        current.push((token.to_string(), tag.to_string()));
    }
    if !current.is_empty() {
        sentences.push(finish(current));
    }
    sentences
}

fn finish(tokens: Vec<(String, String)>) -> TaggedSentence {
    let raw = tokens
        .iter()
        .map(|(t, _)| t.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    TaggedSentence { tokens, raw }
}
