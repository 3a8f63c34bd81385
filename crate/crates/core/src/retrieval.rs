//! Corpus indexing, query execution, weak-label generation, and ranking
//! evaluation.
//!
//! The index keeps parsed records plus their condensed EPL graphs; queries
//! score every candidate in the target modalities either exactly (content
//! edit distance) or through a trained regressor and return a ranked list.
//! Relevance for evaluation follows the `CED < threshold` rule.

pub mod synth;

use crate::ced::{ced, labels_to_csv, CedLabel};
use crate::harg::{construct_harg, discover_eplv, EplGraph, Harg};
use crate::lexicon::Taxonomy;
use crate::property::{
    parse_record, CostConfig, Modality, PropertyRecord, PropertyValue, RecordError,
};
use crate::scorer::{predict_similarity, ScorerModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("empty query: no entities and no metadata")]
    EmptyQuery,
    #[error("learned mode requires a trained model")]
    MissingModel,
}

/// Parsed corpus with cached EPL graphs and a modality index.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    records: BTreeMap<String, PropertyRecord>,
    epl: BTreeMap<String, EplGraph>,
    by_modality: BTreeMap<Modality, Vec<String>>,
}

impl CorpusIndex {
    pub fn from_records<I>(records: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = PropertyRecord>,
    {
        let mut index = CorpusIndex::default();
        for (n, record) in records.into_iter().enumerate() {
            index.insert(record, n + 1)?;
        }
        Ok(index)
    }

    fn insert(&mut self, record: PropertyRecord, line: usize) -> Result<(), IndexError> {
        if self.records.contains_key(&record.id) {
            return Err(IndexError::DuplicateId {
                line,
                id: record.id.clone(),
            });
        }
        let graph = discover_eplv(&construct_harg(&record));
        self.by_modality
            .entry(record.modality)
            .or_default()
            .push(record.id.clone());
        self.epl.insert(record.id.clone(), graph);
        self.records.insert(record.id.clone(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn record(&self, id: &str) -> Option<&PropertyRecord> {
        self.records.get(id)
    }

    pub fn epl(&self, id: &str) -> Option<&EplGraph> {
        self.epl.get(id)
    }

    pub fn modality_ids(&self, modality: Modality) -> &[String] {
        self.by_modality
            .get(&modality)
            .map_or(&[], Vec::as_slice)
    }

    fn target_ids(&self, target: Target) -> Vec<&str> {
        match target {
            Target::All => self.ids().collect(),
            Target::Only(m) => self.modality_ids(m).iter().map(String::as_str).collect(),
        }
    }
}

/// Parse a JSON-Lines corpus: one record per line, blank lines skipped.
pub fn parse_jsonl(text: &str) -> Result<Vec<PropertyRecord>, IndexError> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(line).map_err(|source| IndexError::Record {
            line: n + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Read and index a JSONL corpus file.
pub fn index_corpus(path: &Path) -> Result<CorpusIndex, IndexError> {
    let text = fs::read_to_string(path).map_err(|source| IndexError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut index = CorpusIndex::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(line).map_err(|source| IndexError::Record {
            line: n + 1,
            source,
        })?;
        index.insert(record, n + 1)?;
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Exact,
    Learned,
}

impl FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(ScoreMode::Exact),
            "learned" => Ok(ScoreMode::Learned),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    All,
    Only(Modality),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::All => f.write_str("all"),
            Target::Only(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Target::All);
        }
        Modality::from_str(s).map(Target::Only)
    }
}

/// A query is either a full example record or a bare property map that gets
/// wrapped into a synthetic single-entity record.
#[derive(Debug, Clone)]
pub enum QueryInput {
    Record(PropertyRecord),
    Properties {
        entity_type: String,
        props: BTreeMap<String, PropertyValue>,
    },
}

impl QueryInput {
    pub fn into_record(self) -> PropertyRecord {
        match self {
            QueryInput::Record(record) => record,
            QueryInput::Properties { entity_type, props } => {
                let mut record = PropertyRecord {
                    id: "__query__".into(),
                    modality: Modality::Text,
                    metadata: BTreeMap::new(),
                    entities: vec![crate::property::Entity {
                        id: "q1".into(),
                        entity_type,
                        primary: true,
                        attrs: props,
                    }],
                    relations: Vec::new(),
                };
                record.validate().expect("synthetic query record is valid");
                record
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub id: String,
    pub modality: Modality,
    pub sim: f64,
    /// Present in exact mode only.
    pub ced: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedResult {
    /// `rank,id,modality,sim[,ced]` rows, 6-decimal fixed.
    pub fn to_csv(&self) -> String {
        let exact = self.entries.first().is_some_and(|e| e.ced.is_some());
        let mut out = String::from(if exact {
            "rank,id,modality,sim,ced\n"
        } else {
            "rank,id,modality,sim\n"
        });
        for (rank, e) in self.entries.iter().enumerate() {
            match e.ced {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:.6},{:.6}",
                        rank + 1,
                        e.id,
                        e.modality,
                        e.sim,
                        c
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{},{},{:.6}", rank + 1, e.id, e.modality, e.sim);
                }
            }
        }
        out
    }
}

/// Rank every record of the target modalities against the query.
/// Exact mode reports the distance alongside the similarity; ties break by
/// ascending id.
pub fn query(
    index: &CorpusIndex,
    input: QueryInput,
    mode: ScoreMode,
    target: Target,
    cfg: &CostConfig,
    tax: &Taxonomy,
    model: Option<&ScorerModel>,
) -> Result<RankedResult, QueryError> {
    let record = input.into_record();
    if record.entities.is_empty() && record.metadata.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    if mode == ScoreMode::Learned && model.is_none() {
        return Err(QueryError::MissingModel);
    }
    let query_harg: Harg = construct_harg(&record);
    let query_epl = discover_eplv(&query_harg);

    let ids = index.target_ids(target);
    let mut entries: Vec<RankedEntry> = ids
        .par_iter()
        .map(|&id| {
            let cand = index.record(id).expect("indexed id");
            match mode {
                ScoreMode::Exact => {
                    let label = ced(&query_epl, index.epl(id).expect("cached"), cfg, tax);
                    RankedEntry {
                        id: id.to_string(),
                        modality: cand.modality,
                        sim: label.sim,
                        ced: Some(label.ced),
                    }
                }
                ScoreMode::Learned => {
                    let gc = construct_harg(cand);
                    RankedEntry {
                        id: id.to_string(),
                        modality: cand.modality,
                        sim: predict_similarity(&query_harg, &gc, model.expect("checked")),
                        ced: None,
                    }
                }
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.sim
            .partial_cmp(&a.sim)
            .expect("similarities are never NaN")
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(RankedResult {
        query_id: record.id,
        entries,
    })
}

/// Label every ordered pair (optionally capped per query by seeded
/// sampling). Output is sorted by (query id, candidate id).
pub fn generate_weak_labels(
    index: &CorpusIndex,
    cfg: &CostConfig,
    tax: &Taxonomy,
    sample_per_query: Option<(usize, u64)>,
) -> Vec<CedLabel> {
    let ids: Vec<&str> = index.ids().collect();
    let pairs: Vec<(&str, &str)> = ids
        .iter()
        .enumerate()
        .flat_map(|(qn, &qid)| {
            let cands: Vec<&str> = match sample_per_query {
                Some((k, seed)) if k < ids.len() => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(qn as u64));
                    let mut pool = ids.clone();
                    pool.shuffle(&mut rng);
                    let mut chosen: Vec<&str> = pool.into_iter().take(k).collect();
                    chosen.sort_unstable();
                    chosen
                }
                _ => ids.clone(),
            };
            cands.into_iter().map(move |cid| (qid, cid))
        })
        .collect();
    pairs
        .par_iter()
        .map(|&(qid, cid)| {
            ced(
                index.epl(qid).expect("indexed"),
                index.epl(cid).expect("indexed"),
                cfg,
                tax,
            )
        })
        .collect()
}

/// Write weak labels in the CSV wire format.
pub fn weak_labels_csv(labels: &[CedLabel]) -> String {
    labels_to_csv(labels)
}

/// Relevance rule: distance strictly below the configured threshold.
pub fn relevant(label: &CedLabel, cfg: &CostConfig) -> bool {
    label.ced < cfg.relevance_ced_threshold
}

/// Average precision of a ranking against a relevant-id set. With
/// `strict`, divides by the total number of relevant ids instead of the
/// number retrieved (the two coincide when the full corpus is returned).
/// An empty relevant set makes AP undefined.
pub fn average_precision(
    ranked: &RankedResult,
    rel: &BTreeSet<String>,
    strict: bool,
) -> Option<f64> {
    if rel.is_empty() {
        return None;
    }
    let mut hits = 0_usize;
    let mut sum = 0.0;
    for (at, entry) in ranked.entries.iter().enumerate() {
        if rel.contains(&entry.id) {
            hits += 1;
            sum += hits as f64 / (at + 1) as f64;
        }
    }
    let denom = if strict { rel.len() } else { hits };
    if denom == 0 {
        return Some(0.0);
    }
    Some(sum / denom as f64)
}

/// One `(recall, precision)` point per rank position.
pub fn pr_curve(ranked: &RankedResult, rel: &BTreeSet<String>) -> Vec<(f64, f64)> {
    let total = rel.len();
    let mut hits = 0_usize;
    ranked
        .entries
        .iter()
        .enumerate()
        .map(|(at, entry)| {
            if rel.contains(&entry.id) {
                hits += 1;
            }
            let recall = if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            };
            (recall, hits as f64 / (at + 1) as f64)
        })
        .collect()
}

/// PR points as `recall,precision` CSV.
pub fn pr_curve_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("recall,precision\n");
    for (r, p) in points {
        let _ = writeln!(out, "{r:.6},{p:.6}");
    }
    out
}
