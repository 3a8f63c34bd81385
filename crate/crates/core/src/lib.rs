//! Query-by-example retrieval across text, image, and video samples.
//!
//! Data samples arrive as property records (entities, attributes,
//! relations). Each record becomes a hierarchical attributed relational
//! graph whose entity vertices are compared with a content edit distance:
//! a rectangular assignment over per-vertex replacement costs, optionally
//! made level-cumulative so child assignments inherit their parents' cost.
//! The resulting similarity `e^{-nCED}` ranks candidates directly and also
//! serves as a weak label for training a small graph-pair regressor that
//! approximates the exact distance.
//!
//! The `hart` module extracts person attributes (gender, race, height,
//! clothes) from unstructured text so raw documents can enter the corpus
//! as property records.

pub mod ced;
pub mod cli;
pub mod harg;
pub mod hart;
pub mod lexicon;
pub mod property;
pub mod retrieval;
pub mod scorer;

pub use ced::{ced, ced_records, CedLabel};
pub use harg::{construct_harg, discover_eplv, EplGraph, Harg};
pub use lexicon::{EmbeddingStore, Taxonomy};
pub use property::{
    parse_record, validate_cost_config, CostConfig, Entity, Modality, MunkresVariant,
    PropertyRecord, PropertyValue, Relation,
};
pub use retrieval::{index_corpus, CorpusIndex, RankedResult};
pub use scorer::{predict_similarity, ScorerModel};
