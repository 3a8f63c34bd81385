//! The `femir` command line: synth, index, label, train, query, eval, and
//! hart subcommands over flat files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 empty/infeasible
//! result. Diagnostics go to stderr; data goes to stdout or `--out`.

use crate::harg::construct_harg;
use crate::hart::{
    self, tagger, CandidateConfig, CandidateSet, ExtractionModel, HartResources, PropExtractor,
    TaggedSentence,
};
use crate::lexicon::{EmbeddingStore, Taxonomy};
use crate::property::{
    parse_record, validate_cost_config, CostConfig, Modality, PropertyRecord, PropertyValue,
};
use crate::retrieval::synth::{synth_corpus, ModalityMix};
use crate::retrieval::{
    average_precision, generate_weak_labels, index_corpus, query as run_query, weak_labels_csv,
    QueryInput, RankedEntry, RankedResult, ScoreMode, Target,
};
use crate::scorer::{train, ModelConfig, ScorerModel, TrainConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Once;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_EMPTY: i32 = 3;

#[derive(Debug)]
enum CliError {
    /// Malformed input data or I/O failure.
    Data(String),
    /// Structurally fine but nothing to return.
    Empty(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Empty(_) => EXIT_EMPTY,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Empty(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "femir",
    version,
    about = "Multimodal query-by-example retrieval with edit-distance weak supervision"
)]
struct Cli {
    /// Cost config JSON (penalties, comparison modes, munkres variant).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hypernym taxonomy TSV; defaults to the bundled one.
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,
    /// Bound worker parallelism (defaults to the available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic person corpus (JSONL).
    Synth(SynthArgs),
    /// Parse and validate a corpus, print a summary.
    Index(IndexArgs),
    /// Label all record pairs with exact similarities (CSV).
    Label(LabelArgs),
    /// Train the learned similarity model on weak labels.
    Train(TrainArgs),
    /// Rank corpus records against a query example.
    Query(QueryArgs),
    /// Aggregate ranking files into mAP per modality pair.
    Eval(EvalArgs),
    /// Extract person attributes from text into a property record.
    Hart(HartArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short = 'n', long = "count")]
    count: usize,
    /// Modality proportions, e.g. `text:0.3,image:0.4,video:0.3`.
    #[arg(long)]
    mix: Option<String>,
    /// Also emit a clothes entity with a `wearing` relation per record.
    #[arg(long)]
    clothes: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Cap candidates per query (seeded sample) instead of full pairing.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Cap candidates per query when generating training labels.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("query_input")
    .args(["example", "props", "queries"])
    .required(true))]
struct QueryArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Query example: one record as JSON.
    #[arg(long)]
    example: Option<PathBuf>,
    /// Query by properties, e.g. `gender=male,top-color=blue`.
    #[arg(long)]
    props: Option<String>,
    /// Entity type for a `--props` query.
    #[arg(long, default_value = "Person")]
    entity_type: String,
    /// Batch mode: JSONL of query records, one ranking file per query.
    #[arg(long, requires = "out_dir")]
    queries: Option<PathBuf>,
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value = "all")]
    target: String,
    /// Trained model file (learned mode).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory for batch mode.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of ranking CSVs named `<query>__<qmod>__<target>.csv`.
    #[arg(long)]
    rankings: PathBuf,
    /// Relevance source; only `ced` is supported.
    #[arg(long, default_value = "ced")]
    relevance: String,
    /// Relevance threshold; defaults to the config's.
    #[arg(long)]
    threshold: Option<f64>,
    /// Divide AP by all relevant in the corpus, not just retrieved ones.
    #[arg(long)]
    strict_map: bool,
    /// Also write one precision-recall CSV per ranking into this directory.
    #[arg(long)]
    pr_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HartArgs {
    /// Input document: one sentence per line.
    #[arg(long)]
    input: PathBuf,
    /// CoNLL `token<TAB>tag` file aligned with the input sentences.
    #[arg(long)]
    tagged: Option<PathBuf>,
    #[arg(long, default_value = "stacked-re-taxonomy")]
    model: String,
    #[arg(long)]
    theta: Option<f64>,
    /// Key phrases, comma separated; defaults to the built-in set.
    #[arg(long)]
    phrases: Option<String>,
    /// Word-vector file for the embedding scorer; defaults to the bundled one.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// External per-sentence scores (`index<TAB>score`) for model=external.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Record id for the output; defaults to the input file stem.
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    if let Some(k) = cli.threads {
        static POOL: Once = Once::new();
        POOL.call_once(|| {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        });
    }
    let outcome = dispatch(&cli);
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("femir: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Index(args) => cmd_index(args),
        Command::Label(args) => cmd_label(cli, args),
        Command::Train(args) => cmd_train(cli, args),
        Command::Query(args) => cmd_query(cli, args),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::Hart(args) => cmd_hart(cli, args),
    }
}

fn load_config(cli: &Cli) -> Result<CostConfig, CliError> {
    match &cli.config {
        None => Ok(CostConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
            validate_cost_config(&text).map_err(data_err)
        }
    }
}

fn load_taxonomy(cli: &Cli) -> Result<Taxonomy, CliError> {
    match &cli.taxonomy {
        None => Ok(Taxonomy::bundled()),
        Some(path) => Taxonomy::load(path).map_err(data_err),
    }
}

fn write_output(out: Option<&Path>, data: &str) -> CliResult {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes()).map_err(data_err)
        }
        Some(path) => fs::write(path, data).map_err(|e| data_err(format!("{}: {e}", path.display()))),
    }
}

fn cmd_synth(args: &SynthArgs) -> CliResult {
    let mix = match &args.mix {
        None => ModalityMix::default(),
        Some(s) => s.parse().map_err(CliError::Data)?,
    };
    let records = synth_corpus(args.seed, args.count, &mix, args.clothes);
    let mut out = String::new();
    for record in &records {
        out.push_str(&record.to_json());
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

#[derive(Serialize)]
struct IndexSummary {
    records: usize,
    modalities: BTreeMap<String, usize>,
}

fn cmd_index(args: &IndexArgs) -> CliResult {
    let index = index_corpus(&args.corpus).map_err(data_err)?;
    let mut modalities = BTreeMap::new();
    for m in [Modality::Text, Modality::Image, Modality::Video] {
        modalities.insert(m.to_string(), index.modality_ids(m).len());
    }
    let summary = IndexSummary {
        records: index.len(),
        modalities,
    };
    let mut out = serde_json::to_string_pretty(&summary).map_err(data_err)?;
    out.push('\n');
    write_output(args.out.as_deref(), &out)
}

fn cmd_label(cli: &Cli, args: &LabelArgs) -> CliResult {
    let cfg = load_config(cli)?;
    let tax = load_taxonomy(cli)?;
    let index = index_corpus(&args.corpus).map_err(data_err)?;
    if index.is_empty() {
        return Err(CliError::Empty("corpus has no records to label".into()));
    }
    let sample = args.sample.map(|k| (k, args.seed));
    let labels = generate_weak_labels(&index, &cfg, &tax, sample);
    write_output(args.out.as_deref(), &weak_labels_csv(&labels))
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> CliResult {
    let cfg = load_config(cli)?;
    let tax = load_taxonomy(cli)?;
    let index = index_corpus(&args.corpus).map_err(data_err)?;
    if index.is_empty() {
        return Err(CliError::Empty("corpus has no records to train on".into()));
    }
    let ids: Vec<String> = index.ids().map(str::to_string).collect();
    let id_at: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let graphs: Vec<_> = ids
        .iter()
        .map(|id| construct_harg(index.record(id).expect("indexed")))
        .collect();
    let sample = args.sample.map(|k| (k, args.seed));
    let labels = generate_weak_labels(&index, &cfg, &tax, sample);
    let pairs: Vec<(usize, usize, f64)> = labels
        .iter()
        .filter(|l| l.is_feasible())
        .map(|l| (id_at[l.query_id.as_str()], id_at[l.cand_id.as_str()], l.sim))
        .collect();
    if pairs.is_empty() {
        return Err(CliError::Empty("no feasible pairs to train on".into()));
    }
    let model_config = ModelConfig {
        seed: args.seed,
        ..ModelConfig::default()
    };
    let train_config = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch,
        seed: args.seed,
    };
    let (model, report) = train(&graphs, &pairs, model_config, &train_config).map_err(data_err)?;
    eprintln!(
        "trained on {} pairs: mse {:.6} -> {:.6}",
        pairs.len(),
        report.initial_mse,
        report.final_mse
    );
    let mut out = model.to_json();
    out.push('\n');
    write_output(args.out.as_deref(), &out)
}

fn parse_props(spec: &str) -> Result<BTreeMap<String, PropertyValue>, CliError> {
    let mut props = BTreeMap::new();
    for part in spec.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Data(format!("bad property `{part}`, expected name=value")))?;
        let value = if value.contains('|') {
            PropertyValue::list(value.split('|').map(str::trim))
        } else {
            PropertyValue::scalar(value.trim())
        };
        props.insert(name.trim().to_string(), value);
    }
    Ok(props)
}

fn read_query_record(path: &Path) -> Result<PropertyRecord, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    parse_record(text.trim()).map_err(data_err)
}

fn cmd_query(cli: &Cli, args: &QueryArgs) -> CliResult {
    let cfg = load_config(cli)?;
    let tax = load_taxonomy(cli)?;
    let mode = ScoreMode::from_str(&args.mode).map_err(CliError::Data)?;
    let target = Target::from_str(&args.target).map_err(CliError::Data)?;
    let index = index_corpus(&args.corpus).map_err(data_err)?;
    let model = match &args.model {
        Some(path) => Some(ScorerModel::load(path).map_err(data_err)?),
        None => None,
    };

    if let Some(queries_path) = &args.queries {
        let text = fs::read_to_string(queries_path)
            .map_err(|e| data_err(format!("{}: {e}", queries_path.display())))?;
        let records = crate::retrieval::parse_jsonl(&text).map_err(data_err)?;
        if records.is_empty() {
            return Err(CliError::Empty("no query records".into()));
        }
        let dir = args.out_dir.as_deref().expect("clap requires out_dir");
        fs::create_dir_all(dir).map_err(data_err)?;
        for record in records {
            let qmod = record.modality;
            let qid = record.id.clone();
            let ranked = run_query(
                &index,
                QueryInput::Record(record),
                mode,
                target,
                &cfg,
                &tax,
                model.as_ref(),
            )
            .map_err(data_err)?;
            let name = format!("{qid}__{qmod}__{target}.csv");
            fs::write(dir.join(&name), ranked.to_csv()).map_err(data_err)?;
        }
        return Ok(());
    }

    let input = match (&args.example, &args.props) {
        (Some(path), None) => QueryInput::Record(read_query_record(path)?),
        (None, Some(spec)) => QueryInput::Properties {
            entity_type: args.entity_type.clone(),
            props: parse_props(spec)?,
        },
        _ => unreachable!("clap enforces exactly one query input"),
    };
    let ranked = run_query(&index, input, mode, target, &cfg, &tax, model.as_ref())
        .map_err(data_err)?;
    if ranked.entries.is_empty() {
        return Err(CliError::Empty("no candidates in the target modalities".into()));
    }
    write_output(args.out.as_deref(), &ranked.to_csv())
}

fn parse_ranking_csv(path: &Path) -> Result<RankedResult, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty ranking", path.display())))?;
    if header != "rank,id,modality,sim,ced" {
        return Err(CliError::Data(format!(
            "{}: ced-based relevance needs exact-mode rankings (header `{header}`)",
            path.display()
        )));
    }
    let mut entries = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Data(format!(
                "{}: row {} has {} fields",
                path.display(),
                n + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64, CliError> {
            if s == "inf" {
                Ok(f64::INFINITY)
            } else {
                s.parse().map_err(|e| {
                    CliError::Data(format!("{}: row {}: {e}", path.display(), n + 2))
                })
            }
        };
        entries.push(RankedEntry {
            id: fields[1].to_string(),
            modality: Modality::from_str(fields[2])
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            sim: parse_f(fields[3])?,
            ced: Some(parse_f(fields[4])?),
        });
    }
    Ok(RankedResult {
        query_id: String::new(),
        entries,
    })
}

#[derive(Serialize)]
struct MapCell {
    query_modality: String,
    target_modality: String,
    map: f64,
    queries: usize,
    skipped: usize,
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> CliResult {
    if args.relevance != "ced" {
        return Err(CliError::Data(format!(
            "unsupported relevance source `{}` (only `ced`)",
            args.relevance
        )));
    }
    let cfg = load_config(cli)?;
    let threshold = args.threshold.unwrap_or(cfg.relevance_ced_threshold);
    let mut files: Vec<PathBuf> = fs::read_dir(&args.rankings)
        .map_err(|e| data_err(format!("{}: {e}", args.rankings.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Empty("no ranking files found".into()));
    }

    // (query modality, target) -> (AP sum, counted, skipped)
    let mut cells: BTreeMap<(String, String), (f64, usize, usize)> = BTreeMap::new();
    for path in &files {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let parts: Vec<&str> = stem.split("__").collect();
        if parts.len() != 3 {
            return Err(CliError::Data(format!(
                "{}: expected `<query>__<qmod>__<target>.csv`",
                path.display()
            )));
        }
        let key = (parts[1].to_string(), parts[2].to_string());
        let ranked = parse_ranking_csv(path)?;
        let rel: BTreeSet<String> = ranked
            .entries
            .iter()
            .filter(|e| e.ced.expect("exact rankings carry ced") < threshold)
            .map(|e| e.id.clone())
            .collect();
        if let Some(pr_dir) = &args.pr_dir {
            fs::create_dir_all(pr_dir).map_err(data_err)?;
            let points = crate::retrieval::pr_curve(&ranked, &rel);
            let name = format!("{stem}.pr.csv");
            fs::write(pr_dir.join(name), crate::retrieval::pr_curve_csv(&points))
                .map_err(data_err)?;
        }
        let slot = cells.entry(key).or_insert((0.0, 0, 0));
        match average_precision(&ranked, &rel, args.strict_map) {
            Some(ap) => {
                slot.0 += ap;
                slot.1 += 1;
            }
            None => slot.2 += 1,
        }
    }
    let report: Vec<MapCell> = cells
        .into_iter()
        .map(|((qmod, target), (sum, counted, skipped))| MapCell {
            query_modality: qmod,
            target_modality: target,
            map: if counted == 0 { 0.0 } else { sum / counted as f64 },
            queries: counted,
            skipped,
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&report).map_err(data_err)?;
    out.push('\n');
    write_output(args.out.as_deref(), &out)
}

fn read_scores(path: &Path) -> Result<BTreeMap<usize, f64>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut scores = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (idx, score) = line.split_once('\t').ok_or_else(|| {
            CliError::Data(format!("{}: line {}: expected `index<TAB>score`", path.display(), n + 1))
        })?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), n + 1)))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), n + 1)))?;
        scores.insert(idx, score);
    }
    Ok(scores)
}

fn cmd_hart(cli: &Cli, args: &HartArgs) -> CliResult {
    let tax = load_taxonomy(cli)?;
    let model = ExtractionModel::from_str(&args.model).map_err(CliError::Data)?;
    let mut candidate_cfg = CandidateConfig::new(model, args.theta).map_err(data_err)?;
    if let Some(phrases) = &args.phrases {
        candidate_cfg.key_phrases = phrases.split(',').map(|p| p.trim().to_string()).collect();
    }

    let text = fs::read_to_string(&args.input)
        .map_err(|e| data_err(format!("{}: {e}", args.input.display())))?;
    let sentences: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();

    let tagged: Vec<TaggedSentence> = match &args.tagged {
        Some(path) => {
            let conll = fs::read_to_string(path)
                .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
            let mut parsed = tagger::parse_conll(&conll);
            if parsed.len() != sentences.len() {
                return Err(CliError::Data(format!(
                    "tagged file has {} sentences, input has {}",
                    parsed.len(),
                    sentences.len()
                )));
            }
            // keep the original sentence text for the pattern stage
            for (s, raw) in parsed.iter_mut().zip(&sentences) {
                s.raw = raw.clone();
            }
            parsed
        }
        None => sentences
            .iter()
            .map(|s| tagger::tag_sentence(s, &tax))
            .collect(),
    };

    let embeddings = match &args.vectors {
        Some(path) => EmbeddingStore::load(path).map_err(data_err)?,
        None => EmbeddingStore::bundled(),
    };
    let external_scores = match &args.scores {
        Some(path) => Some(read_scores(path)?),
        None => None,
    };
    let res = HartResources {
        taxonomy: &tax,
        embeddings: Some(&embeddings),
        external_scores: external_scores.as_ref(),
    };
    let candidates = hart::extract_candidates(&sentences, &candidate_cfg, &res).map_err(data_err)?;
    if candidates == CandidateSet::Empty {
        return Err(CliError::Empty("no candidate sentences".into()));
    }
    let chosen: Vec<TaggedSentence> = candidates
        .indices()
        .iter()
        .map(|&i| tagged[i].clone())
        .collect();
    let result = hart::posi_har(&chosen, &PropExtractor::default(), &tax);
    let record_id = args
        .id
        .clone()
        .or_else(|| {
            args.input
                .file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_string)
        })
        .unwrap_or_else(|| "DOC".into());
    let record = hart::result_to_record(&result, &record_id);
    let mut out = record.to_json();
    out.push('\n');
    write_output(args.out.as_deref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn props_parser_handles_scalars_and_lists() {
        let props = parse_props("gender=male,clothes=jeans|shirt").unwrap();
        assert_eq!(props["gender"], PropertyValue::scalar("male"));
        assert_eq!(props["clothes"], PropertyValue::list(["jeans", "shirt"]));
        assert!(parse_props("oops").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["femir".to_string(), "frobnicate".to_string()]), 1);
        assert_eq!(run(["femir".to_string()]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["femir".to_string(), "--help".to_string()]), 0);
    }
}
