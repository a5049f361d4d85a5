//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::distr::{Alphanumeric, SampleString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{AppConfig, ConfigFile};
use crate::corpus::{Corpus, TopicMap};
use crate::error::Error;
use crate::eval::{emit_reports, run_split_experiment, ExperimentConfig, ReportPaths};
use crate::extract::{extract_form_fields, ExtractedField, Page};
use crate::infer::{infer, DataBank, InferenceResult, Method, Rule, RuleSet, SimilarityIndex, RANDOM_TOPIC};
use crate::labeler::{cluster_by_concept, ConceptAssignment, LabelingSession, SessionEnd};
use crate::model::{load_topics_if_present, SemanticModel, CORPUS_FILE, TOPICS_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Length of the random strings used for fields without a known topic.
pub const RANDOM_VALUE_LEN: usize = 8;

pub const LABEL_LOG_FILE: &str = "labeling_log.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Data(Error::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Data(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Parser)]
#[command(name = "inputtopic", version, about = "Identify the topics of web form input fields")]
pub struct Cli {
    /// Flat TOML configuration file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract feature vectors from HTML files into a corpus.
    Extract(ExtractArgs),
    /// Train dictionary, tf-idf and LSI models from a corpus.
    Train(TrainArgs),
    /// Label training documents cluster by cluster.
    Label(LabelArgs),
    /// Infer the topics of the input fields of HTML pages.
    Infer(InferArgs),
    /// Run the repeated split experiment and write CSV reports.
    Eval(EvalArgs),
}

#[derive(Debug, Default, Args)]
pub struct ExtractionFlags {
    /// Comma-separated attribute names copied into feature vectors.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Option<Vec<String>>,
    /// Comma-separated tag names searched for labels.
    #[arg(long, value_delimiter = ',')]
    pub tags: Option<Vec<String>>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub stopwords: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// HTML files or directories (searched recursively for .html/.htm).
    pub inputs: Vec<PathBuf>,
    /// Corpus to append to. Without it, feature vectors are printed as JSON
    /// lines.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Number of latent concepts.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Defaults to the corpus stored in the model directory.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output topic map; defaults to `topics.json` in the model directory.
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// Read commands from this file instead of standard input.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// nl, rb, rb-nl-n, rb-nl-m or rb-nl-b.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// HTML pages to analyze.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Topic → values pool; adds a `value` to every result.
    #[arg(long)]
    pub databank: Option<PathBuf>,
    /// Topic map; defaults to `topics.json` in the model directory.
    #[arg(long)]
    pub topics: Option<PathBuf>,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Topic map; inline corpus topics are used when absent.
    #[arg(long)]
    pub topics: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Training fractions, as percentages (10,20) or fractions (0.1,0.2).
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Methods to evaluate, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
}

fn load_config(path: Option<&Path>) -> CliResult<Option<ConfigFile>> {
    path.map(|p| {
        if !p.exists() {
            return Err(CliError::Usage(format!("config file {} does not exist", p.display())));
        }
        Ok(ConfigFile::load(p)?)
    })
    .transpose()
}

fn extraction_overrides(f: &ExtractionFlags) -> ConfigFile {
    ConfigFile {
        attributes: f.attributes.clone(),
        tags: f.tags.clone(),
        max_iterations: f.max_iterations,
        stopwords: f.stopwords.clone(),
        ..Default::default()
    }
}

fn require(path: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = path.ok_or_else(|| CliError::Usage(format!("missing --{what}")))?;
    if !path.exists() {
        return Err(CliError::Usage(format!("{} does not exist", path.display())));
    }
    Ok(path)
}

fn existing(path: Option<PathBuf>) -> CliResult<Option<PathBuf>> {
    match path {
        Some(p) if !p.exists() => Err(CliError::Usage(format!("{} does not exist", p.display()))),
        other => Ok(other),
    }
}

fn html_files(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if matches!(p.extension().and_then(|e| e.to_str()), Some("html" | "htm")) {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, &mut files).map_err(io_err(input))?;
        } else if input.exists() {
            files.push(input.clone());
        } else {
            return Err(CliError::Usage(format!("{} does not exist", input.display())));
        }
    }
    Ok(files)
}

/// Extracts every input field of the given pages. With `out`, documents are
/// appended to that corpus (created if missing) and the number of added
/// documents is returned.
pub fn cmd_extract(args: &ExtractArgs, cfg: &AppConfig, stdout: &mut dyn Write) -> CliResult<usize> {
    let files = html_files(&args.inputs)?;
    if files.is_empty() {
        return Err(CliError::Usage(
            "no HTML input files given\nusage: inputtopic extract <FILES or DIRS>... [--out corpus.jsonl]".into(),
        ));
    }
    let mut corpus = match &args.out {
        Some(p) if p.exists() => Corpus::load(p)?,
        _ => Corpus::new(),
    };
    let mut added = 0;
    for file in &files {
        let page = Page::from_file(file)?;
        for (field, features) in extract_form_fields(&page, &cfg.extraction) {
            added += 1;
            match &args.out {
                Some(_) => {
                    corpus.push(field.page_id, field.element_path, field.raw_attributes, features, None);
                }
                None => {
                    let line = ExtractedField {
                        page_id: field.page_id,
                        element_path: field.element_path,
                        tokens: features.tokens,
                    };
                    serde_json::to_writer(&mut *stdout, &line).map_err(|e| Error::InvalidModel(e.to_string()))?;
                    writeln!(stdout).map_err(io_err(Path::new("<stdout>")))?;
                }
            }
        }
    }
    if let Some(out) = &args.out {
        corpus.save(out)?;
    }
    Ok(added)
}

/// Trains the models and stores them, with a canonical copy of the corpus,
/// in the model directory.
pub fn cmd_train(corpus_path: &Path, model_dir: &Path, k: Option<usize>) -> CliResult<SemanticModel> {
    let corpus = Corpus::load(corpus_path)?;
    let model = SemanticModel::fit(corpus.documents().iter().map(|d| &d.tokens), k)?;
    fs::create_dir_all(model_dir).map_err(io_err(model_dir))?;
    model.save(model_dir)?;
    corpus.save(model_dir.join(CORPUS_FILE))?;
    Ok(model)
}

/// Topics for the indexed corpus: inline labels overridden by `topics`.
fn merged_topics(corpus: &Corpus, topics: Option<TopicMap>) -> crate::Result<TopicMap> {
    let mut merged = corpus.topic_map();
    if let Some(t) = topics {
        t.validate(corpus)?;
        merged.0.extend(t.0);
    }
    Ok(merged)
}

/// Runs a labeling session and writes the resulting topic map. Labels
/// already present in the output file are kept and their documents skipped.
pub fn cmd_label(
    model_dir: &Path,
    corpus_path: &Path,
    topics_path: &Path,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> CliResult<SessionEnd> {
    let model = SemanticModel::load(model_dir)?;
    let corpus = Corpus::load(corpus_path)?;
    let existing = if topics_path.exists() {
        TopicMap::load(topics_path)?
    } else {
        corpus.topic_map()
    };
    existing.validate(&corpus)?;
    let vectors: Vec<_> = corpus.documents().iter().map(|d| (d.doc_id, model.vectorize(&d.tokens))).collect();
    let assignment = ConceptAssignment::from_vectors(vectors.iter().map(|(id, v)| (*id, v)));
    let session = LabelingSession::new(&corpus, cluster_by_concept(&assignment), existing);
    let outcome = session.run(input, output).map_err(io_err(Path::new("<session>")))?;

    outcome.topics.save(topics_path)?;
    let log_path = model_dir.join(LABEL_LOG_FILE);
    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(io_err(&log_path))?;
    for decision in &outcome.log {
        let line = serde_json::to_string(decision).map_err(|e| Error::InvalidModel(e.to_string()))?;
        writeln!(log, "{line}").map_err(io_err(&log_path))?;
    }
    Ok(outcome.end)
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldInference {
    pub page_id: String,
    pub element_path: String,
    #[serde(flatten)]
    pub result: InferenceResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

/// Loads the similarity index stored in a model directory.
pub fn load_index(model_dir: &Path, topics_path: Option<&Path>) -> crate::Result<SimilarityIndex> {
    let model = SemanticModel::load(model_dir)?;
    let corpus = Corpus::load(model_dir.join(CORPUS_FILE))?;
    let topics = match topics_path {
        Some(p) => Some(TopicMap::load(p)?),
        None => load_topics_if_present(model_dir)?,
    };
    let topics = merged_topics(&corpus, topics)?;
    SimilarityIndex::build(model, &corpus, &topics)
}

pub struct InferRequest<'a> {
    pub method: Method,
    pub threshold: f64,
    pub seed: u64,
    pub rules: &'a RuleSet,
    pub databank: Option<&'a mut DataBank>,
}

/// Infers every input field of `pages` in document order, drawing all
/// randomness from one generator seeded with `req.seed`.
pub fn infer_pages(
    pages: &[Page],
    index: &SimilarityIndex,
    cfg: &crate::extract::ExtractionConfig,
    mut req: InferRequest<'_>,
) -> crate::Result<Vec<FieldInference>> {
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let rules: Vec<&Rule> = req.rules.rules.iter().collect();
    let mut out = Vec::new();
    for page in pages {
        for (field, features) in extract_form_fields(page, cfg) {
            let result = infer(
                req.method,
                &features,
                &field.raw_attributes,
                &rules,
                index,
                req.threshold,
                &mut rng,
            )?;
            let value = match req.databank.as_deref_mut() {
                Some(bank) if result.topic != RANDOM_TOPIC => match bank.pick_value(&result.topic) {
                    Ok(v) => Some(v),
                    Err(Error::NoDatabankEntry(_)) => Some(Alphanumeric.sample_string(&mut rng, RANDOM_VALUE_LEN)),
                    Err(e) => return Err(e),
                },
                Some(_) => Some(Alphanumeric.sample_string(&mut rng, RANDOM_VALUE_LEN)),
                None => None,
            };
            out.push(FieldInference {
                page_id: field.page_id,
                element_path: field.element_path,
                result,
                value,
            });
        }
    }
    Ok(out)
}

pub fn cmd_infer(args: &InferArgs, cfg: &AppConfig, stdout: &mut dyn Write) -> CliResult<Vec<FieldInference>> {
    let model_dir = require(cfg.paths.model_dir.clone(), "model-dir")?;
    let method = cfg.inference.mode;
    let rules = match existing(cfg.paths.rules.clone())? {
        Some(p) => RuleSet::load(p)?,
        None if matches!(method, Method::Nl) => RuleSet::default(),
        None => return Err(CliError::Usage(format!("--rules is required for mode {method}"))),
    };
    let mut databank = existing(cfg.paths.databank.clone())?.map(DataBank::load).transpose()?;
    let topics = existing(cfg.paths.topics.clone())?;
    let index = load_index(&model_dir, topics.as_deref())?;
    let pages = args
        .input
        .iter()
        .map(|p| {
            if p.exists() {
                Ok(Page::from_file(p)?)
            } else {
                Err(CliError::Usage(format!("{} does not exist", p.display())))
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    let req = InferRequest {
        method,
        threshold: cfg.inference.threshold,
        seed: cfg.inference.seed,
        rules: &rules,
        databank: databank.as_mut(),
    };
    let results = infer_pages(&pages, &index, &cfg.extraction, req)?;
    for r in &results {
        let line = serde_json::to_string(r).map_err(|e| Error::InvalidModel(e.to_string()))?;
        writeln!(stdout, "{line}").map_err(io_err(Path::new("<stdout>")))?;
    }
    Ok(results)
}

/// Percentages above 1 are divided by 100.
pub fn parse_fractions(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| if v > 1.0 { v / 100.0 } else { v }).collect()
}

pub fn cmd_eval(args: &EvalArgs, cfg: &AppConfig) -> CliResult<ReportPaths> {
    let corpus_path = require(cfg.paths.corpus.clone(), "corpus")?;
    let mut corpus = Corpus::load(&corpus_path)?;
    if let Some(t) = existing(cfg.paths.topics.clone())? {
        corpus.apply_topics(&TopicMap::load(t)?)?;
    }
    let rules = match existing(cfg.paths.rules.clone())? {
        Some(p) => RuleSet::load(p)?,
        None => RuleSet::default(),
    };
    let methods = match &args.methods {
        Some(names) => names.iter().map(|n| n.parse()).collect::<crate::Result<Vec<Method>>>()?,
        None => Method::EVALUATED.to_vec(),
    };
    let exp = ExperimentConfig {
        train_fractions: parse_fractions(&args.fractions),
        n_trials: args.trials,
        master_seed: cfg.inference.seed,
        methods,
        threshold: cfg.inference.threshold,
        k: cfg.k,
    };
    let results = run_split_experiment(&corpus, &rules, &exp)?;
    Ok(emit_reports(&results, &exp.ordered_methods(), &args.out)?)
}

fn dispatch(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(args) => {
            let cfg = AppConfig::resolve(file, extraction_overrides(&args.extraction))?;
            let n = cmd_extract(&args, &cfg, stdout)?;
            let _ = writeln!(stderr, "extracted {n} field(s)");
        }
        Command::Train(args) => {
            let flags = ConfigFile {
                corpus: args.corpus.clone(),
                model_dir: args.model_dir.clone(),
                k: args.k,
                ..Default::default()
            };
            let cfg = AppConfig::resolve(file, flags)?;
            let corpus = require(cfg.paths.corpus.clone(), "corpus")?;
            let model_dir = cfg
                .paths
                .model_dir
                .clone()
                .ok_or_else(|| CliError::Usage("missing --model-dir".into()))?;
            let model = cmd_train(&corpus, &model_dir, cfg.k)?;
            let _ = writeln!(
                stderr,
                "trained {} terms, {} concepts into {}",
                model.dictionary.len(),
                model.k(),
                model_dir.display()
            );
        }
        Command::Label(args) => {
            let flags = ConfigFile {
                model_dir: args.model_dir.clone(),
                corpus: args.corpus.clone(),
                topics: args.topics.clone(),
                ..Default::default()
            };
            let cfg = AppConfig::resolve(file, flags)?;
            let model_dir = require(cfg.paths.model_dir.clone(), "model-dir")?;
            let corpus = match cfg.paths.corpus.clone() {
                Some(p) => require(Some(p), "corpus")?,
                None => model_dir.join(CORPUS_FILE),
            };
            let topics = cfg.paths.topics.clone().unwrap_or_else(|| model_dir.join(TOPICS_FILE));
            let end = match &args.transcript {
                Some(t) => {
                    let t = require(Some(t.clone()), "transcript")?;
                    let file = fs::File::open(&t).map_err(io_err(&t))?;
                    cmd_label(&model_dir, &corpus, &topics, &mut BufReader::new(file), stdout)?
                }
                None => cmd_label(&model_dir, &corpus, &topics, stdin, stdout)?,
            };
            let _ = match end {
                SessionEnd::Complete => writeln!(stderr, "all documents labeled"),
                _ => writeln!(stderr, "session saved with documents pending; rerun to resume"),
            };
        }
        Command::Infer(args) => {
            let mut flags = extraction_overrides(&args.extraction);
            flags.model_dir = args.model_dir.clone();
            flags.rules = args.rules.clone();
            flags.mode = args.mode.clone();
            flags.threshold = args.threshold;
            flags.seed = args.seed;
            flags.databank = args.databank.clone();
            flags.topics = args.topics.clone();
            let cfg = AppConfig::resolve(file, flags)?;
            cmd_infer(&args, &cfg, stdout)?;
        }
        Command::Eval(args) => {
            let flags = ConfigFile {
                corpus: args.corpus.clone(),
                topics: args.topics.clone(),
                rules: args.rules.clone(),
                seed: args.seed,
                threshold: args.threshold,
                k: args.k,
                ..Default::default()
            };
            let cfg = AppConfig::resolve(file, flags)?;
            let paths = cmd_eval(&args, &cfg)?;
            let _ = writeln!(stderr, "reports written to {}", paths.accuracy.parent().unwrap_or(Path::new(".")).display());
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli, stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
