//! Repeated random train/test splits at form granularity, per-method
//! accuracy, rule match statistics and CSV reports.
//!
//! Every trial derives its own generators from `(master_seed, trial_id)`, so
//! trials run in parallel and still produce the same numbers as a serial run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::infer::{infer, match_rules, IndexEntry, Method, Rule, RuleSet, SimilarityIndex, DEFAULT_THRESHOLD};
use crate::model::SemanticModel;
use crate::stats::paired_t_test;

const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_fractions: Vec<f64>,
    pub n_trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub threshold: f64,
    /// Concept count; `None` uses the model default.
    pub k: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            n_trials: 50,
            master_seed: 42,
            methods: Method::EVALUATED.to_vec(),
            threshold: DEFAULT_THRESHOLD,
            k: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_fractions.is_empty() {
            return Err(Error::InvalidConfig("no training fractions".into()));
        }
        if let Some(f) = self.train_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::InvalidConfig(format!("training fraction {f} is not strictly between 0 and 1")));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.methods.contains(&Method::Random) {
            return Err(Error::InvalidConfig("RANDOM is not an evaluated method".into()));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!("threshold {} must be non-negative", self.threshold)));
        }
        Ok(())
    }

    /// Configured methods, deduplicated, in canonical report order.
    pub fn ordered_methods(&self) -> Vec<Method> {
        self.methods.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub fraction: f64,
    pub train_forms: usize,
    /// Page ids of the training forms, sorted.
    pub train_pages: Vec<String>,
    pub accuracy: BTreeMap<Method, f64>,
    /// Test fields seen by the rule matcher.
    pub inferred: usize,
    /// Test fields matched by no rule.
    pub no_match: usize,
    /// Test fields matched by rules of at least two topics.
    pub multiple_topic: usize,
}

/// Exact-match fraction of `predictions` equal to `gold`.
pub fn accuracy<S: AsRef<str>, T: AsRef<str>>(predictions: &[S], gold: &[T]) -> Result<f64> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    let correct = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| p.as_ref() == g.as_ref())
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one stream of one trial: stream 0 draws the split, stream
/// `1 + method` drives that method's random choices.
pub fn derive_seed(master_seed: u64, trial_id: usize, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ trial_id as u64) ^ stream)
}

fn method_stream(m: Method) -> u64 {
    1 + m as u64
}

/// Labeled documents grouped by page, pages in sorted order.
struct Forms<'a> {
    pages: Vec<(&'a str, Vec<&'a Document>)>,
}

impl<'a> Forms<'a> {
    fn new(corpus: &'a Corpus) -> Result<Self> {
        let mut by_page: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
        for d in corpus.documents() {
            if d.topic.as_deref().is_none_or(str::is_empty) {
                return Err(Error::InvalidConfig(format!("document {} has no topic label", d.doc_id)));
            }
            by_page.entry(&d.page_id).or_default().push(d);
        }
        if by_page.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a split experiment needs at least 2 forms, the corpus has {}",
                by_page.len()
            )));
        }
        Ok(Self {
            pages: by_page.into_iter().collect(),
        })
    }

    fn train_count(&self, fraction: f64) -> usize {
        let f = self.pages.len();
        ((fraction * f as f64).ceil() as usize).clamp(1, f - 1)
    }
}

/// Runs `cfg.n_trials` trials for every training fraction. Trial ids are
/// `fraction_index * n_trials + t`.
pub fn run_split_experiment(corpus: &Corpus, rules: &RuleSet, cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let forms = Forms::new(corpus)?;
    let methods = cfg.ordered_methods();
    let jobs: Vec<(usize, f64)> = cfg
        .train_fractions
        .iter()
        .enumerate()
        .flat_map(|(fi, &f)| (0..cfg.n_trials).map(move |t| (fi * cfg.n_trials + t, f)))
        .collect();
    jobs.into_par_iter()
        .map(|(trial_id, fraction)| run_trial(&forms, rules, cfg, &methods, trial_id, fraction))
        .collect()
}

fn run_trial(
    forms: &Forms<'_>,
    rules: &RuleSet,
    cfg: &ExperimentConfig,
    methods: &[Method],
    trial_id: usize,
    fraction: f64,
) -> Result<TrialResult> {
    let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, trial_id, 0));
    let n_forms = forms.pages.len();
    let n_train = forms.train_count(fraction);

    let mut attempt = 0;
    let (train, test) = loop {
        let mut chosen = sample(&mut split_rng, n_forms, n_train).into_vec();
        chosen.sort_unstable();
        let chosen: BTreeSet<usize> = chosen.into_iter().collect();
        let (train, test): (Vec<_>, Vec<_>) = (0..n_forms).partition(|i| chosen.contains(i));
        let fields = |idx: &[usize]| idx.iter().map(|&i| forms.pages[i].1.len()).sum::<usize>();
        if fields(&train) > 0 && fields(&test) > 0 {
            break (train, test);
        }
        attempt += 1;
        log::warn!("trial {trial_id}: split without training or test fields, resampling");
        if attempt >= MAX_RESAMPLES {
            return Err(Error::InvalidConfig(format!(
                "trial {trial_id}: no split with fields on both sides after {MAX_RESAMPLES} attempts"
            )));
        }
    };

    let train_docs: Vec<&Document> = train.iter().flat_map(|&i| forms.pages[i].1.iter().copied()).collect();
    let test_docs: Vec<&Document> = test.iter().flat_map(|&i| forms.pages[i].1.iter().copied()).collect();
    let train_pages: BTreeSet<&str> = train.iter().map(|&i| forms.pages[i].0).collect();

    let model = SemanticModel::fit(train_docs.iter().map(|d| &d.tokens), cfg.k)?;
    let entries = train_docs
        .iter()
        .map(|d| IndexEntry {
            doc_id: d.doc_id,
            vector: model.vectorize(&d.tokens),
            topic: d.topic.clone().unwrap_or_default(),
        })
        .collect();
    let index = SimilarityIndex::from_entries(model, entries)?;
    let active: Vec<&Rule> = rules.active_for(&train_pages);

    let mut no_match = 0;
    let mut multiple_topic = 0;
    for d in &test_docs {
        match match_rules(&d.attributes, active.iter().copied()).len() {
            0 => no_match += 1,
            1 => {}
            _ => multiple_topic += 1,
        }
    }

    let gold: Vec<&str> = test_docs.iter().map(|d| d.topic.as_deref().unwrap_or_default()).collect();
    let mut acc = BTreeMap::new();
    for &m in methods {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, trial_id, method_stream(m)));
        let predictions = test_docs
            .iter()
            .map(|d| infer(m, &d.tokens, &d.attributes, &active, &index, cfg.threshold, &mut rng).map(|r| r.topic))
            .collect::<Result<Vec<_>>>()?;
        acc.insert(m, accuracy(&predictions, &gold)?);
    }

    Ok(TrialResult {
        trial_id,
        fraction,
        train_forms: train.len(),
        train_pages: train_pages.iter().map(|p| p.to_string()).collect(),
        accuracy: acc,
        inferred: test_docs.len(),
        no_match,
        multiple_topic,
    })
}

/// Trials grouped by fraction, in order of first appearance.
pub fn group_by_fraction(results: &[TrialResult]) -> Vec<(f64, Vec<&TrialResult>)> {
    let mut groups: Vec<(f64, Vec<&TrialResult>)> = Vec::new();
    for r in results {
        match groups.iter_mut().find(|(f, _)| *f == r.fraction) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.fraction, vec![r])),
        }
    }
    groups
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Mean counts of one fraction, as in the rule-statistics report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSummary {
    pub fraction: f64,
    pub inferred: f64,
    pub no_match: f64,
    pub no_match_pct: f64,
    pub multiple_topic: f64,
    pub multiple_topic_pct: f64,
}

pub fn count_summary(results: &[TrialResult]) -> Vec<CountSummary> {
    group_by_fraction(results)
        .into_iter()
        .map(|(fraction, trials)| {
            let inferred = mean(trials.iter().map(|t| t.inferred as f64));
            let no_match = mean(trials.iter().map(|t| t.no_match as f64));
            let multiple_topic = mean(trials.iter().map(|t| t.multiple_topic as f64));
            CountSummary {
                fraction,
                inferred,
                no_match,
                no_match_pct: 100.0 * no_match / inferred,
                multiple_topic,
                multiple_topic_pct: 100.0 * multiple_topic / inferred,
            }
        })
        .collect()
}

/// Mean accuracy per fraction and method.
pub fn mean_accuracy(results: &[TrialResult], methods: &[Method]) -> Vec<(f64, Vec<f64>)> {
    group_by_fraction(results)
        .into_iter()
        .map(|(fraction, trials)| {
            let means = methods
                .iter()
                .map(|m| mean(trials.iter().map(|t| t.accuracy.get(m).copied().unwrap_or(f64::NAN))))
                .collect();
            (fraction, means)
        })
        .collect()
}

pub const ACCURACY_CSV: &str = "accuracy_by_fraction.csv";
pub const PVALUES_CSV: &str = "pvalues.csv";
pub const RB_COUNTS_CSV: &str = "rb_counts.csv";
pub const TRIALS_CSV: &str = "trials.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub accuracy: PathBuf,
    pub pvalues: PathBuf,
    pub rb_counts: PathBuf,
    pub trials: PathBuf,
}

/// Writes the four CSV reports into `dir`, creating it if needed.
pub fn emit_reports(results: &[TrialResult], methods: &[Method], dir: impl AsRef<Path>) -> Result<ReportPaths> {
    if results.is_empty() {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        accuracy: dir.join(ACCURACY_CSV),
        pvalues: dir.join(PVALUES_CSV),
        rb_counts: dir.join(RB_COUNTS_CSV),
        trials: dir.join(TRIALS_CSV),
    };
    let names: Vec<&str> = methods.iter().map(|m| m.label()).collect();

    let mut acc = format!("fraction,{}\n", names.join(","));
    for (fraction, means) in mean_accuracy(results, methods) {
        let cells: Vec<String> = means.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(acc, "{fraction},{}", cells.join(","));
    }

    let pairs: Vec<(Method, Method)> = methods
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| methods[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let mut pv = String::from("fraction");
    for (a, b) in &pairs {
        let _ = write!(pv, ",{a} & {b}");
    }
    pv.push('\n');
    for (fraction, trials) in group_by_fraction(results) {
        pv.push_str(&fraction.to_string());
        for (a, b) in &pairs {
            let xs: Vec<f64> = trials.iter().map(|t| t.accuracy[a]).collect();
            let ys: Vec<f64> = trials.iter().map(|t| t.accuracy[b]).collect();
            match paired_t_test(&xs, &ys) {
                Ok(r) => {
                    let _ = write!(pv, ",{}", r.p_value);
                }
                Err(_) => pv.push_str(",NA"),
            }
        }
        pv.push('\n');
    }

    let mut counts = String::from("fraction,inferred,no_match,no_match_pct,multiple_topic,multiple_topic_pct\n");
    for s in count_summary(results) {
        let _ = writeln!(
            counts,
            "{},{},{},{},{},{}",
            s.fraction, s.inferred, s.no_match, s.no_match_pct, s.multiple_topic, s.multiple_topic_pct
        );
    }

    let mut raw = format!("trial_id,fraction,train_forms,{},inferred,no_match,multiple_topic\n", names.join(","));
    for r in results {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| r.accuracy.get(m).map_or_else(|| "NA".into(), |a| a.to_string()))
            .collect();
        let _ = writeln!(
            raw,
            "{},{},{},{},{},{},{}",
            r.trial_id,
            r.fraction,
            r.train_forms,
            cells.join(","),
            r.inferred,
            r.no_match,
            r.multiple_topic
        );
    }

    for (path, body) in [
        (&paths.accuracy, acc),
        (&paths.pvalues, pv),
        (&paths.rb_counts, counts),
        (&paths.trials, raw),
    ] {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(paths)
}
