//! Topic inference: nearest neighbours with top-5 voting, rule matching and
//! the hybrid strategies combining both.

mod databank;
mod rules;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use databank::DataBank;
pub use rules::{match_rules, Rule, RuleSet};

use crate::corpus::{Corpus, TopicMap};
use crate::error::{Error, Result};
use crate::extract::FeatureVector;
use crate::model::SemanticModel;
use crate::semantic::{cosine_similarity, ConceptVector};

/// Number of neighbours considered by the vote.
pub const TOP_N: usize = 5;

pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Topic reported when no rule matched a field and no fallback applies; the
/// caller fills such fields with a random string.
pub const RANDOM_TOPIC: &str = "<random>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NL")]
    Nl,
    #[serde(rename = "RB")]
    Rb,
    #[serde(rename = "RB+NL-n")]
    RbNlN,
    #[serde(rename = "RB+NL-m")]
    RbNlM,
    #[serde(rename = "RB+NL-b")]
    RbNlB,
    #[serde(rename = "RANDOM")]
    Random,
}

impl Method {
    pub const EVALUATED: [Method; 5] = [Method::Nl, Method::Rb, Method::RbNlN, Method::RbNlM, Method::RbNlB];

    pub fn label(self) -> &'static str {
        match self {
            Method::Nl => "NL",
            Method::Rb => "RB",
            Method::RbNlN => "RB+NL-n",
            Method::RbNlM => "RB+NL-m",
            Method::RbNlB => "RB+NL-b",
            Method::Random => "RANDOM",
        }
    }

    fn hybrid_mode(self) -> Option<HybridMode> {
        match self {
            Method::RbNlN => Some(HybridMode::NoMatch),
            Method::RbNlM => Some(HybridMode::Multiple),
            Method::RbNlB => Some(HybridMode::Both),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the report labels (`RB+NL-m`) and the command-line spelling
    /// (`rb-nl-m`).
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('+', "-");
        match key.as_str() {
            "nl" => Ok(Method::Nl),
            "rb" => Ok(Method::Rb),
            "rb-nl-n" => Ok(Method::RbNlN),
            "rb-nl-m" => Ok(Method::RbNlM),
            "rb-nl-b" => Ok(Method::RbNlB),
            "random" => Ok(Method::Random),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

/// Which rule-based outcomes defer to the natural-language answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridMode {
    /// Fields no rule matched.
    NoMatch,
    /// Fields matched by rules of several topics.
    Multiple,
    Both,
}

impl HybridMode {
    fn method(self) -> Method {
        match self {
            HybridMode::NoMatch => Method::RbNlN,
            HybridMode::Multiple => Method::RbNlM,
            HybridMode::Both => Method::RbNlB,
        }
    }

    fn handles_no_match(self) -> bool {
        matches!(self, HybridMode::NoMatch | HybridMode::Both)
    }

    fn handles_multiple(self) -> bool {
        matches!(self, HybridMode::Multiple | HybridMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub doc_id: usize,
    pub similarity: f64,
    pub topic: String,
}

/// One uniform random choice, kept for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomDraw {
    pub candidates: Vec<String>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub topic: String,
    pub method: Method,
    /// At most [`TOP_N`] entries, by descending similarity.
    pub neighbors: Vec<Neighbor>,
    pub rb_candidates: BTreeSet<String>,
    pub vote_taken: bool,
    /// Random choices in the order they were drawn.
    pub rng_draws: Vec<RandomDraw>,
}

impl InferenceResult {
    fn new(topic: String, method: Method) -> Self {
        Self {
            topic,
            method,
            neighbors: Vec::new(),
            rb_candidates: BTreeSet::new(),
            vote_taken: false,
            rng_draws: Vec::new(),
        }
    }

    pub fn is_random(&self) -> bool {
        self.method == Method::Random
    }
}

fn choose<R: Rng + ?Sized>(candidates: Vec<String>, rng: &mut R, draws: &mut Vec<RandomDraw>) -> String {
    let chosen = rng.random_range(0..candidates.len());
    let topic = candidates[chosen].clone();
    draws.push(RandomDraw { candidates, chosen });
    topic
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub doc_id: usize,
    pub vector: ConceptVector,
    pub topic: String,
}

/// Labeled training documents in the latent space, with the pipeline that
/// maps new fields into it. Immutable once built.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    model: SemanticModel,
    entries: Vec<IndexEntry>,
}

impl SimilarityIndex {
    /// Indexes every corpus document that has a topic in `topics`.
    pub fn build(model: SemanticModel, corpus: &Corpus, topics: &TopicMap) -> Result<Self> {
        topics.validate(corpus)?;
        let entries = corpus
            .documents()
            .iter()
            .filter_map(|d| {
                let topic = topics.get(d.doc_id).filter(|t| !t.is_empty())?;
                Some(IndexEntry {
                    doc_id: d.doc_id,
                    vector: model.vectorize(&d.tokens),
                    topic: topic.to_string(),
                })
            })
            .collect();
        Ok(Self { model, entries })
    }

    pub fn from_entries(model: SemanticModel, entries: Vec<IndexEntry>) -> Result<Self> {
        let k = model.k();
        for e in &entries {
            if e.vector.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: e.vector.len(),
                });
            }
            if e.topic.is_empty() {
                return Err(Error::InvalidModel(format!("document {} has an empty topic", e.doc_id)));
            }
        }
        Ok(Self { model, entries })
    }

    pub fn model(&self) -> &SemanticModel {
        &self.model
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn topics(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.topic.as_str()).collect()
    }

    /// All entries ranked by cosine similarity to `query`, ties by doc id.
    pub fn rank(&self, query: &ConceptVector) -> Result<Vec<Neighbor>> {
        let mut ranked = self
            .entries
            .iter()
            .map(|e| {
                Ok(Neighbor {
                    doc_id: e.doc_id,
                    similarity: cosine_similarity(query, &e.vector)?,
                    topic: e.topic.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .unwrap_or(Ordering::Equal)
                .then(a.doc_id.cmp(&b.doc_id))
        });
        Ok(ranked)
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold.is_finite() && threshold >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("threshold must be a non-negative number, got {threshold}")))
    }
}

/// Nearest-neighbour inference. The rank-1 topic stands unless the top
/// similarities are within `threshold` of each other
/// (`sim[0] - sim[4] < threshold`), in which case the most frequent topic
/// among the top five wins, ties broken uniformly at random.
pub fn infer_nl<R: Rng + ?Sized>(
    features: &FeatureVector,
    index: &SimilarityIndex,
    threshold: f64,
    rng: &mut R,
) -> Result<InferenceResult> {
    check_threshold(threshold)?;
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let query = index.model.vectorize(features);
    let mut neighbors = index.rank(&query)?;
    neighbors.truncate(TOP_N);

    let mut result = InferenceResult::new(neighbors[0].topic.clone(), Method::Nl);
    let spread = neighbors[0].similarity - neighbors[neighbors.len() - 1].similarity;
    if spread < threshold {
        result.vote_taken = true;
        let mut counts: Vec<(&str, usize)> = Vec::new();
        for n in &neighbors {
            match counts.iter_mut().find(|(t, _)| *t == n.topic) {
                Some((_, c)) => *c += 1,
                None => counts.push((&n.topic, 1)),
            }
        }
        let most = counts.iter().map(|&(_, c)| c).max().unwrap_or(0);
        let winners: Vec<String> = counts
            .iter()
            .filter(|&&(_, c)| c == most)
            .map(|&(t, _)| t.to_string())
            .collect();
        result.topic = if winners.len() == 1 {
            winners.into_iter().next().unwrap()
        } else {
            choose(winners, rng, &mut result.rng_draws)
        };
    }
    result.neighbors = neighbors;
    Ok(result)
}

/// Plain rule-based inference: a single matching topic is the answer,
/// several are resolved uniformly at random, none yields [`RANDOM_TOPIC`].
pub fn infer_rb<'a, R: Rng + ?Sized>(
    raw_attributes: &[(String, String)],
    rules: impl IntoIterator<Item = &'a Rule>,
    rng: &mut R,
) -> InferenceResult {
    let candidates = match_rules(raw_attributes, rules);
    rb_from_candidates(candidates, Method::Rb, rng)
}

fn rb_from_candidates<R: Rng + ?Sized>(candidates: BTreeSet<String>, method: Method, rng: &mut R) -> InferenceResult {
    let mut result = InferenceResult::new(String::new(), method);
    result.topic = match candidates.len() {
        0 => {
            result.method = Method::Random;
            RANDOM_TOPIC.to_string()
        }
        1 => candidates.iter().next().unwrap().clone(),
        _ => choose(candidates.iter().cloned().collect(), rng, &mut result.rng_draws),
    };
    result.rb_candidates = candidates;
    result
}

/// Rule matching first; the natural-language answer is consulted for the
/// outcomes `mode` covers. With several candidates the natural-language
/// topic wins if it is among them, otherwise the choice is uniform over the
/// candidates plus that topic.
#[allow(clippy::too_many_arguments)]
pub fn infer_hybrid<'a, R: Rng + ?Sized>(
    features: &FeatureVector,
    raw_attributes: &[(String, String)],
    rules: impl IntoIterator<Item = &'a Rule>,
    index: &SimilarityIndex,
    mode: HybridMode,
    threshold: f64,
    rng: &mut R,
) -> Result<InferenceResult> {
    let candidates = match_rules(raw_attributes, rules);
    let method = mode.method();
    match candidates.len() {
        0 if mode.handles_no_match() => {
            let mut nl = infer_nl(features, index, threshold, rng)?;
            nl.method = method;
            Ok(nl)
        }
        n if n > 1 && mode.handles_multiple() => {
            let mut nl = infer_nl(features, index, threshold, rng)?;
            nl.method = method;
            if !candidates.contains(&nl.topic) {
                let mut pool: Vec<String> = candidates.iter().cloned().collect();
                pool.push(nl.topic.clone());
                nl.topic = choose(pool, rng, &mut nl.rng_draws);
            }
            nl.rb_candidates = candidates;
            Ok(nl)
        }
        _ => Ok(rb_from_candidates(candidates, method, rng)),
    }
}

/// Dispatches on `method`. Rule-based methods require `rules`; NL ignores
/// them.
#[allow(clippy::too_many_arguments)]
pub fn infer<R: Rng + ?Sized>(
    method: Method,
    features: &FeatureVector,
    raw_attributes: &[(String, String)],
    rules: &[&Rule],
    index: &SimilarityIndex,
    threshold: f64,
    rng: &mut R,
) -> Result<InferenceResult> {
    match method {
        Method::Nl => infer_nl(features, index, threshold, rng),
        Method::Rb => Ok(infer_rb(raw_attributes, rules.iter().copied(), rng)),
        Method::Random => Ok(InferenceResult::new(RANDOM_TOPIC.to_string(), Method::Random)),
        m => infer_hybrid(
            features,
            raw_attributes,
            rules.iter().copied(),
            index,
            m.hybrid_mode().expect("hybrid method"),
            threshold,
            rng,
        ),
    }
}
