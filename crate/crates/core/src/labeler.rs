//! Dominant-concept clustering and the cluster-at-a-time labeling session.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TopicMap};
use crate::semantic::ConceptVector;

/// Index of the coordinate with the largest absolute weight; ties go to the
/// lowest index, so the zero vector maps to 0.
pub fn dominant_concept(v: &ConceptVector) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, w) in v.weights.iter().enumerate() {
        if w.abs() > best_abs {
            best = i;
            best_abs = w.abs();
        }
    }
    best
}

/// doc id → dominant concept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptAssignment(pub BTreeMap<usize, usize>);

impl ConceptAssignment {
    pub fn from_vectors<'a>(vectors: impl IntoIterator<Item = (usize, &'a ConceptVector)>) -> Self {
        Self(vectors.into_iter().map(|(id, v)| (id, dominant_concept(v))).collect())
    }
}

/// Inverse image of the assignment; concepts without documents are absent.
pub fn cluster_by_concept(assignments: &ConceptAssignment) -> BTreeMap<usize, Vec<usize>> {
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&doc, &concept) in &assignments.0 {
        clusters.entry(concept).or_default().push(doc);
    }
    clusters
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case")]
pub enum Decision {
    Cluster {
        concept: usize,
        docs: Vec<usize>,
        topic: String,
    },
    Document {
        doc: usize,
        topic: String,
    },
    Override {
        doc: usize,
        previous: Option<String>,
        topic: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Label(String),
    Split,
    Show(usize),
    Skip,
    Override(usize, String),
    Save,
    Help,
}

impl Command {
    pub fn parse(line: &str) -> Result<Self, String> {
        let line = line.trim();
        let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let doc_id = |s: &str| s.parse::<usize>().map_err(|_| format!("`{s}` is not a document id"));
        match word {
            "label" if !rest.is_empty() => Ok(Command::Label(rest.to_string())),
            "label" => Err("usage: label <topic>".into()),
            "split" => Ok(Command::Split),
            "show" => Ok(Command::Show(doc_id(rest)?)),
            "skip" => Ok(Command::Skip),
            "override" => match rest.split_once(char::is_whitespace) {
                Some((id, topic)) if !topic.trim().is_empty() => {
                    Ok(Command::Override(doc_id(id)?, topic.trim().to_string()))
                }
                _ => Err("usage: override <doc> <topic>".into()),
            },
            "save" => Ok(Command::Save),
            "help" | "?" => Ok(Command::Help),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WorkItem {
    Cluster(usize),
    Document(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionEnd {
    /// Every document carries a topic.
    Complete,
    /// The annotator asked to save and stop.
    Saved,
    /// Input ended with documents still pending.
    ChannelClosed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutcome {
    pub topics: TopicMap,
    pub log: Vec<Decision>,
    pub end: SessionEnd,
}

const HELP: &str = "commands: label <topic> | split | show <doc> | skip | override <doc> <topic> | save | help";

/// Labels a corpus one concept cluster at a time. Clusters are offered in
/// descending size; `split` turns the current cluster into one item per
/// document.
pub struct LabelingSession<'a> {
    corpus: &'a Corpus,
    clusters: BTreeMap<usize, Vec<usize>>,
    queue: VecDeque<WorkItem>,
    topics: TopicMap,
    log: Vec<Decision>,
}

impl<'a> LabelingSession<'a> {
    /// `existing` holds labels from an earlier, partial session.
    pub fn new(corpus: &'a Corpus, clusters: BTreeMap<usize, Vec<usize>>, existing: TopicMap) -> Self {
        let mut order: Vec<(&usize, &Vec<usize>)> = clusters.iter().collect();
        order.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        let queue = order.into_iter().map(|(&c, _)| WorkItem::Cluster(c)).collect();
        let mut session = Self {
            corpus,
            clusters,
            queue,
            topics: existing,
            log: Vec::new(),
        };
        session.drop_finished();
        session
    }

    pub fn clusters(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.clusters
    }

    pub fn topics(&self) -> &TopicMap {
        &self.topics
    }

    pub fn log(&self) -> &[Decision] {
        &self.log
    }

    pub fn pending(&self) -> BTreeSet<usize> {
        self.clusters
            .values()
            .flatten()
            .copied()
            .filter(|d| self.topics.get(*d).is_none())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.queue.is_empty()
    }

    fn pending_in(&self, item: WorkItem) -> Vec<usize> {
        let docs = match item {
            WorkItem::Cluster(c) => self.clusters.get(&c).cloned().unwrap_or_default(),
            WorkItem::Document(d) => vec![d],
        };
        docs.into_iter().filter(|d| self.topics.get(*d).is_none()).collect()
    }

    fn drop_finished(&mut self) {
        let mut remaining = VecDeque::with_capacity(self.queue.len());
        for item in std::mem::take(&mut self.queue) {
            if !self.pending_in(item).is_empty() {
                remaining.push_back(item);
            }
        }
        self.queue = remaining;
    }

    /// Applies one command and returns the text to show the annotator.
    pub fn apply(&mut self, command: Command) -> Result<String, String> {
        let reply = match command {
            Command::Label(topic) => {
                let item = *self.queue.front().ok_or("nothing left to label")?;
                let docs = self.pending_in(item);
                for &d in &docs {
                    self.topics.insert(d, topic.clone());
                }
                self.queue.pop_front();
                self.log.push(match item {
                    WorkItem::Cluster(concept) => Decision::Cluster {
                        concept,
                        docs: docs.clone(),
                        topic: topic.clone(),
                    },
                    WorkItem::Document(doc) => Decision::Document {
                        doc,
                        topic: topic.clone(),
                    },
                });
                format!("labeled {} document(s) as {topic}", docs.len())
            }
            Command::Split => match self.queue.front().copied() {
                Some(item @ WorkItem::Cluster(_)) => {
                    let docs = self.pending_in(item);
                    self.queue.pop_front();
                    for &d in docs.iter().rev() {
                        self.queue.push_front(WorkItem::Document(d));
                    }
                    format!("split into {} document(s)", docs.len())
                }
                Some(WorkItem::Document(_)) => return Err("already labeling a single document".into()),
                None => return Err("nothing left to label".into()),
            },
            Command::Show(doc) => self.describe_doc(doc).ok_or(format!("no document {doc}"))?,
            Command::Skip => {
                let item = self.queue.pop_front().ok_or("nothing left to label")?;
                self.queue.push_back(item);
                "skipped".to_string()
            }
            Command::Override(doc, topic) => {
                if self.corpus.get(doc).is_none() {
                    return Err(format!("no document {doc}"));
                }
                let previous = self.topics.insert(doc, topic.clone());
                self.log.push(Decision::Override {
                    doc,
                    previous,
                    topic: topic.clone(),
                });
                format!("document {doc} labeled as {topic}")
            }
            Command::Save | Command::Help => HELP.to_string(),
        };
        self.drop_finished();
        Ok(reply)
    }

    fn describe_doc(&self, doc: usize) -> Option<String> {
        let d = self.corpus.get(doc)?;
        let topic = self.topics.get(doc).map(|t| format!(" => {t}")).unwrap_or_default();
        Some(format!(
            "[doc {}] {} {}: {}{}",
            d.doc_id,
            d.page_id,
            d.element_path,
            d.tokens.tokens.join(" "),
            topic
        ))
    }

    fn describe_current(&self) -> String {
        let Some(&item) = self.queue.front() else {
            return String::new();
        };
        let docs = self.pending_in(item);
        let mut text = match item {
            WorkItem::Cluster(c) => format!("concept {c}: {} pending document(s)\n", docs.len()),
            WorkItem::Document(_) => "single document\n".to_string(),
        };
        for d in docs {
            if let Some(line) = self.describe_doc(d) {
                text.push_str("  ");
                text.push_str(&line);
                text.push('\n');
            }
        }
        text
    }

    /// Runs the prompt loop over a line-oriented channel. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn run(mut self, input: impl BufRead, mut output: impl Write) -> io::Result<SessionOutcome> {
        let mut lines = input.lines();
        let end = loop {
            if self.is_complete() {
                break SessionEnd::Complete;
            }
            write!(output, "{}> ", self.describe_current())?;
            output.flush()?;
            let line = loop {
                match lines.next() {
                    Some(line) => {
                        let line = line?;
                        let trimmed = line.trim();
                        if !trimmed.is_empty() && !trimmed.starts_with('#') {
                            break Some(trimmed.to_string());
                        }
                    }
                    None => break None,
                }
            };
            let Some(line) = line else {
                writeln!(output)?;
                break SessionEnd::ChannelClosed;
            };
            match Command::parse(&line) {
                Ok(Command::Save) => break SessionEnd::Saved,
                Ok(cmd) => match self.apply(cmd) {
                    Ok(reply) => writeln!(output, "{reply}")?,
                    Err(e) => writeln!(output, "error: {e}")?,
                },
                Err(e) => writeln!(output, "error: {e}")?,
            }
        };
        Ok(SessionOutcome {
            topics: self.topics,
            log: self.log,
            end,
        })
    }
}
