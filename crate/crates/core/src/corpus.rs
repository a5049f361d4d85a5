//! Training corpus, term dictionary and bag-of-words counts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::FeatureVector;

const CORPUS_FORMAT: &str = "inputtopic-corpus";
const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: usize,
    pub page_id: String,
    pub element_path: String,
    /// Raw markup attributes of the source element, used by rule matching.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<(String, String)>,
    pub tokens: FeatureVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl Document {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusHeader {
    format: String,
    version: u32,
}

/// Documents with dense ids `0..N-1` in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates id density and uniqueness.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &docs {
            if !seen.insert(d.doc_id) {
                return Err(Error::DuplicateDocId(d.doc_id));
            }
        }
        for (position, d) in docs.iter().enumerate() {
            if d.doc_id != position {
                return Err(Error::NonDenseDocId {
                    position,
                    found: d.doc_id,
                });
            }
        }
        Ok(Self { docs })
    }

    /// Appends a document, assigning the next free id.
    pub fn push(
        &mut self,
        page_id: impl Into<String>,
        element_path: impl Into<String>,
        attributes: Vec<(String, String)>,
        tokens: FeatureVector,
        topic: Option<String>,
    ) -> usize {
        let doc_id = self.docs.len();
        self.docs.push(Document {
            doc_id,
            page_id: page_id.into(),
            element_path: element_path.into(),
            attributes,
            tokens,
            topic,
        });
        doc_id
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: usize) -> Option<&Document> {
        self.docs.get(doc_id)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Topics recorded inline on the documents.
    pub fn topic_map(&self) -> TopicMap {
        TopicMap(
            self.docs
                .iter()
                .filter_map(|d| d.topic.clone().map(|t| (d.doc_id, t)))
                .collect(),
        )
    }

    /// Overwrites inline topics with the entries of `topics`.
    pub fn apply_topics(&mut self, topics: &TopicMap) -> Result<()> {
        topics.validate(self)?;
        for (&id, topic) in &topics.0 {
            self.docs[id].topic = Some(topic.clone());
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        let header = CorpusHeader {
            format: CORPUS_FORMAT.into(),
            version: CORPUS_VERSION,
        };
        serde_json::to_writer(&mut *out, &header)?;
        out.write_all(b"\n")?;
        for d in &self.docs {
            serde_json::to_writer(&mut *out, d)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), path)
    }

    pub fn read_from(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header_line = loop {
            match lines.next() {
                Some((_, Ok(l))) if l.trim().is_empty() => continue,
                Some((n, Ok(l))) => break (n + 1, l),
                Some((_, Err(e))) => return Err(Error::io(path, e)),
                None => return Err(Error::parse(path, 1, "missing corpus header")),
            }
        };
        let header: CorpusHeader =
            serde_json::from_str(&header_line.1).map_err(|e| Error::parse(path, header_line.0, e))?;
        if header.format != CORPUS_FORMAT || header.version != CORPUS_VERSION {
            return Err(Error::parse(
                path,
                header_line.0,
                format!("unsupported corpus format {} v{}", header.format, header.version),
            ));
        }

        let mut docs = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e))?;
            if !seen.insert(doc.doc_id) {
                return Err(Error::parse(path, n + 1, Error::DuplicateDocId(doc.doc_id)));
            }
            if doc.doc_id != docs.len() {
                let err = Error::NonDenseDocId {
                    position: docs.len(),
                    found: doc.doc_id,
                };
                return Err(Error::parse(path, n + 1, err));
            }
            docs.push(doc);
        }
        Ok(Self { docs })
    }
}

/// Mapping from document id to topic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicMap(pub BTreeMap<usize, String>);

impl TopicMap {
    pub fn get(&self, doc_id: usize) -> Option<&str> {
        self.0.get(&doc_id).map(String::as_str)
    }

    pub fn insert(&mut self, doc_id: usize, topic: impl Into<String>) -> Option<String> {
        self.0.insert(doc_id, topic.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        match self.0.keys().find(|&&id| id >= corpus.len()) {
            Some(&id) => Err(Error::InvalidModel(format!(
                "topic map references doc_id {id} but the corpus has {} documents",
                corpus.len()
            ))),
            None => Ok(()),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

/// Term to id map with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    terms: Vec<String>,
    term_to_id: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Dictionary {
    /// Term ids follow first occurrence in corpus order.
    pub fn build<'a, I>(documents: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let mut terms = Vec::new();
        let mut term_to_id = HashMap::new();
        let mut doc_freq: Vec<usize> = Vec::new();
        let mut n_docs = 0;
        let mut seen_in_doc = HashSet::new();
        for features in documents {
            n_docs += 1;
            seen_in_doc.clear();
            for token in &features.tokens {
                let id = *term_to_id.entry(token.clone()).or_insert_with(|| {
                    terms.push(token.clone());
                    doc_freq.push(0);
                    terms.len() - 1
                });
                if seen_in_doc.insert(id) {
                    doc_freq[id] += 1;
                }
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            terms,
            term_to_id,
            doc_freq,
            n_docs,
        })
    }

    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        Self::build(corpus.documents().iter().map(|d| &d.tokens))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    /// Counts in-dictionary tokens; unknown tokens are dropped.
    pub fn to_bow(&self, features: &FeatureVector) -> BowVector {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for token in &features.tokens {
            if let Some(id) = self.term_id(token) {
                *counts.entry(id).or_default() += 1;
            }
        }
        BowVector {
            entries: counts.into_iter().collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = DictionaryFile {
            terms: self.terms.clone(),
            doc_freq: self.doc_freq.clone(),
            n_docs: self.n_docs,
        };
        write_json(path.as_ref(), &file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: DictionaryFile = read_json(path.as_ref())?;
        Self::from_parts(file.terms, file.doc_freq, file.n_docs)
    }

    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::InvalidModel(format!(
                "dictionary has {} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        if let Some((i, &n)) = doc_freq.iter().enumerate().find(|(_, &n)| n == 0 || n > n_docs) {
            return Err(Error::InvalidModel(format!(
                "document frequency {n} of term `{}` outside 1..={n_docs}",
                terms[i]
            )));
        }
        let mut term_to_id = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if term_to_id.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate term `{t}`")));
            }
        }
        Ok(Self {
            terms,
            term_to_id,
            doc_freq,
            n_docs,
        })
    }
}

/// Sparse word counts with strictly increasing term ids and no zero counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BowVector {
    pub entries: Vec<(usize, u32)>,
}

impl BowVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, term_id: usize) -> u32 {
        self.entries
            .binary_search_by_key(&term_id, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory JSON serialization");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))
}
