//! The trained vector-space pipeline: dictionary, tf-idf weights and LSI
//! basis, and the files they are stored in.

use std::path::Path;

use crate::corpus::{Dictionary, TopicMap};
use crate::error::Result;
use crate::extract::FeatureVector;
use crate::semantic::{ConceptVector, LsiModel, TfIdfModel, TfIdfVector};

pub const DICTIONARY_FILE: &str = "dictionary.json";
pub const TFIDF_FILE: &str = "tfidf.json";
pub const LSI_FILE: &str = "model.lsi";
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TOPICS_FILE: &str = "topics.json";

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticModel {
    pub dictionary: Dictionary,
    pub tfidf: TfIdfModel,
    pub lsi: LsiModel,
}

impl SemanticModel {
    /// Trains on `documents`. `k` defaults to `min(N, V, 200)`.
    pub fn fit<'a, I>(documents: I, k: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
        I::IntoIter: Clone,
    {
        let documents = documents.into_iter();
        let dictionary = Dictionary::build(documents.clone())?;
        let tfidf = TfIdfModel::fit(&dictionary);
        let vectors: Vec<TfIdfVector> = documents.map(|f| tfidf.apply(&dictionary.to_bow(f))).collect();
        let k = k.unwrap_or_else(|| LsiModel::default_k(dictionary.n_docs(), dictionary.len()));
        let lsi = LsiModel::fit(&vectors, dictionary.len(), k)?;
        Ok(Self { dictionary, tfidf, lsi })
    }

    pub fn weigh(&self, features: &FeatureVector) -> TfIdfVector {
        self.tfidf.apply(&self.dictionary.to_bow(features))
    }

    /// Dictionary → tf-idf → latent space.
    pub fn vectorize(&self, features: &FeatureVector) -> ConceptVector {
        self.lsi
            .project(&self.weigh(features))
            .expect("tf-idf vectors share the dictionary's term ids")
    }

    pub fn k(&self) -> usize {
        self.lsi.k()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.dictionary.save(dir.join(DICTIONARY_FILE))?;
        self.tfidf.save(dir.join(TFIDF_FILE))?;
        self.lsi.save(dir.join(LSI_FILE))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let dictionary = Dictionary::load(dir.join(DICTIONARY_FILE))?;
        let tfidf = TfIdfModel::load(dir.join(TFIDF_FILE))?;
        let lsi = LsiModel::load(dir.join(LSI_FILE))?;
        let model = Self { dictionary, tfidf, lsi };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let v = self.dictionary.len();
        if self.tfidf.n_terms() != v || self.lsi.n_terms() != v {
            return Err(Error::InvalidModel(format!(
                "dictionary has {v} terms, tf-idf {} and LSI {}",
                self.tfidf.n_terms(),
                self.lsi.n_terms()
            )));
        }
        Ok(())
    }
}

/// Loads `topics.json` from `dir` when present.
pub fn load_topics_if_present(dir: &Path) -> Result<Option<TopicMap>> {
    let path = dir.join(TOPICS_FILE);
    if path.exists() {
        TopicMap::load(path).map(Some)
    } else {
        Ok(None)
    }
}
