//! Application configuration: a flat TOML file whose keys can be
//! overridden by command-line flags.
//!
//! Keys: `attributes`, `tags`, `max_iterations`, `stopwords`, `k`,
//! `threshold`, `mode`, `seed`, `corpus`, `topics`, `model_dir`, `rules`,
//! `databank`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::infer::{Method, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub attributes: Option<Vec<String>>,
    pub tags: Option<Vec<String>>,
    pub max_iterations: Option<usize>,
    pub stopwords: Option<Vec<String>>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub databank: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            attributes: other.attributes.or(self.attributes),
            tags: other.tags.or(self.tags),
            max_iterations: other.max_iterations.or(self.max_iterations),
            stopwords: other.stopwords.or(self.stopwords),
            k: other.k.or(self.k),
            threshold: other.threshold.or(self.threshold),
            mode: other.mode.or(self.mode),
            seed: other.seed.or(self.seed),
            corpus: other.corpus.or(self.corpus),
            topics: other.topics.or(self.topics),
            model_dir: other.model_dir.or(self.model_dir),
            rules: other.rules.or(self.rules),
            databank: other.databank.or(self.databank),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSettings {
    pub threshold: f64,
    pub mode: Method,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub databank: Option<PathBuf>,
}

/// Resolved settings: flag > file > default.
#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub extraction: ExtractionConfig,
    /// Requested concept count; `None` means `min(N, V, 200)`.
    pub k: Option<usize>,
    pub inference: InferenceSettings,
    pub paths: Paths,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            extraction: ExtractionConfig::default(),
            k: None,
            inference: InferenceSettings {
                threshold: DEFAULT_THRESHOLD,
                mode: Method::Nl,
                seed: 0,
            },
            paths: Paths::default(),
        }
    }
}

impl AppConfig {
    pub fn resolve(file: Option<ConfigFile>, flags: ConfigFile) -> Result<Self> {
        let merged = file.unwrap_or_default().overlay(flags);
        let mut cfg = AppConfig::default();
        if let Some(a) = merged.attributes {
            cfg.extraction.attribute_list = a;
        }
        if let Some(t) = merged.tags {
            cfg.extraction.tag_list = t;
        }
        if let Some(m) = merged.max_iterations {
            cfg.extraction.max_iterations = m;
        }
        if let Some(s) = merged.stopwords {
            cfg.extraction.stopwords = s.into_iter().map(|w| w.to_lowercase()).collect();
        }
        if let Some(k) = merged.k {
            if k == 0 {
                return Err(Error::InvalidConfig("k must be at least 1".into()));
            }
            cfg.k = Some(k);
        }
        if let Some(t) = merged.threshold {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidConfig(format!("threshold must be non-negative, got {t}")));
            }
            cfg.inference.threshold = t;
        }
        if let Some(m) = merged.mode {
            cfg.inference.mode = m.parse()?;
        }
        if let Some(s) = merged.seed {
            cfg.inference.seed = s;
        }
        cfg.paths = Paths {
            corpus: merged.corpus,
            topics: merged.topics,
            model_dir: merged.model_dir,
            rules: merged.rules,
            databank: merged.databank,
        };
        Ok(cfg)
    }
}
