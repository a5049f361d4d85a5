//! Substring rules over element attributes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::read_json;
use crate::error::{Error, Result};

fn default_match_attributes() -> Vec<String> {
    vec!["id".into(), "name".into()]
}

/// Maps fields whose attributes contain `feature_string` to `topic`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub feature_string: String,
    pub topic: String,
    #[serde(default = "default_match_attributes")]
    pub match_attributes: Vec<String>,
    /// Page the rule was derived from. Split experiments only activate
    /// rules whose page is on the training side; rules without a page are
    /// always active.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_page: Option<String>,
}

impl Rule {
    pub fn new(feature_string: &str, topic: impl Into<String>) -> Result<Self> {
        Self {
            feature_string: feature_string.to_string(),
            topic: topic.into(),
            match_attributes: default_match_attributes(),
            source_page: None,
        }
        .normalized()
    }

    fn normalized(mut self) -> Result<Self> {
        self.feature_string = self.feature_string.to_lowercase();
        if self.feature_string.is_empty() {
            return Err(Error::InvalidConfig(format!("rule for topic `{}` has an empty feature string", self.topic)));
        }
        if self.topic.is_empty() {
            return Err(Error::InvalidConfig(format!("rule `{}` has an empty topic", self.feature_string)));
        }
        Ok(self)
    }

    pub fn matches(&self, raw_attributes: &[(String, String)]) -> bool {
        raw_attributes.iter().any(|(name, value)| {
            self.match_attributes.iter().any(|a| a.eq_ignore_ascii_case(name))
                && value.to_lowercase().contains(&self.feature_string)
        })
    }
}

/// Rules as stored in `rules.json`: a JSON array of rule objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let rules = rules.into_iter().map(Rule::normalized).collect::<Result<_>>()?;
        Ok(Self { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw: RuleSet = read_json(path.as_ref())?;
        Self::new(raw.rules)
    }

    pub fn parse(json: &str) -> Result<Self> {
        let raw: RuleSet =
            serde_json::from_str(json).map_err(|e| Error::parse("<rules>", e.line(), e))?;
        Self::new(raw.rules)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rules without a source page plus those derived from `pages`.
    pub fn active_for<'a>(&'a self, pages: &BTreeSet<&str>) -> Vec<&'a Rule> {
        self.rules
            .iter()
            .filter(|r| r.source_page.as_deref().is_none_or(|p| pages.contains(p)))
            .collect()
    }
}

/// Distinct topics of every rule matching the attributes; empty means no
/// rule matched.
pub fn match_rules<'a>(
    raw_attributes: &[(String, String)],
    rules: impl IntoIterator<Item = &'a Rule>,
) -> BTreeSet<String> {
    rules
        .into_iter()
        .filter(|r| r.matches(raw_attributes))
        .map(|r| r.topic.clone())
        .collect()
}
