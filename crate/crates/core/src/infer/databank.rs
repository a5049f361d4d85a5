//! Topic → value pools handing out each value at most once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::read_json;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataBank {
    pools: BTreeMap<String, Vec<String>>,
    cursors: BTreeMap<String, usize>,
}

impl DataBank {
    /// Rejects pools containing the same value twice.
    pub fn new(pools: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (topic, pool) in &pools {
            let mut seen = BTreeSet::new();
            if let Some(dup) = pool.iter().find(|v| !seen.insert(v.as_str())) {
                return Err(Error::InvalidConfig(format!("databank pool `{topic}` repeats value `{dup}`")));
            }
        }
        Ok(Self {
            pools,
            cursors: BTreeMap::new(),
        })
    }

    /// Reads `databank.json`: an object mapping topics to value arrays.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_json(path.as_ref())?)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.pools.keys().map(String::as_str)
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.pools.contains_key(topic)
    }

    pub fn remaining(&self, topic: &str) -> usize {
        let used = self.cursors.get(topic).copied().unwrap_or(0);
        self.pools.get(topic).map_or(0, |p| p.len() - used)
    }

    /// Next unused value of the topic's pool.
    pub fn pick_value(&mut self, topic: &str) -> Result<String> {
        let pool = self
            .pools
            .get(topic)
            .ok_or_else(|| Error::NoDatabankEntry(topic.to_string()))?;
        let cursor = self.cursors.entry(topic.to_string()).or_insert(0);
        let value = pool
            .get(*cursor)
            .ok_or_else(|| Error::DatabankExhausted(topic.to_string()))?;
        *cursor += 1;
        Ok(value.clone())
    }
}
