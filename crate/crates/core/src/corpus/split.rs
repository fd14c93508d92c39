use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.7, val: 0.15, test: 0.15 }
    }
}

impl SplitRatios {
    pub fn check(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(CorpusError::Ratios(format!("{self:?} has a ratio outside [0, 1]")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CorpusError::Ratios(format!("ratios sum to {total}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub ratios: SplitRatios,
    pub seed: u64,
    pub graphs: BTreeMap<String, SplitName>,
    pub dialogs: BTreeMap<String, SplitName>,
}

impl SplitAssignment {
    pub fn dialogs_in(&self, name: SplitName) -> impl Iterator<Item = &str> {
        self.dialogs.iter().filter(move |(_, s)| **s == name).map(|(d, _)| d.as_str())
    }

    pub fn graph_count(&self, name: SplitName) -> usize {
        self.graphs.values().filter(|s| **s == name).count()
    }
}

/// Assigns whole graphs to splits so no grounding context is shared across them.
pub fn split(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<SplitAssignment, CorpusError> {
    ratios.check()?;
    let mut ids: Vec<&str> = corpus
        .graphs
        .iter()
        .map(|g| g.graph_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ids.shuffle(&mut rng_from_seed(seed));
    let n = ids.len() as f64;
    let n_train = (n * ratios.train).round() as usize;
    let n_val = ((n * ratios.val).round() as usize).min(ids.len() - n_train);
    let graphs: BTreeMap<String, SplitName> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let name = if i < n_train {
                SplitName::Train
            } else if i < n_train + n_val {
                SplitName::Val
            } else {
                SplitName::Test
            };
            (id.to_string(), name)
        })
        .collect();
    let dialogs = corpus
        .dialogs
        .iter()
        .map(|d| {
            let name = graphs
                .get(&d.graph_id)
                .copied()
                .ok_or_else(|| CorpusError::Invalid(format!("dialog {} has unknown graph", d.dialog_id)))?;
            Ok((d.dialog_id.clone(), name))
        })
        .collect::<Result<_, CorpusError>>()?;
    Ok(SplitAssignment { ratios, seed, graphs, dialogs })
}
