use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{GoldTurn, Prediction};
use crate::dialogsim::{Dialog, Speaker};
use crate::memgraph::MemoryId;
use crate::ontology::{ApiName, DialogAct, Frame, Intent, IntentActivity};
use crate::seed::{derive_seed, rng_from_seed};

pub const DEFAULT_POOL_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub pool_size: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { pool_size: DEFAULT_POOL_SIZE, seed: 0 }
    }
}

/// Most frequent gold API; ties go to the earlier API in declaration order.
pub fn majority_api(gold: &[GoldTurn]) -> Option<ApiName> {
    let mut counts: BTreeMap<ApiName, usize> = BTreeMap::new();
    for api in gold.iter().filter_map(|g| g.api) {
        *counts.entry(api).or_insert(0) += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(a, _)| a)
}

/// Candidate pools for response retrieval, one per gold turn: the gold reply plus
/// up to `pool_size - 1` replies drawn uniformly from other turns, shuffled.
pub fn build_pools(gold: &[GoldTurn], cfg: BaselineConfig) -> Vec<Vec<String>> {
    let n = gold.len();
    gold.iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, i as u64));
            let k = cfg.pool_size.saturating_sub(1).min(n - 1);
            let mut pool: Vec<String> = index::sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|j| gold[if j >= i { j + 1 } else { j }].response_id.clone())
                .collect();
            pool.push(g.response_id.clone());
            pool.shuffle(&mut rng);
            pool
        })
        .collect()
}

/// Majority API, most recently shown memory, previous-frame carryover, template
/// echo, and a random ranking of each retrieval pool.
pub fn run_baselines(dialogs: &[Dialog], gold: &[GoldTurn], cfg: BaselineConfig) -> Vec<Prediction> {
    let api = majority_api(gold);
    let mut pools: BTreeMap<(&str, usize), Vec<String>> = gold
        .iter()
        .map(|g| (g.dialog_id.as_str(), g.turn_index))
        .zip(build_pools(gold, cfg))
        .collect();
    let mut out = Vec::with_capacity(gold.len());
    for d in dialogs {
        let mut shown: Vec<MemoryId> = Vec::new();
        let mut previous = Frame::new(Intent::new(DialogAct::Request, IntentActivity::Get));
        for (i, turn) in d.turns.iter().enumerate() {
            match turn.speaker {
                Speaker::Assistant => {
                    for m in &turn.shown_memory_ids {
                        if !shown.contains(m) {
                            shown.push(*m);
                        }
                    }
                }
                Speaker::User => {
                    let Some(reply) = d.turns.get(i + 1) else { continue };
                    out.push(Prediction {
                        dialog_id: d.dialog_id.clone(),
                        turn_index: turn.index,
                        api,
                        frame: Some(previous.clone()),
                        coref_refs: Some(shown.last().copied().into_iter().collect()),
                        response: Some(reply.template_utterance.clone()),
                        ranked_candidates: pools.remove(&(d.dialog_id.as_str(), turn.index)),
                    });
                    previous = turn.frame.clone();
                }
            }
        }
    }
    out
}
