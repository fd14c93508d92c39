use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::DialogError;
use crate::ontology::{ApiName, Frame, Intent, IntentActivity, SlotName};
use crate::seed::SimRng;
use crate::simapi::Relation;

/// Categorical distribution keyed by outcome.
pub type Weights<K> = BTreeMap<K, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGranularity {
    Year,
    Month,
    Day,
    Season,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationGranularity {
    Place,
    City,
    Region,
}

/// What a frame carries beyond its intent, used to pick the API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleContext {
    Any,
    Relation,
    InfoRequest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRule {
    pub activity: IntentActivity,
    pub context: RuleContext,
    pub api: ApiName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPolicy {
    pub agenda_length: Weights<usize>,
    /// Goal distribution for agenda positions after the opening SEARCH.
    pub goal_weights: Weights<ApiName>,
    pub intents: BTreeMap<ApiName, Weights<Intent>>,
    /// Intent-to-API table, first matching rule wins.
    pub api_rules: Vec<ApiRule>,
    pub p_followup: f64,
    pub p_ambiguous_reference: f64,
    pub p_memory_slot: f64,
    pub p_related_filter: f64,
    /// Geometric decay of reference weights with recency rank.
    pub recency_decay: f64,
    pub search_slot_count: Weights<usize>,
    pub search_slot_weights: Weights<SlotName>,
    pub refine_slot_weights: Weights<SlotName>,
    pub info_request_count: Weights<usize>,
    pub info_request_weights: Weights<SlotName>,
    pub share_ref_count: Weights<usize>,
    pub relation_weights: Weights<Relation>,
    pub time_granularity: Weights<TimeGranularity>,
    pub location_granularity: Weights<LocationGranularity>,
    pub max_draw_attempts: u32,
    pub max_seed_advances: u32,
}

const DEFAULT_POLICY: &str = include_str!("../../data/default_policy.json");

impl Default for SimPolicy {
    fn default() -> Self {
        let policy: SimPolicy = serde_json::from_str(DEFAULT_POLICY).expect("bundled policy parses");
        policy.validate().expect("bundled policy is valid");
        policy
    }
}

fn check_weights<K: std::fmt::Debug>(name: &str, w: &Weights<K>) -> Result<(), DialogError> {
    if w.is_empty() {
        return Err(DialogError::InvalidPolicy(format!("{name} is empty")));
    }
    if let Some((k, v)) = w.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(DialogError::InvalidPolicy(format!("{name}[{k:?}] = {v} is not a weight")));
    }
    let total: f64 = w.values().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(DialogError::InvalidPolicy(format!("{name} sums to {total}, expected 1")));
    }
    Ok(())
}

pub(crate) fn pick<K: Copy>(rng: &mut SimRng, w: &Weights<K>) -> K {
    let keys: Vec<K> = w.keys().copied().collect();
    let dist = WeightedIndex::new(w.values().copied()).expect("validated weights");
    keys[dist.sample(rng)]
}

/// Weighted sampling of up to `n` distinct keys from `w` restricted to `allowed`.
pub(crate) fn pick_distinct<K: Copy + Ord>(
    rng: &mut SimRng,
    w: &Weights<K>,
    allowed: impl Fn(&K) -> bool,
    n: usize,
) -> Vec<K> {
    let mut pool: Weights<K> = w.iter().filter(|(k, v)| allowed(k) && **v > 0.0).map(|(k, v)| (*k, *v)).collect();
    let mut out = Vec::new();
    while out.len() < n && !pool.is_empty() {
        let keys: Vec<K> = pool.keys().copied().collect();
        let dist = WeightedIndex::new(pool.values().copied()).expect("positive weights");
        let k = keys[dist.sample(rng)];
        pool.remove(&k);
        out.push(k);
    }
    out
}

impl SimPolicy {
    pub fn from_json(text: &str) -> Result<Self, DialogError> {
        let policy: SimPolicy =
            serde_json::from_str(text).map_err(|e| DialogError::InvalidPolicy(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), DialogError> {
        for (name, p) in [
            ("p_followup", self.p_followup),
            ("p_ambiguous_reference", self.p_ambiguous_reference),
            ("p_memory_slot", self.p_memory_slot),
            ("p_related_filter", self.p_related_filter),
            ("recency_decay", self.recency_decay),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DialogError::InvalidPolicy(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.recency_decay == 0.0 {
            return Err(DialogError::InvalidPolicy("recency_decay must be positive".into()));
        }
        check_weights("agenda_length", &self.agenda_length)?;
        if self.agenda_length.keys().any(|&l| l == 0) {
            return Err(DialogError::InvalidPolicy("agenda_length keys must be >= 1".into()));
        }
        check_weights("goal_weights", &self.goal_weights)?;
        check_weights("search_slot_count", &self.search_slot_count)?;
        check_weights("search_slot_weights", &self.search_slot_weights)?;
        check_weights("refine_slot_weights", &self.refine_slot_weights)?;
        check_weights("info_request_count", &self.info_request_count)?;
        check_weights("info_request_weights", &self.info_request_weights)?;
        check_weights("share_ref_count", &self.share_ref_count)?;
        check_weights("relation_weights", &self.relation_weights)?;
        check_weights("time_granularity", &self.time_granularity)?;
        check_weights("location_granularity", &self.location_granularity)?;
        for (name, w) in [
            ("search_slot_count", &self.search_slot_count),
            ("info_request_count", &self.info_request_count),
            ("share_ref_count", &self.share_ref_count),
        ] {
            if w.keys().any(|&k| k == 0) {
                return Err(DialogError::InvalidPolicy(format!("{name} keys must be >= 1")));
            }
        }
        if self.max_draw_attempts == 0 {
            return Err(DialogError::InvalidPolicy("max_draw_attempts must be positive".into()));
        }
        for goal in ApiName::ALL {
            let intents = self
                .intents
                .get(goal)
                .ok_or_else(|| DialogError::InvalidPolicy(format!("no intents for goal {goal}")))?;
            check_weights(&format!("intents[{goal}]"), intents)?;
            let context = match goal {
                ApiName::GetRelated => RuleContext::Relation,
                ApiName::GetInfo => RuleContext::InfoRequest,
                _ => RuleContext::Any,
            };
            for intent in intents.keys() {
                let api = self.api_for(intent.activity, context);
                if api != Some(*goal) {
                    return Err(DialogError::InvalidPolicy(format!(
                        "intent {intent} for goal {goal} maps to {api:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn api_for(&self, activity: IntentActivity, context: RuleContext) -> Option<ApiName> {
        self.api_rules
            .iter()
            .find(|r| r.activity == activity && (r.context == RuleContext::Any || r.context == context))
            .map(|r| r.api)
    }

    /// The API a user frame triggers.
    pub fn resolve_api(&self, frame: &Frame, relation: Option<Relation>) -> Option<ApiName> {
        let context = if relation.is_some() {
            RuleContext::Relation
        } else if !frame.request_slots.is_empty() {
            RuleContext::InfoRequest
        } else {
            RuleContext::Any
        };
        self.api_for(frame.intent.activity, context)
    }
}
