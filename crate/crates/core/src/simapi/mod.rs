//! Query engine over a memory graph implementing the five assistant APIs.
//!
//! All result lists are chronological with memory id as tie-break.

mod engine;
pub mod time;

pub use engine::{attributes_of, join_names, Engine, EngineConfig};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memgraph::MemoryId;
use crate::ontology::{ApiName, SlotName, SlotValue};

pub type Parameters = BTreeMap<SlotName, SlotValue>;

/// Builds parameters from string pairs, rejecting unknown slot names.
pub fn parameters_from_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<Parameters, ApiError> {
    pairs
        .into_iter()
        .map(|(k, v)| {
            let slot = k.parse().map_err(|_| ApiError::UnknownSlot(k.to_string()))?;
            Ok((slot, SlotValue::text(v)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    SameEvent,
    SameDay,
    SameTrip,
    Next,
    Previous,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::SameEvent,
        Relation::SameDay,
        Relation::SameTrip,
        Relation::Next,
        Relation::Previous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::SameEvent => "same_event",
            Relation::SameDay => "same_day",
            Relation::SameTrip => "same_trip",
            Relation::Next => "next",
            Relation::Previous => "previous",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = ApiError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ApiError::UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCall {
    pub api: ApiName,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub memory_refs: BTreeSet<MemoryId>,
    #[serde(default)]
    pub request_slots: BTreeSet<SlotName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
}

impl ApiCall {
    pub fn new(api: ApiName) -> Self {
        Self {
            api,
            parameters: Parameters::new(),
            memory_refs: BTreeSet::new(),
            request_slots: BTreeSet::new(),
            relation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStatus {
    Ok,
    Empty,
}

pub type Attributes = BTreeMap<SlotName, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiResult {
    pub memories: Vec<MemoryId>,
    #[serde(default)]
    pub attributes: BTreeMap<MemoryId, Attributes>,
    pub status: ApiStatus,
}

impl ApiResult {
    pub(crate) fn new(memories: Vec<MemoryId>, attributes: BTreeMap<MemoryId, Attributes>) -> Self {
        let status = if memories.is_empty() && attributes.is_empty() {
            ApiStatus::Empty
        } else {
            ApiStatus::Ok
        };
        Self { memories, attributes, status }
    }

    pub fn is_empty(&self) -> bool {
        self.status == ApiStatus::Empty
    }
}

/// Dialog-scoped API state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub last_search_parameters: Parameters,
    /// Memories shown so far, in order of first appearance.
    pub shown_memories: Vec<MemoryId>,
    pub shared_memories: BTreeSet<MemoryId>,
}

impl SessionState {
    pub fn has_shown(&self, id: MemoryId) -> bool {
        self.shown_memories.contains(&id)
    }

    pub(crate) fn show(&mut self, ids: &[MemoryId]) {
        for id in ids {
            if !self.shown_memories.contains(id) {
                self.shown_memories.push(*id);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApiError {
    #[error("empty parameters")]
    EmptyParameters,
    #[error("unknown slot name {0}")]
    UnknownSlot(String),
    #[error("invalid {slot} parameter: {reason}")]
    InvalidParameter { slot: SlotName, reason: String },
    #[error("no prior search in session")]
    NoPriorSearch,
    #[error("unknown memory {0}")]
    UnknownMemory(MemoryId),
    #[error("memory references required")]
    MissingRefs,
    #[error("request slots required")]
    MissingRequestSlots,
    #[error("relation required")]
    MissingRelation,
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("memory {0} was never shown")]
    NotShown(MemoryId),
}
