//! Agenda-driven self-play between a simulated user and assistant.

mod agenda;
mod assistant;
mod policy;
mod run;
mod templates;
mod user;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memgraph::MemoryId;
use crate::ontology::{ApiName, Frame, Intent, SlotName};
use crate::simapi::{ApiCall, ApiError, ApiResult};

pub use agenda::{goal_legal, sample_agenda};
pub use assistant::{assistant_step, AssistantOutcome};
pub use policy::{ApiRule, LocationGranularity, RuleContext, SimPolicy, TimeGranularity, Weights};
pub use run::{replay, run_dialog, ReplayMismatch, Simulator};
pub use templates::{fill, realize, TemplateLibrary, Utterance, MIN_TEMPLATES_PER_KEY};
pub use user::{user_step, UserAction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DialogError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid template library: {0}")]
    InvalidTemplates(String),
    #[error("goal {goal} is not legal here: {reason}")]
    IllegalGoal { goal: ApiName, reason: &'static str },
    #[error("no acceptable draw for goal {goal} after {attempts} attempts")]
    DrawFailed { goal: ApiName, attempts: u32 },
    #[error("no API rule matches intent {0}")]
    NoApiRule(Intent),
    #[error("disambiguation answer without a pending request")]
    NothingPending,
    #[error("no template for key {0:?}")]
    MissingTemplate(String),
    #[error("template key {key:?} has {count} templates, need at least 3")]
    TooFewTemplates { key: String, count: usize },
    #[error("unresolved placeholder {{{placeholder}}} in template {template:?}")]
    UnresolvedPlaceholder { placeholder: String, template: String },
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("regeneration budget exhausted after {0} seeds")]
    Exhausted(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Assistant,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::User => "user",
            Speaker::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub kind: ApiName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hints: Vec<SlotName>,
}

impl Goal {
    pub fn new(kind: ApiName) -> Self {
        Self { kind, hints: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agenda {
    pub goals: Vec<Goal>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub template_utterance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase: Option<String>,
    /// NLU frame on user turns, NLG frame on assistant turns.
    pub frame: Frame,
    /// Flat form of `frame`, with the triggered API on user turns.
    pub annotation: String,
    /// Gold API triggered by a user turn; absent when the assistant asks back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<ApiName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_call: Option<ApiCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_result: Option<ApiResult>,
    #[serde(default)]
    pub shown_memory_ids: Vec<MemoryId>,
}

impl Turn {
    pub fn utterance(&self) -> &str {
        self.paraphrase.as_deref().unwrap_or(&self.template_utterance)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub dialog_id: String,
    pub graph_id: String,
    /// Requested seed; `agenda.seed` holds the seed that produced the dialog.
    pub seed: u64,
    #[serde(default)]
    pub regenerations: u32,
    pub agenda: Agenda,
    pub turns: Vec<Turn>,
}

impl Dialog {
    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::User)
    }

    /// Distinct memories referenced by any turn's frame.
    pub fn memories_mentioned(&self) -> BTreeSet<MemoryId> {
        self.turns.iter().flat_map(|t| t.frame.memory_refs.iter().copied()).collect()
    }
}
