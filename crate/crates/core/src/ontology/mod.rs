//! Dialog ontology: acts, activities, slots, APIs and frames.

mod codec;

pub use codec::{flatten_frame, parse_frame, CodecError, CodecErrorKind};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memgraph::MemoryId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("unknown dialog act {0}")]
    UnknownAct(String),
    #[error("unknown activity {0}")]
    UnknownActivity(String),
    #[error("unknown slot name {0}")]
    UnknownSlot(String),
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("malformed intent {0:?}, expected ACT:ACTIVITY")]
    MalformedIntent(String),
}

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident, $err:ident, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = OntologyError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(OntologyError::$err(other.to_string())),
                }
            }
        }
    };
}

closed_enum!(
    /// Dialog act half of an intent.
    DialogAct, UnknownAct, {
        Ask => "ASK",
        Confirm => "CONFIRM",
        Inform => "INFORM",
        Request => "REQUEST",
    }
);

closed_enum!(
    /// Activity half of an intent.
    IntentActivity, UnknownActivity, {
        Disambiguate => "DISAMBIGUATE",
        Get => "GET",
        Refine => "REFINE",
        Share => "SHARE",
    }
);

closed_enum!(
    /// Slot inventory, one per memory attribute. Declaration order is alphabetical,
    /// so the derived `Ord` gives the canonical sort used by the codec.
    SlotName, UnknownSlot, {
        Activity => "activity",
        Location => "location",
        Participant => "participant",
        Time => "time",
    }
);

closed_enum!(
    /// The five assistant APIs.
    ApiName, UnknownApi, {
        Search => "SEARCH",
        RefineSearch => "REFINE_SEARCH",
        GetInfo => "GET_INFO",
        GetRelated => "GET_RELATED",
        Share => "SHARE",
    }
);

/// An `ACT:ACTIVITY` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Intent {
    pub act: DialogAct,
    pub activity: IntentActivity,
}

impl Intent {
    pub const fn new(act: DialogAct, activity: IntentActivity) -> Self {
        Self { act, activity }
    }

    /// All 16 renderable intents.
    pub fn all() -> impl Iterator<Item = Intent> {
        DialogAct::ALL.iter().flat_map(|&act| {
            IntentActivity::ALL
                .iter()
                .map(move |&activity| Intent { act, activity })
        })
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.act, self.activity)
    }
}

impl FromStr for Intent {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (act, activity) = s
            .split_once(':')
            .ok_or_else(|| OntologyError::MalformedIntent(s.to_string()))?;
        Ok(Intent {
            act: act.parse()?,
            activity: activity.parse()?,
        })
    }
}

impl Serialize for Intent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Intent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A slot value: either a text literal or a reference to a memory node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Memory { memory: MemoryId },
    Text(String),
}

impl SlotValue {
    pub fn text(s: impl Into<String>) -> Self {
        SlotValue::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            SlotValue::Text(s) => Some(s),
            SlotValue::Memory { .. } => None,
        }
    }

    pub fn as_memory(&self) -> Option<MemoryId> {
        match self {
            SlotValue::Memory { memory } => Some(*memory),
            SlotValue::Text(_) => None,
        }
    }
}

pub type Slots = BTreeMap<SlotName, SlotValue>;

/// Belief state of one turn: intent, slots, requested slots and memory references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub intent: Intent,
    #[serde(default)]
    pub slots: Slots,
    #[serde(default)]
    pub request_slots: BTreeSet<SlotName>,
    #[serde(default)]
    pub memory_refs: BTreeSet<MemoryId>,
}

impl Frame {
    pub fn new(intent: Intent) -> Self {
        Self {
            intent,
            slots: BTreeMap::new(),
            request_slots: BTreeSet::new(),
            memory_refs: BTreeSet::new(),
        }
    }

    pub fn with_slot(mut self, name: SlotName, value: SlotValue) -> Self {
        self.slots.insert(name, value);
        self
    }

    pub fn with_request(mut self, name: SlotName) -> Self {
        self.request_slots.insert(name);
        self
    }

    pub fn with_ref(mut self, id: MemoryId) -> Self {
        self.memory_refs.insert(id);
        self
    }

    /// Frame validity: a slot cannot be both filled and requested.
    pub fn is_valid(&self) -> bool {
        self.request_slots.iter().all(|r| !self.slots.contains_key(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_intents() {
        let all: BTreeSet<_> = Intent::all().collect();
        assert_eq!(all.len(), 16);
        for intent in all {
            assert_eq!(intent.to_string().parse::<Intent>().unwrap(), intent);
        }
    }

    #[test]
    fn closed_enumerations() {
        assert_eq!(DialogAct::ALL.len(), 4);
        assert_eq!(IntentActivity::ALL.len(), 4);
        assert_eq!(ApiName::ALL.len(), 5);
        assert_eq!(
            "FLY".parse::<IntentActivity>(),
            Err(OntologyError::UnknownActivity("FLY".into()))
        );
    }

    #[test]
    fn slot_value_serde_shapes() {
        let text = serde_json::to_string(&SlotValue::text("Seattle")).unwrap();
        assert_eq!(text, "\"Seattle\"");
        let mem = serde_json::to_string(&SlotValue::Memory { memory: MemoryId(8) }).unwrap();
        assert_eq!(mem, "{\"memory\":8}");
        let back: SlotValue = serde_json::from_str(&mem).unwrap();
        assert_eq!(back.as_memory(), Some(MemoryId(8)));
    }

    #[test]
    fn slot_names_sort_alphabetically() {
        let mut names = SlotName::ALL.to_vec();
        names.sort();
        let strs: Vec<_> = names.iter().map(|s| s.as_str()).collect();
        let mut sorted = strs.clone();
        sorted.sort();
        assert_eq!(strs, sorted);
    }
}
