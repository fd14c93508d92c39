use std::collections::BTreeMap;
use std::sync::LazyLock;

use chrono::NaiveDateTime;
use rand::Rng;
use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{DialogError, Speaker};
use crate::ontology::{ApiName, Frame, SlotName, SlotValue};
use crate::seed::SimRng;
use crate::simapi::time::{daypart, render_date, TimePeriod};
use crate::simapi::{join_names, ApiResult, Attributes, Relation};

pub const MIN_TEMPLATES_PER_KEY: usize = 3;

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([A-Za-z_]+)\}").unwrap());

/// Utterance templates keyed by `"<speaker> <ACT:ACTIVITY> <API or -> [variant]"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateLibrary {
    pub templates: BTreeMap<String, Vec<String>>,
}

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.json");

impl Default for TemplateLibrary {
    fn default() -> Self {
        Self::from_json(DEFAULT_TEMPLATES).expect("bundled templates parse")
    }
}

impl TemplateLibrary {
    pub fn from_json(text: &str) -> Result<Self, DialogError> {
        serde_json::from_str(text).map_err(|e| DialogError::InvalidTemplates(e.to_string()))
    }

    pub fn get(&self, key: &str) -> Result<&[String], DialogError> {
        let list = self
            .templates
            .get(key)
            .ok_or_else(|| DialogError::MissingTemplate(key.to_string()))?;
        if list.len() < MIN_TEMPLATES_PER_KEY {
            return Err(DialogError::TooFewTemplates { key: key.to_string(), count: list.len() });
        }
        Ok(list)
    }
}

/// Everything `realize` needs to pick and fill a template.
#[derive(Debug, Clone, Copy)]
pub struct Utterance<'a> {
    pub speaker: Speaker,
    pub frame: &'a Frame,
    pub api: Option<ApiName>,
    pub relation: Option<Relation>,
    pub result: Option<&'a ApiResult>,
}

impl Utterance<'_> {
    pub fn key(&self) -> String {
        let mut key = format!(
            "{} {} {}",
            self.speaker.as_str(),
            self.frame.intent,
            self.api.map_or("-", |a| a.as_str())
        );
        if self.speaker == Speaker::User {
            if let Some(rel) = self.relation {
                key.push(' ');
                key.push_str(rel.as_str());
            }
        }
        let empty_variant = matches!(
            self.api,
            Some(ApiName::Search | ApiName::RefineSearch | ApiName::GetRelated)
        );
        if self.speaker == Speaker::Assistant && empty_variant && self.result.is_some_and(|r| r.is_empty()) {
            key.push_str(" empty");
        }
        key
    }
}

fn filter_phrase(frame: &Frame) -> String {
    let mut out = String::new();
    for slot in [SlotName::Activity, SlotName::Participant, SlotName::Location, SlotName::Time] {
        let Some(value) = frame.slots.get(&slot) else { continue };
        let piece = match (slot, value) {
            (SlotName::Activity, SlotValue::Text(a)) => format!(" of us {a}"),
            (SlotName::Participant, SlotValue::Text(p)) => format!(" with {p}"),
            (SlotName::Location, SlotValue::Text(l)) => format!(" at {l}"),
            (SlotName::Time, SlotValue::Text(t)) => match t.parse::<TimePeriod>() {
                Ok(period) => format!(" {}", period.phrase()),
                Err(_) => format!(" from {t}"),
            },
            (SlotName::Activity, SlotValue::Memory { .. }) => " of the same activity".to_string(),
            (SlotName::Participant, SlotValue::Memory { .. }) => " with the same people".to_string(),
            (SlotName::Location, SlotValue::Memory { .. }) => " from the same place as that photo".to_string(),
            (SlotName::Time, SlotValue::Memory { .. }) => " from the same day".to_string(),
        };
        out.push_str(&piece);
    }
    out
}

fn requested_phrase(frame: &Frame) -> Option<String> {
    let parts: Vec<&str> = frame
        .request_slots
        .iter()
        .map(|s| match s {
            SlotName::Activity => "what we were doing here",
            SlotName::Location => "where this was taken",
            SlotName::Participant => "who was in this photo",
            SlotName::Time => "when this was taken",
        })
        .collect();
    (!parts.is_empty()).then(|| join_names(&parts))
}

fn parse_rendered(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%B %d, %Y, %H:%M").ok()
}

fn info_phrase(attrs: &Attributes) -> String {
    let parts: Vec<String> = attrs
        .iter()
        .map(|(slot, v)| match slot {
            SlotName::Activity => format!("you were {v}"),
            SlotName::Location => format!("it was taken at {v}"),
            SlotName::Participant if v.is_empty() => "nobody else was in the photo".to_string(),
            SlotName::Participant if v.contains(" and ") => format!("{v} were there"),
            SlotName::Participant => format!("{v} was there"),
            SlotName::Time => match parse_rendered(v) {
                Some(t) => format!("it was taken on {v}, in the {}", daypart(&t)),
                None => format!("it was taken on {v}"),
            },
        })
        .collect();
    join_names(&parts)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn photos(n: usize) -> String {
    if n == 1 {
        "1 photo".to_string()
    } else {
        format!("{n} photos")
    }
}

fn values(u: &Utterance<'_>) -> BTreeMap<&'static str, String> {
    let mut v = BTreeMap::new();
    for (slot, value) in &u.frame.slots {
        let text = match value {
            SlotValue::Text(t) if *slot == SlotName::Time => {
                t.parse::<TimePeriod>().map(|p| p.phrase()).unwrap_or_else(|_| t.clone())
            }
            SlotValue::Text(t) => t.clone(),
            SlotValue::Memory { .. } => "that".to_string(),
        };
        v.insert(slot.as_str(), text);
    }
    v.insert("filters", filter_phrase(u.frame));
    if let Some(r) = requested_phrase(u.frame) {
        v.insert("requested", r);
    }
    let n_refs = u.frame.memory_refs.len();
    v.insert(
        "items",
        match n_refs {
            0 => "it".to_string(),
            1 => "this photo".to_string(),
            n => format!("these {n} photos"),
        },
    );
    let Some(result) = u.result else { return v };
    if !result.memories.is_empty() {
        let n = result.memories.len();
        v.insert("count_photos", photos(n));
        v.insert(
            "count_photos_are",
            if n == 1 { "is 1 photo".to_string() } else { format!("are {n} photos") },
        );
    }
    let first = result
        .memories
        .first()
        .or_else(|| result.attributes.keys().next())
        .and_then(|id| result.attributes.get(id));
    let Some(attrs) = first else { return v };
    if result.memories.is_empty() {
        let info = info_phrase(attrs);
        v.insert("info_sentence", capitalize(&info));
        v.insert("info", info);
        return v;
    }
    if let Some(t) = attrs.get(&SlotName::Time) {
        v.insert("memory_time", t.clone());
        if let Some(ts) = parse_rendered(t) {
            v.insert("memory_date", render_date(&ts.date()));
            v.insert("daypart", daypart(&ts).to_string());
        }
    }
    if let Some(p) = attrs.get(&SlotName::Location) {
        v.insert("place", p.clone());
    }
    if let Some(a) = attrs.get(&SlotName::Activity) {
        v.insert("activity_desc", a.clone());
    }
    match attrs.get(&SlotName::Participant) {
        Some(p) if !p.is_empty() => {
            v.insert("participants", p.clone());
            v.insert("with_participants", format!(" with {p}"));
        }
        _ => {
            v.insert("with_participants", String::new());
        }
    }
    v
}

/// Fills one template with placeholder values.
pub fn fill(template: &str, values: &BTreeMap<&'static str, String>) -> Result<String, DialogError> {
    let mut missing = None;
    let out = PLACEHOLDER.replace_all(template, |c: &Captures<'_>| match values.get(&c[1]) {
        Some(v) => v.clone(),
        None => {
            missing.get_or_insert_with(|| c[1].to_string());
            String::new()
        }
    });
    match missing {
        Some(placeholder) => {
            Err(DialogError::UnresolvedPlaceholder { placeholder, template: template.to_string() })
        }
        None => Ok(out.into_owned()),
    }
}

/// Picks a template for the utterance key and substitutes its placeholders.
pub fn realize(u: &Utterance<'_>, library: &TemplateLibrary, rng: &mut SimRng) -> Result<String, DialogError> {
    let key = u.key();
    let list = library.get(&key)?;
    let template = &list[rng.random_range(0..list.len())];
    fill(template, &values(u))
}
