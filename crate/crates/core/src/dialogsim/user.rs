use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use rand::Rng;

use super::policy::{pick, pick_distinct, LocationGranularity, TimeGranularity};
use super::{goal_legal, DialogError, SimPolicy};
use crate::memgraph::{MemoryId, MemoryNode};
use crate::ontology::{ApiName, Frame, SlotName, SlotValue};
use crate::seed::SimRng;
use crate::simapi::time::Season;
use crate::simapi::{Engine, Parameters, Relation, SessionState};

/// A user move: the NLU frame plus what the user actually had in mind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAction {
    pub goal: ApiName,
    pub frame: Frame,
    pub relation: Option<Relation>,
    /// References the user means; differs from `frame.memory_refs` only when they were left out.
    pub intended_refs: BTreeSet<MemoryId>,
}

impl UserAction {
    pub fn is_ambiguous(&self) -> bool {
        self.frame.memory_refs.is_empty() && !self.intended_refs.is_empty()
    }
}

/// Recency-weighted draw of `k` distinct memories from `shown` (oldest first).
fn pick_recent(rng: &mut SimRng, shown: &[MemoryId], decay: f64, k: usize) -> BTreeSet<MemoryId> {
    let n = shown.len();
    let weights: BTreeMap<usize, f64> = (0..n).map(|i| (i, decay.powi((n - 1 - i) as i32))).collect();
    pick_distinct(rng, &weights, |_| true, k).into_iter().map(|i| shown[i]).collect()
}

fn slot_value(
    engine: &Engine<'_>,
    policy: &SimPolicy,
    memory: &MemoryNode,
    slot: SlotName,
    rng: &mut SimRng,
) -> Option<String> {
    let index = engine.index();
    match slot {
        SlotName::Activity => Some(memory.activity_label.clone()),
        SlotName::Location => {
            let place = index.place(&memory.place_id)?;
            Some(match pick(rng, &policy.location_granularity) {
                LocationGranularity::Place => place.name.clone(),
                LocationGranularity::City => place.city.clone(),
                LocationGranularity::Region => place.region.clone(),
            })
        }
        SlotName::Participant => {
            let names = index.participant_names(memory);
            (!names.is_empty()).then(|| names[rng.random_range(0..names.len())].to_string())
        }
        SlotName::Time => {
            let t = memory.timestamp;
            Some(match pick(rng, &policy.time_granularity) {
                TimeGranularity::Year => t.format("%Y").to_string(),
                TimeGranularity::Month => t.format("%Y-%m").to_string(),
                TimeGranularity::Day => t.format("%Y-%m-%d").to_string(),
                TimeGranularity::Season => format!("{} {}", Season::of_month(t.month()).as_str(), t.year()),
            })
        }
    }
}

fn has_slot(memory: &MemoryNode, slot: SlotName) -> bool {
    slot != SlotName::Participant || !memory.participant_ids.is_empty()
}

struct Draw<'a, 'g> {
    policy: &'a SimPolicy,
    engine: &'a Engine<'g>,
    session: &'a SessionState,
}

impl Draw<'_, '_> {
    fn recent(&self, rng: &mut SimRng, k: usize) -> BTreeSet<MemoryId> {
        pick_recent(rng, &self.session.shown_memories, self.policy.recency_decay, k)
    }

    fn search(&self, rng: &mut SimRng, frame: Frame) -> Option<Frame> {
        let graph = self.engine.graph();
        let index = self.engine.index();
        let memory_slot = !self.session.shown_memories.is_empty() && rng.random_bool(self.policy.p_memory_slot);
        let (target, anchor) = if memory_slot {
            let r = *self.recent(rng, 1).first()?;
            (index.memory(r)?, Some(r))
        } else {
            (&graph.memories[rng.random_range(0..graph.memories.len())], None)
        };
        let k = pick(rng, &self.policy.search_slot_count);
        let mut slots = match anchor {
            Some(_) => {
                let mut s = vec![SlotName::Location];
                s.extend(pick_distinct(
                    rng,
                    &self.policy.search_slot_weights,
                    |s| *s != SlotName::Location && has_slot(target, *s),
                    k.saturating_sub(1),
                ));
                s
            }
            None => pick_distinct(rng, &self.policy.search_slot_weights, |s| has_slot(target, *s), k),
        };
        slots.sort();
        let mut frame = frame;
        let mut params = Parameters::new();
        for slot in slots {
            match anchor {
                Some(r) if slot == SlotName::Location => {
                    let value = SlotValue::Memory { memory: r };
                    params.insert(slot, SlotValue::text(self.engine.resolve_slot(slot, &value).ok()?));
                    frame = frame.with_slot(slot, value).with_ref(r);
                }
                _ => {
                    let text = slot_value(self.engine, self.policy, target, slot, rng)?;
                    params.insert(slot, SlotValue::text(text.clone()));
                    frame = frame.with_slot(slot, SlotValue::Text(text));
                }
            }
        }
        let hits = self.engine.matching(&params).ok()?;
        (!hits.is_empty()).then_some(frame)
    }

    fn refine(&self, rng: &mut SimRng, frame: Frame) -> Option<Frame> {
        let last = &self.session.last_search_parameters;
        let graph = self.engine.graph();
        let matches = self.engine.matching(last).ok()?;
        let id = match matches.is_empty() {
            true => graph.memories[rng.random_range(0..graph.memories.len())].memory_id,
            false => matches[rng.random_range(0..matches.len())],
        };
        let memory = self.engine.index().memory(id)?;
        let slot = *pick_distinct(rng, &self.policy.refine_slot_weights, |s| has_slot(memory, *s), 1).first()?;
        let text = slot_value(self.engine, self.policy, memory, slot, rng)?;
        if last.get(&slot).and_then(|v| v.as_text()) == Some(text.as_str()) {
            return None;
        }
        let mut merged = last.clone();
        merged.insert(slot, SlotValue::text(text.clone()));
        let narrowed = self.engine.matching(&merged).ok()?;
        (!narrowed.is_empty()).then(|| frame.with_slot(slot, SlotValue::Text(text)))
    }

    fn info(&self, rng: &mut SimRng, frame: Frame) -> Option<(Frame, BTreeSet<MemoryId>)> {
        let refs = self.recent(rng, 1);
        let k = pick(rng, &self.policy.info_request_count);
        let mut frame = frame;
        for slot in pick_distinct(rng, &self.policy.info_request_weights, |_| true, k) {
            frame = frame.with_request(slot);
        }
        Some((frame, refs))
    }

    fn related(&self, rng: &mut SimRng, frame: Frame) -> Option<(Frame, BTreeSet<MemoryId>, Relation)> {
        let refs = self.recent(rng, 1);
        let relation = pick(rng, &self.policy.relation_weights);
        let candidates: Vec<MemoryId> = self.engine.related_set(&refs, relation).ok()?.into_iter().collect();
        if candidates.is_empty() {
            return None;
        }
        let mut frame = frame;
        let mut params = Parameters::new();
        if rng.random_bool(self.policy.p_related_filter) {
            let member = self.engine.index().memory(candidates[rng.random_range(0..candidates.len())])?;
            if let Some(name) = slot_value(self.engine, self.policy, member, SlotName::Participant, rng) {
                params.insert(SlotName::Participant, SlotValue::text(name.clone()));
                frame = frame.with_slot(SlotName::Participant, SlotValue::Text(name));
            }
        }
        let result = self.engine.get_related(&refs, relation, &params).ok()?;
        (!result.is_empty()).then_some((frame, refs, relation))
    }

    fn share(&self, rng: &mut SimRng) -> BTreeSet<MemoryId> {
        let k = pick(rng, &self.policy.share_ref_count).min(self.session.shown_memories.len());
        self.recent(rng, k)
    }
}

/// Draws the user's next move toward `goal`. Slots come from the graph so the induced
/// call has results; references come from the memories shown so far.
pub fn user_step(
    policy: &SimPolicy,
    goal: ApiName,
    session: &SessionState,
    engine: &Engine<'_>,
    rng: &mut SimRng,
) -> Result<UserAction, DialogError> {
    goal_legal(goal, session)?;
    let draw = Draw { policy, engine, session };
    for _ in 0..policy.max_draw_attempts {
        let intent = pick(rng, &policy.intents[&goal]);
        let base = Frame::new(intent);
        let drawn = match goal {
            ApiName::Search => draw.search(rng, base).map(|f| (f, BTreeSet::new(), None)),
            ApiName::RefineSearch => draw.refine(rng, base).map(|f| (f, BTreeSet::new(), None)),
            ApiName::GetInfo => draw.info(rng, base).map(|(f, r)| (f, r, None)),
            ApiName::GetRelated => draw.related(rng, base).map(|(f, r, rel)| (f, r, Some(rel))),
            ApiName::Share => Some((base, draw.share(rng), None)),
        };
        let Some((mut frame, intended, relation)) = drawn else { continue };
        let needs_refs = matches!(goal, ApiName::GetInfo | ApiName::GetRelated | ApiName::Share);
        if needs_refs {
            let ambiguous =
                session.shown_memories.len() >= 2 && rng.random_bool(policy.p_ambiguous_reference);
            if !ambiguous {
                frame.memory_refs = intended.clone();
            }
        }
        let intended_refs = if needs_refs { intended } else { frame.memory_refs.clone() };
        return Ok(UserAction { goal, frame, relation, intended_refs });
    }
    Err(DialogError::DrawFailed { goal, attempts: policy.max_draw_attempts })
}
