use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::time::{render_timestamp, TimePeriod};
use super::{ApiCall, ApiError, ApiResult, Attributes, Parameters, Relation, SessionState};
use crate::memgraph::{GraphIndex, MemoryGraph, MemoryId, MemoryNode};
use crate::ontology::{ApiName, SlotName, SlotValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Cap on memories returned by SEARCH, REFINE_SEARCH and GET_RELATED.
    pub max_results: usize,
    /// Treat `same_trip` as graph-wide attribute similarity.
    pub related_graph_wide: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_results: 5, related_graph_wide: false }
    }
}

/// `a`, `a and b`, `a, b and c`.
pub fn join_names<S: AsRef<str>>(names: &[S]) -> String {
    match names {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [rest @ .., last] => {
            let head: Vec<&str> = rest.iter().map(|s| s.as_ref()).collect();
            format!("{} and {}", head.join(", "), last.as_ref())
        }
    }
}

/// Text form of all four attributes of a memory.
pub fn attributes_of(index: &GraphIndex<'_>, memory: &MemoryNode) -> Attributes {
    let mut out = Attributes::new();
    out.insert(SlotName::Activity, memory.activity_label.clone());
    out.insert(
        SlotName::Location,
        index
            .place(&memory.place_id)
            .map(|p| p.display_name())
            .unwrap_or_default(),
    );
    out.insert(SlotName::Participant, join_names(&index.participant_names(memory)));
    out.insert(SlotName::Time, render_timestamp(&memory.timestamp));
    out
}

/// A validated search predicate.
enum Predicate<'a> {
    Activity(&'a str),
    Location(&'a str),
    Participant(&'a str),
    Time(TimePeriod),
}

pub struct Engine<'g> {
    index: GraphIndex<'g>,
    config: EngineConfig,
}

impl<'g> Engine<'g> {
    pub fn new(graph: &'g MemoryGraph, config: EngineConfig) -> Self {
        Self { index: GraphIndex::new(graph), config }
    }

    pub fn graph(&self) -> &'g MemoryGraph {
        self.index.graph
    }

    pub fn index(&self) -> &GraphIndex<'g> {
        &self.index
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    fn predicates<'p>(&self, params: &'p Parameters) -> Result<Vec<Predicate<'p>>, ApiError> {
        params
            .iter()
            .map(|(slot, value)| {
                let text = value.as_text().ok_or_else(|| ApiError::InvalidParameter {
                    slot: *slot,
                    reason: "memory-valued parameters must be resolved to text".into(),
                })?;
                Ok(match slot {
                    SlotName::Activity => Predicate::Activity(text),
                    SlotName::Location => Predicate::Location(text),
                    SlotName::Participant => Predicate::Participant(text),
                    SlotName::Time => Predicate::Time(text.parse().map_err(|e: super::time::BadTimeToken| {
                        ApiError::InvalidParameter { slot: *slot, reason: e.to_string() }
                    })?),
                })
            })
            .collect()
    }

    fn satisfies(&self, memory: &MemoryNode, predicates: &[Predicate<'_>]) -> bool {
        predicates.iter().all(|p| match p {
            Predicate::Activity(a) => memory.activity_label == *a,
            Predicate::Location(loc) => self
                .index
                .place(&memory.place_id)
                .is_some_and(|pl| pl.name == *loc || pl.city == *loc || pl.region == *loc),
            Predicate::Participant(name) => self.index.participant_names(memory).contains(name),
            Predicate::Time(period) => period.contains(&memory.timestamp),
        })
    }

    fn chronological(&self, ids: impl IntoIterator<Item = MemoryId>) -> Vec<MemoryId> {
        let mut nodes: Vec<&MemoryNode> = ids.into_iter().filter_map(|id| self.index.memory(id)).collect();
        nodes.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.memory_id.cmp(&b.memory_id)));
        nodes.dedup_by_key(|m| m.memory_id);
        nodes.into_iter().map(|m| m.memory_id).collect()
    }

    fn memory_result(&self, mut ids: Vec<MemoryId>) -> ApiResult {
        ids.truncate(self.config.max_results);
        let attributes = ids
            .iter()
            .filter_map(|id| self.index.memory(*id))
            .map(|m| (m.memory_id, attributes_of(&self.index, m)))
            .collect();
        ApiResult::new(ids, attributes)
    }

    fn check_refs(&self, refs: &BTreeSet<MemoryId>) -> Result<(), ApiError> {
        if refs.is_empty() {
            return Err(ApiError::MissingRefs);
        }
        match refs.iter().find(|r| self.index.memory(**r).is_none()) {
            Some(bad) => Err(ApiError::UnknownMemory(*bad)),
            None => Ok(()),
        }
    }

    /// Every memory satisfying all parameters, uncapped.
    pub fn matching(&self, params: &Parameters) -> Result<Vec<MemoryId>, ApiError> {
        let predicates = self.predicates(params)?;
        Ok(self.chronological(
            self.graph()
                .memories
                .iter()
                .filter(|m| self.satisfies(m, &predicates))
                .map(|m| m.memory_id),
        ))
    }

    pub fn search(&self, params: &Parameters) -> Result<ApiResult, ApiError> {
        if params.is_empty() {
            return Err(ApiError::EmptyParameters);
        }
        Ok(self.memory_result(self.matching(params)?))
    }

    /// Search over the previous parameters overwritten by `new_parameters`.
    pub fn refine_search(
        &self,
        session: &mut SessionState,
        new_parameters: &Parameters,
    ) -> Result<ApiResult, ApiError> {
        if session.last_search_parameters.is_empty() {
            return Err(ApiError::NoPriorSearch);
        }
        let mut merged = session.last_search_parameters.clone();
        merged.extend(new_parameters.iter().map(|(k, v)| (*k, v.clone())));
        let result = self.search(&merged)?;
        session.last_search_parameters = merged;
        Ok(result)
    }

    pub fn get_info(
        &self,
        refs: &BTreeSet<MemoryId>,
        request_slots: &BTreeSet<SlotName>,
    ) -> Result<ApiResult, ApiError> {
        self.check_refs(refs)?;
        if request_slots.is_empty() {
            return Err(ApiError::MissingRequestSlots);
        }
        let attributes: BTreeMap<MemoryId, Attributes> = refs
            .iter()
            .map(|id| {
                let memory = self.index.memory(*id).expect("checked");
                let all = attributes_of(&self.index, memory);
                let picked = request_slots
                    .iter()
                    .map(|s| (*s, all.get(s).cloned().unwrap_or_default()))
                    .collect();
                (*id, picked)
            })
            .collect();
        Ok(ApiResult::new(Vec::new(), attributes))
    }

    /// Candidate set for a relation before filtering and capping.
    pub fn related_set(&self, refs: &BTreeSet<MemoryId>, relation: Relation) -> Result<BTreeSet<MemoryId>, ApiError> {
        self.check_refs(refs)?;
        let mut out = BTreeSet::new();
        for r in refs {
            match relation {
                Relation::SameEvent => {
                    if let Some(e) = self.index.event_of(*r) {
                        out.extend(e.memory_ids.iter().copied());
                    }
                }
                Relation::SameDay => {
                    if let Some(d) = self.index.day_of(*r) {
                        for e in d.event_ids.iter().filter_map(|e| self.index.event(*e)) {
                            out.extend(e.memory_ids.iter().copied());
                        }
                    }
                }
                Relation::SameTrip if self.config.related_graph_wide => {
                    out.extend(self.graph().memories.iter().map(|m| m.memory_id));
                }
                Relation::SameTrip => {
                    if let Some(t) = self.index.trip_of(*r) {
                        for e in self.index.trip_events(t) {
                            out.extend(e.memory_ids.iter().copied());
                        }
                    }
                }
                Relation::Next | Relation::Previous => {
                    let (Some(event), Some(trip)) = (self.index.event_of(*r), self.index.trip_of(*r)) else {
                        continue;
                    };
                    let events = self.index.trip_events(trip);
                    let pos = events.iter().position(|e| e.event_id == event.event_id).expect("event in trip");
                    let adjacent = if relation == Relation::Next {
                        events.get(pos + 1)
                    } else {
                        pos.checked_sub(1).and_then(|p| events.get(p))
                    };
                    if let Some(e) = adjacent {
                        out.extend(e.memory_ids.iter().copied());
                    }
                }
            }
        }
        for r in refs {
            out.remove(r);
        }
        Ok(out)
    }

    pub fn get_related(
        &self,
        refs: &BTreeSet<MemoryId>,
        relation: Relation,
        params: &Parameters,
    ) -> Result<ApiResult, ApiError> {
        let candidates = self.related_set(refs, relation)?;
        let predicates = self.predicates(params)?;
        let kept = candidates
            .into_iter()
            .filter(|id| self.index.memory(*id).is_some_and(|m| self.satisfies(m, &predicates)));
        Ok(self.memory_result(self.chronological(kept)))
    }

    pub fn share(&self, session: &mut SessionState, refs: &BTreeSet<MemoryId>) -> Result<ApiResult, ApiError> {
        self.check_refs(refs)?;
        if let Some(bad) = refs.iter().find(|r| !session.has_shown(**r)) {
            return Err(ApiError::NotShown(*bad));
        }
        session.shared_memories.extend(refs.iter().copied());
        let ids = self.chronological(refs.iter().copied());
        let attributes = ids
            .iter()
            .filter_map(|id| self.index.memory(*id))
            .map(|m| (m.memory_id, attributes_of(&self.index, m)))
            .collect();
        Ok(ApiResult::new(ids, attributes))
    }

    /// Runs a call against the session: records search parameters and appends newly
    /// returned memories to the shown list.
    pub fn execute(&self, session: &mut SessionState, call: &ApiCall) -> Result<ApiResult, ApiError> {
        let result = match call.api {
            ApiName::Search => {
                let r = self.search(&call.parameters)?;
                session.last_search_parameters = call.parameters.clone();
                r
            }
            ApiName::RefineSearch => self.refine_search(session, &call.parameters)?,
            ApiName::GetInfo => self.get_info(&call.memory_refs, &call.request_slots)?,
            ApiName::GetRelated => {
                let relation = call.relation.ok_or(ApiError::MissingRelation)?;
                self.get_related(&call.memory_refs, relation, &call.parameters)?
            }
            ApiName::Share => return self.share(session, &call.memory_refs),
        };
        if call.api != ApiName::GetInfo {
            session.show(&result.memories);
        }
        Ok(result)
    }

    /// Attribute text of one memory used when resolving a memory-valued slot.
    pub fn resolve_slot(&self, slot: SlotName, value: &SlotValue) -> Result<String, ApiError> {
        match value {
            SlotValue::Text(s) => Ok(s.clone()),
            SlotValue::Memory { memory } => {
                let m = self.index.memory(*memory).ok_or(ApiError::UnknownMemory(*memory))?;
                Ok(match slot {
                    SlotName::Activity => m.activity_label.clone(),
                    SlotName::Location => self
                        .index
                        .place(&m.place_id)
                        .map(|p| p.name.clone())
                        .unwrap_or_default(),
                    SlotName::Participant => self
                        .index
                        .participant_names(m)
                        .first()
                        .map(|s| s.to_string())
                        .unwrap_or_default(),
                    SlotName::Time => m.timestamp.date().format("%Y-%m-%d").to_string(),
                })
            }
        }
    }
}
