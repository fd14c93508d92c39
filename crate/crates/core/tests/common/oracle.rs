//! Brute-force reference implementations over raw graph vectors.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::NaiveDateTime;
use memdialog_core::memgraph::{EventNode, MemoryGraph, MemoryId, MemoryNode, TripNode};
use memdialog_core::ontology::SlotName;

fn season_months(name: &str) -> Option<[u32; 3]> {
    match name {
        "spring" => Some([3, 4, 5]),
        "summer" => Some([6, 7, 8]),
        "fall" | "autumn" => Some([9, 10, 11]),
        "winter" => Some([12, 1, 2]),
        _ => None,
    }
}

fn time_matches(t: &NaiveDateTime, token: &str) -> bool {
    let token = token.trim();
    let mut parts = token.split_whitespace();
    let head = parts.next().unwrap_or("").to_ascii_lowercase();
    if let Some(months) = season_months(&head) {
        let month: u32 = t.format("%m").to_string().parse().unwrap();
        let year_ok = match parts.next() {
            Some(y) => t.format("%Y").to_string() == y,
            None => true,
        };
        return months.contains(&month) && year_ok;
    }
    match token.len() {
        4 => t.format("%Y").to_string() == token,
        7 => t.format("%Y-%m").to_string() == token,
        10 => t.format("%Y-%m-%d").to_string() == token,
        _ => false,
    }
}

fn names_of<'g>(graph: &'g MemoryGraph, m: &MemoryNode) -> Vec<&'g str> {
    m.participant_ids
        .iter()
        .filter_map(|pid| graph.persons.iter().find(|p| p.person_id == *pid))
        .map(|p| p.name.as_str())
        .collect()
}

pub fn matches(graph: &MemoryGraph, m: &MemoryNode, params: &[(SlotName, String)]) -> bool {
    params.iter().all(|(slot, v)| match slot {
        SlotName::Activity => m.activity_label == *v,
        SlotName::Location => graph
            .places
            .iter()
            .find(|p| p.place_id == m.place_id)
            .is_some_and(|p| p.name == *v || p.city == *v || p.region == *v),
        SlotName::Participant => names_of(graph, m).contains(&v.as_str()),
        SlotName::Time => time_matches(&m.timestamp, v),
    })
}

fn chronological(graph: &MemoryGraph, ids: impl IntoIterator<Item = MemoryId>) -> Vec<MemoryId> {
    let mut v: Vec<&MemoryNode> = ids
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|id| graph.memories.iter().find(|m| m.memory_id == id).unwrap())
        .collect();
    v.sort_by_key(|m| (m.timestamp, m.memory_id));
    v.into_iter().map(|m| m.memory_id).collect()
}

pub fn search(graph: &MemoryGraph, params: &[(SlotName, String)], cap: usize) -> Vec<MemoryId> {
    let hits = graph.memories.iter().filter(|m| matches(graph, m, params)).map(|m| m.memory_id);
    let mut out = chronological(graph, hits);
    out.truncate(cap);
    out
}

fn event_with(graph: &MemoryGraph, id: MemoryId) -> &EventNode {
    graph.events.iter().find(|e| e.memory_ids.contains(&id)).unwrap()
}

fn trip_with(graph: &MemoryGraph, id: MemoryId) -> &TripNode {
    let e = event_with(graph, id).event_id;
    let d = graph.days.iter().find(|d| d.event_ids.contains(&e)).unwrap().day_id;
    graph.trips.iter().find(|t| t.day_ids.contains(&d)).unwrap()
}

fn first_time(graph: &MemoryGraph, e: &EventNode) -> NaiveDateTime {
    e.memory_ids
        .iter()
        .map(|id| graph.memories.iter().find(|m| m.memory_id == *id).unwrap().timestamp)
        .min()
        .unwrap()
}

fn trip_events<'g>(graph: &'g MemoryGraph, trip: &TripNode) -> Vec<&'g EventNode> {
    let mut events: Vec<&EventNode> = graph
        .days
        .iter()
        .filter(|d| trip.day_ids.contains(&d.day_id))
        .flat_map(|d| d.event_ids.iter())
        .map(|eid| graph.events.iter().find(|e| e.event_id == *eid).unwrap())
        .collect();
    events.sort_by_key(|e| first_time(graph, e));
    events
}

/// Related candidates before filtering and capping; `relation` uses the wire names.
pub fn related(graph: &MemoryGraph, refs: &BTreeSet<MemoryId>, relation: &str) -> BTreeSet<MemoryId> {
    let mut out = BTreeSet::new();
    for r in refs {
        let event = event_with(graph, *r);
        match relation {
            "same_event" => out.extend(event.memory_ids.iter().copied()),
            "same_day" => {
                let day = graph.days.iter().find(|d| d.event_ids.contains(&event.event_id)).unwrap();
                for e in graph.events.iter().filter(|e| day.event_ids.contains(&e.event_id)) {
                    out.extend(e.memory_ids.iter().copied());
                }
            }
            "same_trip" => {
                for e in trip_events(graph, trip_with(graph, *r)) {
                    out.extend(e.memory_ids.iter().copied());
                }
            }
            "next" | "previous" => {
                let events = trip_events(graph, trip_with(graph, *r));
                let pos = events.iter().position(|e| e.event_id == event.event_id).unwrap() as isize;
                let step = if relation == "next" { 1 } else { -1 };
                if let Some(e) = usize::try_from(pos + step).ok().and_then(|p| events.get(p)) {
                    out.extend(e.memory_ids.iter().copied());
                }
            }
            other => panic!("unknown relation {other}"),
        }
    }
    out.retain(|m| !refs.contains(m));
    out
}

pub fn get_related(
    graph: &MemoryGraph,
    refs: &BTreeSet<MemoryId>,
    relation: &str,
    params: &[(SlotName, String)],
    cap: usize,
) -> Vec<MemoryId> {
    let kept = related(graph, refs, relation)
        .into_iter()
        .filter(|id| matches(graph, graph.memories.iter().find(|m| m.memory_id == *id).unwrap(), params));
    let mut out = chronological(graph, kept);
    out.truncate(cap);
    out
}
