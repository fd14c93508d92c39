use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{GraphIndex, MemoryGraph, MemoryId, MemoryNode};

/// The hierarchy and attribute rules a memory graph must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NoTrips,
    DuplicateId,
    DanglingReference,
    Partition,
    EmptyNode,
    EventPlace,
    DayCity,
    TripRegion,
    EventMaxGap,
    MinInterEventGap,
    Chronology,
    DayDate,
    TripDates,
    Cast,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::NoTrips => "no_trips",
            Rule::DuplicateId => "duplicate_id",
            Rule::DanglingReference => "dangling_reference",
            Rule::Partition => "partition",
            Rule::EmptyNode => "empty_node",
            Rule::EventPlace => "event_place",
            Rule::DayCity => "day_city",
            Rule::TripRegion => "trip_region",
            Rule::EventMaxGap => "event_max_gap",
            Rule::MinInterEventGap => "min_inter_event_gap",
            Rule::Chronology => "chronology",
            Rule::DayDate => "day_date",
            Rule::TripDates => "trip_dates",
            Rule::Cast => "cast",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub nodes: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.rule, self.nodes.join(", "), self.detail)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, rule: Rule, nodes: Vec<String>, detail: impl Into<String>) {
        self.0.push(Violation { rule, nodes, detail: detail.into() });
    }
}

fn duplicates<T: Eq + std::hash::Hash + Copy + fmt::Display>(
    ids: impl Iterator<Item = T>,
    report: &mut Report,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            report.push(Rule::DuplicateId, vec![id.to_string()], "id appears more than once");
        }
    }
}

/// Checks the partition rule for one level: every child id has exactly one parent.
fn partition<P: fmt::Display + Copy, C: Eq + std::hash::Hash + Copy + fmt::Display>(
    children: impl Iterator<Item = C>,
    parents: impl Iterator<Item = (P, Vec<C>)>,
    report: &mut Report,
) {
    let known: HashSet<C> = children.collect();
    let mut owners: HashMap<C, Vec<String>> = HashMap::new();
    for (parent, kids) in parents {
        if kids.is_empty() {
            report.push(Rule::EmptyNode, vec![parent.to_string()], "node has no children");
        }
        for kid in kids {
            if !known.contains(&kid) {
                report.push(
                    Rule::DanglingReference,
                    vec![parent.to_string(), kid.to_string()],
                    "child id does not resolve",
                );
            }
            owners.entry(kid).or_default().push(parent.to_string());
        }
    }
    let mut orphans: Vec<C> = known.iter().copied().filter(|c| !owners.contains_key(c)).collect();
    orphans.sort_by_key(|c| c.to_string());
    for kid in orphans {
        report.push(Rule::Partition, vec![kid.to_string()], "node has no parent");
    }
    let mut shared: Vec<(C, Vec<String>)> = owners.into_iter().filter(|(_, p)| p.len() > 1).collect();
    shared.sort_by_key(|(c, _)| c.to_string());
    for (kid, parents) in shared {
        let mut nodes = vec![kid.to_string()];
        nodes.extend(parents);
        report.push(Rule::Partition, nodes, "node has more than one parent");
    }
}

/// Returns every violated invariant; empty iff the graph is well formed.
pub fn validate_graph(graph: &MemoryGraph) -> Vec<Violation> {
    let mut report = Report(Vec::new());
    if graph.trips.is_empty() {
        report.push(Rule::NoTrips, vec![graph.graph_id.clone()], "graph has no trips");
    }

    duplicates(graph.memories.iter().map(|m| m.memory_id), &mut report);
    duplicates(graph.events.iter().map(|e| e.event_id), &mut report);
    duplicates(graph.days.iter().map(|d| d.day_id), &mut report);
    duplicates(graph.trips.iter().map(|t| t.trip_id), &mut report);
    duplicates(graph.persons.iter().map(|p| p.person_id), &mut report);
    {
        let mut seen = HashSet::new();
        for p in &graph.places {
            if !seen.insert(p.place_id.as_str()) {
                report.push(Rule::DuplicateId, vec![format!("place:{}", p.place_id)], "id appears more than once");
            }
        }
    }

    partition(
        graph.memories.iter().map(|m| m.memory_id),
        graph.events.iter().map(|e| (e.event_id, e.memory_ids.clone())),
        &mut report,
    );
    partition(
        graph.events.iter().map(|e| e.event_id),
        graph.days.iter().map(|d| (d.day_id, d.event_ids.clone())),
        &mut report,
    );
    partition(
        graph.days.iter().map(|d| d.day_id),
        graph.trips.iter().map(|t| (t.trip_id, t.day_ids.clone())),
        &mut report,
    );

    let index = GraphIndex::new(graph);
    let limits = graph.constraints;

    for m in &graph.memories {
        let node = m.memory_id.to_string();
        if index.place(&m.place_id).is_none() {
            report.push(Rule::DanglingReference, vec![node.clone(), format!("place:{}", m.place_id)], "unknown place");
        }
        if !graph.activities.contains(&m.activity_label) {
            report.push(Rule::DanglingReference, vec![node.clone()], format!("activity {:?} not in graph", m.activity_label));
        }
        for p in &m.participant_ids {
            if index.person(*p).is_none() {
                report.push(Rule::DanglingReference, vec![node.clone(), p.to_string()], "unknown person");
            }
        }
    }

    let memories_of = |ids: &[MemoryId]| -> Vec<&MemoryNode> { ids.iter().filter_map(|m| index.memory(*m)).collect() };

    for e in &graph.events {
        let node = e.event_id.to_string();
        if index.place(&e.place_id).is_none() {
            report.push(Rule::DanglingReference, vec![node.clone(), format!("place:{}", e.place_id)], "unknown place");
        }
        let members = memories_of(&e.memory_ids);
        for m in &members {
            if m.place_id != e.place_id {
                report.push(
                    Rule::EventPlace,
                    vec![node.clone(), m.memory_id.to_string()],
                    format!("memory at {} but event at {}", m.place_id, e.place_id),
                );
            }
        }
        for pair in members.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                report.push(
                    Rule::Chronology,
                    vec![node.clone(), pair[0].memory_id.to_string(), pair[1].memory_id.to_string()],
                    "memory timestamps not strictly increasing",
                );
            }
        }
        let first = members.iter().map(|m| m.timestamp).min();
        let last = members.iter().map(|m| m.timestamp).max();
        if let (Some(first), Some(last)) = (first, last) {
            let gap = (last - first).num_minutes();
            if gap > limits.event_max_gap_minutes as i64 {
                report.push(
                    Rule::EventMaxGap,
                    vec![node.clone()],
                    format!("memories span {gap} minutes, limit {}", limits.event_max_gap_minutes),
                );
            }
        }
    }

    for d in &graph.days {
        let node = d.day_id.to_string();
        let events: Vec<_> = d.event_ids.iter().filter_map(|e| index.event(*e)).collect();
        for e in &events {
            if let Some(place) = index.place(&e.place_id) {
                if place.city != d.city {
                    report.push(
                        Rule::DayCity,
                        vec![node.clone(), e.event_id.to_string()],
                        format!("event in {} but day in {}", place.city, d.city),
                    );
                }
            }
            for m in memories_of(&e.memory_ids) {
                if m.timestamp.date() != d.date {
                    report.push(
                        Rule::DayDate,
                        vec![node.clone(), m.memory_id.to_string()],
                        format!("memory on {} but day is {}", m.timestamp.date(), d.date),
                    );
                }
            }
        }
        for pair in events.windows(2) {
            let prev_end = memories_of(&pair[0].memory_ids).iter().map(|m| m.timestamp).max();
            let next_start = memories_of(&pair[1].memory_ids).iter().map(|m| m.timestamp).min();
            if let (Some(end), Some(start)) = (prev_end, next_start) {
                let gap = (start - end).num_minutes();
                let nodes = vec![node.clone(), pair[0].event_id.to_string(), pair[1].event_id.to_string()];
                if gap <= 0 {
                    report.push(Rule::Chronology, nodes, "events overlap or are out of order");
                } else if gap < limits.min_inter_event_gap_minutes as i64 {
                    report.push(
                        Rule::MinInterEventGap,
                        nodes,
                        format!("events {gap} minutes apart, minimum {}", limits.min_inter_event_gap_minutes),
                    );
                }
            }
        }
    }

    for t in &graph.trips {
        let node = t.trip_id.to_string();
        let cast: HashSet<_> = t.cast.iter().copied().collect();
        let days: Vec<_> = t.day_ids.iter().filter_map(|d| index.day(*d)).collect();
        for pair in days.windows(2) {
            if pair[1].date <= pair[0].date {
                report.push(
                    Rule::Chronology,
                    vec![node.clone(), pair[0].day_id.to_string(), pair[1].day_id.to_string()],
                    "day dates not strictly increasing",
                );
            }
        }
        for d in &days {
            if d.date < t.start_date || d.date > t.end_date {
                report.push(
                    Rule::TripDates,
                    vec![node.clone(), d.day_id.to_string()],
                    format!("day {} outside {}..{}", d.date, t.start_date, t.end_date),
                );
            }
            for e in d.event_ids.iter().filter_map(|e| index.event(*e)) {
                if let Some(place) = index.place(&e.place_id) {
                    if place.region != t.region {
                        report.push(
                            Rule::TripRegion,
                            vec![node.clone(), e.event_id.to_string()],
                            format!("event in {} but trip in {}", place.region, t.region),
                        );
                    }
                }
                for m in memories_of(&e.memory_ids) {
                    for p in &m.participant_ids {
                        if !cast.contains(p) {
                            report.push(
                                Rule::Cast,
                                vec![node.clone(), m.memory_id.to_string(), p.to_string()],
                                "participant outside the trip cast",
                            );
                        }
                    }
                }
            }
        }
    }
    report.0
}
