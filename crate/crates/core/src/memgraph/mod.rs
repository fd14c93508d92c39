//! Memory graphs: memories with activity, place, people and time attributes,
//! grouped into events, days and trips.

mod catalog;
mod config;
mod generate;
mod io;
mod validate;

pub use catalog::{load_catalog, ActivityPlaceMap, Catalog, CatalogError, MediaRecord, PlaceEntry};
pub use config::{GraphConfig, IntRange, TimeHorizon};
pub use generate::{generate_graph, GenerateError};
pub use io::{parse_graph, serialize_graph, GraphParseError};
pub use validate::{validate_graph, Rule, Violation};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

macro_rules! node_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

node_id!(
    /// Graph-unique memory identifier; this is the id used in annotations.
    MemoryId, "memory:"
);
node_id!(EventId, "event:");
node_id!(DayId, "day:");
node_id!(TripId, "trip:");
node_id!(PersonId, "person:");

/// Minute-resolution timestamps serialised as `YYYY-MM-DDTHH:MM`.
pub mod minute_time {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub const FORMAT: &str = "%Y-%m-%dT%H:%M";

    pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format(FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&raw, FORMAT).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub person_id: PersonId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryNode {
    pub memory_id: MemoryId,
    pub media_id: String,
    pub activity_label: String,
    pub place_id: String,
    pub participant_ids: Vec<PersonId>,
    #[serde(with = "minute_time")]
    pub timestamp: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventNode {
    pub event_id: EventId,
    pub place_id: String,
    pub memory_ids: Vec<MemoryId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayNode {
    pub day_id: DayId,
    pub city: String,
    pub date: NaiveDate,
    pub event_ids: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripNode {
    pub trip_id: TripId,
    pub region: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Persons who may appear in this trip's memories.
    pub cast: Vec<PersonId>,
    pub day_ids: Vec<DayId>,
}

/// Time limits the hierarchy was generated under; validation checks against them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConstraints {
    pub event_max_gap_minutes: u32,
    pub min_inter_event_gap_minutes: u32,
}

impl Default for GraphConstraints {
    fn default() -> Self {
        Self {
            event_max_gap_minutes: 240,
            min_inter_event_gap_minutes: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryGraph {
    pub graph_id: String,
    pub seed: u64,
    pub constraints: GraphConstraints,
    pub memories: Vec<MemoryNode>,
    pub events: Vec<EventNode>,
    pub days: Vec<DayNode>,
    pub trips: Vec<TripNode>,
    pub persons: Vec<Person>,
    pub places: Vec<PlaceEntry>,
    pub activities: BTreeSet<String>,
}

/// Edges of a memory graph. They are implied by the node records; this type makes them
/// enumerable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edge<'a> {
    Participant(MemoryId, PersonId),
    Place(MemoryId, &'a str),
    Activity(MemoryId, &'a str),
    EventMember(EventId, MemoryId),
    DayMember(DayId, EventId),
    TripMember(TripId, DayId),
}

impl MemoryGraph {
    pub fn edges(&self) -> impl Iterator<Item = Edge<'_>> {
        let attrs = self.memories.iter().flat_map(|m| {
            m.participant_ids
                .iter()
                .map(move |p| Edge::Participant(m.memory_id, *p))
                .chain([
                    Edge::Place(m.memory_id, m.place_id.as_str()),
                    Edge::Activity(m.memory_id, m.activity_label.as_str()),
                ])
        });
        let events = self
            .events
            .iter()
            .flat_map(|e| e.memory_ids.iter().map(move |m| Edge::EventMember(e.event_id, *m)));
        let days = self
            .days
            .iter()
            .flat_map(|d| d.event_ids.iter().map(move |e| Edge::DayMember(d.day_id, *e)));
        let trips = self
            .trips
            .iter()
            .flat_map(|t| t.day_ids.iter().map(move |d| Edge::TripMember(t.trip_id, *d)));
        attrs.chain(events).chain(days).chain(trips)
    }
}

/// Lookup tables over a graph. Building one assumes ids resolve; use
/// [`validate_graph`] first on untrusted input.
#[derive(Debug, Clone)]
pub struct GraphIndex<'g> {
    pub graph: &'g MemoryGraph,
    memories: HashMap<MemoryId, usize>,
    places: HashMap<&'g str, usize>,
    persons: HashMap<PersonId, usize>,
    memory_event: HashMap<MemoryId, usize>,
    event_day: HashMap<EventId, usize>,
    day_trip: HashMap<DayId, usize>,
    events: HashMap<EventId, usize>,
    days: HashMap<DayId, usize>,
}

impl<'g> GraphIndex<'g> {
    pub fn new(graph: &'g MemoryGraph) -> Self {
        let memories = graph
            .memories
            .iter()
            .enumerate()
            .map(|(i, m)| (m.memory_id, i))
            .collect();
        let places = graph
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.place_id.as_str(), i))
            .collect();
        let persons = graph
            .persons
            .iter()
            .enumerate()
            .map(|(i, p)| (p.person_id, i))
            .collect();
        let mut memory_event = HashMap::new();
        for (i, e) in graph.events.iter().enumerate() {
            for m in &e.memory_ids {
                memory_event.entry(*m).or_insert(i);
            }
        }
        let mut event_day = HashMap::new();
        for (i, d) in graph.days.iter().enumerate() {
            for e in &d.event_ids {
                event_day.entry(*e).or_insert(i);
            }
        }
        let mut day_trip = HashMap::new();
        for (i, t) in graph.trips.iter().enumerate() {
            for d in &t.day_ids {
                day_trip.entry(*d).or_insert(i);
            }
        }
        let events = graph
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.event_id, i))
            .collect();
        let days = graph
            .days
            .iter()
            .enumerate()
            .map(|(i, d)| (d.day_id, i))
            .collect();
        Self {
            graph,
            memories,
            places,
            persons,
            memory_event,
            event_day,
            day_trip,
            events,
            days,
        }
    }

    pub fn memory(&self, id: MemoryId) -> Option<&'g MemoryNode> {
        self.memories.get(&id).map(|&i| &self.graph.memories[i])
    }

    pub fn place(&self, id: &str) -> Option<&'g PlaceEntry> {
        self.places.get(id).map(|&i| &self.graph.places[i])
    }

    pub fn person(&self, id: PersonId) -> Option<&'g Person> {
        self.persons.get(&id).map(|&i| &self.graph.persons[i])
    }

    pub fn event(&self, id: EventId) -> Option<&'g EventNode> {
        self.events.get(&id).map(|&i| &self.graph.events[i])
    }

    pub fn day(&self, id: DayId) -> Option<&'g DayNode> {
        self.days.get(&id).map(|&i| &self.graph.days[i])
    }

    pub fn event_of(&self, id: MemoryId) -> Option<&'g EventNode> {
        self.memory_event.get(&id).map(|&i| &self.graph.events[i])
    }

    pub fn day_of_event(&self, id: EventId) -> Option<&'g DayNode> {
        self.event_day.get(&id).map(|&i| &self.graph.days[i])
    }

    pub fn trip_of_day(&self, id: DayId) -> Option<&'g TripNode> {
        self.day_trip.get(&id).map(|&i| &self.graph.trips[i])
    }

    pub fn day_of(&self, id: MemoryId) -> Option<&'g DayNode> {
        self.event_of(id).and_then(|e| self.day_of_event(e.event_id))
    }

    pub fn trip_of(&self, id: MemoryId) -> Option<&'g TripNode> {
        self.day_of(id).and_then(|d| self.trip_of_day(d.day_id))
    }

    /// Events of a trip in chronological (child) order.
    pub fn trip_events(&self, trip: &'g TripNode) -> Vec<&'g EventNode> {
        trip.day_ids
            .iter()
            .filter_map(|d| self.day(*d))
            .flat_map(|d| d.event_ids.iter().filter_map(|e| self.event(*e)))
            .collect()
    }

    pub fn participant_names(&self, memory: &MemoryNode) -> Vec<&'g str> {
        memory
            .participant_ids
            .iter()
            .filter_map(|p| self.person(*p))
            .map(|p| p.name.as_str())
            .collect()
    }
}
