use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDateTime};
use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use super::config::{DAY_START_MINUTE, LAST_EVENT_START_MINUTE, LAST_MINUTE};
use super::{
    Catalog, CatalogError, DayId, DayNode, EventId, EventNode, GraphConfig, IntRange, MemoryGraph,
    MemoryId, MemoryNode, Person, PersonId, PlaceEntry, TripId, TripNode,
};
use crate::seed::{rng_from_seed, SimRng};

const MAX_SHAPE_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("infeasible graph config: {0}")]
    Infeasible(String),
    #[error("catalog too small: {0}")]
    CatalogTooSmall(String),
}

fn sample_range(rng: &mut SimRng, r: IntRange) -> u32 {
    rng.random_range(r.min..=r.max)
}

/// Places of the catalog grouped region -> city -> place type.
type PlaceTree<'c> = BTreeMap<&'c str, BTreeMap<&'c str, BTreeMap<&'c str, Vec<&'c PlaceEntry>>>>;

fn place_tree(catalog: &Catalog) -> PlaceTree<'_> {
    let mut tree: PlaceTree<'_> = BTreeMap::new();
    for p in &catalog.places {
        tree.entry(p.region.as_str())
            .or_default()
            .entry(p.city.as_str())
            .or_default()
            .entry(p.place_type.as_str())
            .or_default()
            .push(p);
    }
    tree
}

/// Per-trip list of per-day event counts.
fn sample_shape(rng: &mut SimRng, config: &GraphConfig) -> Result<Vec<Vec<u32>>, GenerateError> {
    let n = config.memories_per_graph as u64;
    let per_event = config.memories_per_event;
    for _ in 0..MAX_SHAPE_ATTEMPTS {
        let trips = sample_range(rng, config.trips_per_graph);
        let shape: Vec<Vec<u32>> = (0..trips)
            .map(|_| {
                let days = sample_range(rng, config.days_per_trip);
                (0..days).map(|_| sample_range(rng, config.events_per_day)).collect()
            })
            .collect();
        let events: u64 = shape.iter().flatten().map(|&e| e as u64).sum();
        if events * per_event.min as u64 <= n && n <= events * per_event.max as u64 {
            return Ok(shape);
        }
    }
    Err(GenerateError::Infeasible(format!(
        "no hierarchy shape holding exactly {n} memories found in {MAX_SHAPE_ATTEMPTS} draws"
    )))
}

/// Spreads `total` memories over `events` events within the per-event range.
fn distribute(rng: &mut SimRng, events: usize, total: u32, range: IntRange) -> Vec<u32> {
    let mut counts = vec![range.min; events];
    let mut open: Vec<usize> = (0..events).filter(|_| range.max > range.min).collect();
    let mut remaining = total - range.min * events as u32;
    while remaining > 0 {
        let slot = rng.random_range(0..open.len());
        let idx = open[slot];
        counts[idx] += 1;
        remaining -= 1;
        if counts[idx] == range.max {
            open.swap_remove(slot);
        }
    }
    counts
}

/// Builds a memory graph; a deterministic function of `(catalog, config)`.
pub fn generate_graph(catalog: &Catalog, config: &GraphConfig) -> Result<MemoryGraph, GenerateError> {
    catalog.validate()?;
    config.check().map_err(GenerateError::Infeasible)?;
    let mut rng = rng_from_seed(config.seed);

    let pool_size = config.persons_per_graph as usize;
    if catalog.names.len() < pool_size {
        return Err(GenerateError::CatalogTooSmall(format!(
            "{} names for a pool of {pool_size} persons",
            catalog.names.len()
        )));
    }
    if !config.allow_media_reuse && catalog.media.len() < config.memories_per_graph as usize {
        return Err(GenerateError::CatalogTooSmall(format!(
            "{} media records for {} memories without reuse",
            catalog.media.len(),
            config.memories_per_graph
        )));
    }
    let persons: Vec<Person> = index::sample(&mut rng, catalog.names.len(), pool_size)
        .into_iter()
        .enumerate()
        .map(|(i, name_idx)| Person {
            person_id: PersonId(i as u32),
            name: catalog.names[name_idx].clone(),
        })
        .collect();

    let shape = sample_shape(&mut rng, config)?;
    let total_events: usize = shape.iter().flatten().map(|&e| e as usize).sum();
    let mut counts =
        distribute(&mut rng, total_events, config.memories_per_graph, config.memories_per_event).into_iter();

    let tree = place_tree(catalog);
    let regions: Vec<&str> = tree.keys().copied().collect();
    if regions.is_empty() {
        return Err(GenerateError::CatalogTooSmall("no places".into()));
    }

    let horizon_days = config.time_horizon.days();
    let slot_width = horizon_days / shape.len() as i64;
    let mut used = vec![false; catalog.media.len()];

    let mut graph = MemoryGraph {
        graph_id: format!("graph-{:016x}", config.seed),
        seed: config.seed,
        constraints: config.constraints(),
        memories: Vec::new(),
        events: Vec::new(),
        days: Vec::new(),
        trips: Vec::new(),
        persons,
        places: Vec::new(),
        activities: BTreeSet::new(),
    };
    let mut places_used: BTreeMap<&str, &PlaceEntry> = BTreeMap::new();

    for (trip_idx, day_events) in shape.iter().enumerate() {
        // Day offsets within the trip, with occasional one-day gaps.
        let mut offsets = Vec::with_capacity(day_events.len());
        let mut cursor = 0i64;
        for d in 0..day_events.len() {
            if d > 0 {
                cursor += 1 + i64::from(rng.random_bool(config.day_gap_probability));
            }
            offsets.push(cursor);
        }
        let span = cursor + 1;
        if span > slot_width {
            return Err(GenerateError::Infeasible("time_horizon too short for trips".into()));
        }
        let start_offset = trip_idx as i64 * slot_width + rng.random_range(0..=(slot_width - span));
        let trip_start = config.time_horizon.start + Duration::days(start_offset);

        let region = regions[rng.random_range(0..regions.len())];
        let cities: Vec<&str> = tree[region].keys().copied().collect();

        let cast_len = (sample_range(&mut rng, config.cast_size) as usize).min(graph.persons.len());
        let mut cast: Vec<PersonId> = index::sample(&mut rng, graph.persons.len(), cast_len)
            .into_iter()
            .map(|i| PersonId(i as u32))
            .collect();
        cast.sort();

        let trip_id = TripId(graph.trips.len() as u32);
        let mut day_ids = Vec::new();
        for (d, &n_events) in day_events.iter().enumerate() {
            let date = trip_start + Duration::days(offsets[d]);
            let city = cities[rng.random_range(0..cities.len())];
            let by_type = &tree[region][city];
            let day_id = DayId(graph.days.len() as u32);
            day_ids.push(day_id);

            let k = n_events as usize;
            let event_counts: Vec<u32> = (0..k).map(|_| counts.next().expect("counted events")).collect();
            let sep = config.event_separation();
            let window = LAST_EVENT_START_MINUTE - DAY_START_MINUTE - (k as u32 - 1) * sep;
            let mut draws: Vec<u32> = (0..k).map(|_| rng.random_range(0..=window)).collect();
            draws.sort_unstable();
            let starts: Vec<u32> = draws
                .iter()
                .enumerate()
                .map(|(j, v)| DAY_START_MINUTE + v + j as u32 * sep)
                .collect();

            let mut event_ids = Vec::new();
            let mut prev_place: Option<&str> = None;
            for (j, &m) in event_counts.iter().enumerate() {
                let supply = |place_type: &str, used: &[bool]| {
                    catalog
                        .media
                        .iter()
                        .zip(used)
                        .filter(|(r, u)| {
                            (config.allow_media_reuse || !**u)
                                && catalog.activity_place_map[&r.activity_label].contains(place_type)
                        })
                        .count()
                };
                let candidates: Vec<&str> = by_type
                    .keys()
                    .copied()
                    .filter(|t| supply(t, &used) >= m as usize)
                    .collect();
                if candidates.is_empty() {
                    return Err(GenerateError::CatalogTooSmall(format!(
                        "no place type in {city} has {m} unused media records"
                    )));
                }
                let place_type = candidates[rng.random_range(0..candidates.len())];
                let options: Vec<&PlaceEntry> = by_type[place_type].clone();
                let fresh: Vec<&PlaceEntry> = options
                    .iter()
                    .copied()
                    .filter(|p| Some(p.place_id.as_str()) != prev_place)
                    .collect();
                let pick_from = if fresh.is_empty() { &options } else { &fresh };
                let place = pick_from[rng.random_range(0..pick_from.len())];
                prev_place = Some(place.place_id.as_str());
                places_used.insert(place.place_id.as_str(), place);

                let eligible: Vec<usize> = catalog
                    .media
                    .iter()
                    .enumerate()
                    .filter(|(i, r)| {
                        (config.allow_media_reuse || !used[*i])
                            && catalog.activity_place_map[&r.activity_label].contains(place_type)
                    })
                    .map(|(i, _)| i)
                    .collect();
                let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), m as usize)
                    .into_iter()
                    .map(|i| eligible[i])
                    .collect();
                chosen.sort_unstable();
                for &i in &chosen {
                    used[i] = true;
                }

                let start = starts[j];
                let room = match starts.get(j + 1) {
                    Some(next) => next - start - config.min_inter_event_gap_minutes,
                    None => LAST_MINUTE - start,
                };
                let limit = config.event_max_gap_minutes.min(room);
                let span = rng.random_range((m - 1)..=limit);
                let mut minute_offsets: Vec<usize> =
                    index::sample(&mut rng, span as usize + 1, m as usize).into_vec();
                minute_offsets.sort_unstable();
                // Shuffle which media record lands on which minute.
                let order = index::sample(&mut rng, chosen.len(), chosen.len()).into_vec();

                let event_id = EventId(graph.events.len() as u32);
                let mut memory_ids = Vec::new();
                for (slot, &off) in minute_offsets.iter().enumerate() {
                    let record = &catalog.media[chosen[order[slot]]];
                    let n_people = (record.person_slot_count as usize).min(cast.len());
                    let mut participant_ids: Vec<PersonId> = index::sample(&mut rng, cast.len(), n_people)
                        .into_iter()
                        .map(|i| cast[i])
                        .collect();
                    participant_ids.sort();
                    let minute = start + off as u32;
                    let timestamp: NaiveDateTime = date
                        .and_hms_opt(minute / 60, minute % 60, 0)
                        .expect("minute within day");
                    let memory_id = MemoryId(graph.memories.len() as u32);
                    memory_ids.push(memory_id);
                    graph.activities.insert(record.activity_label.clone());
                    graph.memories.push(MemoryNode {
                        memory_id,
                        media_id: record.media_id.clone(),
                        activity_label: record.activity_label.clone(),
                        place_id: place.place_id.clone(),
                        participant_ids,
                        timestamp,
                    });
                }
                event_ids.push(event_id);
                graph.events.push(EventNode {
                    event_id,
                    place_id: place.place_id.clone(),
                    memory_ids,
                });
            }
            graph.days.push(DayNode {
                day_id,
                city: city.to_string(),
                date,
                event_ids,
            });
        }
        graph.trips.push(TripNode {
            trip_id,
            region: region.to_string(),
            start_date: trip_start,
            end_date: trip_start + Duration::days(span - 1),
            cast,
            day_ids,
        });
    }
    graph.places = places_used.into_values().cloned().collect();
    Ok(graph)
}
