use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::GraphConstraints;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub const fn exactly(n: u32) -> Self {
        Self { min: n, max: n }
    }

    pub fn is_empty(&self) -> bool {
        self.min > self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeHorizon {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TimeHorizon {
    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub memories_per_graph: u32,
    pub trips_per_graph: IntRange,
    pub days_per_trip: IntRange,
    pub events_per_day: IntRange,
    pub memories_per_event: IntRange,
    pub event_max_gap_minutes: u32,
    pub min_inter_event_gap_minutes: u32,
    pub persons_per_graph: u32,
    /// Size of the per-trip cast that memory participants are drawn from.
    pub cast_size: IntRange,
    /// Probability of a one-day gap between consecutive days of a trip.
    pub day_gap_probability: f64,
    pub time_horizon: TimeHorizon,
    /// Allow a media record to back more than one memory of a graph.
    pub allow_media_reuse: bool,
    pub seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            memories_per_graph: 100,
            trips_per_graph: IntRange::new(4, 8),
            days_per_trip: IntRange::new(1, 4),
            events_per_day: IntRange::new(1, 4),
            memories_per_event: IntRange::new(1, 6),
            event_max_gap_minutes: 240,
            min_inter_event_gap_minutes: 30,
            persons_per_graph: 20,
            cast_size: IntRange::new(2, 6),
            day_gap_probability: 0.2,
            time_horizon: TimeHorizon {
                start: NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date"),
                end: NaiveDate::from_ymd_opt(2021, 12, 31).expect("valid date"),
            },
            allow_media_reuse: false,
            seed: 0,
        }
    }
}

/// Earliest and latest event start, minutes after midnight.
pub(crate) const DAY_START_MINUTE: u32 = 8 * 60;
pub(crate) const LAST_EVENT_START_MINUTE: u32 = 21 * 60;
pub(crate) const LAST_MINUTE: u32 = 23 * 60 + 59;

impl GraphConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn constraints(&self) -> GraphConstraints {
        GraphConstraints {
            event_max_gap_minutes: self.event_max_gap_minutes,
            min_inter_event_gap_minutes: self.min_inter_event_gap_minutes,
        }
    }

    /// Minimum spacing between consecutive event starts in one day.
    pub(crate) fn event_separation(&self) -> u32 {
        self.min_inter_event_gap_minutes + self.memories_per_event.max
    }

    /// Checks that the ranges are non-empty and can hold `memories_per_graph` memories.
    pub fn check(&self) -> Result<(), String> {
        let ranges = [
            ("trips_per_graph", self.trips_per_graph),
            ("days_per_trip", self.days_per_trip),
            ("events_per_day", self.events_per_day),
            ("memories_per_event", self.memories_per_event),
            ("cast_size", self.cast_size),
        ];
        for (name, r) in ranges {
            if r.is_empty() {
                return Err(format!("{name} range is empty ({}..={})", r.min, r.max));
            }
        }
        for (name, r) in &ranges[..4] {
            if r.min == 0 {
                return Err(format!("{name} minimum must be at least 1"));
            }
        }
        if self.memories_per_graph == 0 {
            return Err("memories_per_graph must be positive".into());
        }
        let max: u64 = ranges[..4].iter().map(|(_, r)| r.max as u64).product();
        let min: u64 = ranges[..4].iter().map(|(_, r)| r.min as u64).product();
        let n = self.memories_per_graph as u64;
        if max < n {
            return Err(format!("at most {max} memories fit the hierarchy ranges, {n} requested"));
        }
        if min > n {
            return Err(format!("at least {min} memories required by the hierarchy ranges, {n} requested"));
        }
        if self.memories_per_event.max > 1 && self.event_max_gap_minutes + 1 < self.memories_per_event.max {
            return Err("event_max_gap_minutes too small for distinct memory minutes".into());
        }
        let window = LAST_EVENT_START_MINUTE - DAY_START_MINUTE;
        if (self.events_per_day.max - 1) * self.event_separation() > window {
            return Err("events_per_day does not fit between 08:00 and 21:00".into());
        }
        if LAST_MINUTE - LAST_EVENT_START_MINUTE < self.memories_per_event.max {
            return Err("memories_per_event too large for the last event of a day".into());
        }
        if !(0.0..=1.0).contains(&self.day_gap_probability) {
            return Err("day_gap_probability must lie in [0, 1]".into());
        }
        if self.time_horizon.days() < 1 {
            return Err("time_horizon is empty".into());
        }
        let trip_span = (self.days_per_trip.max as i64) * 2;
        if (self.trips_per_graph.max as i64) * trip_span > self.time_horizon.days() {
            return Err("time_horizon too short for non-overlapping trips".into());
        }
        Ok(())
    }
}
