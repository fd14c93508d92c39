use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of depictable people on one media record.
pub const MAX_PERSON_SLOTS: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaRecord {
    pub media_id: String,
    pub activity_label: String,
    pub person_slot_count: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceEntry {
    pub place_id: String,
    pub name: String,
    pub place_type: String,
    pub city: String,
    pub region: String,
}

impl PlaceEntry {
    /// `Name, City` as shown to users.
    pub fn display_name(&self) -> String {
        format!("{}, {}", self.name, self.city)
    }
}

/// activity label -> acceptable place types.
pub type ActivityPlaceMap = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub media: Vec<MediaRecord>,
    pub places: Vec<PlaceEntry>,
    pub activity_place_map: ActivityPlaceMap,
    pub names: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("empty catalog")]
    Empty,
    #[error("malformed catalog: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("io error reading catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record {media_id:?}: {reason}")]
    BadRecord { media_id: String, reason: String },
    #[error("duplicate {kind} {id:?}")]
    Duplicate { kind: &'static str, id: String },
    #[error("activity {0:?} has no entry in activity_place_map")]
    UnmappedActivity(String),
    #[error("activity {activity:?} maps to place type {place_type:?} with no place")]
    DanglingPlaceType { activity: String, place_type: String },
    #[error("activity {0:?} maps to no place type")]
    NoPlaceType(String),
}

impl Catalog {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.media.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut seen = HashSet::new();
        for r in &self.media {
            if !seen.insert(r.media_id.as_str()) {
                return Err(CatalogError::Duplicate { kind: "media_id", id: r.media_id.clone() });
            }
            if r.activity_label.trim().is_empty() {
                return Err(CatalogError::BadRecord {
                    media_id: r.media_id.clone(),
                    reason: "empty activity_label".into(),
                });
            }
            if r.person_slot_count > MAX_PERSON_SLOTS {
                return Err(CatalogError::BadRecord {
                    media_id: r.media_id.clone(),
                    reason: format!("person_slot_count {} exceeds {MAX_PERSON_SLOTS}", r.person_slot_count),
                });
            }
            if !self.activity_place_map.contains_key(&r.activity_label) {
                return Err(CatalogError::UnmappedActivity(r.activity_label.clone()));
            }
        }
        let mut ids = HashSet::new();
        let mut names = HashSet::new();
        for p in &self.places {
            if !ids.insert(p.place_id.as_str()) {
                return Err(CatalogError::Duplicate { kind: "place_id", id: p.place_id.clone() });
            }
            if !names.insert((p.name.as_str(), p.city.as_str())) {
                return Err(CatalogError::Duplicate {
                    kind: "place (name, city)",
                    id: format!("{}, {}", p.name, p.city),
                });
            }
        }
        let place_types: HashSet<&str> = self.places.iter().map(|p| p.place_type.as_str()).collect();
        for (activity, types) in &self.activity_place_map {
            if types.is_empty() {
                return Err(CatalogError::NoPlaceType(activity.clone()));
            }
            for t in types {
                if !place_types.contains(t.as_str()) {
                    return Err(CatalogError::DanglingPlaceType {
                        activity: activity.clone(),
                        place_type: t.clone(),
                    });
                }
            }
        }
        let mut name_set = HashSet::new();
        for n in &self.names {
            if !name_set.insert(n.as_str()) {
                return Err(CatalogError::Duplicate { kind: "name", id: n.clone() });
            }
        }
        Ok(())
    }

    /// Distinct activity labels that occur on media records.
    pub fn activities(&self) -> BTreeSet<&str> {
        self.media.iter().map(|m| m.activity_label.as_str()).collect()
    }

    pub fn media(&self, media_id: &str) -> Option<&MediaRecord> {
        self.media.iter().find(|m| m.media_id == media_id)
    }

    /// The catalog bundled with the crate: 200 media records, 30 places, 40 activities.
    pub fn sample() -> Catalog {
        load_catalog(SAMPLE_CATALOG.as_bytes()).expect("bundled catalog is valid")
    }
}

pub(crate) const SAMPLE_CATALOG: &str = include_str!("../../data/sample_catalog.json");

/// Reads and validates a catalog document with sections `media`, `places`,
/// `activity_place_map` and `names`.
pub fn load_catalog(mut source: impl Read) -> Result<Catalog, CatalogError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    if buf.trim().is_empty() {
        return Err(CatalogError::Empty);
    }
    let catalog: Catalog = serde_json::from_str(&buf)?;
    catalog.validate()?;
    Ok(catalog)
}
