//! Memory-grounded task-oriented dialog simulation.
//!
//! The crate is organised bottom-up:
//!
//! * [`memgraph`] builds seeded memory graphs (memories grouped into events,
//!   days and trips) from a media catalog.
//! * [`ontology`] holds the dialog ontology and the flat annotation codec.
//! * [`simapi`] is the query engine behind the five assistant APIs.
//! * [`dialogsim`] runs agenda-based self-play over a graph.
//! * [`metrics`] scores predictions for the four evaluation tasks.
//! * [`corpus`] persists graphs and dialogs, splits them and reports statistics.

pub mod corpus;
pub mod dialogsim;
pub mod memgraph;
pub mod metrics;
pub mod ontology;
pub mod seed;
pub mod simapi;

pub use memgraph::{Catalog, GraphConfig, MemoryGraph, MemoryId};
pub use ontology::{ApiName, DialogAct, Frame, Intent, IntentActivity, SlotName, SlotValue};
