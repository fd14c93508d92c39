//! Corpus generation, on-disk layout, splits and statistics.

mod split;
mod stats;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogsim::{Dialog, DialogError, SimPolicy, Simulator, TemplateLibrary};
use crate::memgraph::{
    generate_graph, parse_graph, serialize_graph, validate_graph, Catalog, GenerateError, GraphConfig, MemoryGraph,
};
use crate::seed::derive_seed;
use crate::simapi::EngineConfig;

pub use split::{split, SplitAssignment, SplitName, SplitRatios};
pub use stats::{stats, CorpusStats, MeanSd, Transition};

pub const DIALOGS_PER_SHARD: usize = 1000;
pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("graph {index}: {source}")]
    Graph { index: usize, source: GenerateError },
    #[error("dialog {dialog_id}: {source}")]
    Dialog { dialog_id: String, source: DialogError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("invalid split ratios: {0}")]
    Ratios(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub n_graphs: usize,
    pub dialogs_per_graph: usize,
    pub seed: u64,
    pub graph: GraphConfig,
    pub policy: SimPolicy,
    pub engine: EngineConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_graphs: 10,
            dialogs_per_graph: 10,
            seed: 0,
            graph: GraphConfig::default(),
            policy: SimPolicy::default(),
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub graph_id: String,
    pub file: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub dialogs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub generator_version: String,
    pub config: CorpusConfig,
    pub dialog_count: usize,
    pub regenerations: u64,
    pub graphs: Vec<GraphEntry>,
    pub shards: Vec<ShardEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: Manifest,
    pub catalog: Catalog,
    pub templates: TemplateLibrary,
    pub graphs: Vec<MemoryGraph>,
    pub dialogs: Vec<Dialog>,
}

fn graph_file(i: usize) -> String {
    format!("graphs/graph_{i:05}.json")
}

fn shard_file(i: usize) -> String {
    format!("dialogs/shard_{i:05}.json")
}

pub fn dialog_id(graph_index: usize, dialog_index: usize) -> String {
    format!("g{graph_index:05}-d{dialog_index:04}")
}

/// Generates graphs and dialogs in parallel; output depends only on `config.seed`.
pub fn generate_corpus(
    catalog: &Catalog,
    templates: &TemplateLibrary,
    config: &CorpusConfig,
) -> Result<Corpus, CorpusError> {
    config.policy.validate().map_err(|source| CorpusError::Dialog { dialog_id: String::new(), source })?;
    let per_graph: Vec<(MemoryGraph, u64, Vec<Dialog>)> = (0..config.n_graphs)
        .into_par_iter()
        .map(|g| {
            let graph_seed = derive_seed(config.seed, 2 * g as u64);
            let dialog_stream = derive_seed(config.seed, 2 * g as u64 + 1);
            let graph = generate_graph(catalog, &config.graph.clone().with_seed(graph_seed))
                .map_err(|source| CorpusError::Graph { index: g, source })?;
            let sim = Simulator::new(&graph, &config.policy, templates, config.engine);
            let dialogs = (0..config.dialogs_per_graph)
                .map(|k| {
                    let id = dialog_id(g, k);
                    sim.run_dialog(id.clone(), derive_seed(dialog_stream, k as u64))
                        .map_err(|source| CorpusError::Dialog { dialog_id: id, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((graph, graph_seed, dialogs))
        })
        .collect::<Result<_, CorpusError>>()?;

    let mut graphs = Vec::with_capacity(per_graph.len());
    let mut entries = Vec::with_capacity(per_graph.len());
    let mut dialogs = Vec::new();
    for (i, (graph, seed, ds)) in per_graph.into_iter().enumerate() {
        entries.push(GraphEntry { graph_id: graph.graph_id.clone(), file: graph_file(i), seed });
        graphs.push(graph);
        dialogs.extend(ds);
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION.to_string(),
        generator_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dialog_count: 0,
        regenerations: 0,
        graphs: entries,
        shards: Vec::new(),
    };
    let mut corpus = Corpus { manifest, catalog: catalog.clone(), templates: templates.clone(), graphs, dialogs };
    corpus.refresh_manifest();
    Ok(corpus)
}

impl Corpus {
    pub fn graph(&self, graph_id: &str) -> Option<&MemoryGraph> {
        self.graphs.iter().find(|g| g.graph_id == graph_id)
    }

    /// Recomputes dialog counts and shard layout after `dialogs` changed.
    pub fn refresh_manifest(&mut self) {
        self.manifest.dialog_count = self.dialogs.len();
        self.manifest.regenerations = self.dialogs.iter().map(|d| u64::from(d.regenerations)).sum();
        self.manifest.shards = self
            .dialogs
            .chunks(DIALOGS_PER_SHARD)
            .enumerate()
            .map(|(i, c)| ShardEntry { file: shard_file(i), dialogs: c.len() })
            .collect();
    }

    /// Structural problems: unresolved graph ids, duplicate ids, invalid graphs.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut graph_ids = BTreeSet::new();
        for g in &self.graphs {
            if !graph_ids.insert(g.graph_id.as_str()) {
                out.push(format!("duplicate graph_id {}", g.graph_id));
            }
            for v in validate_graph(g) {
                out.push(format!("{}: {} {}", g.graph_id, v.rule, v.detail));
            }
        }
        let mut dialog_ids = BTreeSet::new();
        for d in &self.dialogs {
            if !dialog_ids.insert(d.dialog_id.as_str()) {
                out.push(format!("duplicate dialog_id {}", d.dialog_id));
            }
            if !graph_ids.contains(d.graph_id.as_str()) {
                out.push(format!("dialog {} references unknown graph {}", d.dialog_id, d.graph_id));
            }
        }
        out
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, text: &str) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("corpus types serialize");
    s.push('\n');
    s
}

/// Layout: `manifest.json`, `catalog.json`, `templates.json`, `graphs/`, `dialogs/`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    write_file(&dir.join("manifest.json"), &pretty(&corpus.manifest))?;
    write_file(&dir.join("catalog.json"), &pretty(&corpus.catalog))?;
    write_file(&dir.join("templates.json"), &pretty(&corpus.templates))?;
    for (entry, graph) in corpus.manifest.graphs.iter().zip(&corpus.graphs) {
        write_file(&dir.join(&entry.file), &serialize_graph(graph))?;
    }
    let mut rest = corpus.dialogs.as_slice();
    for shard in &corpus.manifest.shards {
        let (chunk, tail) = rest.split_at(shard.dialogs.min(rest.len()));
        write_file(&dir.join(&shard.file), &pretty(&chunk))?;
        rest = tail;
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CorpusError::Format { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let catalog: Catalog = read_json(&dir.join("catalog.json"))?;
    let templates: TemplateLibrary = read_json(&dir.join("templates.json"))?;
    let mut graphs = Vec::with_capacity(manifest.graphs.len());
    for entry in &manifest.graphs {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let graph = parse_graph(&bytes).map_err(|e| CorpusError::Format { path: path.clone(), message: e.to_string() })?;
        if graph.graph_id != entry.graph_id {
            return Err(CorpusError::Format {
                path,
                message: format!("graph_id {} does not match manifest entry {}", graph.graph_id, entry.graph_id),
            });
        }
        graphs.push(graph);
    }
    let mut dialogs = Vec::with_capacity(manifest.dialog_count);
    for shard in &manifest.shards {
        let path = dir.join(&shard.file);
        let chunk: Vec<Dialog> = read_json(&path)?;
        if chunk.len() != shard.dialogs {
            return Err(CorpusError::Format {
                path,
                message: format!("expected {} dialogs, found {}", shard.dialogs, chunk.len()),
            });
        }
        dialogs.extend(chunk);
    }
    let corpus = Corpus { manifest, catalog, templates, graphs, dialogs };
    match corpus.problems().first() {
        Some(p) => Err(CorpusError::Invalid(p.clone())),
        None => Ok(corpus),
    }
}
