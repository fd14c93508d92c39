mod tasks;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use memdialog_core::corpus::{
    generate_corpus, read_corpus, split, stats, write_corpus, Corpus, CorpusConfig, CorpusError, SplitAssignment,
    SplitName, SplitRatios,
};
use memdialog_core::dialogsim::{replay, Dialog, TemplateLibrary};
use memdialog_core::memgraph::{generate_graph, load_catalog, parse_graph, serialize_graph, validate_graph};
use memdialog_core::metrics::{evaluate, gold_turns, read_predictions, run_baselines, write_predictions, BaselineConfig};
use memdialog_core::{Catalog, GraphConfig};
use memdialog_service::{export_annotated, load_tasks, ServiceConfig};

/// Input that parsed but failed validation; exits with status 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "memdialog", version, about = "Memory-grounded dialog generation, evaluation and annotation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate memory graphs, one file per seed.
    Graph {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Graph config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check graph files or a whole corpus directory.
    Validate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        graphs: Vec<PathBuf>,
    },
    /// Generate graphs and self-play dialogs into a corpus directory.
    Dialogs {
        #[arg(long)]
        seed: Option<u64>,
        /// Corpus config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        graphs: Option<usize>,
        #[arg(long)]
        dialogs_per_graph: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print corpus statistics.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        /// Also write the statistics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign whole graphs to train/val/test.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// train,val,test
        #[arg(long, value_parser = parse_ratios, default_value = "0.7,0.15,0.15")]
        ratios: SplitRatios,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write baseline predictions as JSONL.
    Baseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = memdialog_core::metrics::DEFAULT_POOL_SIZE)]
        pool_size: usize,
        #[command(flatten)]
        subset: Subset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a predictions file against the corpus.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        subset: Subset,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        media_dir: Option<PathBuf>,
        /// Static UI bundle served at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Talk to a running annotation service.
    Tasks(tasks::TasksArgs),
    /// Merge stored paraphrases into a new corpus directory.
    Export {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct Subset {
    /// Split assignment written by `split`.
    #[arg(long, requires = "split")]
    split_file: Option<PathBuf>,
    #[arg(long, value_parser = parse_split_name, requires = "split_file")]
    split: Option<SplitName>,
}

fn parse_ratios(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [train, val, test] = parts[..] else {
        return Err("expected three comma-separated ratios".into());
    };
    let ratios = SplitRatios { train, val, test };
    ratios.check().map_err(|e| e.to_string())?;
    Ok(ratios)
}

fn parse_split_name(s: &str) -> Result<SplitName, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown split {s:?}"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn catalog(path: Option<&Path>) -> Result<Catalog> {
    match path {
        None => Ok(Catalog::sample()),
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            load_catalog(file).map_err(|e| Invalid(format!("{}: {e}", p.display())).into())
        }
    }
}

fn open_corpus(dir: &Path) -> Result<Corpus> {
    read_corpus(dir).map_err(|e| match e {
        CorpusError::Invalid(_) | CorpusError::Format { .. } => Invalid(e.to_string()).into(),
        other => anyhow::Error::new(other).context(format!("reading corpus {}", dir.display())),
    })
}

fn subset(corpus: &Corpus, subset: &Subset) -> Result<Vec<Dialog>> {
    let (Some(file), Some(name)) = (&subset.split_file, subset.split) else {
        return Ok(corpus.dialogs.clone());
    };
    let assignment: SplitAssignment = read_json(file)?;
    let ids: BTreeSet<&str> = assignment.dialogs_in(name).collect();
    if let Some(d) = corpus.dialogs.iter().find(|d| !assignment.dialogs.contains_key(&d.dialog_id)) {
        bail!(Invalid(format!("split file does not cover dialog {}", d.dialog_id)));
    }
    Ok(corpus.dialogs.iter().filter(|d| ids.contains(d.dialog_id.as_str())).cloned().collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph { seed, count, config, catalog: cat, out } => {
            let base: GraphConfig = match &config {
                Some(p) => read_json(p)?,
                None => GraphConfig::default(),
            };
            base.check().map_err(Invalid)?;
            let catalog = catalog(cat.as_deref())?;
            for s in seed..seed + count {
                let graph = generate_graph(&catalog, &base.clone().with_seed(s))?;
                let path = out.join(format!("graph_{s}.json"));
                write_text(&path, &serialize_graph(&graph))?;
                println!("{}\t{}", graph.graph_id, path.display());
            }
        }
        Command::Validate { corpus, graphs } => {
            if corpus.is_none() && graphs.is_empty() {
                bail!(Invalid("nothing to validate: pass --corpus or graph files".into()));
            }
            let mut problems = Vec::new();
            for path in &graphs {
                let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                match parse_graph(&bytes) {
                    Ok(g) => problems.extend(validate_graph(&g).iter().map(|v| format!("{}: {v}", path.display()))),
                    Err(e) => problems.push(format!("{}: {e}", path.display())),
                }
            }
            if let Some(dir) = corpus {
                let c = open_corpus(&dir)?;
                let engine = c.manifest.config.engine;
                for d in &c.dialogs {
                    let graph = c.graph(&d.graph_id).expect("corpus checked graph ids");
                    if let Err(m) = replay(d, graph, engine) {
                        problems.push(format!("{} turn {}: {}", d.dialog_id, m.turn, m.detail));
                    }
                }
                println!("corpus {}: {} graphs, {} dialogs", dir.display(), c.graphs.len(), c.dialogs.len());
            }
            for p in &problems {
                println!("{p}");
            }
            if !problems.is_empty() {
                bail!(Invalid(format!("{} problem(s) found", problems.len())));
            }
            println!("ok");
        }
        Command::Dialogs { seed, config, catalog: cat, templates, graphs, dialogs_per_graph, out } => {
            let mut cfg: CorpusConfig = match &config {
                Some(p) => read_json(p)?,
                None => CorpusConfig::default(),
            };
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.n_graphs = graphs.unwrap_or(cfg.n_graphs);
            cfg.dialogs_per_graph = dialogs_per_graph.unwrap_or(cfg.dialogs_per_graph);
            cfg.graph.check().map_err(Invalid)?;
            cfg.policy.validate().map_err(|e| Invalid(e.to_string()))?;
            let templates = match &templates {
                Some(p) => read_json(p)?,
                None => TemplateLibrary::default(),
            };
            let corpus = generate_corpus(&catalog(cat.as_deref())?, &templates, &cfg)?;
            write_corpus(&corpus, &out)?;
            println!(
                "wrote {} graphs and {} dialogs to {} ({} regenerations)",
                corpus.graphs.len(),
                corpus.dialogs.len(),
                out.display(),
                corpus.manifest.regenerations
            );
        }
        Command::Stats { corpus, out } => {
            let s = stats(&open_corpus(&corpus)?);
            print!("{}", s.to_table());
            if let Some(out) = out {
                write_text(&out, &pretty(&s))?;
            }
        }
        Command::Split { corpus, seed, ratios, out } => {
            let c = open_corpus(&corpus)?;
            let a = split(&c, ratios, seed)?;
            for name in [SplitName::Train, SplitName::Val, SplitName::Test] {
                println!("{:?}\t{} graphs\t{} dialogs", name, a.graph_count(name), a.dialogs_in(name).count());
            }
            write_text(&out, &pretty(&a))?;
        }
        Command::Baseline { corpus, seed, pool_size, subset: sub, out } => {
            let c = open_corpus(&corpus)?;
            let dialogs = subset(&c, &sub)?;
            let gold = gold_turns(&dialogs);
            let preds = run_baselines(&dialogs, &gold, BaselineConfig { pool_size, seed });
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_predictions(&mut w, &preds)?;
            w.flush()?;
            println!("wrote {} predictions to {}", preds.len(), out.display());
        }
        Command::Eval { corpus, predictions, subset: sub, out } => {
            let c = open_corpus(&corpus)?;
            let dialogs = subset(&c, &sub)?;
            let gold = gold_turns(&dialogs);
            let file = File::open(&predictions).with_context(|| format!("opening {}", predictions.display()))?;
            let preds = read_predictions(BufReader::new(file)).map_err(|e| Invalid(e.to_string()))?;
            let report = evaluate(&gold, &preds).map_err(|e| Invalid(e.to_string()))?;
            print!("{}", report.to_table());
            if let Some(out) = out {
                write_text(&out, &pretty(&report))?;
            }
        }
        Command::Serve { corpus, store, addr, media_dir, ui_dir } => {
            init_tracing();
            let config = ServiceConfig { corpus_dir: corpus, store_dir: store, addr, media_dir, ui_dir };
            tokio::runtime::Runtime::new()?.block_on(memdialog_service::run(config))?;
        }
        Command::Tasks(args) => tasks::run(args)?,
        Command::Export { corpus, store, out } => {
            let c = open_corpus(&corpus)?;
            let states = load_tasks(&store)?;
            let merged = export_annotated(&c, &states).map_err(|e| Invalid(e.to_string()))?;
            write_corpus(&merged, &out)?;
            let paraphrased = merged.dialogs.iter().flat_map(|d| &d.turns).filter(|t| t.paraphrase.is_some()).count();
            println!(
                "wrote {} dialogs ({} dropped as reported, {} paraphrased turns) to {}",
                merged.dialogs.len(),
                c.dialogs.len() - merged.dialogs.len(),
                paraphrased,
                out.display()
            );
        }
    }
    Ok(())
}

fn init_tracing() {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt().with_env_filter(filter).init();
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
