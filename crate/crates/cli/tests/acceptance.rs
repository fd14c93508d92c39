//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero when a hard criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use memdialog_core::corpus::{read_corpus, split, stats, Corpus, SplitName, SplitRatios};
use memdialog_core::dialogsim::{replay, Speaker};
use memdialog_core::memgraph::{generate_graph, validate_graph, Catalog, GraphConfig, MemoryGraph, MemoryId};
use memdialog_core::metrics::{
    micro_prf, read_predictions, response_id, retrieval_scores, score_bleu4, score_dst, EvalReport, GoldTurn,
    Prediction,
};
use memdialog_core::ontology::{
    flatten_frame, parse_frame, ApiName, DialogAct, Frame, Intent, IntentActivity, SlotName, SlotValue,
};
use memdialog_core::seed::{rng_from_seed, SimRng};
use memdialog_core::simapi::{Engine, EngineConfig, Parameters, Relation};
use rand::Rng;

const GRAPH_SEEDS: std::ops::RangeInclusive<u64> = 1..=50;
const GRAPH_BUDGET: Duration = Duration::from_secs(10);
const MEMORIES_PER_GRAPH: usize = 100;

const ORACLE_GRAPHS: u64 = 10;
const ORACLE_CALLS_PER_GRAPH: usize = 600;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);

const CORPUS_SEED: u64 = 2024;
const CORPUS_GRAPHS: usize = 100;
const CORPUS_DIALOGS_PER_GRAPH: usize = 10;
const SELF_PLAY_BUDGET: Duration = Duration::from_secs(60);
const UTTERANCES_PER_DIALOG: (f64, f64) = (6.8, 10.8);
const MEMORIES_PER_DIALOG: (f64, f64) = (2.5, 4.5);

const COREF_CANDIDATES: (f64, f64) = (2.7, 1.0);
const COREF_DISTANCE: (f64, f64) = (2.9, 1.0);

const CODEC_FRAMES: usize = 10_000;

const EXACT: f64 = 1e-12;
const MAJORITY_TOL: f64 = 1e-9;
const RANDOM_RANK: (f64, f64) = (50.5, 2.0);
const RANDOM_RANK_TURNS: usize = 10_000;

const SPLIT_SEED: u64 = 5;
const SPLIT_TOL: f64 = 0.02;

#[derive(Default)]
struct Outcome {
    failed: Vec<&'static str>,
}

impl Outcome {
    fn record(&mut self, name: &'static str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS  {name:<24} {detail}"),
            Err(detail) => {
                println!("FAIL  {name:<24} {detail}");
                self.failed.push(name);
            }
        }
    }

    fn warn(&mut self, name: &'static str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "WARN" };
        println!("{tag}  {name:<24} {detail}");
    }
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(value: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&value)
}

fn memdialog(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_memdialog"))
        .args(args)
        .output()
        .map_err(|e| format!("spawning memdialog: {e}"))?;
    if !out.status.success() {
        return Err(format!("memdialog {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn graph_invariants() -> Result<String, String> {
    let catalog = Catalog::sample();
    let start = Instant::now();
    for seed in GRAPH_SEEDS {
        let g = generate_graph(&catalog, &GraphConfig::default().with_seed(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = validate_graph(&g);
        if let Some(first) = v.first() {
            return Err(format!("seed {seed}: {} violation(s), first: {first}", v.len()));
        }
        check(g.memories.len() == MEMORIES_PER_GRAPH, format!("seed {seed}: {} memories", g.memories.len()))?;
    }
    let t = start.elapsed();
    check(t < GRAPH_BUDGET, format!("took {t:?}"))?;
    Ok(format!("{} graphs, 0 violations, {MEMORIES_PER_GRAPH} memories each, {t:.2?}", GRAPH_SEEDS.count()))
}

const SEASONS: [&str; 5] = ["spring", "summer", "fall", "winter", "autumn"];
const RELATIONS: [Relation; 5] = [Relation::SameEvent, Relation::SameDay, Relation::SameTrip, Relation::Next, Relation::Previous];

fn random_value(graph: &MemoryGraph, slot: SlotName, rng: &mut SimRng) -> String {
    let m = &graph.memories[rng.random_range(0..graph.memories.len())];
    let place = graph.places.iter().find(|p| p.place_id == m.place_id).unwrap();
    match slot {
        SlotName::Activity => match rng.random_range(0..2) {
            0 => m.activity_label.clone(),
            _ => graph.activities.iter().nth(rng.random_range(0..graph.activities.len())).unwrap().clone(),
        },
        SlotName::Location => match rng.random_range(0..4) {
            0 => place.name.clone(),
            1 => place.city.clone(),
            2 => place.region.clone(),
            _ => graph.places[rng.random_range(0..graph.places.len())].city.clone(),
        },
        SlotName::Participant => graph.persons[rng.random_range(0..graph.persons.len())].name.clone(),
        SlotName::Time => match rng.random_range(0..5) {
            0 => m.timestamp.format("%Y").to_string(),
            1 => m.timestamp.format("%Y-%m").to_string(),
            2 => m.timestamp.format("%Y-%m-%d").to_string(),
            3 => format!("{} {}", SEASONS[rng.random_range(0..5)], m.timestamp.format("%Y")),
            _ => SEASONS[rng.random_range(0..5)].to_string(),
        },
    }
}

fn random_params(graph: &MemoryGraph, rng: &mut SimRng) -> Vec<(SlotName, String)> {
    let mut slots: Vec<SlotName> = SlotName::ALL.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    if slots.is_empty() {
        slots.push(SlotName::ALL[rng.random_range(0..SlotName::ALL.len())]);
    }
    slots.into_iter().map(|s| (s, random_value(graph, s, rng))).collect()
}

fn to_parameters(params: &[(SlotName, String)]) -> Parameters {
    params.iter().map(|(s, v)| (*s, SlotValue::text(v.clone()))).collect()
}

fn oracle_equivalence() -> Result<String, String> {
    let catalog = Catalog::sample();
    let start = Instant::now();
    let mut calls = 0;
    let mut nonempty = 0;
    for g in 0..ORACLE_GRAPHS {
        let graph = generate_graph(&catalog, &GraphConfig::default().with_seed(1000 + g)).unwrap();
        let mut rng = rng_from_seed(77 + g);
        let mut graph_calls = 0;
        while graph_calls < ORACLE_CALLS_PER_GRAPH {
            let cap = rng.random_range(1..8);
            let engine = Engine::new(&graph, EngineConfig { max_results: cap, ..Default::default() });
            if rng.random_bool(0.5) {
                let params = random_params(&graph, &mut rng);
                let got = engine.search(&to_parameters(&params)).map_err(|e| e.to_string())?.memories;
                let want = oracle::search(&graph, &params, cap);
                check(got == want, format!("graph {g} search {params:?}: {got:?} != {want:?}"))?;
                nonempty += usize::from(!got.is_empty());
                graph_calls += 1;
            } else {
                let n_refs = rng.random_range(1..3);
                let refs: BTreeSet<MemoryId> =
                    (0..n_refs).map(|_| graph.memories[rng.random_range(0..graph.memories.len())].memory_id).collect();
                let relation = RELATIONS[rng.random_range(0..RELATIONS.len())];
                let set = engine.related_set(&refs, relation).map_err(|e| e.to_string())?;
                let want_set = oracle::related(&graph, &refs, relation.as_str());
                check(set == want_set, format!("graph {g} related {refs:?} {relation:?}"))?;
                let params: Vec<(SlotName, String)> = if rng.random_bool(0.3) {
                    vec![(SlotName::Participant, random_value(&graph, SlotName::Participant, &mut rng))]
                } else {
                    Vec::new()
                };
                let got = engine.get_related(&refs, relation, &to_parameters(&params)).map_err(|e| e.to_string())?.memories;
                let want = oracle::get_related(&graph, &refs, relation.as_str(), &params, cap);
                check(got == want, format!("graph {g} get_related {refs:?} {relation:?}: {got:?} != {want:?}"))?;
                nonempty += usize::from(!got.is_empty());
                graph_calls += 2;
            }
        }
        calls += graph_calls;
    }
    let t = start.elapsed();
    check(t < ORACLE_BUDGET, format!("took {t:?}"))?;
    check(nonempty * 4 > calls, format!("only {nonempty} of {calls} calls returned results"))?;
    Ok(format!("{ORACLE_GRAPHS} graphs, {calls} calls, {nonempty} non-empty, all equal, {t:.2?}"))
}

fn self_play(corpus: &Corpus, elapsed: Duration) -> Result<String, String> {
    let engine = corpus.manifest.config.engine;
    check(corpus.dialogs.len() == CORPUS_GRAPHS * CORPUS_DIALOGS_PER_GRAPH, format!("{} dialogs", corpus.dialogs.len()))?;
    let mut calls = 0;
    for d in &corpus.dialogs {
        let graph = corpus.graph(&d.graph_id).ok_or("missing graph")?;
        replay(d, graph, engine).map_err(|m| format!("{} turn {}: {}", d.dialog_id, m.turn, m.detail))?;
        calls += d.turns.iter().filter(|t| t.api_call.is_some()).count();
    }
    let n = corpus.dialogs.len() as f64;
    let utterances = corpus.dialogs.iter().map(|d| d.turns.len()).sum::<usize>() as f64 / n;
    let mentioned = corpus.dialogs.iter().map(|d| d.memories_mentioned().len()).sum::<usize>() as f64 / n;
    check(within(utterances, UTTERANCES_PER_DIALOG), format!("utterances/dialog {utterances:.3}"))?;
    check(within(mentioned, MEMORIES_PER_DIALOG), format!("memories mentioned/dialog {mentioned:.3}"))?;

    let mut apis: BTreeMap<ApiName, usize> = BTreeMap::new();
    let mut acts = BTreeSet::new();
    let mut activities = BTreeSet::new();
    for t in corpus.dialogs.iter().flat_map(|d| &d.turns) {
        acts.insert(t.frame.intent.act);
        activities.insert(t.frame.intent.activity);
        if let Some(call) = &t.api_call {
            *apis.entry(call.api).or_default() += 1;
        }
    }
    let (modal, modal_n) = apis.iter().max_by_key(|(_, n)| **n).map(|(a, n)| (*a, *n)).unwrap();
    check(apis.values().filter(|n| **n == modal_n).count() == 1 && modal == ApiName::Search, format!("modal api {modal} ({apis:?})"))?;
    check(acts.len() == DialogAct::ALL.len(), format!("acts seen {acts:?}"))?;
    check(activities.len() == IntentActivity::ALL.len(), format!("activities seen {activities:?}"))?;
    check(apis.len() == ApiName::ALL.len(), format!("apis seen {apis:?}"))?;
    check(elapsed < SELF_PLAY_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!(
        "{calls} calls replayed; {utterances:.2} utt/dialog, {mentioned:.2} memories/dialog, SEARCH {modal_n}, {elapsed:.2?}"
    ))
}

fn coref_report(corpus: &Corpus) -> (bool, String) {
    let s = stats(corpus);
    let (Some(cand), Some(dist)) = (s.mean_coref_candidates, s.mean_coref_distance) else {
        return (false, "no coreferences in corpus".into());
    };
    let ok = (cand - COREF_CANDIDATES.0).abs() <= COREF_CANDIDATES.1 && (dist - COREF_DISTANCE.0).abs() <= COREF_DISTANCE.1;
    let detail = format!(
        "mean candidates {cand:.2} (target {}±{}), mean distance {dist:.2} (target {}±{})",
        COREF_CANDIDATES.0, COREF_CANDIDATES.1, COREF_DISTANCE.0, COREF_DISTANCE.1
    );
    (ok, detail)
}

fn random_text(rng: &mut SimRng) -> String {
    const CHARS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789'&.-";
    let words = rng.random_range(1..4);
    let mut s = String::new();
    for w in 0..words {
        if w > 0 {
            s.push_str(if rng.random_bool(0.5) { " " } else { ", " });
        }
        for _ in 0..rng.random_range(1..9) {
            s.push(CHARS[rng.random_range(0..CHARS.len())] as char);
        }
    }
    s
}

fn random_frame(rng: &mut SimRng) -> Frame {
    let act = DialogAct::ALL[rng.random_range(0..DialogAct::ALL.len())];
    let activity = IntentActivity::ALL[rng.random_range(0..IntentActivity::ALL.len())];
    let mut f = Frame::new(Intent::new(act, activity));
    for &slot in SlotName::ALL {
        match rng.random_range(0..4) {
            0 => {
                f.slots.insert(slot, SlotValue::Text(random_text(rng)));
            }
            1 if rng.random_bool(0.3) => {
                f.slots.insert(slot, SlotValue::Memory { memory: MemoryId(rng.random_range(0..500)) });
            }
            2 => {
                f.request_slots.insert(slot);
            }
            _ => {}
        }
    }
    for _ in 0..rng.random_range(0..4) {
        f.memory_refs.insert(MemoryId(rng.random_range(0..1000)));
    }
    f
}

fn codec() -> Result<String, String> {
    let mut rng = rng_from_seed(31337);
    for i in 0..CODEC_FRAMES {
        let f = random_frame(&mut rng);
        let api = rng.random_bool(0.5).then(|| ApiName::ALL[rng.random_range(0..ApiName::ALL.len())]);
        let flat = flatten_frame(&f, api);
        let (back, back_api) = parse_frame(&flat).map_err(|e| format!("frame {i} {flat:?}: {e}"))?;
        check(back == f && back_api == api, format!("frame {i} {flat:?} did not round-trip"))?;
    }
    let (f, api) = parse_frame("REQUEST:GET [location = Alki Beach] (time) <memory: 8>").map_err(|e| e.to_string())?;
    let expected = Frame::new(Intent::new(DialogAct::Request, IntentActivity::Get))
        .with_slot(SlotName::Location, SlotValue::text("Alki Beach"))
        .with_request(SlotName::Time)
        .with_ref(MemoryId(8));
    check(f == expected && api.is_none(), format!("example parsed to {f:?}"))?;
    Ok(format!("{CODEC_FRAMES} random frames round-trip, worked example parses"))
}

fn gold_turn(i: usize, frame: Frame, response: &str) -> GoldTurn {
    GoldTurn {
        dialog_id: format!("d{i}"),
        turn_index: 0,
        api: Some(ApiName::ALL[i % ApiName::ALL.len()]),
        frame,
        response: response.to_string(),
        response_id: response_id(&format!("d{i}"), 1),
    }
}

fn metrics_oracle() -> Result<String, String> {
    let ids = |xs: &[u32]| -> BTreeSet<MemoryId> { xs.iter().map(|x| MemoryId(*x)).collect() };
    let c = micro_prf([(&ids(&[8, 12]), &ids(&[8, 9]))]);
    check((c.precision, c.recall, c.f1) == (0.5, 0.5, 0.5), format!("coref {c:?}"))?;

    let base = Frame::new(Intent::new(DialogAct::Request, IntentActivity::Get));
    let gold_frame = base
        .clone()
        .with_slot(SlotName::Location, SlotValue::text("Seattle"))
        .with_slot(SlotName::Time, SlotValue::text("2020"));
    let pred_frame = base.clone().with_slot(SlotName::Location, SlotValue::text("Seattle"));
    let gold = vec![gold_turn(0, gold_frame.clone(), "")];
    let pred = vec![Prediction { frame: Some(pred_frame), ..Prediction::empty("d0", 0) }];
    let d = score_dst(&gold, &pred).map_err(|e| e.to_string())?;
    check(
        d.slot_precision == 1.0 && d.slot_recall == 0.5 && (d.slot_f1 - 2.0 / 3.0).abs() < EXACT,
        format!("slot {d:?}"),
    )?;

    let refs = ["here is the photo from the beach", "Jane was there."];
    let bleu = score_bleu4(&refs, &refs).map_err(|e| e.to_string())?;
    check((bleu - 1.0).abs() < EXACT, format!("bleu identity {bleu}"))?;

    let r = retrieval_scores(&[7]).ok_or("no ranks")?;
    check(
        (r.recall_at_1, r.recall_at_5, r.recall_at_10) == (0.0, 0.0, 1.0)
            && (r.mrr - 1.0 / 7.0).abs() < EXACT
            && r.mean_rank == 7.0,
        format!("rank 7 {r:?}"),
    )?;

    let pool_gold: Vec<GoldTurn> = (0..RANDOM_RANK_TURNS).map(|i| gold_turn(i, base.clone(), "")).collect();
    let pools = memdialog_core::metrics::build_pools(&pool_gold, memdialog_core::metrics::BaselineConfig { pool_size: 100, seed: 8 });
    let ranks: Vec<usize> = pool_gold
        .iter()
        .zip(&pools)
        .map(|(g, p)| p.iter().position(|c| *c == g.response_id).unwrap() + 1)
        .collect();
    let mean_rank = ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
    check((mean_rank - RANDOM_RANK.0).abs() <= RANDOM_RANK.1, format!("random mean rank {mean_rank}"))?;

    let gold: Vec<GoldTurn> = (0..50)
        .map(|i| {
            let f = base.clone().with_slot(SlotName::Activity, SlotValue::text(format!("a{}", i % 7))).with_ref(MemoryId(i as u32 % 11));
            gold_turn(i, f, &format!("reply {i} with the photo"))
        })
        .collect();
    let echo: Vec<Prediction> = gold
        .iter()
        .map(|g| Prediction {
            api: g.api,
            frame: Some(g.frame.clone()),
            coref_refs: Some(g.frame.memory_refs.clone()),
            response: Some(g.response.clone()),
            ranked_candidates: Some(vec![g.response_id.clone(), "other#1".into()]),
            ..Prediction::empty(g.dialog_id.clone(), g.turn_index)
        })
        .collect();
    let rep = memdialog_core::metrics::evaluate(&gold, &echo).map_err(|e| e.to_string())?;
    let all = [
        rep.api.map(|a| a.accuracy),
        rep.coref.map(|c| c.f1),
        rep.dst.map(|d| d.slot_f1),
        rep.dst.map(|d| d.joint_accuracy),
        rep.response.map(|r| r.bleu4),
        rep.retrieval.as_ref().map(|r| r.scores.recall_at_1),
        rep.retrieval.as_ref().map(|r| r.scores.mrr),
    ];
    check(all.iter().all(|v| *v == Some(1.0)), format!("gold-vs-gold {all:?}"))?;
    Ok(format!("worked examples exact, random mean rank {mean_rank:.2}, gold-vs-gold 1.0"))
}

fn baselines(corpus_dir: &Path, work: &Path, corpus: &Corpus) -> Result<String, String> {
    let preds = work.join("baseline.jsonl");
    let report_path = work.join("report.json");
    memdialog(&["baseline", "--corpus", &corpus_dir.to_string_lossy(), "--seed", "3", "--out", &preds.to_string_lossy()])?;
    memdialog(&[
        "eval",
        "--corpus",
        &corpus_dir.to_string_lossy(),
        "--predictions",
        &preds.to_string_lossy(),
        "--out",
        &report_path.to_string_lossy(),
    ])?;
    let report: EvalReport = serde_json::from_slice(&fs::read(&report_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let n_preds = read_predictions(std::io::BufReader::new(fs::File::open(&preds).unwrap())).map_err(|e| e.to_string())?.len();

    check(corpus.dialogs.iter().flat_map(|d| &d.turns).all(|t| t.paraphrase.is_none()), "corpus carries paraphrases")?;
    let mut counts: BTreeMap<ApiName, usize> = BTreeMap::new();
    for t in corpus.dialogs.iter().flat_map(|d| &d.turns).filter(|t| t.speaker == Speaker::User) {
        if let Some(api) = t.api {
            *counts.entry(api).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    let modal = *counts.values().max().unwrap() as f64 / total as f64;
    let acc = report.api.ok_or("no api score")?.accuracy;
    check((acc - modal).abs() <= MAJORITY_TOL, format!("majority accuracy {acc} vs modal frequency {modal}"))?;
    let bleu = report.response.ok_or("no response score")?.bleu4;
    check((bleu - 1.0).abs() <= EXACT, format!("template echo bleu {bleu}"))?;
    check(report.predictions == n_preds && report.gold_turns == n_preds, "prediction count")?;
    Ok(format!("{n_preds} predictions; majority acc {acc:.6} = modal {modal:.6}; echo BLEU-4 {bleu}"))
}

fn split_check(corpus: &Corpus) -> Result<String, String> {
    let ratios = SplitRatios::default();
    let a = split(corpus, ratios, SPLIT_SEED).map_err(|e| e.to_string())?;
    let b = split(corpus, ratios, SPLIT_SEED).map_err(|e| e.to_string())?;
    check(a == b, "same seed gave different splits")?;
    check(split(corpus, ratios, SPLIT_SEED + 1).map_err(|e| e.to_string())? != a, "seed has no effect")?;
    let all: BTreeSet<&str> = corpus.dialogs.iter().map(|d| d.dialog_id.as_str()).collect();
    let names = [SplitName::Train, SplitName::Val, SplitName::Test];
    let parts: Vec<BTreeSet<&str>> = names.iter().map(|n| a.dialogs_in(*n).collect()).collect();
    check(parts.iter().map(BTreeSet::len).sum::<usize>() == all.len(), "split sizes do not add up")?;
    check(parts.iter().flatten().copied().collect::<BTreeSet<_>>() == all, "split is not a cover")?;
    for d in &corpus.dialogs {
        check(a.dialogs[&d.dialog_id] == a.graphs[&d.graph_id], format!("{} split away from its graph", d.dialog_id))?;
    }
    let n = corpus.graphs.len() as f64;
    let mut realized = Vec::new();
    for (name, target) in names.iter().zip([ratios.train, ratios.val, ratios.test]) {
        let r = a.graph_count(*name) as f64 / n;
        check((r - target).abs() <= SPLIT_TOL, format!("{name:?} ratio {r}"))?;
        let rd = a.dialogs_in(*name).count() as f64 / all.len() as f64;
        check((rd - target).abs() <= SPLIT_TOL, format!("{name:?} dialog ratio {rd}"))?;
        realized.push(format!("{r:.2}"));
    }
    Ok(format!("partition, graph-grouped, deterministic, ratios {}", realized.join("/")))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn pipeline(root: &Path) -> Result<PathBuf, String> {
    let corpus = root.join("corpus");
    let s = |p: &Path| p.to_string_lossy().into_owned();
    memdialog(&[
        "dialogs",
        "--seed",
        &CORPUS_SEED.to_string(),
        "--graphs",
        &CORPUS_GRAPHS.to_string(),
        "--dialogs-per-graph",
        &CORPUS_DIALOGS_PER_GRAPH.to_string(),
        "--out",
        &s(&corpus),
    ])?;
    let stats_table = memdialog(&["stats", "--corpus", &s(&corpus), "--out", &s(&root.join("reports/stats.json"))])?;
    fs::write(root.join("reports/stats.txt"), stats_table).map_err(|e| e.to_string())?;
    memdialog(&["split", "--corpus", &s(&corpus), "--seed", &SPLIT_SEED.to_string(), "--out", &s(&root.join("reports/split.json"))])?;
    Ok(corpus)
}

fn determinism(first: &Path, second: &Path) -> Result<String, String> {
    pipeline(second)?;
    let a = tree(first);
    let b = tree(second);
    check(!a.is_empty(), "first run wrote nothing")?;
    let keys_a: BTreeSet<_> = a.keys().collect();
    let keys_b: BTreeSet<_> = b.keys().collect();
    check(keys_a == keys_b, "file sets differ")?;
    if let Some(p) = a.keys().find(|k| a[*k] != b[*k]) {
        return Err(format!("{} differs", p.display()));
    }
    check(a.contains_key(Path::new("reports/stats.json")), "stats report missing")?;
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical across runs", a.len()))
}

fn main() {
    let mut outcome = Outcome::default();
    let work = tempfile::tempdir().expect("temp dir");

    outcome.record("graph-invariants", graph_invariants());
    outcome.record("query-oracle", oracle_equivalence());

    let first = work.path().join("run1");
    let start = Instant::now();
    let corpus = pipeline(&first).and_then(|dir| read_corpus(&dir).map(|c| (dir, c)).map_err(|e| e.to_string()));
    let elapsed = start.elapsed();
    match &corpus {
        Ok((_, c)) => outcome.record("self-play", self_play(c, elapsed)),
        Err(e) => outcome.record("self-play", Err(e.clone())),
    }
    match &corpus {
        Ok((_, c)) => {
            let (ok, detail) = coref_report(c);
            outcome.warn("coref-distribution", ok, detail);
        }
        Err(e) => outcome.warn("coref-distribution", false, e.clone()),
    }
    outcome.record("annotation-codec", codec());
    outcome.record("metrics-oracle", metrics_oracle());
    match &corpus {
        Ok((dir, c)) => {
            outcome.record("baselines", baselines(dir, work.path(), c));
            outcome.record("split", split_check(c));
        }
        Err(e) => {
            outcome.record("baselines", Err(e.clone()));
            outcome.record("split", Err(e.clone()));
        }
    }
    outcome.record("determinism", determinism(&first, &work.path().join("run2")));

    if outcome.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", outcome.failed.len(), outcome.failed.join(", "));
        std::process::exit(1);
    }
}
