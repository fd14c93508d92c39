//! Scoring for the four dialog tasks and simple baselines that exercise them.

mod baselines;
mod scores;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogsim::{Dialog, Speaker};
use crate::memgraph::MemoryId;
use crate::ontology::{ApiName, Frame, SlotName, SlotValue};

pub use baselines::{build_pools, majority_api, run_baselines, BaselineConfig, DEFAULT_POOL_SIZE};
pub use scores::{
    f1, mean, micro_prf, pairwise_sum, retrieval_scores, sentence_bleu, tokenize, Prf, RetrievalScores,
    BLEU_EPSILON, BLEU_MAX_ORDER,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction for unknown turn {dialog_id}#{turn_index}")]
    UnknownTurn { dialog_id: String, turn_index: usize },
    #[error("duplicate prediction for {dialog_id}#{turn_index}")]
    DuplicatePrediction { dialog_id: String, turn_index: usize },
    #[error("gold response {gold} appears {count} times in the ranking for {dialog_id}#{turn_index}")]
    GoldNotInPool { dialog_id: String, turn_index: usize, gold: String, count: usize },
    #[error("{gold} references but {predicted} predictions")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("predictions line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

mod flat_frame {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::ontology::{flatten_frame, parse_frame, Frame};

    pub fn serialize<S: Serializer>(frame: &Option<Frame>, s: S) -> Result<S::Ok, S::Error> {
        match frame {
            Some(f) => s.serialize_str(&flatten_frame(f, None)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Frame>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|text| parse_frame(&text).map(|(f, _)| f).map_err(D::Error::custom))
            .transpose()
    }
}

/// One system output for a user turn. Each field feeds one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub dialog_id: String,
    pub turn_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<ApiName>,
    /// Flat annotation string on disk.
    #[serde(default, with = "flat_frame", skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coref_refs: Option<BTreeSet<MemoryId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranked_candidates: Option<Vec<String>>,
}

impl Prediction {
    pub fn empty(dialog_id: impl Into<String>, turn_index: usize) -> Self {
        Self {
            dialog_id: dialog_id.into(),
            turn_index,
            api: None,
            frame: None,
            coref_refs: None,
            response: None,
            ranked_candidates: None,
        }
    }
}

/// Gold targets of one user turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldTurn {
    pub dialog_id: String,
    pub turn_index: usize,
    pub api: Option<ApiName>,
    pub frame: Frame,
    /// The assistant reply, paraphrased when available.
    pub response: String,
    /// Candidate id of the reply, `dialog_id#turn_index`.
    pub response_id: String,
}

pub fn response_id(dialog_id: &str, turn_index: usize) -> String {
    format!("{dialog_id}#{turn_index}")
}

pub fn gold_turns(dialogs: &[Dialog]) -> Vec<GoldTurn> {
    let mut out = Vec::new();
    for d in dialogs {
        for pair in d.turns.windows(2) {
            let (u, a) = (&pair[0], &pair[1]);
            if u.speaker != Speaker::User {
                continue;
            }
            out.push(GoldTurn {
                dialog_id: d.dialog_id.clone(),
                turn_index: u.index,
                api: u.api,
                frame: u.frame.clone(),
                response: a.utterance().to_string(),
                response_id: response_id(&d.dialog_id, a.index),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApiReport {
    pub accuracy: f64,
    pub correct: usize,
    pub turns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorefReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub turns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DstReport {
    pub slot_precision: f64,
    pub slot_recall: f64,
    pub slot_f1: f64,
    /// Slots, request slots and references all exact; the intent is not compared.
    pub joint_accuracy: f64,
    pub turns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseReport {
    pub bleu4: f64,
    pub turns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    #[serde(flatten)]
    pub scores: RetrievalScores,
    pub turns: usize,
}

/// Task scores; a task is absent when no prediction carries its field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub gold_turns: usize,
    pub predictions: usize,
    pub api: Option<ApiReport>,
    pub coref: Option<CorefReport>,
    pub dst: Option<DstReport>,
    pub response: Option<ResponseReport>,
    pub retrieval: Option<RetrievalReport>,
}

type Key<'a> = (&'a str, usize);

fn index_predictions<'p>(
    gold: &[GoldTurn],
    preds: &'p [Prediction],
) -> Result<BTreeMap<Key<'p>, &'p Prediction>, MetricsError> {
    let known: BTreeSet<Key<'_>> = gold.iter().map(|g| (g.dialog_id.as_str(), g.turn_index)).collect();
    let mut out = BTreeMap::new();
    for p in preds {
        let key = (p.dialog_id.as_str(), p.turn_index);
        if !known.contains(&key) {
            return Err(MetricsError::UnknownTurn { dialog_id: p.dialog_id.clone(), turn_index: p.turn_index });
        }
        if out.insert(key, p).is_some() {
            return Err(MetricsError::DuplicatePrediction {
                dialog_id: p.dialog_id.clone(),
                turn_index: p.turn_index,
            });
        }
    }
    Ok(out)
}

fn lookup<'p>(index: &BTreeMap<Key<'_>, &'p Prediction>, g: &GoldTurn) -> Option<&'p Prediction> {
    index.get(&(g.dialog_id.as_str(), g.turn_index)).copied()
}

/// Accuracy over gold turns that trigger an API; a missing prediction is wrong.
pub fn score_api(gold: &[GoldTurn], preds: &[Prediction]) -> Result<ApiReport, MetricsError> {
    let index = index_predictions(gold, preds)?;
    let scored: Vec<&GoldTurn> = gold.iter().filter(|g| g.api.is_some()).collect();
    let correct = scored
        .iter()
        .filter(|g| lookup(&index, g).and_then(|p| p.api) == g.api)
        .count();
    let accuracy = if scored.is_empty() { 1.0 } else { correct as f64 / scored.len() as f64 };
    Ok(ApiReport { accuracy, correct, turns: scored.len() })
}

pub fn score_coref(gold: &[GoldTurn], preds: &[Prediction]) -> Result<CorefReport, MetricsError> {
    let index = index_predictions(gold, preds)?;
    let empty = BTreeSet::new();
    let prf = micro_prf(gold.iter().map(|g| {
        let pred = lookup(&index, g).and_then(|p| p.coref_refs.as_ref()).unwrap_or(&empty);
        (&g.frame.memory_refs, pred)
    }));
    Ok(CorefReport { precision: prf.precision, recall: prf.recall, f1: prf.f1, turns: gold.len() })
}

fn slot_pairs(frame: &Frame) -> BTreeSet<(SlotName, SlotValue)> {
    frame.slots.iter().map(|(k, v)| (*k, v.clone())).collect()
}

pub fn score_dst(gold: &[GoldTurn], preds: &[Prediction]) -> Result<DstReport, MetricsError> {
    let index = index_predictions(gold, preds)?;
    let mut pairs = Vec::with_capacity(gold.len());
    let mut joint = 0;
    for g in gold {
        let pred = lookup(&index, g).and_then(|p| p.frame.as_ref());
        let (gs, ps) = (slot_pairs(&g.frame), pred.map(slot_pairs).unwrap_or_default());
        let exact = pred.is_some_and(|p| {
            p.slots == g.frame.slots && p.request_slots == g.frame.request_slots && p.memory_refs == g.frame.memory_refs
        });
        let empty_gold = g.frame.slots.is_empty() && g.frame.request_slots.is_empty() && g.frame.memory_refs.is_empty();
        if exact || (pred.is_none() && empty_gold) {
            joint += 1;
        }
        pairs.push((gs, ps));
    }
    let prf = micro_prf(pairs.iter().map(|(g, p)| (g, p)));
    let joint_accuracy = if gold.is_empty() { 1.0 } else { joint as f64 / gold.len() as f64 };
    Ok(DstReport {
        slot_precision: prf.precision,
        slot_recall: prf.recall,
        slot_f1: prf.f1,
        joint_accuracy,
        turns: gold.len(),
    })
}

/// Mean sentence BLEU-4 of paired responses.
pub fn score_bleu4<R: AsRef<str>, H: AsRef<str>>(references: &[R], hypotheses: &[H]) -> Result<f64, MetricsError> {
    if references.len() != hypotheses.len() {
        return Err(MetricsError::LengthMismatch { gold: references.len(), predicted: hypotheses.len() });
    }
    let scores: Vec<f64> = references
        .iter()
        .zip(hypotheses)
        .map(|(r, h)| sentence_bleu(r.as_ref(), h.as_ref()))
        .collect();
    Ok(mean(&scores).unwrap_or(1.0))
}

fn gold_rank(g: &GoldTurn, ranked: &[String]) -> Result<usize, MetricsError> {
    let positions: Vec<usize> = ranked.iter().enumerate().filter(|(_, c)| **c == g.response_id).map(|(i, _)| i).collect();
    match positions.as_slice() {
        [one] => Ok(one + 1),
        other => Err(MetricsError::GoldNotInPool {
            dialog_id: g.dialog_id.clone(),
            turn_index: g.turn_index,
            gold: g.response_id.clone(),
            count: other.len(),
        }),
    }
}

/// Retrieval scores over turns with a ranked candidate list.
pub fn score_retrieval(gold: &[GoldTurn], preds: &[Prediction]) -> Result<Option<RetrievalReport>, MetricsError> {
    let index = index_predictions(gold, preds)?;
    let mut ranks = Vec::new();
    for g in gold {
        if let Some(ranked) = lookup(&index, g).and_then(|p| p.ranked_candidates.as_ref()) {
            ranks.push(gold_rank(g, ranked)?);
        }
    }
    Ok(retrieval_scores(&ranks).map(|scores| RetrievalReport { scores, turns: ranks.len() }))
}

pub fn evaluate(gold: &[GoldTurn], preds: &[Prediction]) -> Result<EvalReport, MetricsError> {
    let index = index_predictions(gold, preds)?;
    let has = |f: fn(&Prediction) -> bool| preds.iter().any(f);
    let mut report = EvalReport { gold_turns: gold.len(), predictions: preds.len(), ..Default::default() };
    if has(|p| p.api.is_some()) {
        report.api = Some(score_api(gold, preds)?);
    }
    if has(|p| p.coref_refs.is_some()) {
        report.coref = Some(score_coref(gold, preds)?);
    }
    if has(|p| p.frame.is_some()) {
        report.dst = Some(score_dst(gold, preds)?);
    }
    if has(|p| p.response.is_some()) {
        let refs: Vec<&str> = gold.iter().map(|g| g.response.as_str()).collect();
        let hyps: Vec<&str> = gold
            .iter()
            .map(|g| lookup(&index, g).and_then(|p| p.response.as_deref()).unwrap_or(""))
            .collect();
        report.response = Some(ResponseReport { bleu4: score_bleu4(&refs, &hyps)?, turns: gold.len() });
    }
    report.retrieval = score_retrieval(gold, preds)?;
    Ok(report)
}

impl EvalReport {
    /// Two-column `metric value` table.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("gold_turns", self.gold_turns.to_string()),
            ("predictions", self.predictions.to_string()),
        ];
        let f = |x: f64| format!("{x:.4}");
        if let Some(a) = &self.api {
            rows.push(("api_accuracy", f(a.accuracy)));
        }
        if let Some(c) = &self.coref {
            rows.extend([("coref_precision", f(c.precision)), ("coref_recall", f(c.recall)), ("coref_f1", f(c.f1))]);
        }
        if let Some(d) = &self.dst {
            rows.extend([
                ("slot_precision", f(d.slot_precision)),
                ("slot_recall", f(d.slot_recall)),
                ("slot_f1", f(d.slot_f1)),
                ("joint_accuracy", f(d.joint_accuracy)),
            ]);
        }
        if let Some(r) = &self.response {
            rows.push(("bleu4", f(r.bleu4)));
        }
        if let Some(r) = &self.retrieval {
            rows.extend([
                ("recall_at_1", f(r.scores.recall_at_1)),
                ("recall_at_5", f(r.scores.recall_at_5)),
                ("recall_at_10", f(r.scores.recall_at_10)),
                ("mrr", f(r.scores.mrr)),
                ("mean_rank", format!("{:.2}", r.scores.mean_rank)),
            ]);
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

/// One JSON object per line.
pub fn write_predictions(mut w: impl Write, preds: &[Prediction]) -> Result<(), MetricsError> {
    for p in preds {
        serde_json::to_writer(&mut w, p).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions(r: impl BufRead) -> Result<Vec<Prediction>, MetricsError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| MetricsError::Parse { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{DialogAct, Intent, IntentActivity};

    fn gold(i: usize, api: ApiName, frame: Frame) -> GoldTurn {
        GoldTurn {
            dialog_id: "d".into(),
            turn_index: i,
            api: Some(api),
            frame,
            response: "ok".into(),
            response_id: response_id("d", i + 1),
        }
    }

    fn get() -> Frame {
        Frame::new(Intent::new(DialogAct::Request, IntentActivity::Get))
    }

    #[test]
    fn api_three_of_four() {
        let g: Vec<GoldTurn> = (0..4).map(|i| gold(i * 2, ApiName::Search, get())).collect();
        let mut preds: Vec<Prediction> = (0..4).map(|i| Prediction { api: Some(ApiName::Search), ..Prediction::empty("d", i * 2) }).collect();
        preds[3].api = Some(ApiName::Share);
        assert_eq!(score_api(&g, &preds).unwrap().accuracy, 0.75);
        preds.pop();
        preds[2].api = Some(ApiName::Search);
        assert_eq!(score_api(&g, &preds).unwrap().accuracy, 0.75);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let g = vec![gold(0, ApiName::Search, get())];
        assert!(matches!(score_api(&g, &[Prediction::empty("x", 0)]), Err(MetricsError::UnknownTurn { .. })));
        let dup = vec![Prediction::empty("d", 0), Prediction::empty("d", 0)];
        assert!(matches!(score_api(&g, &dup), Err(MetricsError::DuplicatePrediction { .. })));
    }

    #[test]
    fn dst_partial_slots() {
        let gframe = get()
            .with_slot(SlotName::Location, SlotValue::text("Seattle"))
            .with_slot(SlotName::Time, SlotValue::text("2020"));
        let g = vec![gold(0, ApiName::Search, gframe)];
        let p = vec![Prediction {
            frame: Some(get().with_slot(SlotName::Location, SlotValue::text("Seattle"))),
            ..Prediction::empty("d", 0)
        }];
        let r = score_dst(&g, &p).unwrap();
        assert_eq!((r.slot_precision, r.slot_recall), (1.0, 0.5));
        assert!((r.slot_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.joint_accuracy, 0.0);
    }

    #[test]
    fn dst_ignores_intent() {
        let g = vec![gold(0, ApiName::Search, get().with_ref(MemoryId(3)))];
        let other = Frame::new(Intent::new(DialogAct::Inform, IntentActivity::Share)).with_ref(MemoryId(3));
        let p = vec![Prediction { frame: Some(other), ..Prediction::empty("d", 0) }];
        assert_eq!(score_dst(&g, &p).unwrap().joint_accuracy, 1.0);
    }

    #[test]
    fn bleu_pairing_checked() {
        assert!(matches!(score_bleu4(&["a"], &["a", "b"]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn retrieval_requires_gold_once() {
        let g = vec![gold(0, ApiName::Search, get())];
        let p = vec![Prediction { ranked_candidates: Some(vec!["d#5".into()]), ..Prediction::empty("d", 0) }];
        assert!(matches!(score_retrieval(&g, &p), Err(MetricsError::GoldNotInPool { count: 0, .. })));
        let p = vec![Prediction {
            ranked_candidates: Some(vec!["d#5".into(), "d#1".into()]),
            ..Prediction::empty("d", 0)
        }];
        assert_eq!(score_retrieval(&g, &p).unwrap().unwrap().scores.mean_rank, 2.0);
    }

    #[test]
    fn predictions_round_trip() {
        let p = vec![Prediction {
            api: Some(ApiName::GetInfo),
            frame: Some(get().with_request(SlotName::Time).with_ref(MemoryId(8))),
            coref_refs: Some(BTreeSet::from([MemoryId(8)])),
            response: Some("It was in July.".into()),
            ranked_candidates: Some(vec!["d#1".into()]),
            ..Prediction::empty("d", 0)
        }];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(r#""frame":"REQUEST:GET (time) <memory: 8>""#), "{text}");
        assert_eq!(read_predictions(&buf[..]).unwrap(), p);
        let err = read_predictions(&b"\n{bad"[..]).unwrap_err();
        assert!(matches!(err, MetricsError::Parse { line: 2, .. }));
    }
}
