use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::dialogsim::{Dialog, Speaker};
use crate::metrics::{mean, pairwise_sum};
use crate::ontology::ApiName;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Population standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        let Some(m) = mean(xs) else { return Self::default() };
        let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        Self { mean: m, sd: (pairwise_sum(&sq) / xs.len() as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub graphs: usize,
    pub dialogs: usize,
    pub utterances: usize,
    pub user_words: MeanSd,
    pub assistant_words: MeanSd,
    pub utterances_per_dialog: f64,
    pub memories_mentioned_per_dialog: f64,
    pub memories_per_graph: MeanSd,
    pub regenerations: u64,
    pub api_calls: BTreeMap<ApiName, usize>,
    /// `ACT:ACTIVITY` counts per speaker.
    pub user_intents: BTreeMap<String, usize>,
    pub assistant_intents: BTreeMap<String, usize>,
    /// Size of the result set a user reference was picked from.
    pub coref_candidates: BTreeMap<usize, usize>,
    /// Utterances between a user reference and the turn that showed the memory.
    pub coref_distance: BTreeMap<usize, usize>,
    pub mean_coref_candidates: Option<f64>,
    pub mean_coref_distance: Option<f64>,
    /// Intent flow between consecutive turns, labelled `ACT:ACTIVITY:U<round>` / `:A<round>`.
    pub transitions: Vec<Transition>,
}

fn words(text: &str) -> f64 {
    text.split_whitespace().count() as f64
}

fn turn_label(d: &Dialog, i: usize) -> String {
    let t = &d.turns[i];
    let side = if t.speaker == Speaker::User { 'U' } else { 'A' };
    format!("{}:{side}{}", t.frame.intent, i / 2 + 1)
}

fn hist_mean(h: &BTreeMap<usize, usize>) -> Option<f64> {
    let n: usize = h.values().sum();
    (n > 0).then(|| h.iter().map(|(k, c)| (k * c) as f64).sum::<f64>() / n as f64)
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let mut user_words = Vec::new();
    let mut assistant_words = Vec::new();
    let mut mentioned = Vec::new();
    let mut api_calls = BTreeMap::new();
    let mut user_intents = BTreeMap::new();
    let mut assistant_intents = BTreeMap::new();
    let mut coref_candidates = BTreeMap::new();
    let mut coref_distance = BTreeMap::new();
    let mut transitions: BTreeMap<(String, String), usize> = BTreeMap::new();
    for d in &corpus.dialogs {
        mentioned.push(d.memories_mentioned().len() as f64);
        for (i, t) in d.turns.iter().enumerate() {
            let intent = t.frame.intent.to_string();
            match t.speaker {
                Speaker::User => {
                    user_words.push(words(t.utterance()));
                    *user_intents.entry(intent).or_insert(0) += 1;
                    for r in &t.frame.memory_refs {
                        if let Some(src) = d.turns[..i].iter().rev().find(|a| a.shown_memory_ids.contains(r)) {
                            *coref_candidates.entry(src.shown_memory_ids.len()).or_insert(0) += 1;
                            *coref_distance.entry(i - src.index).or_insert(0) += 1;
                        }
                    }
                }
                Speaker::Assistant => {
                    assistant_words.push(words(t.utterance()));
                    *assistant_intents.entry(intent).or_insert(0) += 1;
                }
            }
            if let Some(call) = &t.api_call {
                *api_calls.entry(call.api).or_insert(0) += 1;
            }
            if i + 1 < d.turns.len() {
                *transitions.entry((turn_label(d, i), turn_label(d, i + 1))).or_insert(0) += 1;
            }
        }
    }
    let utterances = user_words.len() + assistant_words.len();
    let dialogs = corpus.dialogs.len();
    let per_graph: Vec<f64> = corpus.graphs.iter().map(|g| g.memories.len() as f64).collect();
    CorpusStats {
        graphs: corpus.graphs.len(),
        dialogs,
        utterances,
        user_words: MeanSd::of(&user_words),
        assistant_words: MeanSd::of(&assistant_words),
        utterances_per_dialog: if dialogs == 0 { 0.0 } else { utterances as f64 / dialogs as f64 },
        memories_mentioned_per_dialog: mean(&mentioned).unwrap_or(0.0),
        memories_per_graph: MeanSd::of(&per_graph),
        regenerations: corpus.dialogs.iter().map(|d| u64::from(d.regenerations)).sum(),
        api_calls,
        user_intents,
        assistant_intents,
        mean_coref_candidates: hist_mean(&coref_candidates),
        mean_coref_distance: hist_mean(&coref_distance),
        coref_candidates,
        coref_distance,
        transitions: transitions.into_iter().map(|((from, to), count)| Transition { from, to, count }).collect(),
    }
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
        let rows = [
            ("graphs", self.graphs.to_string()),
            ("dialogs", self.dialogs.to_string()),
            ("utterances", self.utterances.to_string()),
            ("utterances / dialog", format!("{:.2}", self.utterances_per_dialog)),
            ("memories mentioned / dialog", format!("{:.2}", self.memories_mentioned_per_dialog)),
            ("memories / graph", format!("{:.2}", self.memories_per_graph.mean)),
            ("words / user turn", format!("{:.2} ± {:.2}", self.user_words.mean, self.user_words.sd)),
            (
                "words / assistant turn",
                format!("{:.2} ± {:.2}", self.assistant_words.mean, self.assistant_words.sd),
            ),
            ("coref candidates (mean)", opt(self.mean_coref_candidates)),
            ("coref distance (mean)", opt(self.mean_coref_distance)),
            ("regenerations", self.regenerations.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<28}  {v}");
        }
        let total: usize = self.api_calls.values().sum();
        for (api, n) in &self.api_calls {
            let _ = writeln!(out, "{:<28}  {n} ({:.1}%)", format!("api {api}"), 100.0 * *n as f64 / total.max(1) as f64);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusConfig};
    use crate::dialogsim::TemplateLibrary;
    use crate::memgraph::Catalog;

    #[test]
    fn mean_sd() {
        let m = MeanSd::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!((m.mean, m.sd), (5.0, 2.0));
    }

    #[test]
    fn histogram_mass() {
        let cfg = CorpusConfig { n_graphs: 2, dialogs_per_graph: 5, seed: 3, ..Default::default() };
        let c = generate_corpus(&Catalog::sample(), &TemplateLibrary::default(), &cfg).unwrap();
        let s = stats(&c);
        let turns: usize = c.dialogs.iter().map(|d| d.turns.len()).sum();
        assert_eq!(s.utterances, turns);
        assert_eq!(s.user_intents.values().sum::<usize>() + s.assistant_intents.values().sum::<usize>(), turns);
        assert_eq!(s.transitions.iter().map(|t| t.count).sum::<usize>(), turns - c.dialogs.len());
        let calls = c.dialogs.iter().flat_map(|d| &d.turns).filter(|t| t.api_call.is_some()).count();
        assert_eq!(s.api_calls.values().sum::<usize>(), calls);
        assert_eq!(s.coref_candidates.values().sum::<usize>(), s.coref_distance.values().sum::<usize>());
        assert_eq!(s.memories_per_graph.mean, 100.0);
    }
}
