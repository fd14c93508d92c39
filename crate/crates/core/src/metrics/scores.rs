use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub const BLEU_EPSILON: f64 = 1e-9;
pub const BLEU_MAX_ORDER: usize = 4;

/// Pairwise summation; keeps float reductions stable and order-deterministic.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| pairwise_sum(xs) / xs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(hits: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |num: usize, den: usize, other: usize| match den {
            0 if other == 0 => 1.0,
            0 => 0.0,
            d => num as f64 / d as f64,
        };
        let precision = ratio(hits, predicted, gold);
        let recall = ratio(hits, gold, predicted);
        Self { precision, recall, f1: f1(precision, recall) }
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Micro-averaged precision/recall over (gold, predicted) set pairs.
pub fn micro_prf<'a, T: Ord + 'a>(pairs: impl IntoIterator<Item = (&'a BTreeSet<T>, &'a BTreeSet<T>)>) -> Prf {
    let (mut hits, mut predicted, mut gold) = (0, 0, 0);
    for (g, p) in pairs {
        hits += g.intersection(p).count();
        predicted += p.len();
        gold += g.len();
    }
    Prf::from_counts(hits, predicted, gold)
}

/// Lowercased whitespace tokens with ASCII punctuation removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut out = BTreeMap::new();
    for w in tokens.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

/// Sentence BLEU-4 with uniform weights. Zero-match orders use precision
/// `BLEU_EPSILON`; orders longer than the hypothesis are left out and the
/// remaining weights renormalized.
pub fn sentence_bleu(reference: &str, hypothesis: &str) -> f64 {
    let r = tokenize(reference);
    let h = tokenize(hypothesis);
    if h.is_empty() {
        return if r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=BLEU_MAX_ORDER.min(h.len()) {
        let hyp = ngram_counts(&h, n);
        let refc = ngram_counts(&r, n);
        let total: usize = hyp.values().sum();
        let matched: usize = hyp.iter().map(|(g, c)| (*c).min(refc.get(g).copied().unwrap_or(0))).sum();
        let p = if matched == 0 { BLEU_EPSILON } else { matched as f64 / total as f64 };
        log_sum += p.ln();
        orders += 1;
    }
    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c < rl { (1.0 - rl / c).exp() } else { 1.0 };
    bp * (log_sum / orders as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScores {
    pub recall_at_1: f64,
    pub recall_at_5: f64,
    pub recall_at_10: f64,
    pub mrr: f64,
    pub mean_rank: f64,
}

/// Scores from 1-based gold ranks.
pub fn retrieval_scores(ranks: &[usize]) -> Option<RetrievalScores> {
    if ranks.is_empty() {
        return None;
    }
    let at = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64;
    let rr: Vec<f64> = ranks.iter().map(|&r| 1.0 / r as f64).collect();
    let rk: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
    Some(RetrievalScores {
        recall_at_1: at(1),
        recall_at_5: at(5),
        recall_at_10: at(10),
        mrr: mean(&rr)?,
        mean_rank: mean(&rk)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[u32]) -> BTreeSet<u32> {
        xs.iter().copied().collect()
    }

    #[test]
    fn coref_examples() {
        let (g, p) = (set(&[8]), set(&[8]));
        assert_eq!(micro_prf([(&g, &p)]), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
        let (g, p) = (set(&[8, 12]), set(&[8, 9]));
        assert_eq!(micro_prf([(&g, &p)]), Prf { precision: 0.5, recall: 0.5, f1: 0.5 });
        let (g, p) = (set(&[8]), set(&[]));
        assert_eq!(micro_prf([(&g, &p)]), Prf { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    #[test]
    fn empty_pairs_are_perfect() {
        let e = set(&[]);
        assert_eq!(micro_prf([(&e, &e)]).f1, 1.0);
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize("Show me, Jane's  photos!"), vec!["show", "me", "janes", "photos"]);
    }

    #[test]
    fn bleu_identity_and_disjoint() {
        assert_eq!(sentence_bleu("Here is one photo.", "here is one photo"), 1.0);
        assert_eq!(sentence_bleu("hi there", "hi there"), 1.0);
        assert!(sentence_bleu("the cat sat", "a dog ran off") <= 1e-6);
    }

    #[test]
    fn brevity_penalty() {
        let b = sentence_bleu("a b c d e f", "a b c");
        // all three orders match exactly; BP = exp(1 - 6/3)
        assert!((b - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn retrieval_rank_seven() {
        let s = retrieval_scores(&[7]).unwrap();
        assert_eq!((s.recall_at_1, s.recall_at_5, s.recall_at_10), (0.0, 0.0, 1.0));
        assert!((s.mrr - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(s.mean_rank, 7.0);
        assert!(retrieval_scores(&[]).is_none());
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }
}
