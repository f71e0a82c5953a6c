//! c_v topic coherence.
//!
//! Windows of `window_size` tokens slide over each document with stride one
//! (a document shorter than the window is a single window; windows never
//! cross documents). A term occurs in a window or not, so counts are numbers
//! of windows. For each topic's top words `W`, every word gets a context
//! vector of NPMI values against all of `W`; the topic score is the mean
//! cosine between each word's vector and the sum of all vectors. The model
//! score is the mean over topics.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::{build_vocab, train_lda, LdaParams, TopicModel};
use crate::normalize::TokenizedDoc;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub window_size: usize,
    pub total_windows: u64,
    /// Sorted, deduplicated term set the counts were built for.
    pub terms: Vec<String>,
    pub count: Vec<u64>,
    /// Joint counts keyed by `(i, j)` term indices with `i < j`; absent pairs are zero.
    pub joint: BTreeMap<(u32, u32), u64>,
}

impl WindowCounts {
    pub fn index(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn count_of(&self, term: &str) -> u64 {
        self.index(term).map_or(0, |i| self.count[i])
    }

    pub fn joint_count(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return self.count[i];
        }
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.joint.get(&key).copied().unwrap_or(0)
    }

    /// NPMI between term indices; see [`npmi`].
    pub fn npmi_at(&self, i: usize, j: usize, epsilon: f64) -> Result<f64> {
        if self.total_windows == 0 {
            return Err(Error::invalid("NPMI needs at least one window"));
        }
        if i == j {
            return Ok(1.0);
        }
        let joint = self.joint_count(i, j);
        if joint == 0 {
            return Ok(-1.0);
        }
        if joint == self.total_windows {
            // Both terms are in every window.
            return Ok(1.0);
        }
        let total = self.total_windows as f64;
        let p1 = self.count[i] as f64 / total;
        let p2 = self.count[j] as f64 / total;
        let p12 = (joint as f64 / total).max(epsilon);
        let value = (p12 / (p1 * p2)).ln() / -p12.ln();
        Ok(value.clamp(-1.0, 1.0))
    }

    fn merge(mut self, other: WindowCounts) -> WindowCounts {
        self.total_windows += other.total_windows;
        for (a, b) in self.count.iter_mut().zip(other.count) {
            *a += b;
        }
        for (key, n) in other.joint {
            *self.joint.entry(key).or_insert(0) += n;
        }
        self
    }
}

fn count_document(
    tokens: &[String],
    lookup: &HashMap<&str, usize>,
    n_terms: usize,
    window_size: usize,
) -> WindowCounts {
    let mut out = WindowCounts {
        window_size,
        total_windows: 0,
        terms: Vec::new(),
        count: vec![0; n_terms],
        joint: BTreeMap::new(),
    };
    if tokens.is_empty() {
        return out;
    }
    let ids: Vec<Option<usize>> = tokens.iter().map(|t| lookup.get(t.as_str()).copied()).collect();
    let width = window_size.min(ids.len());
    let n_windows = ids.len() - width + 1;
    let mut in_window = vec![0u32; n_terms];
    for id in ids[..width].iter().flatten() {
        in_window[*id] += 1;
    }
    let mut present = Vec::with_capacity(n_terms);
    for start in 0..n_windows {
        if start > 0 {
            if let Some(id) = ids[start - 1] {
                in_window[id] -= 1;
            }
            if let Some(id) = ids[start + width - 1] {
                in_window[id] += 1;
            }
        }
        present.clear();
        present.extend((0..n_terms).filter(|&t| in_window[t] > 0));
        for (a, &i) in present.iter().enumerate() {
            out.count[i] += 1;
            for &j in &present[a + 1..] {
                *out.joint.entry((i as u32, j as u32)).or_insert(0) += 1;
            }
        }
        out.total_windows += 1;
    }
    out
}

/// Boolean sliding-window occurrence counts for `terms` over `docs`.
pub fn window_counts<S: AsRef<str>>(
    docs: &[TokenizedDoc],
    terms: &[S],
    window_size: usize,
) -> Result<WindowCounts> {
    if window_size == 0 {
        return Err(Error::config("coherence.window_size", "must be at least 1"));
    }
    let mut sorted: Vec<String> = terms.iter().map(|t| t.as_ref().to_string()).collect();
    sorted.sort();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::invalid("window counts need a non-empty term set"));
    }
    let lookup: HashMap<&str, usize> = sorted.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let n_terms = sorted.len();
    let empty = || WindowCounts {
        window_size,
        total_windows: 0,
        terms: Vec::new(),
        count: vec![0; n_terms],
        joint: BTreeMap::new(),
    };
    let mut counts = docs
        .par_iter()
        .map(|d| count_document(&d.tokens, &lookup, n_terms, window_size))
        .reduce(empty, WindowCounts::merge);
    counts.terms = sorted;
    Ok(counts)
}

/// Normalized pointwise mutual information over window probabilities.
///
/// `log(p12 / (p1 p2)) / -log(p12)`, with three fixed points: identical terms
/// give 1, a zero joint count gives -1, and terms present in every window
/// give 1. `epsilon` floors the joint probability.
pub fn npmi(counts: &WindowCounts, w1: &str, w2: &str, epsilon: f64) -> Result<f64> {
    let i = counts
        .index(w1)
        .ok_or_else(|| Error::NotFound(w1.to_string()))?;
    let j = counts
        .index(w2)
        .ok_or_else(|| Error::NotFound(w2.to_string()))?;
    counts.npmi_at(i, j, epsilon)
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScores {
    pub window_size: usize,
    pub top_n: usize,
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

fn topic_score(counts: &WindowCounts, words: &[String]) -> Result<f64> {
    let idx: Vec<usize> = words
        .iter()
        .map(|w| counts.index(w).expect("window counts cover every top word"))
        .collect();
    let vectors: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| counts.npmi_at(i, j, DEFAULT_EPSILON))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; idx.len()];
    for v in &vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    Ok(vectors.iter().map(|v| cosine_or_zero(v, &sum)).sum::<f64>() / vectors.len() as f64)
}

/// c_v over explicit top-word lists, one list per topic.
pub fn cv_for_topics(
    topics: &[Vec<String>],
    docs: &[TokenizedDoc],
    window_size: usize,
) -> Result<CoherenceScores> {
    if topics.is_empty() {
        return Err(Error::invalid("no topics to score"));
    }
    let top_n = topics[0].len();
    if topics.iter().any(|t| t.len() < 2) {
        return Err(Error::config("coherence.top_n", "must be at least 2"));
    }
    let all: Vec<&String> = topics.iter().flatten().collect();
    let counts = window_counts(docs, &all, window_size)?;
    if counts.total_windows == 0 {
        return Err(Error::invalid("corpus has no windows to score"));
    }
    let per_topic = topics
        .par_iter()
        .map(|words| topic_score(&counts, words))
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceScores {
        window_size,
        top_n,
        per_topic,
        mean,
    })
}

/// c_v of a trained model using each topic's `top_n` words.
pub fn cv_coherence(
    model: &TopicModel,
    docs: &[TokenizedDoc],
    top_n: usize,
    window_size: usize,
) -> Result<CoherenceScores> {
    if top_n < 2 {
        return Err(Error::config("coherence.top_n", "must be at least 2"));
    }
    if top_n > model.vocab_size() {
        return Err(Error::config(
            "coherence.top_n",
            format!("{top_n} exceeds the vocabulary size {}", model.vocab_size()),
        ));
    }
    let topics = (0..model.k)
        .map(|k| {
            Ok(model
                .top_words(k, top_n)?
                .into_iter()
                .map(|t| t.term)
                .collect())
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    cv_for_topics(&topics, docs, window_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub cv: f64,
}

/// Trains one model per `K` in `ks` and scores each, for choosing the topic count.
pub fn coherence_sweep(
    docs: &[TokenizedDoc],
    min_df: usize,
    max_df_ratio: f64,
    ks: &[usize],
    base: &LdaParams,
    top_n: usize,
    window_size: usize,
) -> Result<Vec<SweepPoint>> {
    let vocab = build_vocab(docs, min_df, max_df_ratio)?;
    ks.iter()
        .map(|&k| {
            let params = LdaParams { k, ..base.clone() };
            let model = train_lda(docs, &vocab, &params)?;
            let cv = cv_coherence(&model, docs, top_n, window_size)?.mean;
            Ok(SweepPoint { k, cv })
        })
        .collect()
}
