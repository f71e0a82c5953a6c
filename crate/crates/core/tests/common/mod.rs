#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweetlens::normalize::TokenizedDoc;

pub fn tdoc(id: impl Into<String>, tokens: &str) -> TokenizedDoc {
    TokenizedDoc {
        doc_id: id.into(),
        tokens: tokens.split_whitespace().map(String::from).collect(),
        emptied: false,
    }
}

pub fn docs_from(tokens: Vec<Vec<String>>) -> Vec<TokenizedDoc> {
    tokens
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenizedDoc {
            doc_id: format!("d{i:05}"),
            tokens,
            emptied: false,
        })
        .collect()
}

pub fn vocab(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

/// Documents each drawn from one of `topics`, with `noise` probability of a
/// background word per token.
pub fn planted_corpus(
    topics: &[Vec<String>],
    background: &[String],
    docs: usize,
    len: usize,
    noise: f64,
    seed: u64,
) -> (Vec<TokenizedDoc>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(docs);
    let tokens = (0..docs)
        .map(|d| {
            let t = d % topics.len();
            labels.push(t);
            (0..len)
                .map(|_| {
                    let pool = if !background.is_empty() && rng.random_bool(noise) { background } else { &topics[t] };
                    pool.choose(&mut rng).unwrap().clone()
                })
                .collect()
        })
        .collect();
    (docs_from(tokens), labels)
}

/// Explicit shingle sets, built without the library.
pub fn shingle_set(tokens: &[String], k: usize) -> HashSet<Vec<String>> {
    if tokens.len() < k {
        return std::iter::once(tokens.to_vec()).collect();
    }
    tokens.windows(k).map(|w| w.to_vec()).collect()
}

pub fn jaccard_oracle(a: &HashSet<Vec<String>>, b: &HashSet<Vec<String>>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// c_v by materializing every window as an explicit set.
pub fn cv_oracle(topics: &[Vec<String>], docs: &[TokenizedDoc], window: usize) -> Vec<f64> {
    let mut windows: Vec<HashSet<&str>> = Vec::new();
    for doc in docs {
        if doc.tokens.is_empty() {
            continue;
        }
        if doc.tokens.len() <= window {
            windows.push(doc.tokens.iter().map(String::as_str).collect());
        } else {
            for start in 0..=doc.tokens.len() - window {
                windows.push(doc.tokens[start..start + window].iter().map(String::as_str).collect());
            }
        }
    }
    let n = windows.len() as f64;
    let occurs = |w: &str| windows.iter().filter(|s| s.contains(w)).count() as f64;
    let both = |a: &str, b: &str| windows.iter().filter(|s| s.contains(a) && s.contains(b)).count() as f64;
    let npmi = |a: &str, b: &str| -> f64 {
        if a == b {
            return 1.0;
        }
        let j = both(a, b);
        if j == 0.0 {
            return -1.0;
        }
        if j == n {
            return 1.0;
        }
        let p12 = (j / n).max(1e-12);
        let pmi = (p12 / ((occurs(a) / n) * (occurs(b) / n))).ln();
        (pmi / -p12.ln()).clamp(-1.0, 1.0)
    };
    topics
        .iter()
        .map(|words| {
            let vectors: Vec<Vec<f64>> = words
                .iter()
                .map(|a| words.iter().map(|b| npmi(a, b)).collect())
                .collect();
            let total: Vec<f64> = (0..words.len()).map(|j| vectors.iter().map(|v| v[j]).sum()).collect();
            let cos = |u: &[f64], v: &[f64]| {
                let d: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nu == 0.0 || nv == 0.0 {
                    0.0
                } else {
                    d / (nu * nv)
                }
            };
            vectors.iter().map(|v| cos(v, &total)).sum::<f64>() / vectors.len() as f64
        })
        .collect()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixture")
}

pub fn fixture_config() -> PathBuf {
    fixture_dir().join("pipeline.toml")
}
