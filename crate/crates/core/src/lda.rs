//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! The sampler keeps the usual three count tables (topic-word, document-topic
//! and per-topic totals) plus one topic assignment per token. Each sweep
//! visits every token in document order and resamples its topic from
//!
//! ```text
//! p(z = k) ∝ (n_dk[d][k] + α) · (n_kw[k][w] + β) / (n_k[k] + V·β)
//! ```
//!
//! with the token's own assignment removed from the counts. Randomness comes
//! from a single ChaCha8 stream seeded with [`LdaParams::seed`]: one draw per
//! token for initialization, then one draw per token per sweep, always in
//! token order. The same inputs therefore give bit-identical models on every
//! platform.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::normalize::TokenizedDoc;

pub const MODEL_FORMAT: &str = "tweetlens.lda/v1";

/// Dense term ids in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    id_to_term: Vec<String>,
    term_to_id: HashMap<String, u32>,
    doc_freq: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(repr: VocabularyRepr) -> Self {
        Vocabulary::from_parts(repr.terms, repr.doc_freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.id_to_term,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn from_parts(id_to_term: Vec<String>, doc_freq: Vec<u32>) -> Self {
        let term_to_id = id_to_term
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            id_to_term,
            term_to_id,
            doc_freq,
        }
    }

    /// Builds a vocabulary from explicit terms (sorted and deduplicated);
    /// document frequencies are zero.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        terms.sort();
        terms.dedup();
        let df = vec![0; terms.len()];
        Vocabulary::from_parts(terms, df)
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.id_to_term[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Admits terms whose document frequency lies in `[min_df, max_df_ratio · D]`.
pub fn build_vocab(docs: &[TokenizedDoc], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::config("lda.min_df", "must be at least 1"));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::config("lda.max_df_ratio", "must lie in (0, 1]"));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let mut admitted: Vec<(&str, u32)> = df
        .into_iter()
        .filter(|&(_, n)| n as usize >= min_df && n as f64 <= max_df)
        .collect();
    if admitted.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    admitted.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let (terms, freqs): (Vec<String>, Vec<u32>) =
        admitted.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
    Ok(Vocabulary::from_parts(terms, freqs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Record the collapsed log-likelihood after every sweep.
    pub track_likelihood: bool,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 5,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 17,
            track_likelihood: false,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("lda.k", "must be at least 1"));
        }
        if !(self.alpha() > 0.0 && self.alpha().is_finite()) {
            return Err(Error::config("lda.alpha", "must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("lda.beta", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::config("lda.iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub format: String,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations_run: usize,
    pub vocab: Vocabulary,
    pub doc_ids: Vec<String>,
    /// Token term ids per document (in-vocabulary tokens only).
    pub words: Vec<Vec<u32>>,
    /// Topic assignment per token, parallel to `words`.
    pub z: Vec<Vec<u32>>,
    /// K × V, row-major.
    pub n_kw: Vec<u32>,
    /// D × K, row-major.
    pub n_dk: Vec<u32>,
    pub n_k: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub likelihood_trace: Vec<f64>,
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_docs(&self) -> usize {
        self.words.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.words[d].len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.n_k.iter().sum()
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_kw[k * self.vocab_size() + w]
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.k + k]
    }

    /// Verifies the count-table identities exactly; returns the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let (k_count, v) = (self.k, self.vocab_size());
        if self.n_kw.len() != k_count * v
            || self.n_dk.len() != self.num_docs() * k_count
            || self.n_k.len() != k_count
        {
            return Err("count table shapes disagree with K, V, D".into());
        }
        for k in 0..k_count {
            let row: u64 = self.n_kw[k * v..(k + 1) * v].iter().map(|&c| c as u64).sum();
            if row != self.n_k[k] {
                return Err(format!("topic {k}: sum of n_kw is {row}, n_k is {}", self.n_k[k]));
            }
        }
        for d in 0..self.num_docs() {
            let row: u64 = self.n_dk[d * k_count..(d + 1) * k_count]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if row != self.doc_len(d) as u64 {
                return Err(format!("doc {d}: sum of n_dk is {row}, length {}", self.doc_len(d)));
            }
            if self.z[d].len() != self.words[d].len() {
                return Err(format!("doc {d}: assignment count differs from token count"));
            }
            if let Some(bad) = self.z[d].iter().find(|&&t| t as usize >= k_count) {
                return Err(format!("doc {d}: assignment {bad} out of range"));
            }
        }
        let total: u64 = self.words.iter().map(|w| w.len() as u64).sum();
        if self.total_tokens() != total {
            return Err(format!("sum of n_k is {}, corpus has {total} tokens", self.total_tokens()));
        }
        Ok(())
    }

    /// Topic-word distributions `(n_kw + β) / (n_k + V·β)`, one row per topic.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let v = self.vocab_size();
        let vbeta = v as f64 * self.beta;
        (0..self.k)
            .map(|k| {
                let denom = self.n_k[k] as f64 + vbeta;
                (0..v)
                    .map(|w| (self.topic_word_count(k, w) as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    /// Document-topic distributions `(n_dk + α) / (N_d + K·α)`.
    pub fn theta(&self) -> Vec<Vec<f64>> {
        let kalpha = self.k as f64 * self.alpha;
        (0..self.num_docs())
            .map(|d| {
                let denom = self.doc_len(d) as f64 + kalpha;
                (0..self.k)
                    .map(|k| (self.doc_topic_count(d, k) as f64 + self.alpha) / denom)
                    .collect()
            })
            .collect()
    }

    /// The `n` most probable terms of topic `k`, ties by ascending term id.
    /// Asking for more than `V` terms returns all of them.
    pub fn top_words(&self, k: usize, n: usize) -> Result<Vec<WeightedTerm>> {
        if k >= self.k {
            return Err(Error::invalid(format!("topic {k} out of range (K = {})", self.k)));
        }
        if n == 0 {
            return Err(Error::invalid("top_words needs n >= 1"));
        }
        let v = self.vocab_size();
        if n > v {
            log::warn!("requested {n} top words but the vocabulary has {v}");
        }
        let mut ids: Vec<usize> = (0..v).collect();
        // φ is monotone in the raw count within a topic, so sort on integers.
        ids.sort_by(|&a, &b| {
            self.topic_word_count(k, b)
                .cmp(&self.topic_word_count(k, a))
                .then(a.cmp(&b))
        });
        let denom = self.n_k[k] as f64 + v as f64 * self.beta;
        Ok(ids
            .into_iter()
            .take(n.min(v))
            .map(|w| WeightedTerm {
                term: self.vocab.term(w as u32).to_string(),
                weight: (self.topic_word_count(k, w) as f64 + self.beta) / denom,
            })
            .collect())
    }

    /// Token-mass share of each topic: `Σ_d N_d θ[d][k] / Σ_d N_d`.
    pub fn topic_prevalence(&self) -> Vec<f64> {
        let theta = self.theta();
        let total: f64 = (0..self.num_docs()).map(|d| self.doc_len(d) as f64).sum();
        if total == 0.0 {
            return vec![1.0 / self.k as f64; self.k];
        }
        (0..self.k)
            .map(|k| {
                theta
                    .iter()
                    .enumerate()
                    .map(|(d, row)| self.doc_len(d) as f64 * row[k])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// Collapsed joint log-likelihood `log p(w | z) + log p(z)`.
    pub fn log_likelihood(&self) -> f64 {
        let (k_count, v) = (self.k, self.vocab_size());
        let (alpha, beta) = (self.alpha, self.beta);
        let mut ll = 0.0;
        let word_norm = ln_gamma(v as f64 * beta) - v as f64 * ln_gamma(beta);
        for k in 0..k_count {
            ll += word_norm;
            for w in 0..v {
                ll += ln_gamma(self.topic_word_count(k, w) as f64 + beta);
            }
            ll -= ln_gamma(self.n_k[k] as f64 + v as f64 * beta);
        }
        let doc_norm = ln_gamma(k_count as f64 * alpha) - k_count as f64 * ln_gamma(alpha);
        for d in 0..self.num_docs() {
            ll += doc_norm;
            for k in 0..k_count {
                ll += ln_gamma(self.doc_topic_count(d, k) as f64 + alpha);
            }
            ll -= ln_gamma(self.doc_len(d) as f64 + k_count as f64 * alpha);
        }
        ll
    }

    /// Relabels topics: old topic `k` becomes `perm[k]`.
    pub fn permute_topics(&self, perm: &[usize]) -> Result<TopicModel> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..self.k).collect::<Vec<_>>() {
            return Err(Error::invalid("not a permutation of the topic ids"));
        }
        let v = self.vocab_size();
        let mut out = self.clone();
        for k in 0..self.k {
            let dst = perm[k];
            out.n_kw[dst * v..(dst + 1) * v].copy_from_slice(&self.n_kw[k * v..(k + 1) * v]);
            out.n_k[dst] = self.n_k[k];
            for d in 0..self.num_docs() {
                out.n_dk[d * self.k + dst] = self.n_dk[d * self.k + k];
            }
        }
        for doc in &mut out.z {
            for t in doc.iter_mut() {
                *t = perm[*t as usize] as u32;
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self).expect("topic models always serialize");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TopicModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: TopicModel =
            serde_json::from_str(&text).map_err(|e| Error::format("topic model", e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(Error::format(
                "topic model",
                format!("unsupported format `{}`", model.format),
            ));
        }
        model
            .check_invariants()
            .map_err(|msg| Error::format("topic model", msg))?;
        Ok(model)
    }
}

/// Step-by-step collapsed Gibbs sampler; [`train_lda`] drives it to completion.
pub struct GibbsSampler {
    model: TopicModel,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    track_likelihood: bool,
}

impl GibbsSampler {
    pub fn new(docs: &[TokenizedDoc], vocab: &Vocabulary, params: &LdaParams) -> Result<Self> {
        params.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let words: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
        let total: usize = words.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(Error::invalid("every document is empty after vocabulary filtering"));
        }
        if params.k > total {
            return Err(Error::invalid(format!(
                "K = {} exceeds the corpus token count {total}",
                params.k
            )));
        }
        let (k_count, v) = (params.k, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut n_kw = vec![0u32; k_count * v];
        let mut n_dk = vec![0u32; docs.len() * k_count];
        let mut n_k = vec![0u64; k_count];
        let z: Vec<Vec<u32>> = words
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k_count);
                        n_kw[t * v + w as usize] += 1;
                        n_dk[d * k_count + t] += 1;
                        n_k[t] += 1;
                        t as u32
                    })
                    .collect()
            })
            .collect();
        let model = TopicModel {
            format: MODEL_FORMAT.into(),
            k: k_count,
            alpha: params.alpha(),
            beta: params.beta,
            seed: params.seed,
            iterations_run: 0,
            vocab: vocab.clone(),
            doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
            words,
            z,
            n_kw,
            n_dk,
            n_k,
            likelihood_trace: Vec::new(),
        };
        Ok(GibbsSampler {
            model,
            rng,
            weights: vec![0.0; k_count],
            track_likelihood: params.track_likelihood,
        })
    }

    pub fn model(&self) -> &TopicModel {
        &self.model
    }

    pub fn into_model(self) -> TopicModel {
        self.model
    }

    /// Resamples every token once.
    pub fn sweep(&mut self) {
        let m = &mut self.model;
        let (k_count, v) = (m.k, m.vocab.len());
        let (alpha, beta) = (m.alpha, m.beta);
        let vbeta = v as f64 * beta;
        for d in 0..m.words.len() {
            let dk = d * k_count;
            for i in 0..m.words[d].len() {
                let w = m.words[d][i] as usize;
                let old = m.z[d][i] as usize;
                m.n_kw[old * v + w] -= 1;
                m.n_dk[dk + old] -= 1;
                m.n_k[old] -= 1;

                let mut cumulative = 0.0;
                for k in 0..k_count {
                    cumulative += (m.n_dk[dk + k] as f64 + alpha)
                        * (m.n_kw[k * v + w] as f64 + beta)
                        / (m.n_k[k] as f64 + vbeta);
                    self.weights[k] = cumulative;
                }
                let u = self.rng.random::<f64>() * cumulative;
                let new = self
                    .weights
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(k_count - 1);

                m.z[d][i] = new as u32;
                m.n_kw[new * v + w] += 1;
                m.n_dk[dk + new] += 1;
                m.n_k[new] += 1;
            }
        }
        m.iterations_run += 1;
        if self.track_likelihood {
            let ll = m.log_likelihood();
            m.likelihood_trace.push(ll);
        }
        debug_assert_eq!(m.check_invariants(), Ok(()));
    }
}

pub fn train_lda(docs: &[TokenizedDoc], vocab: &Vocabulary, params: &LdaParams) -> Result<TopicModel> {
    let mut sampler = GibbsSampler::new(docs, vocab, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tdoc(id: &str, tokens: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            emptied: false,
        }
    }

    fn params(k: usize, iterations: usize) -> LdaParams {
        LdaParams {
            k,
            iterations,
            ..LdaParams::default()
        }
    }

    #[test]
    fn vocab_admits_shared_terms() {
        let docs = vec![tdoc("1", "voto b17"), tdoc("2", "voto elesim")];
        let v = build_vocab(&docs, 1, 1.0).unwrap();
        assert_eq!(v.terms(), ["b17", "elesim", "voto"]);
        assert_eq!(v.doc_freq(v.id("voto").unwrap()), 2);
    }

    #[test]
    fn vocab_max_df_excludes_ubiquitous_terms() {
        let docs = vec![tdoc("1", "voto a"), tdoc("2", "voto b"), tdoc("3", "voto a")];
        let v = build_vocab(&docs, 1, 0.5).unwrap();
        assert_eq!(v.id("voto"), None);
        // df(a) = 2 > 1.5, df(b) = 1.
        assert_eq!(v.terms(), ["b"]);
    }

    #[test]
    fn vocab_doc_freq_hand_tally() {
        let docs = vec![
            tdoc("1", "bolsonaro haddad bolsonaro"),
            tdoc("2", "haddad verdade"),
            tdoc("3", "bolsonaro verdade verdade"),
            tdoc("4", "brasil"),
        ];
        let v = build_vocab(&docs, 2, 1.0).unwrap();
        let tally: Vec<(&str, u32)> = v
            .terms()
            .iter()
            .map(|t| (t.as_str(), v.doc_freq(v.id(t).unwrap())))
            .collect();
        assert_eq!(tally, [("bolsonaro", 2), ("haddad", 2), ("verdade", 2)]);
    }

    #[test]
    fn vocab_errors() {
        let docs = vec![tdoc("1", "a")];
        assert!(matches!(build_vocab(&docs, 2, 1.0), Err(Error::EmptyVocabulary)));
        assert!(build_vocab(&docs, 0, 1.0).is_err());
        assert!(build_vocab(&docs, 1, 0.0).is_err());
    }

    #[test]
    fn single_topic_degenerates() {
        let docs = vec![tdoc("1", "a b c"), tdoc("2", "c c d")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let m = train_lda(&docs, &vocab, &params(1, 5)).unwrap();
        assert!(m.z.iter().flatten().all(|&t| t == 0));
        for row in m.theta() {
            assert_eq!(row, vec![1.0]);
        }
        assert_eq!(m.topic_prevalence(), vec![1.0]);
        // φ is the β-smoothed unigram distribution: counts a1 b1 c3 d1 of 6.
        let phi = &m.phi()[0];
        let denom = 6.0 + 4.0 * 0.01;
        for (p, c) in phi.iter().zip([1.0, 1.0, 3.0, 1.0]) {
            assert!((p - (c + 0.01) / denom).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let docs = vec![tdoc("1", "a b c a"), tdoc("2", "c d d"), tdoc("3", "")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let m = train_lda(&docs, &vocab, &params(3, 20)).unwrap();
        for row in m.phi().iter().chain(m.theta().iter()) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // Empty document: smoothing only.
        for p in &m.theta()[2] {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_theta_hand_fixture() {
        let docs = vec![tdoc("d", "x y x")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let mut m = GibbsSampler::new(&docs, &vocab, &LdaParams { k: 2, alpha: Some(0.5), beta: 0.1, ..LdaParams::default() })
            .unwrap()
            .into_model();
        // Force assignments x->0, y->1, x->0.
        m.z = vec![vec![0, 1, 0]];
        m.n_kw = vec![2, 0, 0, 1];
        m.n_dk = vec![2, 1];
        m.n_k = vec![2, 1];
        m.check_invariants().unwrap();
        let phi = m.phi();
        assert!((phi[0][0] - 2.1 / 2.2).abs() < 1e-15);
        assert!((phi[0][1] - 0.1 / 2.2).abs() < 1e-15);
        assert!((phi[1][1] - 1.1 / 1.2).abs() < 1e-15);
        let theta = m.theta();
        assert!((theta[0][0] - 2.5 / 4.0).abs() < 1e-15);
        assert!((theta[0][1] - 1.5 / 4.0).abs() < 1e-15);
        // Prevalence with one document equals its θ row.
        assert_eq!(m.topic_prevalence(), theta[0]);
    }

    #[test]
    fn prevalence_weighted_by_length() {
        let docs = vec![tdoc("1", "a a a"), tdoc("2", "b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let mut m = GibbsSampler::new(&docs, &vocab, &LdaParams { k: 2, alpha: Some(1.0), ..LdaParams::default() })
            .unwrap()
            .into_model();
        m.z = vec![vec![0, 0, 0], vec![1]];
        m.n_kw = vec![3, 0, 0, 1];
        m.n_dk = vec![3, 0, 0, 1];
        m.n_k = vec![3, 1];
        // θ1 = [4/5, 1/5], θ2 = [1/3, 2/3]; weights 3 and 1 over 4 tokens.
        let expected0 = (3.0 * 0.8 + 1.0 / 3.0) / 4.0;
        let prev = m.topic_prevalence();
        assert!((prev[0] - expected0).abs() < 1e-15);
        assert!((prev[1] - (1.0 - expected0)).abs() < 1e-15);
    }

    #[test]
    fn prevalence_tiny_alpha_two_topics() {
        let docs = vec![tdoc("1", "a a"), tdoc("2", "b b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let p = LdaParams {
            k: 2,
            alpha: Some(1e-6),
            ..LdaParams::default()
        };
        let mut m = GibbsSampler::new(&docs, &vocab, &p).unwrap().into_model();
        m.z = vec![vec![0, 0], vec![1, 1]];
        m.n_kw = vec![2, 0, 0, 2];
        m.n_dk = vec![2, 0, 0, 2];
        m.n_k = vec![2, 2];
        let prev = m.topic_prevalence();
        assert!((prev[0] - 0.5).abs() < 1e-12, "{prev:?}");
        assert!((prev[1] - 0.5).abs() < 1e-12, "{prev:?}");
        // Each θ row is nearly one-hot.
        assert!(m.theta()[0][0] > 1.0 - 1e-6);
    }

    #[test]
    fn top_words_uniform_row_uses_id_order() {
        let docs = vec![tdoc("1", "c b a")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let mut m = train_lda(&docs, &vocab, &params(2, 1)).unwrap();
        // Put every token in topic 0 so topic 1's row is flat.
        m.z = vec![vec![0, 0, 0]];
        m.n_kw = vec![1, 1, 1, 0, 0, 0];
        m.n_dk = vec![3, 0];
        m.n_k = vec![3, 0];
        let top: Vec<_> = m.top_words(1, 2).unwrap().into_iter().map(|t| t.term).collect();
        assert_eq!(top, ["a", "b"]);
        assert_eq!(m.top_words(1, 10).unwrap().len(), 3);
        assert!(m.top_words(2, 1).is_err());
    }

    #[test]
    fn top_words_sorted_by_hand() {
        let docs = vec![tdoc("1", "b c c a c b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let m = train_lda(&docs, &vocab, &params(1, 1)).unwrap();
        let top: Vec<_> = m.top_words(0, 3).unwrap().into_iter().map(|t| t.term).collect();
        assert_eq!(top, ["c", "b", "a"]);
    }

    #[test]
    fn k_larger_than_tokens_fails() {
        let docs = vec![tdoc("1", "a b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        assert!(train_lda(&docs, &vocab, &params(3, 1)).is_err());
        let empty = vec![tdoc("1", "")];
        assert!(train_lda(&empty, &vocab, &params(1, 1)).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let docs: Vec<_> = (0..20)
            .map(|i| tdoc(&i.to_string(), if i % 2 == 0 { "a b c a" } else { "x y z y" }))
            .collect();
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let a = train_lda(&docs, &vocab, &params(2, 30)).unwrap();
        let b = train_lda(&docs, &vocab, &params(2, 30)).unwrap();
        assert_eq!(a, b);
        let c = train_lda(&docs, &vocab, &LdaParams { seed: 99, ..params(2, 30) }).unwrap();
        assert_ne!(a.z, c.z);
    }

    #[test]
    fn permutation_moves_rows() {
        let docs = vec![tdoc("1", "a a b"), tdoc("2", "c c b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let m = train_lda(&docs, &vocab, &params(2, 10)).unwrap();
        let p = m.permute_topics(&[1, 0]).unwrap();
        p.check_invariants().unwrap();
        assert_eq!(m.phi()[0], p.phi()[1]);
        assert_eq!(m.top_words(0, 2).unwrap(), p.top_words(1, 2).unwrap());
        assert!(m.permute_topics(&[0, 0]).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let docs = vec![tdoc("1", "a a b"), tdoc("2", "c c b")];
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let m = train_lda(&docs, &vocab, &LdaParams { alpha: Some(0.1), ..params(2, 10) }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(TopicModel::load(&path).unwrap(), m);
    }
}
