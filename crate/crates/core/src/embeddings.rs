//! Skip-gram word embeddings trained with negative sampling.
//!
//! For every center token and every context token inside a window whose
//! radius is drawn uniformly from `1..=window` per position, one SGD step
//! lowers
//!
//! ```text
//! -log σ(u_o · v_c) - Σ_i log σ(-u_{n_i} · v_c)
//! ```
//!
//! where `v_c` is the center's input vector, `u_o` the context's output vector
//! and the `n_i` are negatives drawn from the unigram distribution raised to
//! 3/4. The learning rate decays linearly from `initial_lr` to
//! `initial_lr / 100`. Training consumes one ChaCha8 stream in token order,
//! so a given seed always reproduces the same matrices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::Vocabulary;
use crate::normalize::TokenizedDoc;

pub const MAGIC: &[u8; 8] = b"TLSGNS\x00\x01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample_t: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 5,
            subsample_t: 1e-5,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.dim >= 1, "embedding.dim", "must be at least 1"),
            (self.window >= 1, "embedding.window", "must be at least 1"),
            (self.negatives >= 1, "embedding.negatives", "must be at least 1"),
            (self.epochs >= 1, "embedding.epochs", "must be at least 1"),
            (
                self.initial_lr > 0.0 && self.initial_lr.is_finite(),
                "embedding.initial_lr",
                "must be positive",
            ),
            (self.min_count >= 1, "embedding.min_count", "must be at least 1"),
            (
                self.subsample_t >= 0.0 && self.subsample_t.is_finite(),
                "embedding.subsample_t",
                "must be non-negative",
            ),
        ];
        for (ok, field, message) in checks {
            if !ok {
                return Err(Error::config(field, message));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub vocab: Vocabulary,
    /// Corpus frequency per term id.
    pub counts: Vec<u64>,
    /// V × dim input vectors, row-major.
    pub w_in: Vec<f64>,
    /// V × dim output vectors, row-major.
    pub w_out: Vec<f64>,
    pub seed: u64,
    pub config: EmbeddingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    /// Mean loss per (center, context) pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_trained: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub term: String,
    pub cosine: f64,
}

/// Loss and gradients of the negative-sampling objective for one triple.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    softplus(-dot(context, center))
        + negatives
            .iter()
            .map(|n| softplus(dot(n, center)))
            .sum::<f64>()
}

pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let g_pos = sigmoid(dot(context, center)) - 1.0;
    let mut grad_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let grad_context = center.iter().map(|v| g_pos * v).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = sigmoid(dot(n, center));
        for (acc, u) in grad_center.iter_mut().zip(n.iter()) {
            *acc += g * u;
        }
        grad_negs.push(center.iter().map(|v| g * v).collect());
    }
    SgnsGradient {
        loss: sgns_loss(center, context, negatives),
        center: grad_center,
        context: grad_context,
        negatives: grad_negs,
    }
}

impl EmbeddingModel {
    /// Builds a model from explicit input vectors; output vectors are zero
    /// and counts are one.
    pub fn from_vectors<S: AsRef<str>>(entries: &[(S, Vec<f64>)]) -> Result<EmbeddingModel> {
        let dim = entries.first().map_or(0, |(_, v)| v.len());
        if dim == 0 {
            return Err(Error::invalid("from_vectors needs at least one non-empty vector"));
        }
        let vocab = Vocabulary::from_terms(entries.iter().map(|(t, _)| t.as_ref().to_string()));
        if vocab.len() != entries.len() {
            return Err(Error::invalid("from_vectors got a repeated term"));
        }
        let mut w_in = vec![0.0; vocab.len() * dim];
        for (term, v) in entries {
            if v.len() != dim {
                return Err(Error::invalid(format!("vector for {:?} has length {}, expected {dim}", term.as_ref(), v.len())));
            }
            let id = vocab.id(term.as_ref()).expect("term just inserted") as usize;
            w_in[id * dim..(id + 1) * dim].copy_from_slice(v);
        }
        Ok(EmbeddingModel {
            dim,
            counts: vec![1; vocab.len()],
            w_out: vec![0.0; vocab.len() * dim],
            vocab,
            w_in,
            seed: 0,
            config: EmbeddingConfig { dim, ..EmbeddingConfig::default() },
        })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    fn row(&self, id: usize) -> &[f64] {
        &self.w_in[id * self.dim..(id + 1) * self.dim]
    }

    pub fn output_vector(&self, term: &str) -> Result<&[f64]> {
        let id = self.id(term)?;
        Ok(&self.w_out[id * self.dim..(id + 1) * self.dim])
    }

    fn id(&self, term: &str) -> Result<usize> {
        self.vocab
            .id(term)
            .map(|i| i as usize)
            .ok_or_else(|| Error::NotFound(term.to_string()))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.vocab.id(term).is_some()
    }

    /// Multiplies every vector by `factor`; used to check scale invariance downstream.
    pub fn scaled(&self, factor: f64) -> EmbeddingModel {
        let mut out = self.clone();
        out.w_in.iter_mut().for_each(|x| *x *= factor);
        out.w_out.iter_mut().for_each(|x| *x *= factor);
        out
    }

    fn sgd_step(&mut self, center: usize, context: usize, negatives: &[usize], lr: f64, grad: &mut [f64]) -> f64 {
        let dim = self.dim;
        let v = center * dim..(center + 1) * dim;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (target, positive) in targets {
            let u = target * dim..(target + 1) * dim;
            let score = dot(&self.w_in[v.clone()], &self.w_out[u.clone()]);
            let g = if positive {
                loss += softplus(-score);
                sigmoid(score) - 1.0
            } else {
                loss += softplus(score);
                sigmoid(score)
            };
            for (i, acc) in grad.iter_mut().enumerate() {
                *acc += g * self.w_out[u.start + i];
            }
            for i in 0..dim {
                self.w_out[u.start + i] -= lr * g * self.w_in[v.start + i];
            }
        }
        for (i, g) in grad.iter().enumerate() {
            self.w_in[v.start + i] -= lr * g;
        }
        loss
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_binary(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    fn write_binary(&self, out: &mut impl Write) -> std::io::Result<()> {
        let c = &self.config;
        out.write_all(MAGIC)?;
        for n in [self.dim, self.len(), c.window, c.negatives, c.epochs] {
            out.write_all(&(n as u32).to_le_bytes())?;
        }
        out.write_all(&c.initial_lr.to_le_bytes())?;
        out.write_all(&c.min_count.to_le_bytes())?;
        out.write_all(&c.subsample_t.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for (term, count) in self.vocab.terms().iter().zip(&self.counts) {
            out.write_all(&(term.len() as u32).to_le_bytes())?;
            out.write_all(term.as_bytes())?;
            out.write_all(&count.to_le_bytes())?;
        }
        for x in self.w_in.iter().chain(&self.w_out) {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingModel> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::format("embedding model", "bad magic number"));
        }
        let dim = r.u32()? as usize;
        let v = r.u32()? as usize;
        let window = r.u32()? as usize;
        let negatives = r.u32()? as usize;
        let epochs = r.u32()? as usize;
        let initial_lr = r.f64()?;
        let min_count = r.u64()?;
        let subsample_t = r.f64()?;
        let seed = r.u64()?;
        let mut terms = Vec::with_capacity(v);
        let mut counts = Vec::with_capacity(v);
        for _ in 0..v {
            let len = r.u32()? as usize;
            let term = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format("embedding model", "term is not UTF-8"))?;
            terms.push(term.to_string());
            counts.push(r.u64()?);
        }
        let vocab = Vocabulary::from_terms(terms.iter().cloned());
        if vocab.terms() != terms.as_slice() {
            return Err(Error::format("embedding model", "terms are not sorted and unique"));
        }
        let mut read_matrix = || -> Result<Vec<f64>> {
            (0..v * dim)
                .map(|_| {
                    let x = r.f64()?;
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::format("embedding model", "non-finite vector entry"))
                    }
                })
                .collect()
        };
        let w_in = read_matrix()?;
        let w_out = read_matrix()?;
        if r.pos != bytes.len() {
            return Err(Error::format("embedding model", "trailing bytes"));
        }
        Ok(EmbeddingModel {
            dim,
            vocab,
            counts,
            w_in,
            w_out,
            seed,
            config: EmbeddingConfig {
                dim,
                window,
                negatives,
                epochs,
                initial_lr,
                min_count,
                subsample_t,
            },
        })
    }

    /// Writes `term v1 v2 … vdim`, one term per line, using input vectors.
    pub fn export_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (id, term) in self.vocab.terms().iter().enumerate() {
            write!(out, "{term}")?;
            for x in self.row(id) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("embedding model", "truncated file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Terms with corpus frequency at least `min_count`, in lexicographic order.
pub fn embedding_vocab(docs: &[TokenizedDoc], min_count: u64) -> (Vocabulary, Vec<u64>) {
    let mut freq = std::collections::BTreeMap::<&str, u64>::new();
    for tok in docs.iter().flat_map(|d| &d.tokens) {
        *freq.entry(tok).or_insert(0) += 1;
    }
    let kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    let vocab = Vocabulary::from_terms(kept.iter().map(|(t, _)| *t));
    (vocab, kept.into_iter().map(|(_, c)| c).collect())
}

pub fn train_skipgram(
    docs: &[TokenizedDoc],
    config: &EmbeddingConfig,
    seed: u64,
) -> Result<(EmbeddingModel, TrainingStats)> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus { skipped: 0 });
    }
    let (vocab, counts) = embedding_vocab(docs, config.min_count);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let (v, dim) = (vocab.len(), config.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    let w_in: Vec<f64> = (0..v * dim).map(|_| rng.random_range(-half..half)).collect();
    let mut model = EmbeddingModel {
        dim,
        vocab,
        counts,
        w_in,
        w_out: vec![0.0; v * dim],
        seed,
        config: config.clone(),
    };

    let sentences: Vec<Vec<u32>> = docs.iter().map(|d| model.vocab.encode(&d.tokens)).collect();
    let total: u64 = model.counts.iter().sum();
    let keep_prob: Vec<f64> = model
        .counts
        .iter()
        .map(|&c| {
            if config.subsample_t == 0.0 {
                return 1.0;
            }
            let f = c as f64 / total as f64;
            (((f / config.subsample_t).sqrt() + 1.0) * config.subsample_t / f).min(1.0)
        })
        .collect();
    let noise_weights: Vec<f64> = model.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let noise = WeightedAliasIndex::new(noise_weights)
        .map_err(|e| Error::invalid(format!("negative-sampling table: {e}")))?;

    let planned = (config.epochs as u64 * total).max(1) as f64;
    let mut processed = 0u64;
    let mut stats = TrainingStats {
        epoch_losses: Vec::with_capacity(config.epochs),
        pairs_trained: 0,
    };
    let mut grad = vec![0.0; dim];
    let mut negs = Vec::with_capacity(config.negatives);
    let mut sentence = Vec::new();
    for _ in 0..config.epochs {
        let (mut loss_sum, mut pairs) = (0.0, 0u64);
        for raw in &sentences {
            sentence.clear();
            for &w in raw {
                let p = keep_prob[w as usize];
                if p >= 1.0 || rng.random::<f64>() < p {
                    sentence.push(w as usize);
                }
            }
            for (i, &center) in sentence.iter().enumerate() {
                let lr = config.initial_lr * (1.0 - 0.99 * processed as f64 / planned);
                let radius = rng.random_range(1..=config.window);
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(sentence.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = sentence[j];
                    negs.clear();
                    for _ in 0..config.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            negs.push(n);
                        }
                    }
                    loss_sum += model.sgd_step(center, context, &negs, lr, &mut grad);
                    pairs += 1;
                }
                processed += 1;
            }
            processed += (raw.len() - sentence.len()) as u64;
        }
        stats.pairs_trained += pairs;
        stats
            .epoch_losses
            .push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }
    if stats.pairs_trained == 0 {
        log::warn!("no skip-gram training pairs; embeddings keep their initial values");
    }
    Ok((model, stats))
}

/// The input vector of `term`.
pub fn vector<'a>(model: &'a EmbeddingModel, term: &str) -> Result<&'a [f64]> {
    Ok(model.row(model.id(term)?))
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// The `n` terms most similar to `term`, excluding itself; ties by term id.
pub fn nearest(model: &EmbeddingModel, term: &str, n: usize) -> Result<Vec<Neighbor>> {
    let query = model.id(term)?;
    let q = model.row(query);
    let mut scored: Vec<(usize, f64)> = (0..model.len())
        .filter(|&id| id != query)
        .filter_map(|id| cosine(q, model.row(id)).ok().map(|c| (id, c)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(id, c)| Neighbor {
            term: model.vocab.term(id as u32).to_string(),
            cosine: c,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tdoc(tokens: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: tokens.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            emptied: false,
        }
    }

    fn small_config() -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 8,
            window: 2,
            negatives: 3,
            epochs: 3,
            min_count: 1,
            subsample_t: 0.0,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[3.0, -1.0], &[3.0, -1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - expected).abs() < 1e-15);
        assert!((c - 0.974632).abs() < 1e-6);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::UndefinedSimilarity)));
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn vector_lookup() {
        let docs = vec![tdoc("a b c a b")];
        let (m, _) = train_skipgram(&docs, &small_config(), 1).unwrap();
        let v = vector(&m, "a").unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(matches!(vector(&m, "zzz"), Err(Error::NotFound(_))));
    }

    #[test]
    fn single_token_corpus_keeps_initialization() {
        let docs = vec![tdoc("a")];
        let (m, stats) = train_skipgram(&docs, &small_config(), 3).unwrap();
        assert_eq!(stats.pairs_trained, 0);
        assert!(m.w_out.iter().all(|&x| x == 0.0));
        let half = 0.5 / 8.0;
        assert!(m.w_in.iter().all(|x| x.abs() <= half));
    }

    #[test]
    fn min_count_can_empty_vocab() {
        let docs = vec![tdoc("a b")];
        let cfg = EmbeddingConfig {
            min_count: 5,
            ..small_config()
        };
        assert!(matches!(train_skipgram(&docs, &cfg, 1), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn deterministic_per_seed() {
        let docs = vec![tdoc("a b c d a b c d"), tdoc("d c b a")];
        let (a, sa) = train_skipgram(&docs, &small_config(), 11).unwrap();
        let (b, sb) = train_skipgram(&docs, &small_config(), 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let (c, _) = train_skipgram(&docs, &small_config(), 12).unwrap();
        assert_ne!(a.w_in, c.w_in);
    }

    #[test]
    fn sgd_step_matches_gradient() {
        let docs = vec![tdoc("a b c a b c")];
        let (mut m, _) = train_skipgram(&docs, &small_config(), 5).unwrap();
        let before = m.clone();
        let lr = 0.05;
        let mut buf = vec![0.0; m.dim];
        let loss = m.sgd_step(0, 1, &[2], lr, &mut buf);
        let g = sgns_gradient(before.row(0), &before.w_out[8..16], &[&before.w_out[16..24]]);
        assert!((loss - g.loss).abs() < 1e-12);
        for i in 0..8 {
            assert!((m.w_in[i] - (before.w_in[i] - lr * g.center[i])).abs() < 1e-12);
            assert!((m.w_out[8 + i] - (before.w_out[8 + i] - lr * g.context[i])).abs() < 1e-12);
            assert!((m.w_out[16 + i] - (before.w_out[16 + i] - lr * g.negatives[0][i])).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_pairs_loss_decreases() {
        let docs: Vec<_> = (0..50).map(|_| tdoc("a b")).collect();
        let cfg = EmbeddingConfig {
            epochs: 50,
            window: 1,
            ..small_config()
        };
        let (m, stats) = train_skipgram(&docs, &cfg, 2).unwrap();
        assert!(stats.epoch_losses.last().unwrap() < stats.epoch_losses.first().unwrap());
        // a's input vector points along b's output vector after training.
        let a = vector(&m, "a").unwrap();
        let b_out = m.output_vector("b").unwrap();
        assert!(cosine(a, b_out).unwrap() > 0.5);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let docs = vec![tdoc("a b c d e f a b c"), tdoc("f e d c b a")];
        let (m, _) = train_skipgram(&docs, &small_config(), 9).unwrap();
        assert!(nearest(&m, "a", 0).unwrap().is_empty());
        let got = nearest(&m, "c", 10).unwrap();
        let q = vector(&m, "c").unwrap();
        let mut brute: Vec<(String, f64)> = m
            .vocab
            .terms()
            .iter()
            .filter(|t| *t != "c")
            .map(|t| (t.clone(), cosine(q, vector(&m, t).unwrap()).unwrap()))
            .collect();
        brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got: Vec<(String, f64)> = got.into_iter().map(|n| (n.term, n.cosine)).collect();
        assert_eq!(got, brute);
        assert!(nearest(&m, "zzz", 3).is_err());
    }

    #[test]
    fn binary_round_trip_and_text_export() {
        let docs = vec![tdoc("alpha beta gamma alpha"), tdoc("ção beta")];
        let (m, _) = train_skipgram(&docs, &small_config(), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        m.save(&path).unwrap();
        let back = EmbeddingModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(vector(&back, "beta").unwrap(), vector(&m, "beta").unwrap());

        let mut text = Vec::new();
        m.export_text(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        let first = text.lines().next().unwrap();
        let fields: Vec<&str> = first.split(' ').collect();
        assert_eq!(fields[0], "alpha");
        assert_eq!(fields.len(), 9);
        let parsed: f64 = fields[1].parse().unwrap();
        assert_eq!(parsed, vector(&m, "alpha").unwrap()[0]);
    }

    #[test]
    fn corrupt_binary_rejected() {
        assert!(EmbeddingModel::from_bytes(b"nope").is_err());
        let docs = vec![tdoc("a b a b")];
        let (m, _) = train_skipgram(&docs, &small_config(), 4).unwrap();
        let mut bytes = Vec::new();
        m.write_binary(&mut bytes).unwrap();
        bytes.pop();
        assert!(EmbeddingModel::from_bytes(&bytes).is_err());
    }
}
