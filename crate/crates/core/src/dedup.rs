//! Exact and near-duplicate detection over normalized token sequences.
//!
//! Exact repetitions are grouped by a 64-bit FNV-1a fingerprint of the token
//! sequence. Near duplicates compare k-token shingle sets: small inputs are
//! compared exhaustively, larger ones go through MinHash banding first. The
//! Jaccard value reported for a pair is always recomputed on the exact
//! shingle sets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::normalize::TokenizedDoc;

const TOKEN_SEPARATOR: u8 = 0x1f;
const MERSENNE_61: u64 = (1 << 61) - 1;
const MINHASH_SEED: u64 = 0x7477_6565_746c_656e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupParams {
    pub min_size: usize,
    pub near_threshold: f64,
    pub shingle_k: usize,
    /// Above this many distinct texts, near-duplicate candidates come from MinHash banding.
    pub exhaustive_limit: usize,
    pub minhash_bands: usize,
    pub minhash_rows: usize,
}

impl Default for DedupParams {
    fn default() -> Self {
        DedupParams {
            min_size: 2,
            near_threshold: 0.9,
            shingle_k: 3,
            exhaustive_limit: 2000,
            minhash_bands: 32,
            minhash_rows: 4,
        }
    }
}

impl DedupParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_size < 2 {
            return Err(Error::config("dedup.min_size", "must be at least 2"));
        }
        if !(self.near_threshold > 0.0 && self.near_threshold <= 1.0) {
            return Err(Error::config("dedup.near_threshold", "must lie in (0, 1]"));
        }
        if self.shingle_k == 0 {
            return Err(Error::config("dedup.shingle_k", "must be at least 1"));
        }
        if self.minhash_bands == 0 || self.minhash_rows == 0 {
            return Err(Error::config("dedup.minhash_bands", "bands and rows must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionCluster {
    pub fingerprint: u64,
    pub doc_ids: Vec<String>,
    pub distinct_authors: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearDupPair {
    pub first: String,
    pub second: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    /// Sorted by size descending, ties by fingerprint.
    pub clusters: Vec<RepetitionCluster>,
    /// Documents removed when one representative per cluster survives.
    pub total_removed: usize,
    pub near_dup_pairs: Vec<NearDupPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrunePolicy {
    #[default]
    KeepFirst,
    DropAll,
}

/// FNV-1a over the tokens, each followed by a 0x1F unit separator.
pub fn fingerprint(doc: &TokenizedDoc) -> u64 {
    fingerprint_tokens(&doc.tokens)
}

pub fn fingerprint_tokens<S: AsRef<str>>(tokens: &[S]) -> u64 {
    let mut hasher = FnvHasher::default();
    for token in tokens {
        hasher.write(token.as_ref().as_bytes());
        hasher.write(&[TOKEN_SEPARATOR]);
    }
    hasher.finish()
}

/// Contiguous k-token windows; a document shorter than `k` is one shingle.
pub fn shingles(tokens: &[String], k: usize) -> HashSet<&[String]> {
    if tokens.is_empty() {
        return HashSet::new();
    }
    if tokens.len() <= k {
        return std::iter::once(tokens).collect();
    }
    tokens.windows(k).collect()
}

pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

struct Group {
    fingerprint: u64,
    members: Vec<usize>,
}

pub fn find_repetition_clusters(
    docs: &[TokenizedDoc],
    authors: &HashMap<String, String>,
    params: &DedupParams,
) -> Result<DedupReport> {
    params.validate()?;
    if docs.is_empty() {
        return Ok(DedupReport::default());
    }
    let prints: Vec<u64> = docs.par_iter().map(fingerprint).collect();

    // Group by fingerprint, then split any hash collisions by token equality.
    let mut by_print: BTreeMap<u64, Vec<Group>> = BTreeMap::new();
    for (idx, doc) in docs.iter().enumerate() {
        if doc.tokens.is_empty() {
            continue;
        }
        let groups = by_print.entry(prints[idx]).or_default();
        match groups
            .iter_mut()
            .find(|g| docs[g.members[0]].tokens == doc.tokens)
        {
            Some(group) => group.members.push(idx),
            None => groups.push(Group {
                fingerprint: prints[idx],
                members: vec![idx],
            }),
        }
    }
    let mut groups: Vec<Group> = by_print.into_values().flatten().collect();
    groups.sort_by_key(|g| g.members[0]);

    let mut clusters: Vec<RepetitionCluster> = groups
        .iter()
        .filter(|g| g.members.len() >= params.min_size)
        .map(|g| {
            let distinct: HashSet<&str> = g
                .members
                .iter()
                .map(|&i| {
                    authors
                        .get(&docs[i].doc_id)
                        .map(String::as_str)
                        .unwrap_or("")
                })
                .collect();
            RepetitionCluster {
                fingerprint: g.fingerprint,
                doc_ids: g.members.iter().map(|&i| docs[i].doc_id.clone()).collect(),
                distinct_authors: distinct.len(),
                size: g.members.len(),
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.fingerprint.cmp(&b.fingerprint))
            .then_with(|| a.doc_ids.cmp(&b.doc_ids))
    });
    let total_removed = clusters.iter().map(|c| c.size - 1).sum();

    let representatives: Vec<usize> = groups.iter().map(|g| g.members[0]).collect();
    let near_dup_pairs = near_duplicates(docs, &representatives, params);

    Ok(DedupReport {
        clusters,
        total_removed,
        near_dup_pairs,
    })
}

fn near_duplicates(docs: &[TokenizedDoc], reps: &[usize], params: &DedupParams) -> Vec<NearDupPair> {
    let sets: Vec<HashSet<&[String]>> = reps
        .par_iter()
        .map(|&i| shingles(&docs[i].tokens, params.shingle_k))
        .collect();
    let candidates: Vec<(usize, usize)> = if reps.len() <= params.exhaustive_limit {
        (0..reps.len())
            .flat_map(|a| ((a + 1)..reps.len()).map(move |b| (a, b)))
            .collect()
    } else {
        minhash_candidates(&sets, params)
    };
    let mut pairs: Vec<(usize, usize, f64)> = candidates
        .par_iter()
        .filter_map(|&(a, b)| {
            let j = jaccard(&sets[a], &sets[b]);
            (j >= params.near_threshold).then_some((reps[a], reps[b], j))
        })
        .collect();
    pairs.sort_by_key(|&(a, b, _)| (a, b));
    pairs
        .into_iter()
        .map(|(a, b, jaccard)| NearDupPair {
            first: docs[a].doc_id.clone(),
            second: docs[b].doc_id.clone(),
            jaccard,
        })
        .collect()
}

fn minhash_candidates(sets: &[HashSet<&[String]>], params: &DedupParams) -> Vec<(usize, usize)> {
    let perms = params.minhash_bands * params.minhash_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(MINHASH_SEED);
    let coeffs: Vec<(u64, u64)> = (0..perms)
        .map(|_| (rng.random_range(1..MERSENNE_61), rng.random_range(0..MERSENNE_61)))
        .collect();
    let signatures: Vec<Vec<u64>> = sets
        .par_iter()
        .map(|set| {
            let mut sig = vec![u64::MAX; perms];
            for shingle in set {
                let h = fingerprint_tokens(shingle) % MERSENNE_61;
                for (slot, &(a, b)) in sig.iter_mut().zip(&coeffs) {
                    let v = ((a as u128 * h as u128 + b as u128) % MERSENNE_61 as u128) as u64;
                    if v < *slot {
                        *slot = v;
                    }
                }
            }
            sig
        })
        .collect();
    let mut candidates = HashSet::new();
    for band in 0..params.minhash_bands {
        let range = band * params.minhash_rows..(band + 1) * params.minhash_rows;
        let mut buckets: HashMap<&[u64], Vec<usize>> = HashMap::new();
        for (idx, sig) in signatures.iter().enumerate() {
            if !sets[idx].is_empty() {
                buckets.entry(&sig[range.clone()]).or_default().push(idx);
            }
        }
        for members in buckets.values() {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    candidates.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    let mut candidates: Vec<_> = candidates.into_iter().collect();
    candidates.sort_unstable();
    candidates
}

/// Removes repetitions listed in `report` from `corpus`, preserving order.
pub fn prune_corpus(corpus: &Corpus, report: &DedupReport, policy: PrunePolicy) -> Result<Corpus> {
    let position: HashMap<&str, usize> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let mut drop = vec![false; corpus.len()];
    for cluster in &report.clusters {
        let mut members = Vec::with_capacity(cluster.doc_ids.len());
        for id in &cluster.doc_ids {
            let pos = *position
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownDocId(id.clone()))?;
            members.push(pos);
        }
        let keep = match policy {
            PrunePolicy::KeepFirst => members.iter().min().copied(),
            PrunePolicy::DropAll => None,
        };
        for pos in members {
            if Some(pos) != keep {
                drop[pos] = true;
            }
        }
    }
    Ok(Corpus {
        documents: corpus
            .documents
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(doc, _)| doc.clone())
            .collect(),
        source_meta: corpus.source_meta.clone(),
    })
}
