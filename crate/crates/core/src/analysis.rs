//! Opinion/topic affinity, Jensen-Shannon distances and the intertopic map.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine, vector, EmbeddingModel};
use crate::error::{Error, Result};
use crate::lda::TopicModel;
use crate::normalize::TokenizedDoc;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffinityMode {
    #[default]
    Embedding,
    Bow,
}

/// The representation affinity is measured in.
#[derive(Debug, Clone, Copy)]
pub enum AffinitySpace<'a> {
    Embedding(&'a EmbeddingModel),
    /// Document-level co-occurrence vectors built from these documents.
    Bow(&'a [TokenizedDoc]),
}

impl AffinitySpace<'_> {
    pub fn mode(&self) -> AffinityMode {
        match self {
            AffinitySpace::Embedding(_) => AffinityMode::Embedding,
            AffinitySpace::Bow(_) => AffinityMode::Bow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityMatrix {
    pub mode: AffinityMode,
    pub exclude_self: bool,
    pub top_n: usize,
    pub opinions: Vec<String>,
    /// `values[k][o]`; `None` marks a pair with no computable terms.
    pub values: Vec<Vec<Option<f64>>>,
    /// Topic words averaged per cell.
    pub terms_used: Vec<Vec<usize>>,
    /// Topic words dropped per cell because they had no representation.
    pub terms_skipped: Vec<Vec<usize>>,
    /// Best opinion per topic, ties by earlier opinion.
    pub argmax: Vec<Option<String>>,
}

impl AffinityMatrix {
    pub fn topics(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, topic: usize, opinion: &str) -> Option<f64> {
        let o = self.opinions.iter().position(|x| x == opinion)?;
        self.values.get(topic)?[o]
    }

    /// Recomputes the argmax of one row from `values`.
    pub fn row_argmax(values: &[Option<f64>], opinions: &[String]) -> Option<String> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| opinions[i].clone())
    }
}

struct Cell {
    value: Option<f64>,
    used: usize,
    skipped: usize,
}

/// Affinity of every topic with every opinion lemma.
///
/// In embedding mode a cell is the mean cosine between the opinion vector and
/// each of the topic's `top_n` words present in the embedding. In bow mode it
/// is the cosine between the opinion's co-occurrence row and the sum of the
/// topic words' rows. With `exclude_self` the opinion is removed from the
/// topic's word list before averaging.
pub fn opinion_topic_affinity(
    model: &TopicModel,
    space: AffinitySpace<'_>,
    opinions: &[String],
    top_n: usize,
    exclude_self: bool,
) -> Result<AffinityMatrix> {
    if opinions.is_empty() {
        return Err(Error::invalid("affinity needs at least one opinion lemma"));
    }
    if top_n == 0 {
        return Err(Error::invalid("affinity needs top_n >= 1"));
    }
    let topic_words: Vec<Vec<String>> = (0..model.k)
        .map(|k| Ok(model.top_words(k, top_n)?.into_iter().map(|w| w.term).collect()))
        .collect::<Result<_>>()?;

    let cells: Vec<Vec<Cell>> = match space {
        AffinitySpace::Embedding(emb) => {
            for o in opinions.iter().filter(|o| !emb.contains(o)) {
                log::warn!("opinion {o:?} has no embedding; its column is missing");
            }
            topic_words
                .par_iter()
                .map(|words| {
                    opinions
                        .iter()
                        .map(|o| embedding_cell(emb, words, o, exclude_self))
                        .collect()
                })
                .collect()
        }
        AffinitySpace::Bow(docs) => {
            let cooc = Cooccurrence::build(docs, topic_words.iter().flatten().chain(opinions));
            topic_words
                .par_iter()
                .map(|words| {
                    opinions
                        .iter()
                        .map(|o| bow_cell(&cooc, words, o, exclude_self))
                        .collect()
                })
                .collect()
        }
    };

    let mut values = Vec::with_capacity(cells.len());
    let mut terms_used = Vec::with_capacity(cells.len());
    let mut terms_skipped = Vec::with_capacity(cells.len());
    for row in cells {
        values.push(row.iter().map(|c| c.value).collect::<Vec<_>>());
        terms_used.push(row.iter().map(|c| c.used).collect());
        terms_skipped.push(row.iter().map(|c| c.skipped).collect());
    }
    let argmax = values.iter().map(|row| AffinityMatrix::row_argmax(row, opinions)).collect();
    Ok(AffinityMatrix {
        mode: space.mode(),
        exclude_self,
        top_n,
        opinions: opinions.to_vec(),
        values,
        terms_used,
        terms_skipped,
        argmax,
    })
}

fn embedding_cell(emb: &EmbeddingModel, words: &[String], opinion: &str, exclude_self: bool) -> Cell {
    let candidates = words.iter().filter(|w| !(exclude_self && w.as_str() == opinion));
    let Ok(ov) = vector(emb, opinion) else {
        return Cell { value: None, used: 0, skipped: candidates.count() };
    };
    let (mut sum, mut used, mut skipped) = (0.0, 0, 0);
    for w in candidates {
        match vector(emb, w).and_then(|wv| cosine(wv, ov)) {
            Ok(c) => {
                sum += c;
                used += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    Cell {
        value: (used > 0).then(|| sum / used as f64),
        used,
        skipped,
    }
}

/// Sparse document co-occurrence rows for a fixed set of terms.
struct Cooccurrence {
    /// term -> (neighbour id -> number of documents containing both).
    rows: HashMap<String, HashMap<u32, u64>>,
}

impl Cooccurrence {
    fn build<'a>(docs: &[TokenizedDoc], terms: impl Iterator<Item = &'a String>) -> Self {
        let wanted: HashSet<&str> = terms.map(String::as_str).collect();
        let mut ids: HashMap<&str, u32> = HashMap::new();
        for doc in docs {
            for t in &doc.tokens {
                let next = ids.len() as u32;
                ids.entry(t.as_str()).or_insert(next);
            }
        }
        let rows = docs
            .par_iter()
            .fold(HashMap::<String, HashMap<u32, u64>>::new, |mut acc, doc| {
                let present: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
                for t in present.iter().filter(|t| wanted.contains(*t)) {
                    let row = acc.entry(t.to_string()).or_default();
                    for u in &present {
                        *row.entry(ids[u]).or_default() += 1;
                    }
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (t, row) in b {
                    let dst = a.entry(t).or_default();
                    for (u, c) in row {
                        *dst.entry(u).or_default() += c;
                    }
                }
                a
            });
        Cooccurrence { rows }
    }
}

fn sparse_cosine(a: &HashMap<u32, u64>, b: &HashMap<u32, u64>) -> Option<f64> {
    let norm = |m: &HashMap<u32, u64>| m.values().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    // Sorted keys keep the floating-point sum order fixed.
    let mut keys: Vec<u32> = a.keys().filter(|k| b.contains_key(k)).copied().collect();
    keys.sort_unstable();
    let dot: f64 = keys.iter().map(|k| a[k] as f64 * b[k] as f64).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn bow_cell(cooc: &Cooccurrence, words: &[String], opinion: &str, exclude_self: bool) -> Cell {
    let mut topic: HashMap<u32, u64> = HashMap::new();
    let (mut used, mut skipped) = (0, 0);
    for w in words.iter().filter(|w| !(exclude_self && w.as_str() == opinion)) {
        match cooc.rows.get(w) {
            Some(row) => {
                used += 1;
                for (&u, &c) in row {
                    *topic.entry(u).or_default() += c;
                }
            }
            None => skipped += 1,
        }
    }
    let value = cooc.rows.get(opinion).and_then(|o| sparse_cosine(&topic, o));
    Cell { value, used, skipped }
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats, in `[0, ln 2]`.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid(format!(
            "jsd needs two non-empty distributions of equal length, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let kl_to_mid = |a: f64, m: f64| if a > 0.0 { a * (a / m).ln() } else { 0.0 };
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            kl_to_mid(a, m) + kl_to_mid(b, m)
        })
        .sum();
    Ok((0.5 * total).clamp(0.0, std::f64::consts::LN_2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Axes zero-filled because their eigenvalue was not positive.
    pub degenerate_axes: usize,
}

/// Classical multidimensional scaling onto two axes.
///
/// Each axis is flipped so that its first nonzero coordinate is positive.
pub fn project_2d(distances: &[Vec<f64>]) -> Result<Projection> {
    let k = distances.len();
    if k < 2 {
        return Err(Error::invalid(format!("project_2d needs at least 2 points, got {k}")));
    }
    let scale = distances.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tol = 1e-12 * scale.max(1.0);
    for (i, row) in distances.iter().enumerate() {
        if row.len() != k {
            return Err(Error::invalid(format!("distance row {i} has length {}, expected {k}", row.len())));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::invalid(format!("distance[{i}][{j}] = {d} is not a nonnegative number")));
            }
            if i == j && d > tol {
                return Err(Error::invalid(format!("distance[{i}][{i}] = {d} is not zero")));
            }
            if (d - distances[j][i]).abs() > tol {
                return Err(Error::invalid(format!("distance matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let sq = DMatrix::from_fn(k, k, |i, j| distances[i][j].powi(2));
    let j = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
    let b = (&j * sq * &j) * -0.5;
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let eig_tol = 1e-10 * top.max(scale * scale).max(f64::MIN_POSITIVE);

    let mut coords = vec![[0.0; 2]; k];
    let mut degenerate_axes = 0;
    for (axis, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= eig_tol {
            degenerate_axes += 1;
            continue;
        }
        let root = lambda.sqrt();
        let col = eig.eigenvectors.column(idx);
        let coord_tol = 1e-9 * root;
        let sign = col
            .iter()
            .map(|x| x * root)
            .find(|x| x.abs() > coord_tol)
            .map_or(1.0, f64::signum);
        for (p, c) in coords.iter_mut().zip(col.iter()) {
            p[axis] = sign * c * root;
        }
    }
    if degenerate_axes > 0 {
        log::warn!("{degenerate_axes} of 2 projection axes have no positive eigenvalue and were zero-filled");
    }
    Ok(Projection { coords, degenerate_axes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertopicMap {
    pub coords: Vec<[f64; 2]>,
    /// Topic prevalence; sums to 1.
    pub areas: Vec<f64>,
    pub distance_matrix: Vec<Vec<f64>>,
    pub degenerate_axes: usize,
}

/// Pairwise JSD between topic-word distributions, projected to 2-D.
pub fn build_intertopic_map(model: &TopicModel) -> Result<IntertopicMap> {
    if model.k < 2 {
        return Err(Error::invalid(format!("intertopic map needs K >= 2, got {}", model.k)));
    }
    let phi = model.phi();
    let k = model.k;
    let upper: Vec<((usize, usize), f64)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| Ok(((i, j), jsd(&phi[i], &phi[j])?)))
        .collect::<Result<_>>()?;
    let mut distance_matrix = vec![vec![0.0; k]; k];
    for ((i, j), d) in upper {
        distance_matrix[i][j] = d;
        distance_matrix[j][i] = d;
    }
    let projection = project_2d(&distance_matrix)?;
    Ok(IntertopicMap {
        coords: projection.coords,
        areas: model.topic_prevalence(),
        distance_matrix,
        degenerate_axes: projection.degenerate_axes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::{LdaParams, Vocabulary};

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    fn distances(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        points.iter().map(|&a| points.iter().map(|&b| dist(a, b)).collect()).collect()
    }

    fn tdoc(id: &str, tokens: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            emptied: false,
        }
    }

    /// A model whose topic `k` holds exactly the given words once each.
    fn forced_model(topics: &[&[&str]]) -> TopicModel {
        let docs: Vec<TokenizedDoc> = topics
            .iter()
            .enumerate()
            .map(|(i, ws)| tdoc(&format!("d{i}"), &ws.join(" ")))
            .collect();
        let vocab = Vocabulary::from_terms(topics.iter().flat_map(|ws| ws.iter().copied()));
        let params = LdaParams { k: topics.len(), iterations: 1, ..LdaParams::default() };
        let mut model = crate::lda::GibbsSampler::new(&docs, &vocab, &params).unwrap().into_model();
        let v = vocab.len();
        model.n_kw = vec![0; topics.len() * v];
        model.n_dk = vec![0; topics.len() * topics.len()];
        model.n_k = vec![0; topics.len()];
        for (d, ws) in topics.iter().enumerate() {
            model.z[d] = vec![d as u32; model.words[d].len()];
            for w in ws.iter() {
                model.n_kw[d * v + vocab.id(w).unwrap() as usize] += 1;
            }
            model.n_dk[d * topics.len() + d] = ws.len() as u32;
            model.n_k[d] = ws.len() as u64;
        }
        model.check_invariants().unwrap();
        model
    }

    fn ops(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jsd_fixed_points() {
        assert_eq!(jsd(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn jsd_matches_summation_oracle() {
        // Python: 0.5*sum(p*log(p/m)) + 0.5*sum(q*log(q/m)) with m = (p+q)/2
        let d = jsd(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((d - 0.033822075568605205).abs() < 1e-15, "{d}");
    }

    #[test]
    fn jsd_rejects_unnormalized() {
        assert!(jsd(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(jsd(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn two_points_sit_on_first_axis() {
        let p = project_2d(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert!((dist(p.coords[0], p.coords[1]) - 3.0).abs() < 1e-12);
        assert_eq!(p.coords[0][1], 0.0);
        assert_eq!(p.coords[1][1], 0.0);
        assert_eq!(p.degenerate_axes, 1);
        assert!(p.coords[0][0] > 0.0);
    }

    #[test]
    fn equilateral_triangle() {
        let d = vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]];
        let p = project_2d(&d).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((dist(p.coords[i], p.coords[j]) - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn embeddable_points_are_recovered() {
        let points = [[0.0, 0.0], [3.0, 0.0], [0.0, 4.0], [5.0, 7.0]];
        let d = distances(&points);
        let p = project_2d(&d).unwrap();
        assert_eq!(p.degenerate_axes, 0);
        let back = distances(&p.coords);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - d[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn project_rejects_bad_input() {
        assert!(project_2d(&[vec![0.0]]).is_err());
        assert!(project_2d(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(project_2d(&[vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(project_2d(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
    }

    #[test]
    fn embedding_mean_of_hand_cosines() {
        let emb = EmbeddingModel::from_vectors(&[
            ("o", vec![1.0, 0.0]),
            ("a", vec![1.0, 1.0]),
            ("b", vec![0.0, 2.0]),
        ])
        .unwrap();
        let model = forced_model(&[&["a", "b"], &["o", "o"]]);
        let m = opinion_topic_affinity(&model, AffinitySpace::Embedding(&emb), &ops(&["o"]), 2, false).unwrap();
        let expected = (std::f64::consts::FRAC_1_SQRT_2 + 0.0) / 2.0;
        assert!((m.values[0][0].unwrap() - expected).abs() < 1e-15);
        assert_eq!(m.terms_used[0][0], 2);
    }

    #[test]
    fn exclusion_can_exhaust_topic() {
        let emb = EmbeddingModel::from_vectors(&[("o", vec![1.0, 0.0]), ("a", vec![0.0, 1.0])]).unwrap();
        let model = forced_model(&[&["o"], &["a"]]);
        let m = opinion_topic_affinity(&model, AffinitySpace::Embedding(&emb), &ops(&["o"]), 1, true).unwrap();
        assert_eq!(m.values[0][0], None);
        assert_eq!(m.argmax[0], None);
        assert_eq!(m.values[1][0], Some(0.0));
    }

    #[test]
    fn missing_terms_are_skipped_not_zeroed() {
        let emb = EmbeddingModel::from_vectors(&[("o", vec![1.0, 0.0]), ("a", vec![1.0, 0.0])]).unwrap();
        let model = forced_model(&[&["a", "zzz"], &["o", "a"]]);
        let m = opinion_topic_affinity(&model, AffinitySpace::Embedding(&emb), &ops(&["o", "absent"]), 2, false)
            .unwrap();
        assert_eq!(m.values[0][0], Some(1.0));
        assert_eq!(m.terms_skipped[0][0], 1);
        assert_eq!(m.values[0][1], None);
        assert_eq!(m.value(1, "absent"), None);
    }

    #[test]
    fn bow_mode_uses_cooccurrence() {
        let docs = vec![
            tdoc("1", "vencer ganhar festa"),
            tdoc("2", "vencer festa"),
            tdoc("3", "torturar medo"),
            tdoc("4", "torturar medo crime"),
        ];
        let model = forced_model(&[&["festa", "ganhar"], &["medo", "crime"]]);
        let m = opinion_topic_affinity(&model, AffinitySpace::Bow(&docs), &ops(&["vencer", "torturar"]), 2, false)
            .unwrap();
        assert_eq!(m.mode, AffinityMode::Bow);
        assert_eq!(m.argmax, [Some("vencer".to_string()), Some("torturar".to_string())]);
        assert_eq!(m.values[0][1], Some(0.0));
    }

    #[test]
    fn row_argmax_prefers_first_on_ties() {
        let o = ops(&["x", "y", "z"]);
        assert_eq!(AffinityMatrix::row_argmax(&[Some(0.5), Some(0.5), None], &o), Some("x".into()));
        assert_eq!(AffinityMatrix::row_argmax(&[None, None, None], &o), None);
    }

    #[test]
    fn identical_topics_coincide() {
        let model = forced_model(&[&["a", "b"], &["a", "b"], &["c", "d"]]);
        let map = build_intertopic_map(&model).unwrap();
        assert_eq!(map.distance_matrix[0][1], 0.0);
        assert!(dist(map.coords[0], map.coords[1]) < 1e-9);
        assert!((map.areas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
