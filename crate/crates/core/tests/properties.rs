mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use tweetlens::analysis::{jsd, opinion_topic_affinity, project_2d, AffinitySpace};
use tweetlens::coherence::{cv_for_topics, npmi, window_counts, DEFAULT_EPSILON};
use tweetlens::corpus::{filter_by_hashtags, Corpus, Document};
use tweetlens::dedup::{find_repetition_clusters, prune_corpus, DedupParams, PrunePolicy};
use tweetlens::embeddings::{cosine, train_skipgram, EmbeddingConfig, EmbeddingModel};
use tweetlens::lda::{build_vocab, train_lda, GibbsSampler, LdaParams, TopicModel};
use tweetlens::normalize::{fold_diacritics, normalize_text, NormalizeConfig, NormalizeOptions, TokenizedDoc};

use common::*;

fn small_docs(max_docs: usize, max_len: usize) -> impl Strategy<Value = Vec<TokenizedDoc>> {
    prop::collection::vec(prop::collection::vec(0usize..8, 1..=max_len), 1..=max_docs).prop_map(|docs| {
        docs_from(
            docs.into_iter()
                .map(|d| d.into_iter().map(|w| format!("w{w}")).collect())
                .collect(),
        )
    })
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn trained(docs: &[TokenizedDoc], k: usize, seed: u64) -> TopicModel {
    let vocab = build_vocab(docs, 1, 1.0).unwrap();
    train_lda(docs, &vocab, &LdaParams { k, iterations: 30, seed, ..LdaParams::default() }).unwrap()
}

fn with_ids(docs: &[TokenizedDoc]) -> Corpus {
    Corpus::new(
        docs.iter()
            .map(|d| Document {
                id: d.doc_id.clone(),
                author_id: String::new(),
                created_at: None,
                text: d.tokens.join(" "),
                hashtags: Vec::new(),
                lang_hint: None,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_idempotent(text in "[a-zA-ZáéíóúãõçÁÉ#@ .,!]{0,60}") {
        let config = NormalizeConfig::with_default_stopwords(NormalizeOptions::default()).unwrap();
        let once = normalize_text(&text, &config);
        let twice = normalize_text(&once.join(" "), &config);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn diacritic_folding_is_idempotent(word in "\\PC{0,20}") {
        let once = fold_diacritics(&word);
        prop_assert_eq!(fold_diacritics(&once), once);
    }

    #[test]
    fn hashtag_filter_is_idempotent(tags in prop::collection::vec(prop::collection::vec(0usize..4, 0..3), 1..20)) {
        let documents = tags
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: format!("d{i}"),
                author_id: String::new(),
                created_at: None,
                text: String::from("x"),
                hashtags: t.iter().map(|n| format!("tag{n}")).collect(),
                lang_hint: None,
            })
            .collect();
        let corpus = Corpus::new(documents).unwrap();
        let wanted: BTreeSet<String> = ["#tag1".to_string(), "#tag3".to_string()].into();
        let once = filter_by_hashtags(&corpus, &wanted).unwrap().corpus;
        let twice = filter_by_hashtags(&once, &wanted).unwrap().corpus;
        prop_assert_eq!(once.documents, twice.documents);
    }

    #[test]
    fn dedup_is_order_independent_and_a_fixpoint(docs in small_docs(30, 4), rotate in 0usize..30) {
        let params = DedupParams { near_threshold: 0.6, ..DedupParams::default() };
        let clusters = |docs: &[TokenizedDoc]| -> BTreeSet<BTreeSet<String>> {
            find_repetition_clusters(docs, &HashMap::new(), &params)
                .unwrap()
                .clusters
                .into_iter()
                .map(|c| c.doc_ids.into_iter().collect())
                .collect()
        };
        let mut shuffled = docs.clone();
        let r = rotate % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        prop_assert_eq!(clusters(&docs), clusters(&shuffled));

        let report = find_repetition_clusters(&docs, &HashMap::new(), &params).unwrap();
        let pruned = prune_corpus(&with_ids(&docs), &report, PrunePolicy::KeepFirst).unwrap();
        prop_assert_eq!(pruned.len(), docs.len() - report.total_removed);
        let kept: BTreeSet<&str> = pruned.documents.iter().map(|d| d.id.as_str()).collect();
        let remaining: Vec<TokenizedDoc> = docs.iter().filter(|d| kept.contains(d.doc_id.as_str())).cloned().collect();
        let again = find_repetition_clusters(&remaining, &HashMap::new(), &params).unwrap();
        prop_assert!(again.clusters.is_empty());
    }

    #[test]
    fn npmi_is_symmetric_and_bounded(docs in small_docs(12, 6), window in 1usize..5, a in 0usize..8, b in 0usize..8) {
        let terms: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let counts = window_counts(&docs, &terms, window).unwrap();
        let ab = npmi(&counts, &terms[a], &terms[b], DEFAULT_EPSILON).unwrap();
        let ba = npmi(&counts, &terms[b], &terms[a], DEFAULT_EPSILON).unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn cv_ignores_word_order_and_corpus_duplication(docs in small_docs(12, 6), window in 1usize..5, n in 2usize..6) {
        let topic: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let mut reversed = topic.clone();
        reversed.reverse();
        let base = cv_for_topics(std::slice::from_ref(&topic), &docs, window).unwrap().mean;
        let flipped = cv_for_topics(&[reversed], &docs, window).unwrap().mean;
        prop_assert!((base - flipped).abs() <= 1e-12);

        let mut doubled = docs.clone();
        doubled.extend(docs.iter().map(|d| TokenizedDoc { doc_id: format!("{}b", d.doc_id), ..d.clone() }));
        let twice = cv_for_topics(&[topic], &doubled, window).unwrap().mean;
        prop_assert!((base - twice).abs() <= 1e-12);
    }

    #[test]
    fn cosine_is_scale_invariant(u in prop::collection::vec(-5.0f64..5.0, 6), v in prop::collection::vec(-5.0f64..5.0, 6), c in 0.01f64..100.0) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let base = cosine(&u, &v).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
        prop_assert!((cosine(&scaled, &v).unwrap() - base).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn lda_counts_hold_for_any_seed(docs in small_docs(15, 8), k in 1usize..5, seed in any::<u64>()) {
        prop_assume!(docs.iter().map(|d| d.tokens.len()).sum::<usize>() >= k);
        let vocab = build_vocab(&docs, 1, 1.0).unwrap();
        let mut sampler = GibbsSampler::new(&docs, &vocab, &LdaParams { k, iterations: 5, seed, ..LdaParams::default() }).unwrap();
        for _ in 0..5 {
            sampler.sweep();
            prop_assert!(sampler.model().check_invariants().is_ok());
        }
        let model = sampler.into_model();
        for row in model.phi().iter().chain(model.theta().iter()) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        prop_assert!((model.topic_prevalence().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn topic_relabelling_keeps_the_likelihood(docs in small_docs(10, 6), seed in any::<u64>()) {
        prop_assume!(docs.iter().map(|d| d.tokens.len()).sum::<usize>() >= 3);
        let model = trained(&docs, 3, seed);
        let permuted = model.permute_topics(&[2, 0, 1]).unwrap();
        prop_assert!((model.log_likelihood() - permuted.log_likelihood()).abs() <= 1e-9 * model.log_likelihood().abs().max(1.0));
    }

    #[test]
    fn jsd_is_symmetric_and_bounded(p in distribution(5), q in distribution(5)) {
        let pq = jsd(&p, &q).unwrap();
        let qp = jsd(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() <= 1e-15);
        prop_assert!((0.0..=std::f64::consts::LN_2).contains(&pq));
        prop_assert!(jsd(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn mds_respects_point_relabelling(points in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..7), shift in 1usize..6) {
        let d = |pts: &[(f64, f64)]| -> Vec<Vec<f64>> {
            pts.iter().map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect()).collect()
        };
        let mut moved = points.clone();
        let s = shift % moved.len();
        moved.rotate_left(s);
        let a = project_2d(&d(&points)).unwrap();
        let b = project_2d(&d(&moved)).unwrap();
        let n = points.len();
        let dist = |c: &[[f64; 2]], i: usize, j: usize| ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt();
        for i in 0..n {
            for j in 0..n {
                let (bi, bj) = ((i + n - s) % n, (j + n - s) % n);
                prop_assert!((dist(&a.coords, i, j) - dist(&b.coords, bi, bj)).abs() <= 1e-7);
            }
        }
    }
}

#[test]
fn affinity_is_invariant_to_embedding_scale() {
    let (docs, _) = planted_corpus(&[vocab("a", 6), vocab("b", 6)], &[], 200, 8, 0.0, 1);
    let model = trained(&docs, 2, 4);
    let config = EmbeddingConfig { dim: 16, min_count: 1, subsample_t: 0.0, ..EmbeddingConfig::default() };
    let (emb, _) = train_skipgram(&docs, &config, 5).unwrap();
    let opinions = vec!["a00".to_string(), "b03".to_string(), "missing".to_string()];
    let base = opinion_topic_affinity(&model, AffinitySpace::Embedding(&emb), &opinions, 5, false).unwrap();
    for factor in [1e-3, 0.5, 7.0, 1e3] {
        let scaled = emb.scaled(factor);
        let got = opinion_topic_affinity(&model, AffinitySpace::Embedding(&scaled), &opinions, 5, false).unwrap();
        for (row_a, row_b) in base.values.iter().zip(&got.values) {
            for (x, y) in row_a.iter().zip(row_b) {
                match (x, y) {
                    (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-12, "{x} vs {y}"),
                    (None, None) => {}
                    other => panic!("missing pattern changed: {other:?}"),
                }
            }
        }
        assert_eq!(got.argmax, base.argmax);
    }
    assert!(base.values.iter().all(|row| row[2].is_none()));
}

#[test]
fn exclude_self_only_touches_rows_listing_the_opinion() {
    let (docs, _) = planted_corpus(&[vocab("a", 6), vocab("b", 6)], &[], 200, 8, 0.0, 2);
    let model = trained(&docs, 2, 9);
    let opinions = vec!["a01".to_string(), "b02".to_string()];
    let base = opinion_topic_affinity(&model, AffinitySpace::Bow(&docs), &opinions, 4, false).unwrap();
    let ablated = opinion_topic_affinity(&model, AffinitySpace::Bow(&docs), &opinions, 4, true).unwrap();
    for k in 0..2 {
        let top: Vec<String> = model.top_words(k, 4).unwrap().into_iter().map(|w| w.term).collect();
        for (o, name) in opinions.iter().enumerate() {
            if !top.contains(name) {
                assert_eq!(base.values[k][o], ablated.values[k][o]);
            }
        }
    }
}

#[test]
fn embedding_file_round_trip_is_exact() {
    let (docs, _) = planted_corpus(&[vocab("a", 5)], &[], 50, 6, 0.0, 3);
    let config = EmbeddingConfig { dim: 8, min_count: 1, epochs: 2, ..EmbeddingConfig::default() };
    let (emb, _) = train_skipgram(&docs, &config, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    emb.save(&path).unwrap();
    let back = EmbeddingModel::load(&path).unwrap();
    assert_eq!(back, emb);
}

#[test]
fn topic_model_file_round_trip_is_exact() {
    let (docs, _) = planted_corpus(&[vocab("a", 5), vocab("b", 5)], &[], 40, 6, 0.0, 4);
    let model = trained(&docs, 2, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lda.json");
    model.save(&path).unwrap();
    let back = TopicModel::load(&path).unwrap();
    assert_eq!(back.phi(), model.phi());
    assert_eq!(back.theta(), model.theta());
    assert_eq!(back.log_likelihood().to_bits(), model.log_likelihood().to_bits());
}

#[test]
fn likelihood_improves_on_planted_topics() {
    let (docs, _) = planted_corpus(&[vocab("a", 10), vocab("b", 10), vocab("c", 10)], &[], 120, 12, 0.0, 6);
    let vocab = build_vocab(&docs, 1, 1.0).unwrap();
    let mut sampler = GibbsSampler::new(&docs, &vocab, &LdaParams { k: 3, iterations: 1, seed: 2, ..LdaParams::default() }).unwrap();
    let start = sampler.model().log_likelihood();
    for _ in 0..100 {
        sampler.sweep();
    }
    let end = sampler.model().log_likelihood();
    assert!(end > start, "log-likelihood went from {start} to {end}");
}
