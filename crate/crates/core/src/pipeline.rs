//! Stage orchestration with persisted, lineage-checked artifacts.
//!
//! Every stage writes one JSON artifact into `paths.out_dir`, wrapped in an
//! envelope carrying a schema id and a lineage hash. The hash covers the
//! config sections and input-file digests the stage depends on, plus the
//! hashes of its upstream stages, so editing `analysis.top_n` invalidates
//! `analyze` and `report` but not `lda`. A stage refuses to read an
//! artifact whose hash differs from the one the current config implies.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{build_intertopic_map, opinion_topic_affinity, AffinityMatrix, AffinityMode, AffinitySpace, IntertopicMap};
use crate::coherence::{coherence_sweep, cv_coherence};
use crate::config::PipelineConfig;
use crate::corpus::{corpus_stats, filter_by_hashtags, load_corpus, Corpus, CorpusStats};
use crate::dedup::{find_repetition_clusters, prune_corpus, DedupReport, PrunePolicy};
use crate::embeddings::{train_skipgram, EmbeddingModel, TrainingStats};
use crate::error::{Error, Result};
use crate::lda::{build_vocab, train_lda, TopicModel};
use crate::normalize::{normalize_pipeline, NormalizeConfig, TokenizedDoc};
use crate::report::{
    emit_report, CoherenceSummary, CorpusSummary, DedupSummary, Report, Seeds, TopicSummary, BUNDLE_FILES, REPORT_SCHEMA,
};
use crate::sentiment::{parse_lexicon, top_polar_words, PolarWordRanking};

/// Name of the report bundle directory inside `out_dir`.
pub const REPORT_DIR: &str = "report";
pub const EMBEDDING_BIN: &str = "embedding.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Normalize,
    Dedup,
    Lda,
    Embed,
    Coherence,
    Sentiment,
    Analyze,
    Report,
}

impl Stage {
    /// Execution order of a full run.
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Normalize,
        Stage::Dedup,
        Stage::Lda,
        Stage::Embed,
        Stage::Coherence,
        Stage::Sentiment,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Normalize => "normalize",
            Stage::Dedup => "dedup",
            Stage::Lda => "lda",
            Stage::Embed => "embed",
            Stage::Coherence => "coherence",
            Stage::Sentiment => "sentiment",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }

    pub fn parents(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Normalize => &[Stage::Ingest],
            Stage::Dedup => &[Stage::Normalize],
            Stage::Lda | Stage::Embed | Stage::Sentiment => &[Stage::Dedup],
            Stage::Coherence => &[Stage::Lda],
            Stage::Analyze => &[Stage::Lda, Stage::Embed, Stage::Sentiment],
            Stage::Report => &[Stage::Analyze, Stage::Coherence],
        }
    }

    /// Artifact file written by the stage (the report stage writes a directory).
    pub fn artifact(self) -> &'static str {
        match self {
            Stage::Ingest => "corpus.json",
            Stage::Normalize => "tokens.json",
            Stage::Dedup => "dedup.json",
            Stage::Lda => "lda_model.json",
            Stage::Embed => "embedding.json",
            Stage::Coherence => "coherence.json",
            Stage::Sentiment => "sentiment.json",
            Stage::Analyze => "analysis.json",
            Stage::Report => REPORT_DIR,
        }
    }

    pub fn schema(self) -> String {
        format!("tweetlens.{}/v1", self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    stage: String,
    config_hash: String,
    payload: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestArtifact {
    pub corpus: Corpus,
    pub stats: CorpusStats,
    pub skipped_records: usize,
    pub filter_hashtags: Vec<String>,
    pub filter_no_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeArtifact {
    pub docs: Vec<TokenizedDoc>,
    pub emptied: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupArtifact {
    pub report: DedupReport,
    pub policy: PrunePolicy,
    /// Surviving non-empty documents, in corpus order.
    pub docs: Vec<TokenizedDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingArtifact {
    pub file: String,
    pub sha256: String,
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
    pub stats: TrainingStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentArtifact {
    pub lexicon_entries: usize,
    pub lexicon_skipped: usize,
    pub ranking: PolarWordRanking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisArtifact {
    pub affinity: AffinityMatrix,
    pub map: IntertopicMap,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config sections serialize")
}

pub struct Pipeline {
    config: PipelineConfig,
    hashes: RefCell<BTreeMap<Stage, String>>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Pipeline> {
        config.validate()?;
        Ok(Pipeline {
            config,
            hashes: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    pub fn artifact_path(&self, stage: Stage) -> PathBuf {
        self.out_dir().join(stage.artifact())
    }

    fn own_inputs(&self, stage: Stage) -> Result<serde_json::Value> {
        let c = &self.config;
        let optional_digest = |p: &Option<PathBuf>| p.as_deref().map(file_digest).transpose();
        Ok(match stage {
            Stage::Ingest => json!({ "corpus": file_digest(&c.paths.corpus)?, "ingest": to_value(&c.ingest) }),
            Stage::Normalize => json!({
                "normalize": to_value(&c.normalize),
                "stopwords": c.paths.stopwords.iter().map(|p| file_digest(p)).collect::<Result<Vec<_>>>()?,
                "lemmas": optional_digest(&c.paths.lemmas)?,
            }),
            Stage::Dedup => json!({ "dedup": to_value(&c.dedup) }),
            Stage::Lda => json!({ "lda": to_value(&c.lda) }),
            Stage::Embed => json!({ "embedding": to_value(&c.embedding) }),
            Stage::Coherence => json!({ "coherence": to_value(&c.coherence) }),
            Stage::Sentiment => json!({
                "lexicon": optional_digest(&c.paths.lexicon)?,
                "sentiment": to_value(&c.sentiment),
            }),
            Stage::Analyze => json!({ "analysis": to_value(&c.analysis) }),
            Stage::Report => json!({ "report": REPORT_SCHEMA }),
        })
    }

    /// Lineage hash the current config implies for `stage`.
    pub fn stage_hash(&self, stage: Stage) -> Result<String> {
        if let Some(h) = self.hashes.borrow().get(&stage) {
            return Ok(h.clone());
        }
        let parents = stage
            .parents()
            .iter()
            .map(|&p| self.stage_hash(p))
            .collect::<Result<Vec<_>>>()?;
        let material = json!({
            "stage": stage.name(),
            "inputs": self.own_inputs(stage)?,
            "parents": parents,
        });
        let hash = sha256_hex(material.to_string().as_bytes());
        self.hashes.borrow_mut().insert(stage, hash.clone());
        Ok(hash)
    }

    fn write_artifact<T: Serialize>(&self, stage: Stage, payload: &T) -> Result<PathBuf> {
        let dir = self.out_dir();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let envelope = Envelope {
            schema: stage.schema(),
            stage: stage.name().to_string(),
            config_hash: self.stage_hash(stage)?,
            payload,
        };
        let path = self.artifact_path(stage);
        let text = serde_json::to_string(&envelope).map_err(|e| Error::format("artifact", e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        log::info!("{stage}: wrote {}", path.display());
        Ok(path)
    }

    /// Reads a stage artifact, refusing it when its lineage differs from the current config.
    pub fn read_artifact<T: DeserializeOwned>(&self, stage: Stage) -> Result<T> {
        let path = self.artifact_path(stage);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let envelope: Envelope<T> =
            serde_json::from_str(&text).map_err(|e| Error::format("artifact", format!("{}: {e}", path.display())))?;
        if envelope.schema != stage.schema() {
            return Err(Error::format(
                "artifact",
                format!("{} has schema {:?}, expected {:?}", path.display(), envelope.schema, stage.schema()),
            ));
        }
        let expected = self.stage_hash(stage)?;
        if envelope.config_hash != expected {
            return Err(Error::Lineage {
                path,
                expected,
                found: envelope.config_hash,
            });
        }
        Ok(envelope.payload)
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        log::info!("{stage}: start");
        match stage {
            Stage::Ingest => self.write_artifact(stage, &self.ingest()?),
            Stage::Normalize => self.write_artifact(stage, &self.normalize()?),
            Stage::Dedup => self.write_artifact(stage, &self.dedup()?),
            Stage::Lda => self.write_artifact(stage, &self.lda()?),
            Stage::Embed => self.embed(),
            Stage::Coherence => self.write_artifact(stage, &self.coherence()?),
            Stage::Sentiment => self.write_artifact(stage, &self.sentiment()?),
            Stage::Analyze => self.write_artifact(stage, &self.analyze()?),
            Stage::Report => self.report().map(|_| self.out_dir().join(REPORT_DIR)),
        }?;
        Ok(())
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<()> {
        Stage::ALL.iter().try_for_each(|&s| self.run(s))
    }

    fn ingest(&self) -> Result<IngestArtifact> {
        let c = &self.config;
        let loaded = load_corpus(&c.paths.corpus, &c.ingest.schema)?;
        let mut tags: Vec<String> = c.ingest.hashtags.iter().map(|t| t.to_lowercase()).collect();
        tags.sort();
        tags.dedup();
        let (corpus, no_match) = if tags.is_empty() {
            (loaded.corpus, false)
        } else {
            let set = tags.iter().cloned().collect();
            let out = filter_by_hashtags(&loaded.corpus, &set)?;
            (out.corpus, out.no_match)
        };
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus { skipped: loaded.skipped });
        }
        Ok(IngestArtifact {
            stats: corpus_stats(&corpus),
            corpus,
            skipped_records: loaded.skipped,
            filter_hashtags: tags,
            filter_no_match: no_match,
        })
    }

    fn normalize_config(&self) -> Result<NormalizeConfig> {
        let c = &self.config;
        let mut nc = NormalizeConfig::with_default_stopwords(c.normalize.clone())?;
        for (i, p) in c.paths.stopwords.iter().enumerate() {
            nc.load_stopword_file(&format!("extra{i}"), p)?;
        }
        if let Some(p) = &c.paths.lemmas {
            nc.load_lemma_file(p)?;
        }
        Ok(nc)
    }

    fn normalize(&self) -> Result<NormalizeArtifact> {
        let ingest: IngestArtifact = self.read_artifact(Stage::Ingest)?;
        let docs = normalize_pipeline(&ingest.corpus, &self.normalize_config()?)?;
        let emptied = docs.iter().filter(|d| d.emptied).count();
        Ok(NormalizeArtifact { docs, emptied })
    }

    fn dedup(&self) -> Result<DedupArtifact> {
        let ingest: IngestArtifact = self.read_artifact(Stage::Ingest)?;
        let normalized: NormalizeArtifact = self.read_artifact(Stage::Normalize)?;
        let policy = self.config.dedup.policy;
        let report = find_repetition_clusters(&normalized.docs, &ingest.corpus.author_lookup(), &self.config.dedup.params())?;
        let kept: HashSet<String> = prune_corpus(&ingest.corpus, &report, policy)?
            .documents
            .into_iter()
            .map(|d| d.id)
            .collect();
        let docs = normalized
            .docs
            .into_iter()
            .filter(|d| !d.tokens.is_empty() && kept.contains(&d.doc_id))
            .collect::<Vec<_>>();
        if docs.is_empty() {
            return Err(Error::EmptyCorpus { skipped: 0 });
        }
        Ok(DedupArtifact { report, policy, docs })
    }

    fn lda(&self) -> Result<TopicModel> {
        let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
        let l = &self.config.lda;
        let vocab = build_vocab(&dedup.docs, l.min_df, l.max_df_ratio)?;
        train_lda(&dedup.docs, &vocab, &l.params())
    }

    fn embed(&self) -> Result<PathBuf> {
        let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
        let e = &self.config.embedding;
        let (model, stats) = train_skipgram(&dedup.docs, &e.config(), e.seed)?;
        let bin = self.out_dir().join(EMBEDDING_BIN);
        fs::create_dir_all(self.out_dir()).map_err(|err| Error::io(self.out_dir(), err))?;
        model.save(&bin)?;
        let artifact = EmbeddingArtifact {
            file: EMBEDDING_BIN.to_string(),
            sha256: file_digest(&bin)?,
            vocab_size: model.len(),
            dim: model.dim,
            seed: model.seed,
            stats,
        };
        self.write_artifact(Stage::Embed, &artifact)
    }

    /// Loads the trained embedding and checks it against its metadata artifact.
    pub fn load_embedding(&self) -> Result<EmbeddingModel> {
        let meta: EmbeddingArtifact = self.read_artifact(Stage::Embed)?;
        let bin = self.out_dir().join(&meta.file);
        let found = file_digest(&bin)?;
        if found != meta.sha256 {
            return Err(Error::Lineage {
                path: bin,
                expected: meta.sha256,
                found,
            });
        }
        EmbeddingModel::load(&bin)
    }

    fn coherence(&self) -> Result<CoherenceSummary> {
        let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
        let model: TopicModel = self.read_artifact(Stage::Lda)?;
        let c = &self.config.coherence;
        let top_n = c.top_n.min(model.vocab_size());
        let scores = cv_coherence(&model, &dedup.docs, top_n, c.window)?;
        let sweep = if c.sweep_ks.is_empty() {
            Vec::new()
        } else {
            let l = &self.config.lda;
            coherence_sweep(&dedup.docs, l.min_df, l.max_df_ratio, &c.sweep_ks, &l.params(), top_n, c.window)?
        };
        Ok(CoherenceSummary { scores, sweep })
    }

    fn sentiment(&self) -> Result<SentimentArtifact> {
        let path = self
            .config
            .paths
            .lexicon
            .as_ref()
            .ok_or_else(|| Error::config("paths.lexicon", "the sentiment stage needs a lexicon file"))?;
        let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
        let load = parse_lexicon(path)?;
        let ranking = top_polar_words(&dedup.docs, &load.lexicon, self.config.sentiment.top_n)?;
        Ok(SentimentArtifact {
            lexicon_entries: load.lexicon.entries.len(),
            lexicon_skipped: load.skipped,
            ranking,
        })
    }

    fn analyze(&self) -> Result<AnalysisArtifact> {
        let model: TopicModel = self.read_artifact(Stage::Lda)?;
        let sentiment: SentimentArtifact = self.read_artifact(Stage::Sentiment)?;
        let a = &self.config.analysis;
        let opinions = match &a.opinions {
            Some(list) => list.clone(),
            None => sentiment.ranking.lemmas(),
        };
        if opinions.is_empty() {
            return Err(Error::invalid(
                "no opinion lemmas: the polar-word ranking is empty and analysis.opinions is unset",
            ));
        }
        let affinity = match a.mode {
            AffinityMode::Embedding => {
                let emb = self.load_embedding()?;
                opinion_topic_affinity(&model, AffinitySpace::Embedding(&emb), &opinions, a.top_n, a.exclude_self)?
            }
            AffinityMode::Bow => {
                let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
                opinion_topic_affinity(&model, AffinitySpace::Bow(&dedup.docs), &opinions, a.top_n, a.exclude_self)?
            }
        };
        let map = build_intertopic_map(&model)?;
        Ok(AnalysisArtifact { affinity, map })
    }

    /// Assembles the report from stored artifacts and writes the bundle.
    pub fn build_report(&self) -> Result<Report> {
        let ingest: IngestArtifact = self.read_artifact(Stage::Ingest)?;
        let dedup: DedupArtifact = self.read_artifact(Stage::Dedup)?;
        let model: TopicModel = self.read_artifact(Stage::Lda)?;
        let coherence: CoherenceSummary = self.read_artifact(Stage::Coherence)?;
        let sentiment: SentimentArtifact = self.read_artifact(Stage::Sentiment)?;
        let analysis: AnalysisArtifact = self.read_artifact(Stage::Analyze)?;
        self.load_embedding()?;

        let top_n = self.config.analysis.top_n;
        let prevalence = model.topic_prevalence();
        let topics = (0..model.k)
            .map(|k| {
                Ok(TopicSummary {
                    id: k,
                    prevalence: prevalence[k],
                    coherence: coherence.scores.per_topic[k],
                    top_words: model.top_words(k, top_n)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Report {
            schema: REPORT_SCHEMA.to_string(),
            config_hash: self.stage_hash(Stage::Report)?,
            seeds: Seeds {
                lda: self.config.lda.seed,
                embedding: self.config.embedding.seed,
            },
            corpus: CorpusSummary {
                stats: ingest.stats,
                skipped_records: ingest.skipped_records,
                filter_hashtags: ingest.filter_hashtags,
                filter_no_match: ingest.filter_no_match,
            },
            dedup: DedupSummary {
                clusters: dedup.report.clusters.len(),
                documents_removed: dedup.report.total_removed,
                largest_clusters: dedup.report.clusters.iter().take(10).cloned().collect(),
                near_duplicate_pairs: dedup.report.near_dup_pairs.len(),
                documents_kept: dedup.docs.len(),
            },
            topics,
            coherence,
            polar_words: sentiment.ranking,
            affinity: analysis.affinity,
            intertopic_map: analysis.map,
            figures: BUNDLE_FILES[1..].iter().map(|s| s.to_string()).collect(),
        })
    }

    fn report(&self) -> Result<Vec<PathBuf>> {
        let report = self.build_report()?;
        emit_report(&report, self.out_dir().join(REPORT_DIR))
    }
}
