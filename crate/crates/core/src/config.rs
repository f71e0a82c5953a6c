//! Pipeline configuration: one TOML file plus `section.key=value` overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AffinityMode;
use crate::corpus::{FieldMapping, ELECTION_HASHTAGS};
use crate::dedup::{DedupParams, PrunePolicy};
use crate::embeddings::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::lda::LdaParams;
use crate::normalize::NormalizeOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    /// Extra stopword files, merged with the bundled Portuguese and English lists.
    pub stopwords: Vec<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: "corpus.jsonl".into(),
            stopwords: Vec::new(),
            lemmas: None,
            lexicon: None,
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Keep only documents carrying one of these hashtags; empty disables filtering.
    pub hashtags: Vec<String>,
    pub schema: FieldMapping,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            hashtags: ELECTION_HASHTAGS.iter().map(|s| s.to_string()).collect(),
            schema: FieldMapping::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub min_size: usize,
    pub near_threshold: f64,
    pub shingle_k: usize,
    pub exhaustive_limit: usize,
    pub minhash_bands: usize,
    pub minhash_rows: usize,
    pub policy: PrunePolicy,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig::from_params(DedupParams::default())
    }
}

impl DedupConfig {
    pub fn params(&self) -> DedupParams {
        DedupParams {
            min_size: self.min_size,
            near_threshold: self.near_threshold,
            shingle_k: self.shingle_k,
            exhaustive_limit: self.exhaustive_limit,
            minhash_bands: self.minhash_bands,
            minhash_rows: self.minhash_rows,
        }
    }

    fn from_params(p: DedupParams) -> Self {
        DedupConfig {
            min_size: p.min_size,
            near_threshold: p.near_threshold,
            shingle_k: p.shingle_k,
            exhaustive_limit: p.exhaustive_limit,
            minhash_bands: p.minhash_bands,
            minhash_rows: p.minhash_rows,
            policy: PrunePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub track_likelihood: bool,
}

impl Default for LdaConfig {
    fn default() -> Self {
        let p = LdaParams::default();
        LdaConfig {
            k: p.k,
            alpha: p.alpha,
            beta: p.beta,
            iterations: p.iterations,
            seed: p.seed,
            min_df: 2,
            max_df_ratio: 0.5,
            track_likelihood: p.track_likelihood,
        }
    }
}

impl LdaConfig {
    pub fn params(&self) -> LdaParams {
        LdaParams {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            seed: self.seed,
            track_likelihood: self.track_likelihood,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceConfig {
    pub window: usize,
    pub top_n: usize,
    /// Topic counts to score in an optional model-selection sweep.
    pub sweep_ks: Vec<usize>,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            window: 110,
            top_n: 10,
            sweep_ks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub subsample_t: f64,
    pub seed: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let c = EmbeddingConfig::default();
        EmbeddingSection {
            dim: c.dim,
            window: c.window,
            negatives: c.negatives,
            epochs: c.epochs,
            initial_lr: c.initial_lr,
            min_count: c.min_count,
            subsample_t: c.subsample_t,
            seed: 23,
        }
    }
}

impl EmbeddingSection {
    pub fn config(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_lr: self.initial_lr,
            min_count: self.min_count,
            subsample_t: self.subsample_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub top_n: usize,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig { top_n: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Opinion lemmas to compare against topics; defaults to the polar-word ranking.
    pub opinions: Option<Vec<String>>,
    pub top_n: usize,
    pub mode: AffinityMode,
    pub exclude_self: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            opinions: None,
            top_n: 10,
            mode: AffinityMode::Embedding,
            exclude_self: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub normalize: NormalizeOptions,
    pub dedup: DedupConfig,
    pub lda: LdaConfig,
    pub coherence: CoherenceConfig,
    pub embedding: EmbeddingSection,
    pub sentiment: SentimentConfig,
    pub analysis: AnalysisConfig,
}

/// Fields whose default is "unset" and therefore absent from serialized defaults.
const OPTIONAL_FIELDS: &[(&str, &str)] = &[
    ("paths.lemmas", "unset (no lemmatization)"),
    ("paths.lexicon", "unset (required by sentiment)"),
    ("lda.alpha", "unset (50 / k)"),
    ("analysis.opinions", "unset (use the polar-word ranking)"),
];

impl PipelineConfig {
    /// Parses TOML, applies `key=value` overrides, then validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<PipelineConfig> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))?;
        for entry in overrides {
            apply_override(&mut table, entry)?;
        }
        let config: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = PipelineConfig::from_toml(&text, overrides)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.out_dir);
        self.paths.stopwords.iter_mut().for_each(fix);
        self.paths.lemmas.iter_mut().for_each(fix);
        self.paths.lexicon.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        if self.normalize.min_token_len == 0 {
            return Err(Error::config("normalize.min_token_len", "must be at least 1"));
        }
        self.dedup.params().validate()?;
        self.lda.params().validate()?;
        if self.lda.min_df == 0 {
            return Err(Error::config("lda.min_df", "must be at least 1"));
        }
        if !(self.lda.max_df_ratio > 0.0 && self.lda.max_df_ratio <= 1.0) {
            return Err(Error::config("lda.max_df_ratio", "must lie in (0, 1]"));
        }
        if self.coherence.window == 0 {
            return Err(Error::config("coherence.window", "must be at least 1"));
        }
        if self.coherence.top_n < 2 {
            return Err(Error::config("coherence.top_n", "must be at least 2"));
        }
        if self.coherence.sweep_ks.contains(&0) {
            return Err(Error::config("coherence.sweep_ks", "topic counts must be at least 1"));
        }
        self.embedding.config().validate()?;
        if self.sentiment.top_n == 0 {
            return Err(Error::config("sentiment.top_n", "must be at least 1"));
        }
        if self.analysis.top_n == 0 {
            return Err(Error::config("analysis.top_n", "must be at least 1"));
        }
        if matches!(&self.analysis.opinions, Some(o) if o.is_empty()) {
            return Err(Error::config("analysis.opinions", "must not be an empty list"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config always serializes")
    }

    /// `section.key = default` for every field, one per line.
    pub fn reference() -> String {
        let value = toml::Value::try_from(PipelineConfig::default()).expect("defaults serialize");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.extend(OPTIONAL_FIELDS.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        lines.sort();
        let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in lines {
            let _ = writeln!(out, "  {k:<width$} = {v}");
        }
        out
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn apply_override(table: &mut toml::Table, entry: &str) -> Result<()> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::config(entry, "override must look like section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    // Values parse as TOML when they can; anything else is taken as a string.
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("{part} is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
