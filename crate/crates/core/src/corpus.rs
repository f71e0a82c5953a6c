//! Line-delimited JSON tweet corpora: loading, validation, hashtag filtering
//! and summary statistics.
//!
//! Each line of a corpus file is one JSON object. Only `id` and `text` are
//! required; field names are remapped through a [`FieldMapping`] so exports
//! from different collectors can be read without a conversion step.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::normalize::tokenize;

/// The six hashtags tracked during the 2018 Brazilian runoff campaign week,
/// lowercased and without accents or the `#` sigil.
pub const ELECTION_HASHTAGS: [&str; 6] = [
    "b17",
    "bolsonaro17",
    "bolsonaropresidente",
    "elesim",
    "haddadnaoecristao",
    "nasruascombolsonaro",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub author_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_hint: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub source_meta: BTreeMap<String, String>,
}

/// Maps record keys in the input file onto [`Document`] fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapping {
    pub id: String,
    pub text: String,
    pub author_id: String,
    pub created_at: String,
    pub hashtags: String,
    pub lang_hint: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            id: "id".into(),
            text: "text".into(),
            author_id: "author_id".into(),
            created_at: "created_at".into(),
            hashtags: "hashtags".into(),
            lang_hint: "lang_hint".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    /// Lines that were not valid records (blank lines are not counted).
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub corpus: Corpus,
    /// Set when no document matched the filter.
    pub no_match: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub distinct_authors: usize,
    /// Keyed by UTC calendar day (`YYYY-MM-DD`); undated documents are not counted.
    pub per_day: BTreeMap<String, usize>,
    pub per_hashtag: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Corpus {
            documents,
            source_meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    /// `doc id -> author id`, used to count distinct authors in repetition clusters.
    pub fn author_lookup(&self) -> HashMap<String, String> {
        self.documents
            .iter()
            .map(|d| (d.id.clone(), d.author_id.clone()))
            .collect()
    }
}

/// Lowercases and strips the `#` sigil. Returns `None` for tags that are empty
/// or contain whitespace.
pub fn normalize_hashtag(raw: &str) -> Option<String> {
    let tag = raw.trim().trim_start_matches('#').to_lowercase();
    if tag.is_empty() || tag.contains(char::is_whitespace) || tag.contains('#') {
        None
    } else {
        Some(tag)
    }
}

fn hashtags_from_text(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    for token in tokenize(text) {
        if token.starts_with('#') {
            if let Some(tag) = normalize_hashtag(&token) {
                if !tags.contains(&tag) {
                    tags.push(tag);
                }
            }
        }
    }
    tags
}

fn parse_record(line: &str, schema: &FieldMapping) -> Option<Document> {
    let value: Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;
    let id = string_field(obj, &schema.id)?;
    let text = string_field(obj, &schema.text)?;
    if id.trim().is_empty() || text.trim().is_empty() {
        return None;
    }
    let author_id = match obj.get(&schema.author_id) {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return None,
    };
    let created_at = match obj.get(&schema.created_at) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(DateTime::parse_from_rfc3339(s).ok()?.with_timezone(&Utc)),
        Some(_) => return None,
    };
    let hashtags = match obj.get(&schema.hashtags) {
        None | Some(Value::Null) => hashtags_from_text(&text),
        Some(Value::Array(items)) => {
            let mut tags = Vec::with_capacity(items.len());
            for item in items {
                let tag = normalize_hashtag(item.as_str()?)?;
                if !tags.contains(&tag) {
                    tags.push(tag);
                }
            }
            tags
        }
        Some(_) => return None,
    };
    let lang_hint = match obj.get(&schema.lang_hint) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.to_lowercase()),
        Some(_) => return None,
    };
    Some(Document {
        id,
        author_id,
        created_at,
        text,
        hashtags,
        lang_hint,
    })
}

fn string_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Parses corpus records from an in-memory string. See [`load_corpus`].
pub fn parse_corpus(input: &str, schema: &FieldMapping) -> Result<LoadOutcome> {
    let lines: Vec<&str> = input.lines().filter(|l| !l.trim().is_empty()).collect();
    let parsed: Vec<Option<Document>> = lines
        .par_iter()
        .map(|line| parse_record(line, schema))
        .collect();
    let skipped = parsed.iter().filter(|d| d.is_none()).count();
    let documents: Vec<Document> = parsed.into_iter().flatten().collect();
    if documents.is_empty() {
        return Err(Error::EmptyCorpus { skipped });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed corpus lines");
    }
    Ok(LoadOutcome {
        corpus: Corpus::new(documents)?,
        skipped,
    })
}

/// Loads a line-delimited JSON corpus. Malformed lines are counted in
/// [`LoadOutcome::skipped`]; duplicate ids and files without any valid record
/// are errors.
pub fn load_corpus(path: impl AsRef<Path>, schema: &FieldMapping) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = String::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        input.push_str(&line);
        input.push('\n');
    }
    parse_corpus(&input, schema)
}

/// Writes the corpus with the default field names, one document per line.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in &corpus.documents {
        let line = serde_json::to_string(doc).expect("documents always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Keeps documents carrying at least one of `tags`, in their original order.
pub fn filter_by_hashtags(corpus: &Corpus, tags: &BTreeSet<String>) -> Result<FilterOutcome> {
    if tags.is_empty() {
        return Err(Error::invalid("hashtag filter needs at least one tag"));
    }
    let mut wanted = BTreeSet::new();
    for tag in tags {
        let norm = normalize_hashtag(tag)
            .ok_or_else(|| Error::invalid(format!("invalid hashtag `{tag}`")))?;
        wanted.insert(norm);
    }
    let documents: Vec<Document> = corpus
        .documents
        .iter()
        .filter(|d| d.hashtags.iter().any(|h| wanted.contains(h)))
        .cloned()
        .collect();
    let no_match = documents.is_empty();
    if no_match {
        log::warn!("hashtag filter matched no documents");
    }
    let mut source_meta = corpus.source_meta.clone();
    source_meta.insert(
        "filter.hashtags".into(),
        wanted.iter().cloned().collect::<Vec<_>>().join(","),
    );
    Ok(FilterOutcome {
        corpus: Corpus {
            documents,
            source_meta,
        },
        no_match,
    })
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut authors = BTreeSet::new();
    let mut per_day = BTreeMap::new();
    let mut per_hashtag = BTreeMap::new();
    for doc in &corpus.documents {
        if !doc.author_id.is_empty() {
            authors.insert(doc.author_id.as_str());
        }
        if let Some(ts) = doc.created_at {
            *per_day.entry(ts.format("%Y-%m-%d").to_string()).or_insert(0) += 1;
        }
        for tag in &doc.hashtags {
            *per_hashtag.entry(tag.clone()).or_insert(0) += 1;
        }
    }
    CorpusStats {
        documents: corpus.len(),
        distinct_authors: authors.len(),
        per_day,
        per_hashtag,
    }
}
