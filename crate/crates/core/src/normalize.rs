//! Text normalization: tokenization, noise stripping, stopword removal and
//! dictionary lemmatization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const PORTUGUESE_STOPWORDS: &str = include_str!("../data/stopwords/pt.txt");
pub const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords/en.txt");

/// Lemma chains longer than this are treated as cycles.
const MAX_LEMMA_CHAIN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Set when normalization removed every token.
    #[serde(default)]
    pub emptied: bool,
}

/// Switches for [`strip_noise`]; serializable so pipeline configs can carry them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeOptions {
    pub strip_urls: bool,
    pub strip_media_tags: bool,
    pub keep_hashtags: bool,
    pub drop_mentions: bool,
    pub fold_diacritics: bool,
    pub min_token_len: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            strip_urls: true,
            strip_media_tags: true,
            keep_hashtags: true,
            drop_mentions: true,
            fold_diacritics: false,
            min_token_len: 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NormalizeConfig {
    pub options: NormalizeOptions,
    stopword_sets: BTreeMap<String, HashSet<String>>,
    stopwords: HashSet<String>,
    lemmas: HashMap<String, String>,
}

impl NormalizeConfig {
    pub fn new(options: NormalizeOptions) -> Result<Self> {
        if options.min_token_len == 0 {
            return Err(Error::config("normalize.min_token_len", "must be at least 1"));
        }
        Ok(NormalizeConfig {
            options,
            ..Default::default()
        })
    }

    /// Portuguese and English bundled stopwords, empty lemma dictionary.
    pub fn with_default_stopwords(options: NormalizeOptions) -> Result<Self> {
        let mut cfg = Self::new(options)?;
        cfg.add_stopword_list("pt", PORTUGUESE_STOPWORDS)?;
        cfg.add_stopword_list("en", ENGLISH_STOPWORDS)?;
        Ok(cfg)
    }

    /// Adds a named stopword set from one-word-per-line text.
    pub fn add_stopword_list(&mut self, name: &str, text: &str) -> Result<()> {
        let mut set = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() {
                continue;
            }
            if word.to_lowercase() != word || word.contains(char::is_whitespace) {
                return Err(Error::format(
                    "stopword list",
                    format!("{name}:{}: `{word}` is not a lowercase single word", lineno + 1),
                ));
            }
            set.insert(self.fold(word));
        }
        self.stopwords.extend(set.iter().cloned());
        self.stopword_sets.insert(name.to_string(), set);
        Ok(())
    }

    pub fn load_stopword_file(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.add_stopword_list(name, &text)
    }

    /// Replaces the lemma dictionary with `surface<TAB>lemma` lines.
    ///
    /// Chains (`a -> b`, `b -> c`) are collapsed so lemmatization is a single
    /// lookup; lemmas must be lowercase single tokens.
    pub fn set_lemma_table(&mut self, text: &str) -> Result<()> {
        let mut raw = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| {
                Error::format("lemma table", format!("line {}: expected surface<TAB>lemma", lineno + 1))
            })?;
            let (surface, lemma) = (surface.trim(), lemma.trim());
            for word in [surface, lemma] {
                if word.is_empty()
                    || word.to_lowercase() != word
                    || !word.chars().all(is_word_char)
                {
                    return Err(Error::format(
                        "lemma table",
                        format!("line {}: `{word}` is not a lowercase token", lineno + 1),
                    ));
                }
            }
            raw.insert(self.fold(surface), self.fold(lemma));
        }
        let mut resolved = HashMap::with_capacity(raw.len());
        for (surface, lemma) in &raw {
            let mut current = lemma;
            let mut steps = 0;
            while let Some(next) = raw.get(current) {
                if next == current {
                    break;
                }
                steps += 1;
                if steps > MAX_LEMMA_CHAIN {
                    return Err(Error::format(
                        "lemma table",
                        format!("cycle through `{surface}`"),
                    ));
                }
                current = next;
            }
            resolved.insert(surface.clone(), current.clone());
        }
        self.lemmas = resolved;
        Ok(())
    }

    pub fn load_lemma_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.set_lemma_table(&text)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn stopword_set_names(&self) -> impl Iterator<Item = &str> {
        self.stopword_sets.keys().map(String::as_str)
    }

    pub fn lemma(&self, token: &str) -> Option<&str> {
        self.lemmas.get(token).map(String::as_str)
    }

    fn fold(&self, word: &str) -> String {
        if self.options.fold_diacritics {
            fold_diacritics(word)
        } else {
            word.to_string()
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.")
}

fn is_media(token: &str) -> bool {
    token.starts_with("pic.twitter.com/") || token.contains("twimg.com/")
}

/// Removes combining marks after canonical decomposition (`amanhã` -> `amanha`).
pub fn fold_diacritics(word: &str) -> String {
    word.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

/// Splits text into lowercase tokens.
///
/// Whitespace separates chunks; URLs and `pic.twitter.com` media links are kept
/// whole (minus trailing punctuation). Inside other chunks, runs of
/// alphanumerics form tokens, and a `#` or `@` directly in front of a run is
/// kept as part of it.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = chunk.to_lowercase();
        if is_url(&chunk) || is_media(&chunk) {
            let trimmed = chunk.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '/');
            tokens.push(trimmed.to_string());
            continue;
        }
        let mut current = String::new();
        let mut pending_sigil: Option<char> = None;
        for c in chunk.chars() {
            if is_word_char(c) {
                if current.is_empty() {
                    if let Some(sigil) = pending_sigil.take() {
                        current.push(sigil);
                    }
                }
                current.push(c);
            } else {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                pending_sigil = matches!(c, '#' | '@').then_some(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

pub fn strip_noise(tokens: Vec<String>, config: &NormalizeConfig) -> Vec<String> {
    let opts = &config.options;
    tokens
        .into_iter()
        .filter_map(|token| {
            if is_url(&token) {
                return (!opts.strip_urls).then_some(token);
            }
            if is_media(&token) {
                return (!opts.strip_media_tags).then_some(token);
            }
            let token = if let Some(tag) = token.strip_prefix('#') {
                if !opts.keep_hashtags {
                    return None;
                }
                tag.to_string()
            } else if token.starts_with('@') && opts.drop_mentions {
                return None;
            } else {
                token
            };
            let token = if opts.fold_diacritics {
                fold_diacritics(&token)
            } else {
                token
            };
            (token.chars().count() >= opts.min_token_len).then_some(token)
        })
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &NormalizeConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !config.is_stopword(t))
        .collect()
}

pub fn lemmatize(tokens: Vec<String>, config: &NormalizeConfig) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| match config.lemma(&t) {
            Some(lemma) => lemma.to_string(),
            None => t,
        })
        .collect()
}

/// Full normalization of one text.
///
/// A lemma can land on a stopword or fall under the length limit, so those
/// filters are applied once more after lemmatization.
pub fn normalize_text(text: &str, config: &NormalizeConfig) -> Vec<String> {
    let tokens = strip_noise(tokenize(text), config);
    let tokens = lemmatize(remove_stopwords(tokens, config), config);
    let min_len = config.options.min_token_len;
    tokens
        .into_iter()
        .filter(|t| t.chars().count() >= min_len && !config.is_stopword(t))
        .collect()
}

pub fn normalize_pipeline(corpus: &Corpus, config: &NormalizeConfig) -> Result<Vec<TokenizedDoc>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus { skipped: 0 });
    }
    let docs: Vec<TokenizedDoc> = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let tokens = normalize_text(&doc.text, config);
            TokenizedDoc {
                doc_id: doc.id.clone(),
                emptied: tokens.is_empty(),
                tokens,
            }
        })
        .collect();
    let emptied = docs.iter().filter(|d| d.emptied).count();
    if emptied > 0 {
        log::warn!("{emptied} documents have no tokens after normalization");
    }
    Ok(docs)
}
