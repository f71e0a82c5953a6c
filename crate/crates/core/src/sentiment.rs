//! SentiLex-style polarity lexicon and the most frequent polar words of a corpus.
//!
//! Lexicon lines look like
//!
//! ```text
//! vencer.PoS=V;TG=HUM:N0;POL:N0=1;ANOT=MAN
//! abafada,abafado.PoS=Adj;FLEX=fs;TG=HUM:N0;POL:N0=-1;ANOT=JALC
//! ```
//!
//! Heads before `.PoS=` are comma separated and may contain spaces
//! (multi-word expressions). Only the `POL:N0` polarity is read.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::TokenizedDoc;

pub const FIXTURE_LEXICON: &str = include_str!("../data/fixture/lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub fn value(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Neutral => 0,
            Polarity::Positive => 1,
        }
    }

    pub fn is_polar(self) -> bool {
        self != Polarity::Neutral
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        p.value()
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Polarity::Negative),
            0 => Ok(Polarity::Neutral),
            1 => Ok(Polarity::Positive),
            other => Err(format!("polarity {other} is not -1, 0 or 1")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub pos: String,
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    pub entries: BTreeMap<String, Polarity>,
    pub meta: BTreeMap<String, EntryMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconLoad {
    pub lexicon: SentimentLexicon,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarWord {
    pub lemma: String,
    pub polarity: Polarity,
    pub frequency: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarWordRanking {
    pub ranked: Vec<PolarWord>,
}

impl PolarWordRanking {
    pub fn lemmas(&self) -> Vec<String> {
        self.ranked.iter().map(|w| w.lemma.clone()).collect()
    }
}

fn parse_line(line: &str) -> Option<(Vec<String>, Polarity, EntryMeta)> {
    let (heads, attrs) = line.split_once(".PoS=")?;
    let mut pos = String::new();
    let mut target = String::new();
    let mut polarity = None;
    for (i, field) in attrs.split(';').enumerate() {
        if i == 0 {
            pos = field.trim().to_string();
            continue;
        }
        let (key, value) = field.split_once('=')?;
        match key.trim() {
            "TG" => target = value.trim().to_string(),
            "POL:N0" => polarity = Some(Polarity::try_from(value.trim().parse::<i8>().ok()?).ok()?),
            _ => {}
        }
    }
    let heads: Vec<String> = heads
        .split(',')
        .map(|h| h.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|h| !h.is_empty())
        .collect();
    if heads.is_empty() || pos.is_empty() {
        return None;
    }
    Some((heads, polarity?, EntryMeta { pos, target }))
}

pub fn parse_lexicon_str(text: &str) -> Result<LexiconLoad> {
    let mut lexicon = SentimentLexicon::default();
    let mut skipped = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Some((heads, polarity, meta)) => {
                for head in heads {
                    lexicon.entries.entry(head.clone()).or_insert(polarity);
                    lexicon.meta.entry(head).or_insert_with(|| meta.clone());
                }
            }
            None => skipped += 1,
        }
    }
    if lexicon.entries.is_empty() {
        return Err(Error::EmptyLexicon { skipped });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unparseable lexicon lines");
    }
    Ok(LexiconLoad { lexicon, skipped })
}

pub fn parse_lexicon(path: impl AsRef<Path>) -> Result<LexiconLoad> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon_str(&text)
}

/// Exact lookup; `None` when the lemma is not in the lexicon.
pub fn classify_token(lexicon: &SentimentLexicon, lemma: &str) -> Option<Polarity> {
    lexicon.entries.get(lemma).copied()
}

/// Frequencies of every polar lexicon entry in the corpus, including zero counts.
pub fn polar_frequencies(docs: &[TokenizedDoc], lexicon: &SentimentLexicon) -> BTreeMap<String, u64> {
    let polar: Vec<(&str, Vec<&str>)> = lexicon
        .entries
        .iter()
        .filter(|(_, p)| p.is_polar())
        .map(|(lemma, _)| (lemma.as_str(), lemma.split(' ').collect()))
        .collect();
    let single: HashMap<&str, usize> = polar
        .iter()
        .enumerate()
        .filter(|(_, (_, words))| words.len() == 1)
        .map(|(i, (lemma, _))| (*lemma, i))
        .collect();
    let phrases: Vec<usize> = (0..polar.len()).filter(|&i| polar[i].1.len() > 1).collect();
    let counts = docs
        .par_iter()
        .fold(
            || vec![0u64; polar.len()],
            |mut acc, doc| {
                for tok in &doc.tokens {
                    if let Some(&i) = single.get(tok.as_str()) {
                        acc[i] += 1;
                    }
                }
                for &i in &phrases {
                    let words = &polar[i].1;
                    if doc.tokens.len() >= words.len() {
                        acc[i] += doc
                            .tokens
                            .windows(words.len())
                            .filter(|w| w.iter().zip(words).all(|(a, b)| a == b))
                            .count() as u64;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; polar.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    polar.iter().zip(counts).map(|((lemma, _), c)| (lemma.to_string(), c)).collect()
}

/// The `n` most frequent polar lemmas, ties by ascending lemma. Neutral and
/// unknown lemmas never appear; lemmas that do not occur are not ranked.
pub fn top_polar_words(docs: &[TokenizedDoc], lexicon: &SentimentLexicon, n: usize) -> Result<PolarWordRanking> {
    if n == 0 {
        return Err(Error::invalid("top_polar_words requires n >= 1"));
    }
    let mut counted: Vec<(String, u64)> = polar_frequencies(docs, lexicon)
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .collect();
    counted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if counted.is_empty() {
        log::warn!("no polar lexicon words occur in the corpus");
    }
    Ok(PolarWordRanking {
        ranked: counted
            .into_iter()
            .take(n)
            .map(|(lemma, frequency)| PolarWord {
                polarity: lexicon.entries[&lemma],
                lemma,
                frequency,
            })
            .collect(),
    })
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

    fn lexicon() -> SentimentLexicon {
        parse_lexicon_str(FIXTURE_LEXICON).unwrap().lexicon
    }

    #[test]
    fn parses_pinned_grammar() {
        let load = parse_lexicon_str("vencer.PoS=V;TG=HUM:N0;POL:N0=1;ANOT=MAN").unwrap();
        assert_eq!(load.lexicon.entries["vencer"], Polarity::Positive);
        assert_eq!(load.lexicon.meta["vencer"].pos, "V");
        assert_eq!(load.lexicon.meta["vencer"].target, "HUM:N0");
        assert_eq!(load.skipped, 0);
    }

    #[test]
    fn neutral_entries_are_kept() {
        let load = parse_lexicon_str("olhar.PoS=V;TG=HUM:N0;POL:N0=0;ANOT=MAN").unwrap();
        assert_eq!(load.lexicon.entries["olhar"], Polarity::Neutral);
    }

    #[test]
    fn malformed_lines_counted() {
        let text = "vencer.PoS=V;TG=HUM:N0;POL:N0=1\n\
                    broken line\n\
                    x.PoS=V;TG=HUM:N0;POL:N0=2\n\
                    y.PoS=V;TG=HUM:N1;POL:N1=-1\n";
        let load = parse_lexicon_str(text).unwrap();
        assert_eq!(load.lexicon.entries.len(), 1);
        assert_eq!(load.skipped, 3);
    }

    #[test]
    fn multiple_heads_share_polarity() {
        let load = parse_lexicon_str("abafada,abafado.PoS=Adj;FLEX=fs;TG=HUM:N0;POL:N0=-1;ANOT=JALC").unwrap();
        assert_eq!(load.lexicon.entries["abafada"], Polarity::Negative);
        assert_eq!(load.lexicon.entries["abafado"], Polarity::Negative);
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        assert!(matches!(parse_lexicon_str("junk\n"), Err(Error::EmptyLexicon { skipped: 1 })));
    }

    #[test]
    fn classify() {
        let lex = lexicon();
        assert_eq!(classify_token(&lex, "torturar"), Some(Polarity::Negative));
        assert_eq!(classify_token(&lex, "vencer"), Some(Polarity::Positive));
        assert_eq!(classify_token(&lex, "xyzzy"), None);
        assert_eq!(classify_token(&lex, "olhar"), Some(Polarity::Neutral));
    }

    #[test]
    fn planted_frequencies() {
        let mut docs = Vec::new();
        docs.extend((0..7).map(|_| tdoc("ganhar voto")));
        docs.extend((0..5).map(|_| tdoc("perder olhar olhar olhar")));
        docs.extend((0..3).map(|_| tdoc("verdade")));
        let ranking = top_polar_words(&docs, &lexicon(), 2).unwrap();
        assert_eq!(ranking.lemmas(), ["ganhar", "perder"]);
        assert_eq!(ranking.ranked[0].frequency, 7);
        assert_eq!(ranking.ranked[1].frequency, 5);
    }

    #[test]
    fn ties_break_by_lemma() {
        let docs = vec![tdoc("vencer perder")];
        let ranking = top_polar_words(&docs, &lexicon(), 5).unwrap();
        assert_eq!(ranking.lemmas(), ["perder", "vencer"]);
    }

    #[test]
    fn zero_hits_is_empty() {
        let docs = vec![tdoc("nada aqui olhar")];
        assert!(top_polar_words(&docs, &lexicon(), 5).unwrap().ranked.is_empty());
    }

    #[test]
    fn multiword_expressions_count_ngrams() {
        let lex = parse_lexicon_str(
            "dar certo.PoS=IDIOM;TG=HUM:N0;POL:N0=1\ncerto.PoS=Adj;TG=HUM:N0;POL:N0=0\n",
        )
        .unwrap()
        .lexicon;
        let docs = vec![tdoc("vai dar certo sim dar certo"), tdoc("dar errado")];
        let ranking = top_polar_words(&docs, &lex, 5).unwrap();
        assert_eq!(ranking.ranked.len(), 1);
        assert_eq!(ranking.ranked[0].lemma, "dar certo");
        assert_eq!(ranking.ranked[0].frequency, 2);
    }
}
