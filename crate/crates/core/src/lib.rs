//! Topic modeling and opinion mining for short political texts.
//!
//! The crate covers the whole path from a line-delimited tweet corpus to a
//! report: [`corpus`] loading and hashtag filtering, [`normalize`]
//! tokenization and lemmatization, [`dedup`] repetition pruning, [`lda`]
//! collapsed Gibbs topic models, [`coherence`] c_v scoring, [`embeddings`]
//! skip-gram vectors, [`sentiment`] lexicon polarity, and [`analysis`]
//! opinion/topic affinity with an intertopic distance map. [`pipeline`]
//! chains the stages with persisted, lineage-checked artifacts configured
//! through [`config`], and [`report`] writes the final bundle.

pub mod analysis;
pub mod coherence;
pub mod config;
pub mod corpus;
pub mod dedup;
pub mod embeddings;
pub mod error;
pub mod lda;
pub mod normalize;
pub mod pipeline;
pub mod report;
pub mod sentiment;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/corpus.md")]
    pub struct Corpus;
    #[doc = include_str!("../../../book/src/dedup.md")]
    pub struct Dedup;
    #[doc = include_str!("../../../book/src/topics.md")]
    pub struct Topics;
    #[doc = include_str!("../../../book/src/embeddings.md")]
    pub struct Embeddings;
    #[doc = include_str!("../../../book/src/opinions.md")]
    pub struct Opinions;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub struct Pipeline;
}
