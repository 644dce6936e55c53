//! Topic analysis of session text: multi-word merging, tokenization, LDA and
//! per-knowledge-point share allocation.

mod lda;
mod shares;
mod text;

pub use lda::{fit_lda, LdaConfig, TopicModelResult};
pub use shares::{allocate_shares, knowledge_point_shares, ShareAllocation, DEFAULT_TOP_M};
pub use text::{merge_multiword_terms, tokenize, Lexicon, StopWords, TokenizedContent};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("document {0} has no tokens")]
    EmptyDocument(usize),
    #[error("no documents to fit")]
    NoDocuments,
    #[error("{k} topics requested but the corpus has only {tokens} tokens")]
    TooFewTokens { k: usize, tokens: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("document index {index} out of range ({len} documents)")]
    DocumentIndex { index: usize, len: usize },
    #[error("malformed topic model: {0}")]
    Malformed(String),
}
