//! Exact n-gram counting over a word-level suffix array.

mod format;
mod suffix;
mod tokenize;

use std::path::Path;

use thiserror::Error;

pub use format::{load_index, read_index, save_index, write_index, MAGIC, VERSION};
pub use tokenize::{
    is_punctuation, split_tokens, tokenize_corpus, tokenize_line, TokenCorpus, TokenizeOptions,
    Vocabulary,
};

pub type TokenId = u32;

/// Document-boundary marker; never produced for a real token.
pub const SENTINEL: TokenId = 0;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid UTF-8 on input line {line}")]
    InvalidUtf8 { line: usize },
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("count query must contain at least one token")]
    EmptyQuery,
    #[error("index format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable suffix-array index over a sentinel-separated token corpus.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    corpus: TokenCorpus,
    suffix_array: Vec<u64>,
    vocab: Vocabulary,
    word_tokens: u64,
}

/// Builds the suffix array for `corpus`. Deterministic for identical input.
pub fn build_index(corpus: TokenCorpus, vocab: Vocabulary) -> Result<CorpusIndex, IndexError> {
    if corpus.total_tokens() == 0 {
        return Err(IndexError::EmptyCorpus);
    }
    let suffix_array = suffix::build_suffix_array(corpus.tokens());
    Ok(CorpusIndex::from_parts(corpus, suffix_array, vocab))
}

impl CorpusIndex {
    pub(crate) fn from_parts(corpus: TokenCorpus, suffix_array: Vec<u64>, vocab: Vocabulary) -> Self {
        let punct: Vec<bool> = std::iter::once(true)
            .chain(vocab.tokens().map(is_punctuation))
            .collect();
        let word_tokens = corpus
            .tokens()
            .iter()
            .filter(|&&t| !punct[t as usize])
            .count() as u64;
        Self {
            corpus,
            suffix_array,
            vocab,
            word_tokens,
        }
    }

    /// Tokenizes `text` (one document per line) and indexes it.
    pub fn from_text<R: std::io::BufRead>(text: R, opts: TokenizeOptions) -> Result<Self, IndexError> {
        let (corpus, vocab) = tokenize_corpus(text, opts)?;
        build_index(corpus, vocab)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        load_index(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        save_index(self, path)
    }

    pub fn corpus(&self) -> &TokenCorpus {
        &self.corpus
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn suffix_array(&self) -> &[u64] {
        &self.suffix_array
    }

    /// |C|, the number of non-sentinel tokens, punctuation included.
    pub fn total_tokens(&self) -> u64 {
        self.corpus.total_tokens()
    }

    /// Non-sentinel tokens that are not pure ASCII punctuation.
    pub fn word_tokens(&self) -> u64 {
        self.word_tokens
    }

    fn window(&self, start: u64, len: usize) -> &[TokenId] {
        let text = self.corpus.tokens();
        let start = start as usize;
        &text[start..(start + len).min(text.len())]
    }

    /// Number of occurrences of `query` as a contiguous run inside one document.
    ///
    /// Two binary searches over the suffix array, O(|query| log |corpus|).
    /// Unknown identifiers and the sentinel itself simply count zero.
    pub fn count(&self, query: &[TokenId]) -> Result<u64, IndexError> {
        if query.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let vocab_len = self.vocab.len();
        if query.iter().any(|&t| t == SENTINEL || t as usize > vocab_len) {
            return Ok(0);
        }
        let q = query.len();
        let sa = &self.suffix_array;
        let lo = sa.partition_point(|&p| self.window(p, q) < query);
        let width = sa[lo..].partition_point(|&p| self.window(p, q) == query);
        Ok(width as u64)
    }

    /// Count of a word sequence; words missing from the vocabulary give 0.
    pub fn count_words<S: AsRef<str>>(&self, words: &[S]) -> Result<u64, IndexError> {
        match self.encode(words) {
            Some(ids) => self.count(&ids),
            None if words.is_empty() => Err(IndexError::EmptyQuery),
            None => Ok(0),
        }
    }

    pub fn contains(&self, query: &[TokenId]) -> Result<bool, IndexError> {
        Ok(self.count(query)? > 0)
    }

    pub fn contains_words<S: AsRef<str>>(&self, words: &[S]) -> Result<bool, IndexError> {
        Ok(self.count_words(words)? > 0)
    }

    /// Maps words to identifiers; `None` if any word is unknown or the input is empty.
    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Option<Vec<TokenId>> {
        if words.is_empty() {
            return None;
        }
        words.iter().map(|w| self.vocab.id(w.as_ref())).collect()
    }
}
