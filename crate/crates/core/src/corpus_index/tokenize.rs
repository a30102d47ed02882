use std::collections::HashMap;
use std::io::BufRead;

use super::{IndexError, TokenId, SENTINEL};

/// Options applied while splitting raw text into word tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizeOptions {
    /// Fold every token to lowercase before interning. Off by default.
    pub lowercase: bool,
}

/// Bijective map between token strings and dense identifiers.
///
/// Identifier 0 is reserved for the document-boundary sentinel and has no
/// string form; real tokens are numbered from 1 in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, TokenId>,
    // index 0 is the sentinel placeholder
    strings: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self {
            ids: HashMap::new(),
            strings: vec![String::new()],
        }
    }

    /// Rebuilds a vocabulary from tokens listed in identifier order (ids 1..).
    pub fn from_ordered(tokens: Vec<String>) -> Result<Self, IndexError> {
        let mut vocab = Self::new();
        for token in tokens {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(IndexError::Format(format!(
                    "vocabulary entry {token:?} is empty or contains whitespace"
                )));
            }
            if vocab.ids.contains_key(&token) {
                return Err(IndexError::Format(format!("duplicate vocabulary entry {token:?}")));
            }
            vocab.intern(&token);
        }
        Ok(vocab)
    }

    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.strings.len() as TokenId;
        self.strings.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        if id == SENTINEL {
            return None;
        }
        self.strings.get(id as usize).map(String::as_str)
    }

    /// Number of real tokens (the sentinel is not counted).
    pub fn len(&self) -> usize {
        self.strings.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real tokens in identifier order, starting at id 1.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.strings[1..].iter().map(String::as_str)
    }
}

/// Flat token-ID sequence; every document is followed by exactly one sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenCorpus {
    tokens: Vec<TokenId>,
    documents: usize,
    total_tokens: u64,
}

impl TokenCorpus {
    /// Builds a corpus from already-encoded documents. Empty documents are skipped.
    pub fn from_documents<I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: AsRef<[TokenId]>,
    {
        let mut tokens = Vec::new();
        let mut documents = 0;
        for doc in docs {
            let doc = doc.as_ref();
            if doc.is_empty() {
                continue;
            }
            debug_assert!(!doc.contains(&SENTINEL));
            tokens.extend_from_slice(doc);
            tokens.push(SENTINEL);
            documents += 1;
        }
        let total_tokens = (tokens.len() - documents) as u64;
        Self {
            tokens,
            documents,
            total_tokens,
        }
    }

    /// Validates a raw sentinel-terminated sequence (used when loading from disk).
    pub(crate) fn from_raw(tokens: Vec<TokenId>) -> Result<Self, IndexError> {
        if !tokens.is_empty() && tokens.last() != Some(&SENTINEL) {
            return Err(IndexError::Format("token array does not end with a sentinel".into()));
        }
        let mut documents = 0;
        let mut prev_sentinel = true;
        for &t in &tokens {
            if t == SENTINEL {
                if prev_sentinel {
                    return Err(IndexError::Format("empty document in token array".into()));
                }
                documents += 1;
            }
            prev_sentinel = t == SENTINEL;
        }
        let total_tokens = (tokens.len() - documents) as u64;
        Ok(Self {
            tokens,
            documents,
            total_tokens,
        })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    /// |C|: number of non-sentinel tokens.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// True when every character is ASCII punctuation.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_punctuation())
}

/// Splits one line of text into word tokens.
///
/// The line is split on Unicode whitespace; each leading or trailing ASCII
/// punctuation character of a chunk becomes its own token.
pub fn split_tokens(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let core_start = chunk
            .char_indices()
            .find(|(_, c)| !c.is_ascii_punctuation())
            .map(|(i, _)| i);
        let Some(start) = core_start else {
            // all punctuation; ASCII so byte-wise splitting is safe
            out.extend((0..chunk.len()).map(|i| &chunk[i..i + 1]));
            continue;
        };
        let end = chunk
            .char_indices()
            .rev()
            .find(|(_, c)| !c.is_ascii_punctuation())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(chunk.len());
        out.extend((0..start).map(|i| &chunk[i..i + 1]));
        out.push(&chunk[start..end]);
        out.extend((end..chunk.len()).map(|i| &chunk[i..i + 1]));
    }
    out
}

/// Tokenizes a line into owned tokens, applying `opts`.
pub fn tokenize_line(line: &str, opts: TokenizeOptions) -> Vec<String> {
    split_tokens(line)
        .into_iter()
        .map(|t| if opts.lowercase { t.to_lowercase() } else { t.to_owned() })
        .collect()
}

/// Reads one document per line and encodes it against a fresh vocabulary.
///
/// Blank lines are not documents and are skipped.
pub fn tokenize_corpus<R: BufRead>(
    mut input: R,
    opts: TokenizeOptions,
) -> Result<(TokenCorpus, Vocabulary), IndexError> {
    let mut vocab = Vocabulary::new();
    let mut docs: Vec<Vec<TokenId>> = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|_| IndexError::InvalidUtf8 { line: line_no })?;
        let doc: Vec<TokenId> = tokenize_line(line, opts)
            .iter()
            .map(|t| vocab.intern(t))
            .collect();
        if !doc.is_empty() {
            docs.push(doc);
        }
    }
    Ok((TokenCorpus::from_documents(docs), vocab))
}
