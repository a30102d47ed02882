//! Unigram and Stupid Backoff scores over exact corpus counts.

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus_index::{CorpusIndex, IndexError};
use crate::dataset::ContextItem;

pub const DEFAULT_ALPHA: f64 = 0.4;
pub const DEFAULT_MAX_ORDER: usize = 5;

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("n-gram order {order} outside 1..={max}")]
    InvalidOrder { order: usize, max: usize },
    #[error("backoff discount must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("maximum order must lie in 1..=8, got {0}")]
    InvalidMaxOrder(usize),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffConfig {
    pub alpha: f64,
    pub max_n: usize,
    /// Divide unigram counts by |C| including punctuation tokens (the
    /// word-count/token-count asymmetry) rather than by the word total.
    pub replicate_paper_unigram: bool,
}

impl Default for BackoffConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            max_n: DEFAULT_MAX_ORDER,
            replicate_paper_unigram: true,
        }
    }
}

impl BackoffConfig {
    pub fn validate(&self) -> Result<(), NGramError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(NGramError::InvalidAlpha(self.alpha));
        }
        if !(1..=8).contains(&self.max_n) {
            return Err(NGramError::InvalidMaxOrder(self.max_n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramScore {
    /// Effective order: the requested order, reduced when the context is short.
    pub order: usize,
    pub score: f64,
    /// Natural log of `score`.
    pub log_score: f64,
    /// Number of times the score was discounted by alpha.
    pub backoff_depth: usize,
}

impl NGramScore {
    fn new(order: usize, score: f64, backoff_depth: usize) -> Self {
        Self {
            order,
            score,
            log_score: score.ln(),
            backoff_depth,
        }
    }
}

fn unigram_probability(index: &CorpusIndex, word: &str, cfg: &BackoffConfig) -> Result<f64, NGramError> {
    let count = index.count_words(&[word])?.max(1);
    let total = if cfg.replicate_paper_unigram {
        index.total_tokens()
    } else {
        index.word_tokens().max(1)
    };
    Ok(count as f64 / total as f64)
}

/// max{1, c(w)} / |C|. Never zero, even for unknown words.
pub fn unigram_score(index: &CorpusIndex, word: &str, cfg: &BackoffConfig) -> Result<NGramScore, NGramError> {
    Ok(NGramScore::new(1, unigram_probability(index, word, cfg)?, 0))
}

/// Stupid Backoff score of `word` after `context` at order `n`.
///
/// Only the last `n - 1` context words are used. When the full n-gram is
/// unseen the leftmost context word is dropped and the lower-order score is
/// multiplied by alpha, down to the unigram estimate. A context shorter than
/// `n - 1` lowers the effective order without any discount.
pub fn backoff_score<S: AsRef<str>>(
    index: &CorpusIndex,
    context: &[S],
    word: &str,
    n: usize,
    cfg: &BackoffConfig,
) -> Result<NGramScore, NGramError> {
    if n < 1 || n > cfg.max_n {
        return Err(NGramError::InvalidOrder { order: n, max: cfg.max_n });
    }
    let order = n.min(context.len() + 1);
    let mut history: Vec<&str> = context[context.len() - (order - 1)..]
        .iter()
        .map(AsRef::as_ref)
        .collect();

    let mut depth = 0;
    let mut score = loop {
        if history.is_empty() {
            break unigram_probability(index, word, cfg)?;
        }
        history.push(word);
        let joint = index.count_words(&history)?;
        history.pop();
        if joint > 0 {
            let marginal = index.count_words(&history)?;
            break joint as f64 / marginal as f64;
        }
        depth += 1;
        history.remove(0);
    };
    for _ in 0..depth {
        score *= cfg.alpha;
    }
    Ok(NGramScore::new(order, score, depth))
}

/// Natural-log scores for one order, aligned with the scored items.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramColumn {
    pub order: usize,
    pub log_scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemError {
    pub item_id: String,
    pub message: String,
}

/// Scores every item at every requested order.
///
/// Columns follow `orders`, rows follow `items`. A failing item gets `None`
/// in that column and an entry in the returned error list; the batch goes on.
pub fn score_items(
    index: &CorpusIndex,
    items: &[ContextItem],
    orders: &[usize],
    cfg: &BackoffConfig,
) -> Result<(Vec<NGramColumn>, Vec<ItemError>), NGramError> {
    cfg.validate()?;
    let rows: Vec<Vec<Result<f64, NGramError>>> = items
        .par_iter()
        .map(|item| {
            orders
                .iter()
                .map(|&n| {
                    backoff_score(index, &item.context, &item.critical_word, n, cfg).map(|s| s.log_score)
                })
                .collect()
        })
        .collect();

    let mut columns: Vec<NGramColumn> = orders
        .iter()
        .map(|&order| NGramColumn {
            order,
            log_scores: Vec::with_capacity(items.len()),
        })
        .collect();
    let mut errors = Vec::new();
    for (item, row) in items.iter().zip(rows) {
        for (col, value) in columns.iter_mut().zip(row) {
            match value {
                Ok(v) => col.log_scores.push(Some(v)),
                Err(e) => {
                    col.log_scores.push(None);
                    errors.push(ItemError {
                        item_id: item.item_id.clone(),
                        message: format!("order {}: {e}", col.order),
                    });
                }
            }
        }
    }
    Ok((columns, errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_index::TokenizeOptions;
    use crate::dataset::Split;

    fn toy() -> CorpusIndex {
        CorpusIndex::from_text(&b"a b a b a"[..], TokenizeOptions::default()).unwrap()
    }

    fn cfg() -> BackoffConfig {
        BackoffConfig::default()
    }

    #[test]
    fn default_alpha() {
        assert_eq!(BackoffConfig::default().alpha, 0.4);
        assert_eq!(BackoffConfig::default().max_n, 5);
        assert!(BackoffConfig::default().replicate_paper_unigram);
    }

    #[test]
    fn unigram_counts() {
        let s = unigram_score(&toy(), "a", &cfg()).unwrap();
        assert_eq!(s.score, 3.0 / 5.0);
        assert_eq!(s.backoff_depth, 0);
        assert_eq!(s.order, 1);
    }

    #[test]
    fn unigram_floor_for_oov() {
        assert_eq!(unigram_score(&toy(), "c", &cfg()).unwrap().score, 1.0 / 5.0);
    }

    #[test]
    fn observed_bigram() {
        let s = backoff_score(&toy(), &["a"], "b", 2, &cfg()).unwrap();
        assert_eq!(s.score, 2.0 / 3.0);
        assert_eq!(s.backoff_depth, 0);
    }

    #[test]
    fn unseen_bigram_backs_off_to_floor() {
        let s = backoff_score(&toy(), &["b"], "c", 2, &cfg()).unwrap();
        assert_eq!(s.score, 0.4 * (1.0 / 5.0));
        assert_eq!(s.backoff_depth, 1);
        assert_eq!(s.log_score, s.score.ln());
    }

    #[test]
    fn order_one_is_unigram() {
        let idx = toy();
        let u = unigram_score(&idx, "b", &cfg()).unwrap();
        assert_eq!(backoff_score(&idx, &["a", "b", "a"], "b", 1, &cfg()).unwrap(), u);
        let empty: [&str; 0] = [];
        assert_eq!(backoff_score(&idx, &empty, "b", 5, &cfg()).unwrap(), u);
    }

    #[test]
    fn short_context_reduces_order_without_penalty() {
        let s = backoff_score(&toy(), &["a"], "b", 5, &cfg()).unwrap();
        assert_eq!(s.order, 2);
        assert_eq!(s.score, 2.0 / 3.0);
    }

    #[test]
    fn long_context_uses_last_words() {
        // c(b a b)=1, c(b a)=2
        let s = backoff_score(&toy(), &["zz", "zz", "b", "a"], "b", 3, &cfg()).unwrap();
        assert_eq!(s.score, 0.5);
    }

    #[test]
    fn invalid_order() {
        assert!(matches!(
            backoff_score(&toy(), &["a"], "b", 0, &cfg()),
            Err(NGramError::InvalidOrder { .. })
        ));
        assert!(backoff_score(&toy(), &["a"], "b", 6, &cfg()).is_err());
    }

    #[test]
    fn word_level_denominator() {
        let idx = CorpusIndex::from_text(&b"a b . a ."[..], TokenizeOptions::default()).unwrap();
        let by_tokens = unigram_score(&idx, "a", &cfg()).unwrap().score;
        let words = unigram_score(&idx, "a", &BackoffConfig { replicate_paper_unigram: false, ..cfg() })
            .unwrap()
            .score;
        assert_eq!(by_tokens, 2.0 / 5.0);
        assert_eq!(words, 2.0 / 3.0);
    }

    #[test]
    fn config_validation() {
        assert!(BackoffConfig { alpha: 0.0, ..cfg() }.validate().is_err());
        assert!(BackoffConfig { alpha: 1.0, ..cfg() }.validate().is_ok());
        assert!(BackoffConfig { max_n: 9, ..cfg() }.validate().is_err());
    }

    fn item(id: &str, ctx: &[&str], w: &str) -> ContextItem {
        ContextItem {
            item_id: id.into(),
            context: ctx.iter().map(|s| s.to_string()).collect(),
            critical_word: w.into(),
            split: Split::Train,
            source_line: 0,
        }
    }

    #[test]
    fn score_items_shapes() {
        let idx = toy();
        let items = vec![item("i1", &["a", "b", "a", "b"], "a"), item("i2", &["b", "b", "a", "a"], "c")];
        let (cols, errs) = score_items(&idx, &items, &[1, 5], &cfg()).unwrap();
        assert!(errs.is_empty());
        assert_eq!(cols.len(), 2);
        assert!(cols.iter().all(|c| c.log_scores.len() == 2));
        let (cols, _) = score_items(&idx, &[], &[1, 5], &cfg()).unwrap();
        assert!(cols.iter().all(|c| c.log_scores.is_empty()));
    }

    #[test]
    fn score_items_reports_bad_order() {
        let (cols, errs) = score_items(&toy(), &[item("x", &["a"], "b")], &[2, 7], &cfg()).unwrap();
        assert_eq!(cols[1].log_scores, vec![None]);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].item_id, "x");
    }
}
