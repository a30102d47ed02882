//! Evaluation-set construction: filtering, critical-word sampling,
//! decontamination against training corpora, and splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus_index::{is_punctuation, tokenize_line, CorpusIndex, IndexError, TokenizeOptions};

/// Critical words are sampled from the fifth word onward (1-based).
pub const MIN_CRITICAL_POSITION: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("split sizes must be positive")]
    InvalidSplitSizes,
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("item id collision between distinct sequences: {0}")]
    IdCollision(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluation row: a context and the word that follows it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub item_id: String,
    pub context: Vec<String>,
    pub critical_word: String,
    pub split: Split,
    /// 1-based line of the source sentence.
    pub source_line: usize,
}

impl ContextItem {
    /// Context followed by the critical word.
    pub fn sequence(&self) -> Vec<&str> {
        self.context
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(self.critical_word.as_str()))
            .collect()
    }
}

/// Stable identifier: the first 16 hex digits of SHA-256 over the
/// space-joined token sequence.
pub fn item_id<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut hasher = Sha256::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            hasher.update(b" ");
        }
        hasher.update(t.as_ref().as_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

/// A sentence predicate with a label that goes into the config digest.
#[derive(Clone)]
pub struct SentenceHook {
    pub label: String,
    pub accept: Arc<dyn Fn(&[String]) -> bool + Send + Sync>,
}

impl SentenceHook {
    pub fn new(label: impl Into<String>, accept: impl Fn(&[String]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            accept: Arc::new(accept),
        }
    }
}

impl fmt::Debug for SentenceHook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SentenceHook").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    /// Minimum word count; punctuation tokens are not words.
    pub min_words: usize,
    pub require_capitalization: bool,
    /// Content filter, e.g. a toxicity threshold. Pass-all when `None`.
    pub content_hook: Option<SentenceHook>,
    /// Vocabulary-membership filter over the sentence's words. Pass-all when `None`.
    pub vocabulary_hook: Option<SentenceHook>,
    pub split_sizes: SplitSizes,
    pub seed: u64,
    pub tokenize: TokenizeOptions,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_words: 6,
            require_capitalization: true,
            content_hook: None,
            vocabulary_hook: None,
            split_sizes: SplitSizes {
                train: 100_000,
                validation: 50_000,
                test: 50_000,
            },
            seed: 0,
            tokenize: TokenizeOptions::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let s = self.split_sizes;
        if s.train == 0 || s.validation == 0 || s.test == 0 {
            return Err(DatasetError::InvalidSplitSizes);
        }
        Ok(())
    }

    /// SHA-256 over a canonical JSON rendering of every setting, hooks by label.
    pub fn digest(&self) -> String {
        let canonical = serde_json::json!({
            "min_words": self.min_words,
            "require_capitalization": self.require_capitalization,
            "content_hook": self.content_hook.as_ref().map(|h| h.label.as_str()),
            "vocabulary_hook": self.vocabulary_hook.as_ref().map(|h| h.label.as_str()),
            "split_sizes": self.split_sizes,
            "seed": self.seed,
            "lowercase": self.tokenize.lowercase,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    TooShort,
    NotCapitalized,
    ExtraCapital,
    ContentFilter,
    Vocabulary,
    DuplicateSentence,
    Contaminated,
    DuplicateItem,
    NotSelected,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::TooShort => "too_short",
            RejectReason::NotCapitalized => "not_capitalized",
            RejectReason::ExtraCapital => "extra_capital",
            RejectReason::ContentFilter => "content_filter",
            RejectReason::Vocabulary => "vocabulary",
            RejectReason::DuplicateSentence => "duplicate_sentence",
            RejectReason::Contaminated => "contaminated",
            RejectReason::DuplicateItem => "duplicate_item",
            RejectReason::NotSelected => "not_selected",
        }
    }
}

/// A tokenized candidate sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub line: usize,
    pub tokens: Vec<String>,
}

impl Sentence {
    /// Token positions of the words (non-punctuation tokens).
    pub fn word_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !is_punctuation(t))
            .map(|(i, _)| i)
            .collect()
    }
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Rejections(pub BTreeMap<RejectReason, usize>);

impl Rejections {
    pub fn add(&mut self, reason: RejectReason, n: usize) {
        if n > 0 {
            *self.0.entry(reason).or_default() += n;
        }
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn by_name(&self) -> BTreeMap<String, usize> {
        self.0.iter().map(|(r, &n)| (r.as_str().to_owned(), n)).collect()
    }
}

fn check_sentence(tokens: &[String], cfg: &FilterConfig) -> Result<(), RejectReason> {
    let words: Vec<&String> = tokens.iter().filter(|t| !is_punctuation(t)).collect();
    if words.len() < cfg.min_words {
        return Err(RejectReason::TooShort);
    }
    if cfg.require_capitalization {
        if !is_capitalized(words[0]) {
            return Err(RejectReason::NotCapitalized);
        }
        if words[1..].iter().any(|w| is_capitalized(w)) {
            return Err(RejectReason::ExtraCapital);
        }
    }
    if let Some(hook) = &cfg.content_hook {
        if !(hook.accept)(tokens) {
            return Err(RejectReason::ContentFilter);
        }
    }
    if let Some(hook) = &cfg.vocabulary_hook {
        if !(hook.accept)(tokens) {
            return Err(RejectReason::Vocabulary);
        }
    }
    Ok(())
}

/// Keeps the sentences that pass every enabled predicate.
///
/// Input is `(line number, text)`; output keeps input order.
pub fn filter_sentences<'a, I>(sentences: I, cfg: &FilterConfig) -> (Vec<Sentence>, Rejections)
where
    I: IntoParallelIterator<Item = (usize, &'a str)>,
{
    let checked: Vec<Result<Sentence, RejectReason>> = sentences
        .into_par_iter()
        .map(|(line, text)| {
            let tokens = tokenize_line(text, cfg.tokenize);
            check_sentence(&tokens, cfg).map(|()| Sentence { line, tokens })
        })
        .collect();
    let mut rejections = Rejections::default();
    let mut kept = Vec::new();
    for c in checked {
        match c {
            Ok(s) => kept.push(s),
            Err(r) => rejections.add(r, 1),
        }
    }
    (kept, rejections)
}

/// Picks a critical word uniformly among word positions 5..=len (1-based).
///
/// The context is every token before it, punctuation included. Returns
/// `Err(TooShort)` for sentences with fewer than five words.
pub fn sample_critical_word<R: Rng + ?Sized>(sentence: &Sentence, rng: &mut R) -> Result<ContextItem, RejectReason> {
    let words = sentence.word_positions();
    if words.len() < MIN_CRITICAL_POSITION {
        return Err(RejectReason::TooShort);
    }
    let k = rng.random_range(MIN_CRITICAL_POSITION - 1..words.len());
    let at = words[k];
    let context = sentence.tokens[..at].to_vec();
    let critical_word = sentence.tokens[at].clone();
    let mut seq: Vec<&str> = context.iter().map(String::as_str).collect();
    seq.push(&critical_word);
    Ok(ContextItem {
        item_id: item_id(&seq),
        context,
        critical_word,
        split: Split::Train,
        source_line: sentence.line,
    })
}

/// Drops every item whose full sequence occurs in any of `indices`.
pub fn decontaminate(items: Vec<ContextItem>, indices: &[CorpusIndex]) -> Result<(Vec<ContextItem>, usize), DatasetError> {
    let verdicts: Vec<Result<bool, IndexError>> = items
        .par_iter()
        .map(|item| {
            let seq = item.sequence();
            for index in indices {
                if index.count_words(&seq)? > 0 {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect();
    let before = items.len();
    let mut kept = Vec::with_capacity(before);
    for (item, clean) in items.into_iter().zip(verdicts) {
        if clean? {
            kept.push(item);
        }
    }
    let removed = before - kept.len();
    Ok((kept, removed))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOutcome {
    pub items: Vec<ContextItem>,
    pub duplicates: usize,
    pub unselected: usize,
    pub warnings: Vec<String>,
}

/// Deduplicates by full sequence, shuffles, and assigns splits.
///
/// When fewer items are available than requested the sizes shrink in
/// proportion, with the rounding remainder going to train, and a warning is
/// recorded. Output is ordered train, validation, test.
pub fn dedupe_and_split<R: Rng + ?Sized>(
    items: Vec<ContextItem>,
    sizes: SplitSizes,
    rng: &mut R,
) -> Result<SplitOutcome, DatasetError> {
    if sizes.train == 0 || sizes.validation == 0 || sizes.test == 0 {
        return Err(DatasetError::InvalidSplitSizes);
    }
    let before = items.len();
    let mut seen_seq = HashSet::new();
    let mut seen_id = HashSet::new();
    let mut unique = Vec::with_capacity(before);
    for item in items {
        let seq = item.sequence().join(" ");
        if seen_seq.insert(seq) {
            if !seen_id.insert(item.item_id.clone()) {
                return Err(DatasetError::IdCollision(item.item_id));
            }
            unique.push(item);
        }
    }
    let duplicates = before - unique.len();
    unique.shuffle(rng);

    let mut warnings = Vec::new();
    let available = unique.len();
    let targets: Vec<usize> = if sizes.total() <= available {
        Split::ALL.iter().map(|&s| sizes.get(s)).collect()
    } else {
        let total = sizes.total();
        let mut t: Vec<usize> = Split::ALL
            .iter()
            .map(|&s| sizes.get(s) * available / total)
            .collect();
        t[0] += available - t.iter().sum::<usize>();
        warnings.push(format!(
            "requested {total} items but only {available} available; splits scaled to {}/{}/{}",
            t[0], t[1], t[2]
        ));
        t
    };

    let mut out = Vec::with_capacity(targets.iter().sum());
    let mut rest = unique.into_iter();
    for (split, n) in Split::ALL.into_iter().zip(targets) {
        out.extend(rest.by_ref().take(n).map(|mut item| {
            item.split = split;
            item
        }));
    }
    let unselected = rest.count();
    Ok(SplitOutcome {
        items: out,
        duplicates,
        unselected,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub seed: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_digest: Option<String>,
    pub counts: BTreeMap<String, usize>,
    pub rejections: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub metadata: DatasetMetadata,
    pub items: Vec<ContextItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildReport {
    pub input_sentences: usize,
    pub rejections: Rejections,
    pub warnings: Vec<String>,
}

/// Runs filtering, sampling, decontamination and splitting end to end.
///
/// Sampling and splitting draw from one generator seeded with `cfg.seed`,
/// so the result depends only on the inputs and the config.
pub fn build_dataset<R: BufRead>(
    sentences: R,
    indices: &[CorpusIndex],
    cfg: &FilterConfig,
) -> Result<(Dataset, BuildReport), DatasetError> {
    cfg.validate()?;
    let mut lines = Vec::new();
    for (i, line) in sentences.lines().enumerate() {
        let line = line.map_err(|e| DatasetError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        lines.push((i + 1, line));
    }
    let input_sentences = lines.len();
    let (candidates, mut rejections) =
        filter_sentences(lines.par_iter().map(|(n, s)| (*n, s.as_str())), cfg);

    let mut seen = HashSet::new();
    let mut unique = Vec::with_capacity(candidates.len());
    for s in candidates {
        if seen.insert(s.tokens.join(" ")) {
            unique.push(s);
        } else {
            rejections.add(RejectReason::DuplicateSentence, 1);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampled = Vec::with_capacity(unique.len());
    for s in &unique {
        match sample_critical_word(s, &mut rng) {
            Ok(item) => sampled.push(item),
            Err(r) => rejections.add(r, 1),
        }
    }

    let (clean, contaminated) = decontaminate(sampled, indices)?;
    rejections.add(RejectReason::Contaminated, contaminated);

    let outcome = dedupe_and_split(clean, cfg.split_sizes, &mut rng)?;
    rejections.add(RejectReason::DuplicateItem, outcome.duplicates);
    rejections.add(RejectReason::NotSelected, outcome.unselected);

    let mut counts = BTreeMap::new();
    counts.insert("input_sentences".to_owned(), input_sentences);
    counts.insert("items".to_owned(), outcome.items.len());
    counts.insert("rejected".to_owned(), rejections.total());
    for split in Split::ALL {
        let n = outcome.items.iter().filter(|i| i.split == split).count();
        counts.insert(split.as_str().to_owned(), n);
    }
    let metadata = DatasetMetadata {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        manifest_digest: None,
        counts,
        rejections: rejections.by_name(),
    };
    Ok((
        Dataset {
            metadata,
            items: outcome.items,
        },
        BuildReport {
            input_sentences,
            rejections,
            warnings: outcome.warnings,
        },
    ))
}

#[derive(Serialize, Deserialize)]
struct Header {
    metadata: DatasetMetadata,
}

/// JSON lines: a metadata header, then one item per line.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut w: W) -> Result<(), DatasetError> {
    let header = Header {
        metadata: dataset.metadata.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for item in &dataset.items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<Dataset, DatasetError> {
    let mut lines = r.lines().enumerate();
    let parse = |line: usize, e: serde_json::Error| DatasetError::Parse {
        line,
        message: e.to_string(),
    };
    let (_, first) = lines.next().ok_or(DatasetError::Parse {
        line: 1,
        message: "missing metadata header".into(),
    })?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| parse(1, e))?;
    let mut items = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| parse(i + 1, e))?);
    }
    Ok(Dataset {
        metadata: header.metadata,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FilterConfig {
        FilterConfig {
            split_sizes: SplitSizes {
                train: 2,
                validation: 1,
                test: 1,
            },
            ..FilterConfig::default()
        }
    }

    fn filter(lines: &[&str], cfg: &FilterConfig) -> (Vec<Sentence>, Rejections) {
        let input: Vec<(usize, &str)> = lines.iter().enumerate().map(|(i, s)| (i + 1, *s)).collect();
        filter_sentences(input, cfg)
    }

    fn sentence(text: &str) -> Sentence {
        Sentence {
            line: 1,
            tokens: tokenize_line(text, TokenizeOptions::default()),
        }
    }

    #[test]
    fn filter_examples() {
        let (kept, rej) = filter(&["The cat sat on the mat", "The cat saw Mary", "Too short here"], &cfg());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].tokens.join(" "), "The cat sat on the mat");
        assert_eq!(rej.0[&RejectReason::TooShort], 2);
        let (_, rej) = filter(&["The cat saw Mary in the garden"], &cfg());
        assert_eq!(rej.0[&RejectReason::ExtraCapital], 1);
        let (_, rej) = filter(&["the cat sat on the mat"], &cfg());
        assert_eq!(rej.0[&RejectReason::NotCapitalized], 1);
    }

    #[test]
    fn digits_are_not_capitals() {
        let (kept, _) = filter(&["The 3 cats sat on 2 mats"], &cfg());
        assert_eq!(kept.len(), 1);
        let (kept, _) = filter(&["3 cats sat on the mats"], &cfg());
        assert!(kept.is_empty());
    }

    #[test]
    fn punctuation_is_not_a_word() {
        let (kept, rej) = filter(&["The cat , sat . on"], &cfg());
        assert!(kept.is_empty());
        assert_eq!(rej.total(), 1);
    }

    #[test]
    fn hooks_reject() {
        let mut c = cfg();
        c.content_hook = Some(SentenceHook::new("no-mat", |t: &[String]| !t.iter().any(|w| w == "mat")));
        let (kept, rej) = filter(&["The cat sat on the mat", "The dog sat on the rug"], &c);
        assert_eq!(kept.len(), 1);
        assert_eq!(rej.0[&RejectReason::ContentFilter], 1);
        assert_ne!(c.digest(), cfg().digest());
    }

    #[test]
    fn five_word_sentence_forces_fifth_position() {
        let s = sentence("The cat sat on mats");
        for seed in 0..20 {
            let item = sample_critical_word(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(item.critical_word, "mats");
            assert_eq!(item.context.len(), 4);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let s = sentence("The cat sat on the warm mat");
        let a = sample_critical_word(&s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_critical_word(&s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(sample_critical_word(&sentence("Too few words here"), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn sampling_skips_punctuation() {
        let s = sentence("The cat , sat on mats .");
        let item = sample_critical_word(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(item.critical_word, "mats");
        assert_eq!(item.context, ["The", "cat", ",", "sat", "on"]);
    }

    #[test]
    fn sampling_is_uniform() {
        // 10 words -> positions 5..=10, six cells
        let s = sentence("The a b c d e f g h i");
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut cells = [0usize; 6];
        for _ in 0..draws {
            let item = sample_critical_word(&s, &mut rng).unwrap();
            cells[item.context.len() - 4] += 1;
        }
        let expected = draws as f64 / 6.0;
        let chi2: f64 = cells.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square 5 dof, p = 0.001
        assert!(chi2 < 20.515, "chi2 = {chi2}, cells {cells:?}");
    }

    #[test]
    fn decontamination_removes_seen_sequences() {
        let index = CorpusIndex::from_text(
            &b"The cat sat on the mat today\nsome other text"[..],
            TokenizeOptions::default(),
        )
        .unwrap();
        let seen = sample_critical_word(&sentence("The cat sat on the mat"), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let fresh = sample_critical_word(&sentence("Qq ww ee rr tt yy"), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (kept, removed) = decontaminate(vec![seen, fresh.clone()], &[index]).unwrap();
        assert_eq!(kept, vec![fresh]);
        assert_eq!(removed, 1);
    }

    fn items(n: usize) -> Vec<ContextItem> {
        (0..n)
            .map(|i| {
                let s = sentence(&format!("The w{i} a b c d"));
                sample_critical_word(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
            })
            .collect()
    }

    #[test]
    fn duplicates_collapse_and_splits_partition() {
        let mut input = items(6);
        input.push(input[0].clone());
        let sizes = SplitSizes { train: 3, validation: 2, test: 1 };
        let out = dedupe_and_split(input, sizes, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.duplicates, 1);
        assert_eq!(out.items.len(), 6);
        let ids: HashSet<_> = out.items.iter().map(|i| &i.item_id).collect();
        assert_eq!(ids.len(), 6);
        let count = |s| out.items.iter().filter(|i| i.split == s).count();
        assert_eq!((count(Split::Train), count(Split::Validation), count(Split::Test)), (3, 2, 1));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn insufficient_items_shrink_splits() {
        let sizes = SplitSizes { train: 50, validation: 25, test: 25 };
        let out = dedupe_and_split(items(10), sizes, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.items.len(), 10);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.items.iter().any(|i| i.split == Split::Test));
    }

    #[test]
    fn zero_split_rejected() {
        let sizes = SplitSizes { train: 1, validation: 0, test: 1 };
        assert!(dedupe_and_split(items(3), sizes, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn build_is_deterministic_and_round_trips() {
        let text = "The cat sat on the warm mat\nThe dog ran to the old red barn\nA bird sang in the tall green tree\nThe cat sat on the warm mat\nshort one\nThe fish swam in the cold blue lake";
        let run = || {
            let (ds, report) = build_dataset(text.as_bytes(), &[], &cfg()).unwrap();
            let mut bytes = Vec::new();
            write_dataset(&ds, &mut bytes).unwrap();
            (ds, report, bytes)
        };
        let (ds, report, a) = run();
        let (_, _, b) = run();
        assert_eq!(a, b);
        assert_eq!(ds.items.len(), 4);
        assert_eq!(report.rejections.0[&RejectReason::DuplicateSentence], 1);
        assert_eq!(report.input_sentences, ds.items.len() + report.rejections.total());
        assert_eq!(read_dataset(&a[..]).unwrap(), ds);
    }
}
