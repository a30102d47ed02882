//! Synthetic corpora and naive reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

pub type Docs = Vec<Vec<String>>;

/// Random documents over a small alphabet so that n-grams repeat often.
pub fn random_docs(rng: &mut impl Rng, total_tokens: usize, vocab: usize) -> Docs {
    let words: Vec<String> = (0..vocab).map(|i| format!("t{i}")).collect();
    let zipf = Zipf::new(vocab as f64, 1.1).unwrap();
    let mut docs = Vec::new();
    let mut n = 0;
    while n < total_tokens {
        let len = rng.random_range(1..=40).min(total_tokens - n);
        let doc: Vec<String> = (0..len)
            .map(|_| {
                if rng.random_bool(0.05) {
                    ".".to_owned()
                } else {
                    words[zipf.sample(rng) as usize - 1].clone()
                }
            })
            .collect();
        n += doc.len();
        docs.push(doc);
    }
    docs
}

pub fn docs_text(docs: &Docs) -> String {
    let mut s = String::new();
    for d in docs {
        s.push_str(&d.join(" "));
        s.push('\n');
    }
    s
}

/// Sliding-window count inside each document.
pub fn naive_count<S: AsRef<str>>(docs: &Docs, query: &[S]) -> u64 {
    if query.is_empty() {
        return 0;
    }
    docs.iter()
        .map(|d| {
            d.windows(query.len())
                .filter(|w| w.iter().zip(query).all(|(a, b)| a == b.as_ref()))
                .count() as u64
        })
        .sum()
}

pub fn total_tokens(docs: &Docs) -> u64 {
    docs.iter().map(|d| d.len() as u64).sum()
}

/// Direct recursion over naive counts.
pub fn reference_backoff(docs: &Docs, context: &[String], word: &str, n: usize, alpha: f64) -> f64 {
    let keep = (n - 1).min(context.len());
    let history = &context[context.len() - keep..];
    recurse(docs, history, word, alpha)
}

fn recurse(docs: &Docs, history: &[String], word: &str, alpha: f64) -> f64 {
    if history.is_empty() {
        return naive_count(docs, &[word]).max(1) as f64 / total_tokens(docs) as f64;
    }
    let mut full: Vec<&str> = history.iter().map(String::as_str).collect();
    full.push(word);
    let joint = naive_count(docs, &full);
    if joint > 0 {
        joint as f64 / naive_count(docs, history) as f64
    } else {
        alpha * recurse(docs, &history[1..], word, alpha)
    }
}

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn pseudo_word(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        let syl = i % 60;
        s.push_str(ONSETS[syl / 5]);
        s.push_str(VOWELS[syl % 5]);
        i /= 60;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s
}

/// A toy language: shared function words, topic vocabularies and a fixed
/// successor map that gives the text recurring multi-word phrases.
pub struct SyntheticLanguage {
    pub words: Vec<String>,
    global: usize,
    topics: usize,
    per_topic: usize,
    successor: Vec<usize>,
    embedding_seed: u64,
}

impl SyntheticLanguage {
    pub fn new(seed: u64) -> Self {
        let (global, topics, per_topic) = (1500, 20, 200);
        let total = global + topics * per_topic;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let successor = (0..total).map(|_| rng.random_range(0..total)).collect();
        Self {
            words: (0..total).map(pseudo_word).collect(),
            global,
            topics,
            per_topic,
            successor,
            embedding_seed: seed ^ 0x5eed,
        }
    }

    fn topic_of(&self, w: usize) -> Option<usize> {
        (w >= self.global).then(|| (w - self.global) / self.per_topic)
    }

    /// One sentence with a leading capital and a final period.
    pub fn sentence(&self, rng: &mut impl Rng) -> Vec<String> {
        let topic = rng.random_range(0..self.topics);
        let gz = Zipf::new(self.global as f64, 1.05).unwrap();
        let tz = Zipf::new(self.per_topic as f64, 1.0).unwrap();
        let len = rng.random_range(8..=18);
        let mut out = Vec::with_capacity(len + 3);
        let mut prev: Option<usize> = None;
        for i in 0..len {
            let roll: f64 = rng.random();
            let w = match prev {
                Some(p) if roll < 0.3 => self.successor[p],
                _ if roll < 0.65 => self.global + topic * self.per_topic + tz.sample(rng) as usize - 1,
                _ => gz.sample(rng) as usize - 1,
            };
            let mut word = self.words[w].clone();
            if i == 0 {
                word[..1].make_ascii_uppercase();
            }
            out.push(word);
            if i + 1 < len && rng.random_bool(0.06) {
                out.push(",".to_owned());
            }
            prev = Some(w);
        }
        out.push(".".to_owned());
        out
    }

    /// Roughly `tokens` tokens, one sentence per line.
    pub fn corpus(&self, seed: u64, tokens: usize) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = String::with_capacity(tokens * 4);
        let mut n = 0;
        while n < tokens {
            let sent = self.sentence(&mut rng);
            n += sent.len();
            s.push_str(&sent.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn sentences(&self, seed: u64, count: usize) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sentence(&mut rng).join(" ")).collect()
    }

    /// Text embedding table: topic words cluster around a topic centroid.
    pub fn embeddings(&self, dim: usize) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.embedding_seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let centroids: Vec<Vec<f64>> = (0..self.topics)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let mut s = format!("{} {}\n", self.words.len(), dim);
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            for d in 0..dim {
                let noise = normal.sample(&mut rng);
                let v = match self.topic_of(i) {
                    Some(t) => centroids[t][d] + 0.6 * noise,
                    None => noise,
                };
                write!(s, " {v:.6}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).unwrap()
}
