//! Static word embeddings and context similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("embedding file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate embedding for token {0:?}")]
    DuplicateToken(String),
    #[error("context must contain at least one word")]
    EmptyContext,
    #[error("weights need a context length of at least 1")]
    ZeroLength,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fixed-dimension word vectors keyed by surface form.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<(), SimilarityError> {
        if vector.len() != self.dim {
            return Err(SimilarityError::DimensionMismatch(vector.len(), self.dim));
        }
        if self.index.contains_key(token) {
            return Err(SimilarityError::DuplicateToken(token.to_owned()));
        }
        self.index.insert(token.to_owned(), self.index.len());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Exact surface-form lookup.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    /// Surface form first, then the lowercased form.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.get(token).or_else(|| {
            let folded = token.to_lowercase();
            if folded != token {
                self.get(&folded)
            } else {
                None
            }
        })
    }

    /// Parses the plain-text `V D` header format used by published vector files.
    pub fn read<R: BufRead>(input: R) -> Result<Self, SimilarityError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.ok_or_else(|| parse_err(1, "missing header"))?;
        let mut fields = header.split_whitespace();
        let (rows, dim) = match (fields.next(), fields.next(), fields.next()) {
            (Some(v), Some(d), None) => (
                parse_field::<usize>(v, 1, "vocabulary size")?,
                parse_field::<usize>(d, 1, "dimension")?,
            ),
            _ => return Err(parse_err(1, "header must be \"V D\"")),
        };
        if dim == 0 {
            return Err(parse_err(1, "dimension must be positive"));
        }
        let mut table = Self::new(dim);
        table.data.reserve(rows.saturating_mul(dim).min(1 << 26));
        let mut vector = Vec::with_capacity(dim);
        for row in 0..rows {
            let line_no = row + 2;
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| parse_err(line_no, format!("expected {rows} rows, found {row}")))?;
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let token = parts.next().ok_or_else(|| parse_err(line_no, "empty row"))?;
            vector.clear();
            for field in parts {
                let value: f64 = parse_field(field.trim_end(), line_no, "vector component")?;
                if !value.is_finite() {
                    return Err(parse_err(line_no, format!("non-finite value {field}")));
                }
                vector.push(value);
            }
            if vector.len() != dim {
                return Err(parse_err(
                    line_no,
                    format!("token {token:?} has {} values, expected {dim}", vector.len()),
                ));
            }
            table.insert(token, &vector)?;
        }
        for (extra, line) in lines.enumerate() {
            if !line?.trim().is_empty() {
                return Err(parse_err(rows + 2 + extra, "more rows than the header declares"));
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, SimilarityError> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> SimilarityError {
    SimilarityError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_field<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T, SimilarityError> {
    s.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {s:?}")))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, SimilarityError> {
    EmbeddingTable::load(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeightingScheme {
    Uniform,
    /// Position-proportional weights, later words weigh more.
    Sgpt,
}

impl WeightingScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightingScheme::Uniform => "uniform",
            WeightingScheme::Sgpt => "sgpt",
        }
    }

    pub fn weights(self, len: usize) -> Result<Vec<f64>, SimilarityError> {
        match self {
            WeightingScheme::Uniform => uniform_weights(len),
            WeightingScheme::Sgpt => sgpt_weights(len),
        }
    }
}

pub fn uniform_weights(len: usize) -> Result<Vec<f64>, SimilarityError> {
    if len == 0 {
        return Err(SimilarityError::ZeroLength);
    }
    Ok(vec![1.0 / len as f64; len])
}

/// beta_j = j / (1 + 2 + ... + len) for j = 1..=len.
pub fn sgpt_weights(len: usize) -> Result<Vec<f64>, SimilarityError> {
    if len == 0 {
        return Err(SimilarityError::ZeroLength);
    }
    let total = (len * (len + 1) / 2) as f64;
    Ok((1..=len).map(|j| j as f64 / total).collect())
}

/// Weighted mean of the context vectors that exist in `table`.
///
/// Weights are assigned over the full context, then the weights of words
/// without a vector are dropped and the rest renormalized. `None` when no
/// context word has a vector.
pub fn context_vector<S: AsRef<str>>(
    table: &EmbeddingTable,
    context: &[S],
    scheme: WeightingScheme,
) -> Result<Option<Vec<f64>>, SimilarityError> {
    if context.is_empty() {
        return Err(SimilarityError::EmptyContext);
    }
    let weights = scheme.weights(context.len())?;
    let found: Vec<(f64, &[f64])> = context
        .iter()
        .zip(&weights)
        .filter_map(|(w, &beta)| table.lookup(w.as_ref()).map(|v| (beta, v)))
        .collect();
    if found.is_empty() {
        return Ok(None);
    }
    let mass: f64 = found.iter().map(|(beta, _)| beta).sum();
    let mut out = vec![0.0; table.dim()];
    for (beta, v) in found {
        let beta = beta / mass;
        for (o, x) in out.iter_mut().zip(v) {
            *o += beta * x;
        }
    }
    Ok(Some(out))
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityResult {
    /// `None` when the critical word has no vector, no context word has one,
    /// or one of the vectors is zero.
    pub similarity: Option<f64>,
    pub context_words_found: usize,
    pub critical_missing: bool,
}

impl SimilarityResult {
    /// Cosine distance, `1 - similarity`.
    pub fn distance(&self) -> Option<f64> {
        self.similarity.map(|s| 1.0 - s)
    }
}

pub fn contextual_similarity<S: AsRef<str>>(
    table: &EmbeddingTable,
    context: &[S],
    word: &str,
    scheme: WeightingScheme,
) -> Result<SimilarityResult, SimilarityError> {
    let context_words_found = context
        .iter()
        .filter(|w| table.lookup(w.as_ref()).is_some())
        .count();
    let ctx = context_vector(table, context, scheme)?;
    let target = table.lookup(word);
    let similarity = match (target, &ctx) {
        (Some(t), Some(c)) => cosine(t, c).ok(),
        _ => None,
    };
    Ok(SimilarityResult {
        similarity,
        context_words_found,
        critical_missing: target.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> EmbeddingTable {
        let text = "4 2\nu 1 0\nv 0 1\nw 1 1\nThe 2 0\n";
        EmbeddingTable::read(text.as_bytes()).unwrap()
    }

    #[test]
    fn loads_header_and_rows() {
        let t = EmbeddingTable::read(&b"2 3\nx 1 2 3\ny 0.5 -1 2e-1 \n"[..]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.get("y").unwrap(), &[0.5, -1.0, 0.2]);
    }

    #[test]
    fn short_row_is_an_error() {
        let err = EmbeddingTable::read(&b"2 3\nx 1 2 3\ny 1 2\n"[..]).unwrap_err();
        assert!(matches!(err, SimilarityError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_token_is_named() {
        let err = EmbeddingTable::read(&b"2 1\nx 1\nx 2\n"[..]).unwrap_err();
        assert!(err.to_string().contains("\"x\""), "{err}");
    }

    #[test]
    fn bad_header_and_values() {
        assert!(EmbeddingTable::read(&b"2\nx 1\n"[..]).is_err());
        assert!(EmbeddingTable::read(&b"1 1\nx NaN\n"[..]).is_err());
        assert!(EmbeddingTable::read(&b"1 1\nx inf\n"[..]).is_err());
        assert!(EmbeddingTable::read(&b"2 1\nx 1\n"[..]).is_err());
        assert!(EmbeddingTable::read(&b"1 1\nx 1\ny 2\n"[..]).is_err());
    }

    #[test]
    fn sgpt_examples() {
        assert_eq!(sgpt_weights(1).unwrap(), vec![1.0]);
        assert_eq!(sgpt_weights(3).unwrap(), vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
        assert_eq!(sgpt_weights(4).unwrap(), vec![0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(sgpt_weights(0), Err(SimilarityError::ZeroLength)));
    }

    #[test]
    fn uniform_context_is_mean() {
        let c = context_vector(&toy(), &["u", "v"], WeightingScheme::Uniform).unwrap().unwrap();
        assert_eq!(c, vec![0.5, 0.5]);
    }

    #[test]
    fn all_oov_context_is_absent() {
        let c = context_vector(&toy(), &["p", "q"], WeightingScheme::Sgpt).unwrap();
        assert!(c.is_none());
        let empty: [&str; 0] = [];
        assert!(matches!(
            context_vector(&toy(), &empty, WeightingScheme::Sgpt),
            Err(SimilarityError::EmptyContext)
        ));
    }

    #[test]
    fn sgpt_renormalizes_survivors() {
        // weights 1/6, 2/6, 3/6; middle word missing -> 1/4, 3/4
        let c = context_vector(&toy(), &["u", "missing", "v"], WeightingScheme::Sgpt)
            .unwrap()
            .unwrap();
        assert!((c[0] - 0.25).abs() < 1e-15);
        assert!((c[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn case_folded_fallback() {
        let t = toy();
        assert_eq!(t.lookup("U"), t.get("u"));
        // surface form wins when present
        assert_eq!(t.lookup("The"), Some(&[2.0, 0.0][..]));
        assert!(t.lookup("the").is_none());
    }

    #[test]
    fn similarity_examples() {
        let t = toy();
        let same = contextual_similarity(&t, &["u"], "u", WeightingScheme::Uniform).unwrap();
        assert_eq!(same.similarity, Some(1.0));
        let orth = contextual_similarity(&t, &["u"], "v", WeightingScheme::Uniform).unwrap();
        assert_eq!(orth.similarity, Some(0.0));
        let diag = contextual_similarity(&t, &["w"], "u", WeightingScheme::Uniform).unwrap();
        assert!((diag.similarity.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(diag.distance(), Some(1.0 - diag.similarity.unwrap()));
    }

    #[test]
    fn missing_critical_word_is_flagged() {
        let r = contextual_similarity(&toy(), &["u", "x"], "nope", WeightingScheme::Sgpt).unwrap();
        assert!(r.critical_missing);
        assert_eq!(r.similarity, None);
        assert_eq!(r.distance(), None);
        assert_eq!(r.context_words_found, 1);
    }

    #[test]
    fn cosine_basics() {
        let u = [1.0, -2.0, 3.0];
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&u, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(cosine(&u, &[0.0; 3]), Err(SimilarityError::ZeroVector)));
        assert!(cosine(&u, &[1.0]).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, 4).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(len in 1usize..500) {
            for scheme in [WeightingScheme::Uniform, WeightingScheme::Sgpt] {
                let w = scheme.weights(len).unwrap();
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(w.iter().all(|&x| x >= 0.0));
            }
            let s = sgpt_weights(len).unwrap();
            prop_assert!(s.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn cosine_properties(u in vec_strategy(), v in vec_strategy(), scale in 1e-3f64..1e3) {
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = u.iter().map(|x| x * scale).collect();
            prop_assert!((c - cosine(&scaled, &v).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn schemes_agree_on_single_word() {
        assert_eq!(uniform_weights(1).unwrap(), sgpt_weights(1).unwrap());
    }
}
