//! Per-item heuristic columns: n-gram log-scores and context similarities.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus_index::CorpusIndex;
use crate::dataset::{ContextItem, Split};
use crate::ngram::{score_items, BackoffConfig, ItemError, NGramError};
use crate::similarity::{contextual_similarity, EmbeddingTable, SimilarityError, WeightingScheme};

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error(transparent)]
    NGram(#[from] NGramError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("heuristic table: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    NGram { order: usize },
    Similarity,
    MissingFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl HeuristicColumn {
    /// Role inferred from the naming convention used by [`score_heuristics`].
    pub fn role(&self) -> Option<ColumnRole> {
        column_role(&self.name)
    }
}

pub fn column_role(name: &str) -> Option<ColumnRole> {
    if let Some((_, n)) = name.rsplit_once("_ngram_logprob_n") {
        return n.parse().ok().map(|order| ColumnRole::NGram { order });
    }
    if name.ends_with("_critical_missing") {
        return Some(ColumnRole::MissingFlag);
    }
    if name.contains("_sim_") {
        return Some(ColumnRole::Similarity);
    }
    None
}

pub fn ngram_column_name(source: &str, order: usize) -> String {
    format!("{source}_ngram_logprob_n{order}")
}

pub fn similarity_column_name(embedding: &str, scheme: WeightingScheme) -> String {
    format!("{embedding}_sim_{}", scheme.name())
}

/// Item-aligned heuristic values; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeuristicTable {
    pub item_ids: Vec<String>,
    pub splits: Vec<Split>,
    pub columns: Vec<HeuristicColumn>,
}

impl HeuristicTable {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&HeuristicColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn rows_in(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// CSV with `#` comment lines, then `item_id,split,<columns>`.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<(), HeuristicError> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["item_id".to_owned(), "split".to_owned()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        out.write_record(&header)?;
        for row in 0..self.len() {
            let mut rec = vec![self.item_ids[row].clone(), self.splits[row].as_str().to_owned()];
            rec.extend(
                self.columns
                    .iter()
                    .map(|c| c.values[row].map(|v| format!("{v:?}")).unwrap_or_default()),
            );
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, HeuristicError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "item_id" || &headers[1] != "split" {
            return Err(HeuristicError::Format("header must start with item_id,split".into()));
        }
        let mut table = HeuristicTable {
            columns: headers
                .iter()
                .skip(2)
                .map(|name| HeuristicColumn {
                    name: name.to_owned(),
                    values: Vec::new(),
                })
                .collect(),
            ..Default::default()
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let split = match &rec[1] {
                "train" => Split::Train,
                "validation" => Split::Validation,
                "test" => Split::Test,
                other => return Err(HeuristicError::Format(format!("row {}: unknown split {other:?}", i + 1))),
            };
            table.item_ids.push(rec[0].to_owned());
            table.splits.push(split);
            for (col, field) in table.columns.iter_mut().zip(rec.iter().skip(2)) {
                let v = if field.is_empty() {
                    None
                } else {
                    Some(field.parse::<f64>().map_err(|_| {
                        HeuristicError::Format(format!("row {}: bad value {field:?} in {}", i + 1, col.name))
                    })?)
                };
                col.values.push(v);
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeuristicReport {
    pub ngram_errors: Vec<ItemError>,
    /// Per embedding label: items whose critical word has no vector.
    pub critical_missing: Vec<(String, usize)>,
}

/// Computes every heuristic column for `items`.
///
/// One n-gram column family per `(label, index)` source and, per embedding
/// table, one similarity column per weighting scheme plus a 0/1 column
/// flagging items whose critical word has no vector.
pub fn score_heuristics(
    items: &[ContextItem],
    sources: &[(String, &CorpusIndex)],
    embeddings: &[(String, &EmbeddingTable)],
    orders: &[usize],
    schemes: &[WeightingScheme],
    cfg: &BackoffConfig,
) -> Result<(HeuristicTable, HeuristicReport), HeuristicError> {
    let mut table = HeuristicTable {
        item_ids: items.iter().map(|i| i.item_id.clone()).collect(),
        splits: items.iter().map(|i| i.split).collect(),
        columns: Vec::new(),
    };
    let mut report = HeuristicReport::default();

    for (label, index) in sources {
        let (cols, errors) = score_items(index, items, orders, cfg)?;
        report.ngram_errors.extend(errors);
        table.columns.extend(cols.into_iter().map(|c| HeuristicColumn {
            name: ngram_column_name(label, c.order),
            values: c.log_scores,
        }));
    }

    for (label, emb) in embeddings {
        let rows: Vec<Vec<_>> = items
            .par_iter()
            .map(|item| {
                schemes
                    .iter()
                    .map(|&s| contextual_similarity(emb, &item.context, &item.critical_word, s))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        for (k, &scheme) in schemes.iter().enumerate() {
            table.columns.push(HeuristicColumn {
                name: similarity_column_name(label, scheme),
                values: rows.iter().map(|r| r[k].similarity).collect(),
            });
        }
        let missing: Vec<Option<f64>> = items
            .iter()
            .map(|item| Some(if emb.lookup(&item.critical_word).is_none() { 1.0 } else { 0.0 }))
            .collect();
        let n_missing = missing.iter().filter(|v| **v == Some(1.0)).count();
        report.critical_missing.push((label.clone(), n_missing));
        table.columns.push(HeuristicColumn {
            name: format!("{label}_critical_missing"),
            values: missing,
        });
    }
    Ok((table, report))
}
