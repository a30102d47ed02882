use std::collections::{BTreeSet, HashMap};

use super::stats::pearson;
use super::AnalysisError;
use crate::heuristics::HeuristicTable;

/// Symmetric Pearson matrix with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Observations used for every entry.
    pub n: usize,
    /// Per input: observations dropped to reach the shared set.
    pub dropped: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

/// Pairwise Pearson correlations over aligned, equal-length columns.
pub fn correlation_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix, AnalysisError> {
    let k = columns.len();
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = pearson(&columns[i].1, &columns[j].1)?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|c| c.0.clone()).collect(),
        values,
        n: columns.first().map_or(0, |c| c.1.len()),
        dropped: vec![0; k],
    })
}

/// Correlations between models' log-probabilities on the items all of them scored.
pub fn cross_model_correlation(models: &[(String, &HashMap<String, f64>)]) -> Result<CorrelationMatrix, AnalysisError> {
    let mut shared: Option<BTreeSet<&String>> = None;
    for (_, scores) in models {
        let ids: BTreeSet<&String> = scores.keys().collect();
        shared = Some(match shared {
            None => ids,
            Some(s) => s.intersection(&ids).copied().collect(),
        });
    }
    let shared = shared.unwrap_or_default();
    let columns: Vec<(String, Vec<f64>)> = models
        .iter()
        .map(|(name, scores)| (name.clone(), shared.iter().map(|id| scores[*id]).collect()))
        .collect();
    let mut m = correlation_matrix(&columns)?;
    m.dropped = models.iter().map(|(_, s)| s.len() - shared.len()).collect();
    Ok(m)
}

/// Correlations between heuristic columns over `rows` where every column is present.
pub fn predictor_correlations(
    table: &HeuristicTable,
    names: &[&str],
    rows: &[usize],
) -> Result<CorrelationMatrix, AnalysisError> {
    let cols = names
        .iter()
        .map(|&n| table.column(n).ok_or_else(|| AnalysisError::MissingColumn(n.to_owned())))
        .collect::<Result<Vec<_>, _>>()?;
    let complete: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| cols.iter().all(|c| c.values[r].is_some()))
        .collect();
    let columns: Vec<(String, Vec<f64>)> = cols
        .iter()
        .map(|c| (c.name.clone(), complete.iter().map(|&r| c.values[r].unwrap()).collect()))
        .collect();
    let mut m = correlation_matrix(&columns)?;
    m.dropped = vec![rows.len() - complete.len(); cols.len()];
    Ok(m)
}
