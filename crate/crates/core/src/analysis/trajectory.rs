use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::ols::{fit_standardized, unnormalized_fit, ColumnKind, DesignMatrix};
use super::stats::{pearson, seed_aggregate, spearman};
use super::AnalysisError;
use crate::heuristics::HeuristicTable;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CheckpointKey {
    pub model: String,
    pub seed: String,
    pub step: u64,
}

/// Log-probabilities per checkpoint, keyed by item id.
pub type ScoreGroups = BTreeMap<CheckpointKey, HashMap<String, f64>>;

/// A statistic over checkpoint steps, per seed and aggregated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySeries {
    pub steps: Vec<u64>,
    /// Values aligned with `steps`; `None` where a seed lacks that step.
    pub per_seed: BTreeMap<String, Vec<Option<f64>>>,
    pub mean: Vec<f64>,
    pub ci95: Vec<f64>,
}

impl TrajectorySeries {
    pub fn from_points<I>(points: I) -> Self
    where
        I: IntoIterator<Item = (String, u64, f64)>,
    {
        let points: Vec<_> = points.into_iter().collect();
        let steps: Vec<u64> = points.iter().map(|p| p.1).collect::<BTreeSet<_>>().into_iter().collect();
        let pos: HashMap<u64, usize> = steps.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut per_seed: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        for (seed, step, v) in points {
            per_seed.entry(seed).or_insert_with(|| vec![None; steps.len()])[pos[&step]] = Some(v);
        }
        let (mean, ci95) = (0..steps.len())
            .map(|i| {
                let vals: Vec<f64> = per_seed.values().filter_map(|v| v[i]).collect();
                seed_aggregate(&vals)
            })
            .unzip();
        Self {
            steps,
            per_seed,
            mean,
            ci95,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A per-checkpoint failure; the checkpoint is left out of that series.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Issue {
    pub model: String,
    pub seed: String,
    pub step: u64,
    pub context: String,
    pub message: String,
}

impl Issue {
    fn new(key: &CheckpointKey, context: &str, message: impl Into<String>) -> Self {
        Self {
            model: key.model.clone(),
            seed: key.seed.clone(),
            step: key.step,
            context: context.to_owned(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Spearman => "spearman",
        }
    }

    pub fn apply(self, x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
        match self {
            CorrelationMethod::Pearson => pearson(x, y),
            CorrelationMethod::Spearman => spearman(x, y),
        }
    }
}

/// Responses for `rows`, or the ids that have no score.
fn responses(group: &HashMap<String, f64>, table: &HeuristicTable, rows: &[usize]) -> Result<Vec<f64>, Vec<String>> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    for &r in rows {
        match group.get(&table.item_ids[r]) {
            Some(&v) => out.push(v),
            None => missing.push(table.item_ids[r].clone()),
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(missing)
    }
}

fn missing_message(missing: &[String]) -> String {
    let shown: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
    let more = if missing.len() > shown.len() { ", ..." } else { "" };
    format!("{} item(s) without a score: {}{more}", missing.len(), shown.join(", "))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationTrajectories {
    /// Keyed by (model, heuristic column).
    pub series: BTreeMap<(String, String), TrajectorySeries>,
    pub issues: Vec<Issue>,
}

/// Correlation between each heuristic column and the model scores at every
/// checkpoint, over `rows` of the table.
///
/// Rows where a heuristic is missing are left out of that heuristic's
/// correlation. A checkpoint lacking a score for any row is skipped and
/// reported.
pub fn correlation_trajectory(
    scores: &ScoreGroups,
    table: &HeuristicTable,
    heuristics: &[&str],
    rows: &[usize],
    method: CorrelationMethod,
) -> CorrelationTrajectories {
    let columns: Vec<(&str, Vec<usize>, Vec<f64>)> = heuristics
        .iter()
        .filter_map(|&name| {
            let col = table.column(name)?;
            let (idx, vals): (Vec<usize>, Vec<f64>) = rows
                .iter()
                .enumerate()
                .filter_map(|(k, &r)| col.values[r].map(|v| (k, v)))
                .unzip();
            Some((name, idx, vals))
        })
        .collect();
    let context = method.name();

    let groups: Vec<_> = scores.iter().collect();
    let results: Vec<(&CheckpointKey, Result<Vec<(&str, Result<f64, AnalysisError>)>, Vec<String>>)> = groups
        .par_iter()
        .map(|&(key, group)| {
            let out = responses(group, table, rows).map(|y| {
                columns
                    .iter()
                    .map(|(name, idx, x)| {
                        let ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
                        (*name, method.apply(x, &ys))
                    })
                    .collect()
            });
            (key, out)
        })
        .collect();

    let mut points: BTreeMap<(String, String), Vec<(String, u64, f64)>> = BTreeMap::new();
    let mut issues = Vec::new();
    for (key, res) in results {
        match res {
            Err(missing) => issues.push(Issue::new(key, context, missing_message(&missing))),
            Ok(values) => {
                for (name, r) in values {
                    match r {
                        Ok(v) => points
                            .entry((key.model.clone(), name.to_owned()))
                            .or_default()
                            .push((key.seed.clone(), key.step, v)),
                        Err(e) => issues.push(Issue::new(key, &format!("{context}:{name}"), e.to_string())),
                    }
                }
            }
        }
    }
    CorrelationTrajectories {
        series: points
            .into_iter()
            .map(|(k, p)| (k, TrajectorySeries::from_points(p)))
            .collect(),
        issues,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegressionMode {
    /// z-score every variable with training-split statistics.
    Standardized,
    /// Bits and cosine distance, no scaling.
    BitsDistance,
}

/// Which heuristic columns feed the three-predictor regression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegressionSpec {
    pub condition: String,
    pub unigram: String,
    pub ngram: String,
    pub similarity: String,
    pub mode: RegressionMode,
}

impl RegressionSpec {
    pub fn predictor_names(&self) -> [&'static str; 3] {
        match self.mode {
            RegressionMode::Standardized => ["unigram", "ngram", "similarity"],
            RegressionMode::BitsDistance => ["unigram", "ngram", "distance"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelRegression {
    /// One series per predictor, in [`RegressionSpec::predictor_names`] order.
    pub coefficients: Vec<(String, TrajectorySeries)>,
    pub intercept: TrajectorySeries,
    pub r2_train: TrajectorySeries,
    pub r2_validation: TrajectorySeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionTrajectory {
    pub models: BTreeMap<String, ModelRegression>,
    pub issues: Vec<Issue>,
    /// Rows dropped because a predictor value is missing.
    pub excluded_train: usize,
    pub excluded_validation: usize,
}

struct FitPoint {
    coefficients: Vec<f64>,
    intercept: f64,
    r2_train: f64,
    r2_validation: Option<f64>,
}

/// Fits the regression at every checkpoint on `train_rows` and scores it on
/// `validation_rows`.
pub fn regression_trajectory(
    scores: &ScoreGroups,
    table: &HeuristicTable,
    spec: &RegressionSpec,
    train_rows: &[usize],
    validation_rows: &[usize],
) -> Result<RegressionTrajectory, AnalysisError> {
    let lookup = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| AnalysisError::MissingColumn(name.to_owned()))
    };
    let cols = [lookup(&spec.unigram)?, lookup(&spec.ngram)?, lookup(&spec.similarity)?];
    let kinds = [ColumnKind::LogProb, ColumnKind::LogProb, ColumnKind::Similarity];
    let complete = |rows: &[usize]| -> Vec<usize> {
        rows.iter()
            .copied()
            .filter(|&r| cols.iter().all(|c| c.values[r].is_some_and(f64::is_finite)))
            .collect()
    };
    let train = complete(train_rows);
    let validation = complete(validation_rows);
    let names = spec.predictor_names();

    let design = |rows: &[usize], y: Vec<f64>| {
        DesignMatrix::new(
            cols.iter()
                .zip(kinds)
                .zip(names)
                .map(|((c, kind), name)| {
                    (
                        name.replace("distance", "similarity"),
                        kind,
                        rows.iter().map(|&r| c.values[r].unwrap()).collect(),
                    )
                })
                .collect(),
            y,
        )
    };

    let fit_one = |group: &HashMap<String, f64>| -> Result<FitPoint, String> {
        let y_train = responses(group, table, &train).map_err(|m| missing_message(&m))?;
        let y_val = responses(group, table, &validation).map_err(|m| missing_message(&m))?;
        let x_train = design(&train, y_train).map_err(|e| e.to_string())?;
        let x_val = design(&validation, y_val).map_err(|e| e.to_string())?;
        let res = match spec.mode {
            RegressionMode::Standardized => fit_standardized(&x_train, Some(&x_val)),
            RegressionMode::BitsDistance => unnormalized_fit(&x_train, Some(&x_val)),
        }
        .map_err(|e| e.to_string())?;
        Ok(FitPoint {
            coefficients: res.coefficients,
            intercept: res.intercept,
            r2_train: res.r2_train,
            r2_validation: res.r2_validation,
        })
    };

    let groups: Vec<_> = scores.iter().collect();
    let fits: Vec<_> = groups.par_iter().map(|&(key, g)| (key, fit_one(g))).collect();

    type Points = Vec<(String, u64, f64)>;
    let mut per_model: BTreeMap<String, (Vec<Points>, Points, Points, Points)> = BTreeMap::new();
    let mut issues = Vec::new();
    for (key, fit) in fits {
        match fit {
            Err(message) => issues.push(Issue::new(key, &spec.condition, message)),
            Ok(p) => {
                let entry = per_model
                    .entry(key.model.clone())
                    .or_insert_with(|| (vec![Vec::new(); 3], Vec::new(), Vec::new(), Vec::new()));
                for (series, c) in entry.0.iter_mut().zip(p.coefficients) {
                    series.push((key.seed.clone(), key.step, c));
                }
                entry.1.push((key.seed.clone(), key.step, p.intercept));
                entry.2.push((key.seed.clone(), key.step, p.r2_train));
                if let Some(v) = p.r2_validation {
                    entry.3.push((key.seed.clone(), key.step, v));
                }
            }
        }
    }

    let models = per_model
        .into_iter()
        .map(|(model, (coefs, intercept, r2t, r2v))| {
            let coefficients = names
                .iter()
                .zip(coefs)
                .map(|(n, p)| ((*n).to_owned(), TrajectorySeries::from_points(p)))
                .collect();
            (
                model,
                ModelRegression {
                    coefficients,
                    intercept: TrajectorySeries::from_points(intercept),
                    r2_train: TrajectorySeries::from_points(r2t),
                    r2_validation: TrajectorySeries::from_points(r2v),
                },
            )
        })
        .collect();

    Ok(RegressionTrajectory {
        models,
        issues,
        excluded_train: train_rows.len() - train.len(),
        excluded_validation: validation_rows.len() - validation.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::heuristics::HeuristicColumn;

    fn table(values: &[(&str, Vec<f64>)], splits: Vec<Split>) -> HeuristicTable {
        HeuristicTable {
            item_ids: (0..splits.len()).map(|i| format!("i{i}")).collect(),
            splits,
            columns: values
                .iter()
                .map(|(n, v)| HeuristicColumn {
                    name: (*n).to_owned(),
                    values: v.iter().map(|&x| Some(x)).collect(),
                })
                .collect(),
        }
    }

    fn group(table: &HeuristicTable, y: &[f64]) -> HashMap<String, f64> {
        table.item_ids.iter().cloned().zip(y.iter().copied()).collect()
    }

    fn key(model: &str, seed: &str, step: u64) -> CheckpointKey {
        CheckpointKey {
            model: model.into(),
            seed: seed.into(),
            step,
        }
    }

    #[test]
    fn series_aggregates() {
        let s = TrajectorySeries::from_points(vec![
            ("s1".into(), 20, 0.4),
            ("s2".into(), 20, 0.6),
            ("s1".into(), 10, 0.1),
        ]);
        assert_eq!(s.steps, vec![10, 20]);
        assert_eq!(s.per_seed["s2"], vec![None, Some(0.6)]);
        assert_eq!(s.ci95[0], 0.0);
        assert!((s.mean[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_seeds_have_zero_width_and_perfect_correlation() {
        let h: Vec<f64> = (0..10).map(|v| (v * v) as f64 * -0.1).collect();
        let t = table(&[("h", h.clone())], vec![Split::Train; 10]);
        let mut scores = ScoreGroups::new();
        for step in [0, 100, 200] {
            scores.insert(key("m", "a", step), group(&t, &h));
            scores.insert(key("m", "b", step), group(&t, &h));
        }
        let rows = t.rows_in(Split::Train);
        let out = correlation_trajectory(&scores, &t, &["h"], &rows, CorrelationMethod::Pearson);
        let s = &out.series[&("m".to_owned(), "h".to_owned())];
        assert_eq!(s.steps, vec![0, 100, 200]);
        assert!(s.ci95.iter().all(|&c| c == 0.0));
        assert!(s.mean.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert!(out.issues.is_empty());
    }

    #[test]
    fn missing_item_skips_checkpoint() {
        let h: Vec<f64> = (0..6).map(f64::from).collect();
        let t = table(&[("h", h.clone())], vec![Split::Train; 6]);
        let mut partial = group(&t, &h);
        partial.remove("i3");
        let mut scores = ScoreGroups::new();
        scores.insert(key("m", "a", 1), group(&t, &h));
        scores.insert(key("m", "a", 2), partial);
        let out = correlation_trajectory(&scores, &t, &["h"], &[0, 1, 2, 3, 4, 5], CorrelationMethod::Spearman);
        assert_eq!(out.series[&("m".to_owned(), "h".to_owned())].steps, vec![1]);
        assert_eq!(out.issues.len(), 1);
        assert!(out.issues[0].message.contains("i3"));
    }

    #[test]
    fn single_step_regression() {
        let n = 40;
        let a: Vec<f64> = (0..n).map(|i| -((i % 7) as f64) - 1.0).collect();
        let b: Vec<f64> = (0..n).map(|i| -((i * 3 % 11) as f64) - 2.0).collect();
        let s: Vec<f64> = (0..n).map(|i| ((i * 5 % 13) as f64) / 13.0).collect();
        let y: Vec<f64> = (0..n).map(|i| a[i] + 0.5 * b[i] - s[i] + ((i * 7 % 5) as f64) * 0.1).collect();
        let splits = (0..n).map(|i| if i % 2 == 0 { Split::Train } else { Split::Validation }).collect();
        let t = table(&[("u", a), ("f", b), ("sim", s)], splits);
        let mut scores = ScoreGroups::new();
        scores.insert(key("m", "a", 7), group(&t, &y));
        let spec = RegressionSpec {
            condition: "c".into(),
            unigram: "u".into(),
            ngram: "f".into(),
            similarity: "sim".into(),
            mode: RegressionMode::Standardized,
        };
        let out = regression_trajectory(&scores, &t, &spec, &t.rows_in(Split::Train), &t.rows_in(Split::Validation)).unwrap();
        let m = &out.models["m"];
        assert_eq!(m.coefficients.len(), 3);
        assert_eq!(m.coefficients[0].1.steps, vec![7]);
        assert_eq!(m.r2_validation.steps, vec![7]);
        assert!(m.intercept.mean[0].abs() < 1e-10);

        let missing = RegressionSpec { ngram: "nope".into(), ..spec };
        assert!(matches!(
            regression_trajectory(&scores, &t, &missing, &[0], &[1]),
            Err(AnalysisError::MissingColumn(_))
        ));
    }
}
