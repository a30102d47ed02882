use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::stats::{zscore_apply, zscore_fit};
use super::AnalysisError;

/// Relative size below which a pivot of R marks a dependent column.
const RANK_TOLERANCE: f64 = 1e-10;

/// How a predictor column is transformed for the un-normalized fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Natural-log probability; becomes bits (-log2 p).
    LogProb,
    /// Cosine similarity; becomes cosine distance (1 - s).
    Similarity,
}

/// Item-aligned predictor columns and a log-probability response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(
        predictors: Vec<(String, ColumnKind, Vec<f64>)>,
        response: Vec<f64>,
    ) -> Result<Self, AnalysisError> {
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        let mut columns = Vec::new();
        for (name, kind, col) in predictors {
            if col.len() != response.len() {
                return Err(AnalysisError::LengthMismatch(col.len(), response.len()));
            }
            names.push(name);
            kinds.push(kind);
            columns.push(col);
        }
        if columns.iter().flatten().chain(&response).any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
        Ok(Self {
            names,
            kinds,
            columns,
            response,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn rows(&self) -> usize {
        self.response.len()
    }

    /// Fits per-column mean and sample sd on this matrix.
    pub fn fit_normalization(&self) -> Result<Normalization, AnalysisError> {
        let predictors = self
            .columns
            .iter()
            .zip(&self.names)
            .map(|(c, name)| {
                zscore_fit(c).map_err(|e| match e {
                    AnalysisError::DegenerateVariance => AnalysisError::ConstantColumn(name.clone()),
                    e => e,
                })
            })
            .collect::<Result<_, _>>()?;
        let response = zscore_fit(&self.response)?;
        Ok(Normalization { predictors, response })
    }

    pub fn standardize(&self, norm: &Normalization) -> Self {
        Self {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            columns: self
                .columns
                .iter()
                .zip(&norm.predictors)
                .map(|(c, &(m, sd))| zscore_apply(c, m, sd))
                .collect(),
            response: zscore_apply(&self.response, norm.response.0, norm.response.1),
        }
    }

    /// Log-probabilities to bits, similarities to distances; response to bits.
    pub fn to_bits_distance(&self) -> Self {
        let bits = |v: &[f64]| v.iter().map(|x| -x / LN_2).collect::<Vec<_>>();
        Self {
            names: self
                .names
                .iter()
                .zip(&self.kinds)
                .map(|(n, k)| match k {
                    ColumnKind::Similarity => n.replace("similarity", "distance"),
                    ColumnKind::LogProb => n.clone(),
                })
                .collect(),
            kinds: self.kinds.clone(),
            columns: self
                .columns
                .iter()
                .zip(&self.kinds)
                .map(|(c, k)| match k {
                    ColumnKind::LogProb => bits(c),
                    ColumnKind::Similarity => c.iter().map(|s| 1.0 - s).collect(),
                })
                .collect(),
            response: bits(&self.response),
        }
    }
}

/// Means and sample sds (predictors in column order, then the response).
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub predictors: Vec<(f64, f64)>,
    pub response: (f64, f64),
}

/// Least-squares fit with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn predict(&self, x: &DesignMatrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(x.columns())
                        .map(|(b, c)| b * c[i])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// 1 - SSE/SST, with SST taken around the mean of `actual`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, AnalysisError> {
    let m = super::stats::mean(actual);
    let sst: f64 = actual.iter().map(|y| (y - m) * (y - m)).sum();
    if sst == 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - sse / sst)
}

/// Ordinary least squares through a Householder QR of `[1 | X]`.
///
/// A column whose pivot in R is negligible relative to the column's own norm
/// lies in the span of the columns before it and is reported by name.
pub fn ols_fit(x: &DesignMatrix) -> Result<OlsFit, AnalysisError> {
    let n = x.rows();
    let p = x.columns().len() + 1;
    if n < p + 1 {
        return Err(AnalysisError::TooFewObservations { needed: p + 1, got: n });
    }
    let cols = x.columns();
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let norms: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();
    let qr = design.qr();
    let r = qr.r();

    let dependent: Vec<String> = (0..p)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOLERANCE * norms[j].max(f64::MIN_POSITIVE))
        .map(|j| if j == 0 { "intercept".to_owned() } else { x.names()[j - 1].clone() })
        .collect();
    if !dependent.is_empty() {
        return Err(AnalysisError::Singular(dependent));
    }

    let mut qty = DVector::from_column_slice(x.response());
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| AnalysisError::Singular(x.names().to_vec()))?;

    let mut fit = OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        r_squared: 0.0,
        residuals: Vec::new(),
    };
    let predicted = fit.predict(x);
    fit.residuals = x.response().iter().zip(&predicted).map(|(y, p)| y - p).collect();
    fit.r_squared = r_squared(x.response(), &predicted)?;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub predictors: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r2_train: f64,
    pub r2_validation: Option<f64>,
    pub n_train: usize,
    pub n_validation: usize,
    /// Present for standardized fits: the training-split statistics.
    pub normalization: Option<Normalization>,
}

fn finish(
    fit: OlsFit,
    train: &DesignMatrix,
    validation: Option<&DesignMatrix>,
    normalization: Option<Normalization>,
) -> Result<RegressionResult, AnalysisError> {
    let r2_validation = match validation {
        Some(v) if v.rows() >= 2 => Some(r_squared(v.response(), &fit.predict(v))?),
        _ => None,
    };
    Ok(RegressionResult {
        predictors: train.names().to_vec(),
        coefficients: fit.coefficients,
        intercept: fit.intercept,
        r2_train: fit.r_squared,
        r2_validation,
        n_train: train.rows(),
        n_validation: validation.map_or(0, DesignMatrix::rows),
        normalization,
    })
}

/// Fits on z-scored variables; validation is standardized with the
/// training statistics before scoring.
pub fn fit_standardized(train: &DesignMatrix, validation: Option<&DesignMatrix>) -> Result<RegressionResult, AnalysisError> {
    let norm = train.fit_normalization()?;
    let z_train = train.standardize(&norm);
    let z_val = validation.map(|v| v.standardize(&norm));
    let fit = ols_fit(&z_train)?;
    finish(fit, &z_train, z_val.as_ref(), Some(norm))
}

/// Fits on variables as given.
pub fn fit_raw(train: &DesignMatrix, validation: Option<&DesignMatrix>) -> Result<RegressionResult, AnalysisError> {
    let fit = ols_fit(train)?;
    finish(fit, train, validation, None)
}

/// Un-normalized fit in bits, with cosine distance in place of similarity.
pub fn unnormalized_fit(train: &DesignMatrix, validation: Option<&DesignMatrix>) -> Result<RegressionResult, AnalysisError> {
    let bits_val = validation.map(DesignMatrix::to_bits_distance);
    fit_raw(&train.to_bits_distance(), bits_val.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats::{pearson, sample_sd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(cols: Vec<(&str, Vec<f64>)>, y: Vec<f64>) -> DesignMatrix {
        DesignMatrix::new(
            cols.into_iter()
                .map(|(n, c)| (n.to_owned(), ColumnKind::LogProb, c))
                .collect(),
            y,
        )
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let fit = ols_fit(&matrix(vec![("x", x)], y)).unwrap();
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_is_named() {
        let x: Vec<f64> = (0..8).map(|v| (v * v) as f64).collect();
        let y: Vec<f64> = (0..8).map(|v| v as f64 + 0.5 * ((v % 3) as f64)).collect();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = ols_fit(&matrix(vec![("a", x), ("b", doubled)], y)).unwrap_err();
        match err {
            AnalysisError::Singular(cols) => assert_eq!(cols, ["b"]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn constant_column_collides_with_intercept() {
        let y: Vec<f64> = (0..6).map(f64::from).collect();
        let err = ols_fit(&matrix(vec![("c", vec![5.0; 6])], y)).unwrap_err();
        assert!(matches!(err, AnalysisError::Singular(ref c) if c == &["c"]), "{err}");
    }

    #[test]
    fn too_few_rows() {
        let err = ols_fit(&matrix(vec![("x", vec![1.0, 2.0])], vec![1.0, 3.0])).unwrap_err();
        assert!(matches!(err, AnalysisError::TooFewObservations { .. }));
    }

    #[test]
    fn non_finite_rejected() {
        let err = DesignMatrix::new(vec![("x".into(), ColumnKind::LogProb, vec![1.0, f64::NAN])], vec![1.0, 2.0]);
        assert!(matches!(err, Err(AnalysisError::NonFinite)));
    }

    fn random_problem(n: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..0.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| 0.6 * v + rng.random_range(-1.0..1.0)).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.9)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| -2.0 + 0.7 * a[i] + 0.4 * b[i] + 1.5 * s[i] + rng.random_range(-1.0..1.0))
            .collect();
        DesignMatrix::new(
            vec![
                ("unigram".into(), ColumnKind::LogProb, a),
                ("ngram5".into(), ColumnKind::LogProb, b),
                ("similarity".into(), ColumnKind::Similarity, s),
            ],
            y,
        )
        .unwrap()
    }

    #[test]
    fn residuals_are_orthogonal() {
        let x = random_problem(2000, 3);
        let fit = ols_fit(&x).unwrap();
        let ynorm: f64 = x.response().iter().map(|v| v * v).sum::<f64>().sqrt();
        let ones = vec![1.0; x.rows()];
        for col in std::iter::once(&ones).chain(x.columns()) {
            let dot: f64 = col.iter().zip(&fit.residuals).map(|(a, e)| a * e).sum();
            let cnorm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() <= 1e-8 * cnorm * ynorm, "dot {dot}");
        }
        let m = crate::analysis::stats::mean(x.response());
        let sst: f64 = x.response().iter().map(|y| (y - m).powi(2)).sum();
        let sse: f64 = fit.residuals.iter().map(|e| e * e).sum();
        assert!((fit.r_squared - (1.0 - sse / sst)).abs() < 1e-10);
    }

    #[test]
    fn standardized_intercept_vanishes() {
        let x = random_problem(500, 4);
        let res = fit_standardized(&x, None).unwrap();
        assert!(res.intercept.abs() <= 1e-10, "{}", res.intercept);
    }

    #[test]
    fn single_predictor_coefficient_is_r() {
        let x = random_problem(500, 5);
        let single = matrix(vec![("a", x.columns()[0].clone())], x.response().to_vec());
        let res = fit_standardized(&single, None).unwrap();
        let r = pearson(&x.columns()[0], x.response()).unwrap();
        assert!((res.coefficients[0] - r).abs() < 1e-10);
    }

    #[test]
    fn validation_uses_train_statistics() {
        let train = random_problem(400, 6);
        let val = random_problem(400, 7);
        let res = fit_standardized(&train, Some(&val)).unwrap();
        let norm = res.normalization.as_ref().unwrap();
        assert_eq!(norm.response.0, crate::analysis::stats::mean(train.response()));
        let r2v = res.r2_validation.unwrap();
        assert!(r2v < 1.0 && r2v > 0.0);
        assert_eq!(res.n_validation, 400);
    }

    #[test]
    fn bits_fit_relates_by_sd_ratio() {
        let x = random_problem(1000, 8);
        let z = fit_standardized(&x, None).unwrap();
        let raw = unnormalized_fit(&x, None).unwrap();
        let bits = x.to_bits_distance();
        assert_eq!(raw.predictors[2], "distance");
        let sd_y = sample_sd(bits.response());
        for j in 0..3 {
            let expected = z.coefficients[j] * sd_y / sample_sd(&bits.columns()[j]);
            assert!((raw.coefficients[j] - expected).abs() < 1e-9, "{j}: {} vs {expected}", raw.coefficients[j]);
        }
        assert!((raw.r2_train - z.r2_train).abs() < 1e-10);
        for (d, s) in bits.columns()[2].iter().zip(&x.columns()[2]) {
            assert_eq!(*d, 1.0 - s);
        }
    }

    #[test]
    fn bits_exact_fit() {
        let a: Vec<f64> = (1..10).map(|v| -(v as f64) * 0.3).collect();
        let s: Vec<f64> = (1..10).map(|v| ((v * 7) % 5) as f64 / 10.0).collect();
        let y: Vec<f64> = a.iter().zip(&s).map(|(a, s)| 0.5 * a - 0.25 * s - 1.0).collect();
        let x = DesignMatrix::new(
            vec![
                ("unigram".into(), ColumnKind::LogProb, a),
                ("similarity".into(), ColumnKind::Similarity, s),
            ],
            y,
        )
        .unwrap();
        let res = unnormalized_fit(&x, None).unwrap();
        assert!((res.r2_train - 1.0).abs() < 1e-12);
    }
}
