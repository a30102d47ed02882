use super::AnalysisError;

/// Two-sided 95% normal quantile used for seed confidence intervals.
pub const Z_95: f64 = 1.96;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooFewObservations { needed: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Pearson product-moment correlation, two-pass.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Mean and sample standard deviation for later standardization.
pub fn zscore_fit(values: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::TooFewObservations { needed: 2, got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let sd = sample_sd(values);
    if sd == 0.0 || !sd.is_finite() {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((mean(values), sd))
}

pub fn zscore_apply(values: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Mean across seeds and the half-width of a normal-approximation 95% interval.
///
/// Values are summed in sorted order, so the result does not depend on the
/// order seeds arrive in. A single seed has a zero-width interval.
pub fn seed_aggregate(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "seed_aggregate needs at least one value");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    if sorted[0] == sorted[k - 1] {
        return (sorted[0], 0.0);
    }
    let m = sorted.iter().sum::<f64>() / k as f64;
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - m) * (v - m)).collect();
    dev.sort_by(f64::total_cmp);
    let sd = (dev.iter().sum::<f64>() / (k as f64 - 1.0)).sqrt();
    (m, Z_95 * sd / (k as f64).sqrt())
}
