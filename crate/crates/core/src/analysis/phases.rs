use super::AnalysisError;

pub const DEFAULT_STABILITY_EPS: f64 = 0.01;

/// Boundaries between the three coefficient regimes of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    /// Step at which the unigram coefficient peaks.
    pub phase1_end: u64,
    /// First step after the peak from which every coefficient changes by
    /// less than `threshold` per step interval, if any.
    pub phase2_end: Option<u64>,
    pub threshold: f64,
}

/// Locates the unigram peak and the start of the stable tail.
///
/// `coefficients[0]` is the unigram series; all series align with `steps`.
/// The stable tail must contain at least one step interval, so the last step
/// alone never counts as stable.
pub fn detect_phases(steps: &[u64], coefficients: &[&[f64]], eps: f64) -> Result<PhaseReport, AnalysisError> {
    if steps.len() < 3 {
        return Err(AnalysisError::TooFewObservations { needed: 3, got: steps.len() });
    }
    if coefficients.is_empty() {
        return Err(AnalysisError::TooFewObservations { needed: 1, got: 0 });
    }
    if let Some(bad) = coefficients.iter().find(|c| c.len() != steps.len()) {
        return Err(AnalysisError::LengthMismatch(bad.len(), steps.len()));
    }
    if steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::UnorderedSteps);
    }
    if !(eps > 0.0) {
        return Err(AnalysisError::InvalidThreshold(eps));
    }
    if coefficients.iter().flat_map(|c| c.iter()).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }

    let unigram = coefficients[0];
    let mut peak = 0;
    for (i, &v) in unigram.iter().enumerate() {
        if v > unigram[peak] {
            peak = i;
        }
    }

    let n = steps.len();
    // stable_from[i]: every delta from interval i onward is below eps
    let mut stable_from = vec![false; n];
    let mut all_small = true;
    for i in (0..n - 1).rev() {
        all_small &= coefficients.iter().all(|c| (c[i + 1] - c[i]).abs() < eps);
        stable_from[i] = all_small;
    }
    let phase2_end = (peak + 1..n - 1).find(|&i| stable_from[i]).map(|i| steps[i]);

    Ok(PhaseReport {
        phase1_end: steps[peak],
        phase2_end,
        threshold: eps,
    })
}
