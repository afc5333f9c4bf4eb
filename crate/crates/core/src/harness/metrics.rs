use crate::error::{Result, SaddleError};

/// Mean of the consecutive distance ratios `‖z_{k+1}−z*‖ / ‖z_k−z*‖` over
/// the first `k_steps` steps.
///
/// The sum stops early once a distance falls to round-off level relative to
/// the first one, since later ratios are noise.
pub fn mean_convergence_rate(distances: &[f64], k_steps: usize) -> Result<f64> {
    if k_steps == 0 {
        return Err(SaddleError::InvalidParameter(
            "rate horizon K must be at least 1".into(),
        ));
    }
    if distances.len() < 2 {
        return Err(SaddleError::UndefinedMetric(format!(
            "need at least two distances, got {}",
            distances.len()
        )));
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(SaddleError::UndefinedMetric(
            "distances must be finite and nonnegative".into(),
        ));
    }
    let floor = f64::EPSILON * distances[0];
    let mut sum = 0.0;
    let mut count = 0usize;
    for w in distances.windows(2).take(k_steps) {
        if w[0] <= floor || w[0] == 0.0 {
            break;
        }
        sum += w[1] / w[0];
        count += 1;
    }
    if count == 0 {
        return Err(SaddleError::UndefinedMetric("initial distance is zero".into()));
    }
    Ok(sum / count as f64)
}
