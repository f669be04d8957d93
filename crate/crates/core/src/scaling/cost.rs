use super::ScalingError;

/// Collapse cost of `values` ordered by ascending `keys`:
///
/// `C_Q = Σ |Q_{i+1} − Q_i| / (max Q − min Q) − 1`
///
/// Zero exactly when the ordered sequence is monotone. Ties in the key are
/// broken by value so the result does not depend on input order.
pub fn cost_function(values: &[f64], keys: &[f64]) -> Result<f64, ScalingError> {
    if values.len() != keys.len() {
        return Err(ScalingError::LengthMismatch(values.len(), keys.len()));
    }
    if values.len() < 2 {
        return Err(ScalingError::TooFewPoints {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().chain(keys).any(|x| !x.is_finite()) {
        return Err(ScalingError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .total_cmp(&keys[b])
            .then(values[a].total_cmp(&values[b]))
    });
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if !(range > 0.0) {
        return Err(ScalingError::ConstantData);
    }
    let steps: Vec<f64> = order
        .windows(2)
        .map(|w| values[w[1]] - values[w[0]])
        .collect();
    // The telescoping sum only cancels up to rounding, so monotone data is
    // detected directly.
    if steps.iter().all(|&d| d >= 0.0) || steps.iter().all(|&d| d <= 0.0) {
        return Ok(0.0);
    }
    let path: f64 = steps.iter().map(|d| d.abs()).sum();
    Ok((path / range - 1.0).max(0.0))
}
