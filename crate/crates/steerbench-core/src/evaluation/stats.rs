//! Accuracy statistics for the repeated-run protocol.

/// Arithmetic mean. Panics on empty input — repeat counts are validated to
/// be at least 1 upstream.
pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "mean of empty slice");
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divide by n, not n−1): the repeats are
/// treated as the whole population behind the reported error bars.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let variance = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64;
    variance.sqrt()
}
