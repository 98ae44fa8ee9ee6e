/// Normal-approximation 95% half-width multiplier.
pub const Z95: f64 = 1.96;

/// Mean and 95% confidence half-width `1.96 · s / √n` using the sample
/// standard deviation. A single observation has zero width.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Z95 * (var / n as f64).sqrt())
}
