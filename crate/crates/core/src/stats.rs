//! Compensated summation helpers for Monte Carlo reductions.

/// Neumaier-compensated sum; the result is correctly rounded up to a single
/// final rounding, independent of the summand count.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and standard error (unbiased variance / sqrt n).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    let var = kahan_sum(values.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}
