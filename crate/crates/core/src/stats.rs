/// Sample mean and standard error of the mean. The standard error is 0 for
/// fewer than two samples.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Shifted by the first sample: identical samples give their value exactly.
    let x0 = xs[0];
    let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pointwise mean and standard error over equally long sample rows.
pub(crate) fn columnwise_mean_stderr(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let len = rows.first().map_or(0, Vec::len);
    let mut means = Vec::with_capacity(len);
    let mut errs = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(rows.len());
    for i in 0..len {
        column.clear();
        column.extend(rows.iter().map(|r| r[i]));
        let (m, e) = mean_and_stderr(&column);
        means.push(m);
        errs.push(e);
    }
    (means, errs)
}
