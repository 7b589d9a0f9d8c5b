use crate::dist::LossDistribution;

/// Kolmogorov-Smirnov distance between the empirical cdf of `sample` and `model`.
pub fn ks_statistic<D: LossDistribution + ?Sized>(sample: &[f64], model: &D) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = model.cdf_total(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
