use crate::error::Result;
use crate::rng::{module, substream};
use rand::Rng;
use rayon::prelude::*;

/// Parameter vectors fitted to resampled data sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSample {
    pub draws: Vec<Vec<f64>>,
    /// Replicates whose fit failed and were skipped.
    pub failures: usize,
}

impl BootstrapSample {
    /// Equal-tailed percentile interval of coordinate `i`; needs two draws.
    pub fn percentile_interval(&self, i: usize, level: f64) -> Option<(f64, f64)> {
        if self.draws.len() < 2 {
            return None;
        }
        let mut v: Vec<f64> = self.draws.iter().map(|d| d[i]).collect();
        v.sort_by(f64::total_cmp);
        let at = |p: f64| v[((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
        let a = 0.5 * (1.0 - level);
        Some((at(a), at(1.0 - a)))
    }

    pub fn std_dev(&self, i: usize) -> Option<f64> {
        let n = self.draws.len();
        if n < 2 {
            return None;
        }
        let m = self.draws.iter().map(|d| d[i]).sum::<f64>() / n as f64;
        let ss = self.draws.iter().map(|d| (d[i] - m).powi(2)).sum::<f64>();
        Some((ss / (n - 1) as f64).sqrt())
    }
}

/// Nonparametric bootstrap: `replicates` resamples of `data` with
/// replacement, each drawn from its own stream and refitted by `fit`.
pub fn bootstrap<T, F>(data: &[T], fit: F, replicates: usize, seed: u64) -> BootstrapSample
where
    T: Clone + Sync,
    F: Fn(&[T]) -> Result<Vec<f64>> + Sync,
{
    if replicates < 100 {
        log::warn!("{replicates} bootstrap replicates; percentile intervals need at least 100");
    }
    let results: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, module::BOOTSTRAP, b as u64);
            let resample: Vec<T> = (0..data.len()).map(|_| data[rng.random_range(0..data.len())].clone()).collect();
            fit(&resample)
        })
        .collect();
    let mut draws = Vec::with_capacity(replicates);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(v) => draws.push(v),
            Err(e) => {
                log::debug!("bootstrap replicate skipped: {e}");
                failures += 1;
            }
        }
    }
    BootstrapSample { draws, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SeverityModel;
    use crate::error::Error;
    use crate::fit::{fit_truncated_mle, LossRecord, PeriodLosses, SeverityFamily};

    fn mean(xs: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![xs.iter().sum::<f64>() / xs.len() as f64])
    }

    #[test]
    fn constant_data_has_zero_width() {
        let b = bootstrap(&[4.0; 50], mean, 200, 1);
        assert_eq!(b.percentile_interval(0, 0.95), Some((4.0, 4.0)));
    }

    #[test]
    fn single_replicate_has_no_interval() {
        let b = bootstrap(&[1.0, 2.0, 3.0], mean, 1, 1);
        assert_eq!(b.draws.len(), 1);
        assert!(b.percentile_interval(0, 0.9).is_none());
    }

    #[test]
    fn failures_are_counted() {
        let fit = |xs: &[f64]| if xs[0] > 2.0 { Err(Error::Degenerate("x".into())) } else { mean(xs) };
        let b = bootstrap(&[1.0, 3.0], fit, 200, 2);
        assert_eq!(b.draws.len() + b.failures, 200);
        assert!(b.failures > 50);
    }

    #[test]
    fn agrees_with_observed_information() {
        let mut rng = crate::rng::substream(9, 0, 0);
        let xs = SeverityModel::lognormal(1.0, 2.0).unwrap().sample_n(&mut rng, 500);
        let to_record = |v: &[f64]| LossRecord::new(0.0, vec![PeriodLosses { period: 1, amounts: v.to_vec() }]);
        let fit = |v: &[f64]| Ok(fit_truncated_mle(&to_record(v)?, SeverityFamily::Lognormal)?.severity);
        let b = bootstrap(&xs, fit, 400, 3);
        let r = fit_truncated_mle(&to_record(&xs).unwrap(), SeverityFamily::Lognormal).unwrap();
        let info_sd = r.std_errors()[1].unwrap();
        let boot_sd = b.std_dev(0).unwrap();
        assert!((boot_sd / info_sd - 1.0).abs() < 0.2, "{boot_sd} vs {info_sd}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let data: Vec<f64> = (0..100).map(f64::from).collect();
        let run = |t| {
            rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| bootstrap(&data, mean, 300, 5))
        };
        assert_eq!(run(1), run(4));
    }
}
