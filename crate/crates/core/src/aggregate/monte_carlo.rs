use crate::cell::{CoverMode, RiskCell};
use crate::dist::{apply_aggregate_cover, apply_insurance};
use crate::error::{Error, Result};
use crate::numeric::{normal_quantile, snap_to_integer};
use crate::rng::{module, open_unit, parallel_blocks, Stream};
use serde::{Deserialize, Serialize};

/// Point quantile with a conservative order-statistic confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub q: f64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Confidence level of `[lower, upper]`; zero for deterministic methods.
    pub gamma: f64,
    /// Sample size; zero for deterministic methods.
    pub k: usize,
}

impl QuantileEstimate {
    pub fn exact(q: f64, value: f64) -> Self {
        Self { q, point: value, lower: value, upper: value, gamma: 0.0, k: 0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// One-based order-statistic indices `(r, point, s)` for the quantile CI.
pub fn quantile_ci_indices(k: usize, q: f64, gamma: f64) -> Result<(i64, i64, i64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Probability(gamma));
    }
    let kq = snap_to_integer(k as f64 * q);
    let z = normal_quantile(0.5 + 0.5 * gamma);
    let half = z * (k as f64 * q * (1.0 - q)).sqrt();
    let r = snap_to_integer(kq - half).floor() as i64;
    let s = snap_to_integer(kq + half).ceil() as i64;
    let point = (kq + 1.0).floor() as i64;
    if r < 1 || s > k as i64 {
        return Err(Error::CiUndefined { r, s, k });
    }
    Ok((r, point.min(k as i64), s))
}

/// Empirical `q`-quantile `X_(⌊Kq⌋+1)` with the conservative interval
/// `[X_(r), X_(s)]`.
pub fn mc_quantile_ci(samples: &[f64], q: f64, gamma: f64) -> Result<QuantileEstimate> {
    let k = samples.len();
    if k as f64 * q * (1.0 - q) < 50.0 {
        log::warn!(
            "K q (1 - q) = {:.1} is below 50; order-statistic interval may be unreliable",
            k as f64 * q * (1.0 - q)
        );
    }
    let (r, p, s) = quantile_ci_indices(k, q, gamma)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |i: i64| sorted[(i - 1) as usize];
    let point = at(p);
    Ok(QuantileEstimate { q, point, lower: at(r).min(point), upper: at(s).max(point), gamma, k })
}

/// One simulated annual loss for a cell.
pub(crate) fn simulate_year(cell: &RiskCell, rng: &mut Stream) -> f64 {
    let n = cell.frequency.sample(rng);
    match (cell.insurance, cell.cover_mode) {
        (None, _) => (0..n).map(|_| cell.severity.sample(rng)).sum(),
        (Some(p), CoverMode::PerEvent) => (0..n).map(|_| apply_insurance(cell.severity.sample(rng), &p)).sum(),
        (Some(p), CoverMode::Aggregate) => {
            let mut events: Vec<(f64, f64)> = (0..n).map(|_| (open_unit(rng), cell.severity.sample(rng))).collect();
            events.sort_by(|a, b| a.0.total_cmp(&b.0));
            let gross: Vec<f64> = events.into_iter().map(|e| e.1).collect();
            apply_aggregate_cover(&gross, &p).iter().sum()
        }
    }
}

/// Annual retained loss given the gross event losses in occurrence order.
pub(crate) fn net_annual(cell: &RiskCell, gross: &[f64]) -> f64 {
    match (cell.insurance, cell.cover_mode) {
        (None, _) => gross.iter().sum(),
        (Some(p), CoverMode::PerEvent) => gross.iter().map(|&x| apply_insurance(x, &p)).sum(),
        (Some(p), CoverMode::Aggregate) => apply_aggregate_cover(gross, &p).iter().sum(),
    }
}

/// `k` independent annual losses of `cell`, simulated in fixed-size blocks
/// with per-block streams derived from `seed`.
pub fn mc_compound(cell: &RiskCell, k: usize, seed: u64) -> Vec<f64> {
    parallel_blocks(seed, module::COMPOUND, k, |rng, _, len| (0..len).map(|_| simulate_year(cell, rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{FrequencyModel, SeverityModel};

    #[test]
    fn reference_indices() {
        assert_eq!(quantile_ci_indices(100_000, 0.999, 0.95).unwrap(), (99_880, 99_901, 99_920));
    }

    #[test]
    fn zero_width_interval() {
        let (r, _, s) = quantile_ci_indices(1000, 0.9, 0.0).unwrap();
        assert_eq!((r, s), (900, 900));
        let samples: Vec<f64> = (1..=1000).map(f64::from).collect();
        let e = mc_quantile_ci(&samples, 0.9, 0.0).unwrap();
        assert!(e.lower <= e.point && e.point <= e.upper);
    }

    #[test]
    fn undefined_interval() {
        assert!(matches!(quantile_ci_indices(100, 0.999, 0.95), Err(Error::CiUndefined { .. })));
    }

    #[test]
    fn unit_severity_counts() {
        let cell = RiskCell::new("c", FrequencyModel::poisson(3.0).unwrap(), SeverityModel::point_mass(1.0).unwrap());
        let z = mc_compound(&cell, 100_000, 1);
        assert!(z.iter().all(|v| v.fract() == 0.0));
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!((mean - 3.0).abs() < 0.02);
    }

    #[test]
    fn zero_intensity() {
        let cell =
            RiskCell::new("c", FrequencyModel::poisson(0.0).unwrap(), SeverityModel::lognormal(0.0, 1.0).unwrap());
        assert!(mc_compound(&cell, 1000, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wald_identity() {
        let cell =
            RiskCell::new("c", FrequencyModel::poisson(10.0).unwrap(), SeverityModel::lognormal(1.0, 2.0).unwrap());
        let z = mc_compound(&cell, 100_000, 3);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        // Var Z = λ E[X²] for a compound Poisson sum
        let sd = (10.0 * 10.0f64.exp()).sqrt();
        let truth = 10.0 * 3.0f64.exp();
        assert!((mean - truth).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {truth}");
    }
}
