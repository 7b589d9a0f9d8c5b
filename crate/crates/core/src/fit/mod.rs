//! Frequentist estimation from losses reported above a threshold.

mod bias;
mod bootstrap;
mod gof;
mod mle;

pub use bias::{truncation_bias_experiment, BiasPoint, BiasSettings, TruncationVariant};
pub use bootstrap::{bootstrap, BootstrapSample};
pub use gof::ks_statistic;
pub use mle::{fit_truncated_mle, joint_log_likelihood, observed_information, Estimation, FitDiagnostics, FitResult};

use crate::dist::{FrequencyModel, SeverityModel};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Losses of one period (year).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLosses {
    pub period: i64,
    pub amounts: Vec<f64>,
}

/// Losses observed above a constant reporting threshold, grouped by period.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    threshold: f64,
    periods: Vec<PeriodLosses>,
}

impl LossRecord {
    pub fn new(threshold: f64, periods: Vec<PeriodLosses>) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::Domain(format!("threshold must be finite and nonnegative, got {threshold}")));
        }
        for p in &periods {
            if let Some(x) = p.amounts.iter().find(|&&x| !(x >= threshold && x.is_finite())) {
                return Err(Error::Domain(format!(
                    "amount {x} in period {} is below the threshold {threshold}",
                    p.period
                )));
            }
        }
        Ok(Self { threshold, periods })
    }

    /// Groups `(period, amount)` rows; periods between the first and last
    /// with no rows get a zero count.
    pub fn from_rows(threshold: f64, rows: &[(i64, f64)]) -> Result<Self> {
        let mut by: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        for &(t, x) in rows {
            by.entry(t).or_default().push(x);
        }
        let periods = match (by.keys().next().copied(), by.keys().next_back().copied()) {
            (Some(lo), Some(hi)) => {
                (lo..=hi).map(|t| PeriodLosses { period: t, amounts: by.remove(&t).unwrap_or_default() }).collect()
            }
            _ => Vec::new(),
        };
        Self::new(threshold, periods)
    }

    /// Simulates `years` periods of a cell and keeps losses at or above `threshold`.
    pub fn simulate<R: Rng + ?Sized>(
        freq: &FrequencyModel,
        sev: &SeverityModel,
        threshold: f64,
        years: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let periods = (0..years)
            .map(|t| {
                let n = freq.sample(rng);
                let amounts = (0..n).map(|_| sev.sample(rng)).filter(|&x| x >= threshold).collect();
                PeriodLosses { period: t as i64 + 1, amounts }
            })
            .collect();
        Self::new(threshold, periods)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn periods(&self) -> &[PeriodLosses] {
        &self.periods
    }

    pub fn num_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.periods.iter().map(|p| p.amounts.len() as u64).collect()
    }

    pub fn total_count(&self) -> usize {
        self.periods.iter().map(|p| p.amounts.len()).sum()
    }

    pub fn amounts(&self) -> impl Iterator<Item = f64> + '_ {
        self.periods.iter().flat_map(|p| p.amounts.iter().copied())
    }

    /// Average reported count per period.
    pub fn observed_intensity(&self) -> f64 {
        if self.periods.is_empty() {
            0.0
        } else {
            self.total_count() as f64 / self.periods.len() as f64
        }
    }
}

/// Severity families that can be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeverityFamily {
    Lognormal,
    /// Generalized Pareto for the excesses `x - L` over the threshold.
    Gpd,
    Gb2,
    Gcd,
    GAndH,
}

impl SeverityFamily {
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            SeverityFamily::Lognormal => &["mu", "sigma"],
            SeverityFamily::Gpd => &["xi", "beta"],
            SeverityFamily::Gb2 => &["a", "b", "p", "q"],
            SeverityFamily::Gcd => &["alpha", "m", "c"],
            SeverityFamily::GAndH => &["a", "b", "g", "h"],
        }
    }

    pub fn build(self, params: &[f64]) -> Result<SeverityModel> {
        match (self, params) {
            (SeverityFamily::Lognormal, &[mu, sigma]) => SeverityModel::lognormal(mu, sigma),
            (SeverityFamily::Gpd, &[xi, beta]) => SeverityModel::gpd(xi, beta),
            (SeverityFamily::Gb2, &[a, b, p, q]) => SeverityModel::gb2(a, b, p, q),
            (SeverityFamily::Gcd, &[alpha, m, c]) => SeverityModel::gcd(alpha, m, c),
            (SeverityFamily::GAndH, &[a, b, g, h]) => SeverityModel::g_and_h(a, b, g, h),
            _ => Err(Error::Domain(format!(
                "{self:?} takes {} parameters, got {}",
                self.parameter_names().len(),
                params.len()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_group_into_contiguous_periods() {
        let r = LossRecord::from_rows(1.0, &[(2001, 2.0), (2003, 5.0), (2001, 3.0)]).unwrap();
        assert_eq!(r.counts(), vec![2, 0, 1]);
        assert_eq!(r.total_count(), 3);
        assert!((r.observed_intensity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_amount_below_threshold() {
        assert!(LossRecord::from_rows(10.0, &[(1, 9.0)]).is_err());
    }
}
