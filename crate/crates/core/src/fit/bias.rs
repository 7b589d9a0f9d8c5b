use crate::aggregate::{default_tilt, discretize_severity, fft_compound};
use crate::dist::{FrequencyModel, LossDistribution, SeverityModel};
use crate::error::{Error, Result};
use crate::numeric::{
    integrate_infinite, integrate_semi_infinite, minimize_multistart, normal_pdf, normal_quantile, normal_sf,
    SimplexOptions,
};
use serde::{Deserialize, Serialize};

/// How reported-only data are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationVariant {
    /// Untruncated density fitted to the reported losses; intensity `λ_L`.
    Naive,
    /// Density of `x - L` fitted to the reported losses; intensity `λ_L`.
    Shifted,
    /// Conditional density above `L`; intensity `λ_L / (1 - F(L))`.
    Truncated,
}

impl TruncationVariant {
    pub fn tag(self) -> &'static str {
        match self {
            TruncationVariant::Naive => "naive",
            TruncationVariant::Shifted => "shifted",
            TruncationVariant::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSettings {
    /// Log-scale location of the true lognormal; relative bias does not depend on it.
    pub mu: f64,
    /// FFT lattice size.
    pub points: usize,
    pub q: f64,
}

impl Default for BiasSettings {
    fn default() -> Self {
        Self { mu: 0.0, points: 1 << 16, q: 0.999 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub fraction: f64,
    pub threshold: f64,
    pub true_quantile: f64,
    pub model_quantile: f64,
    /// `model_quantile / true_quantile - 1`.
    pub bias: f64,
    /// Lognormal `(mu, sigma)` of the false model.
    pub fitted: [f64; 2],
    pub lambda: f64,
}

/// A severity moved right by `shift`.
struct Shifted<'a> {
    base: &'a SeverityModel,
    shift: f64,
}

impl LossDistribution for Shifted<'_> {
    fn cdf_total(&self, x: f64) -> f64 {
        self.base.cdf_total(x - self.shift)
    }

    fn sf_total(&self, x: f64) -> f64 {
        self.base.sf_total(x - self.shift)
    }
}

/// First two moments of `g(ln X)` for `X ~ LN(mu, sigma)` conditioned on `X > L`.
fn conditional_log_moments<G: Fn(f64) -> f64>(mu: f64, sigma: f64, threshold: f64, g: G) -> Result<(f64, f64)> {
    const TOL: f64 = 1e-13;
    let moment = |p: i32| -> Result<f64> {
        let f = |w: f64| g(mu + sigma * w).powi(p) * normal_pdf(w);
        if threshold > 0.0 {
            let a = (threshold.ln() - mu) / sigma;
            Ok(integrate_semi_infinite(f, a, TOL, TOL)?.value / normal_sf(a))
        } else {
            Ok(integrate_infinite(f, TOL, TOL)?.value)
        }
    };
    Ok((moment(1)?, moment(2)?))
}

/// Lognormal parameters minimizing the cross-entropy against the reported-loss law.
fn kl_fit(variant: TruncationVariant, mu: f64, sigma: f64, threshold: f64) -> Result<[f64; 2]> {
    let (m1, m2) = match variant {
        TruncationVariant::Shifted if threshold > 0.0 => {
            let ll = threshold.ln();
            conditional_log_moments(mu, sigma, threshold, |z| z + (-(ll - z).exp()).ln_1p())?
        }
        _ => conditional_log_moments(mu, sigma, threshold, |z| z)?,
    };
    // E[-ln f(Y)] for LN(m, s), up to terms free of (m, s)
    let objective = |th: &[f64]| {
        let (m, s) = (th[0], th[1]);
        if !(s > 0.0) {
            return f64::INFINITY;
        }
        let base = s.ln() + (m2 - 2.0 * m * m1 + m * m) / (2.0 * s * s);
        match variant {
            TruncationVariant::Truncated if threshold > 0.0 => base + normal_sf((threshold.ln() - m) / s).ln(),
            _ => base,
        }
    };
    let sd = (m2 - m1 * m1).max(1e-12).sqrt();
    let starts = [vec![m1, sd], vec![mu, sigma], vec![m1 - sd, 1.5 * sd]];
    let best = minimize_multistart(objective, &starts, &[0.1 * sd, 0.1 * sd], SimplexOptions::default())?;
    Ok([best.x[0], best.x[1]])
}

/// Relative bias of the `q` annual-loss quantile when a Poisson/lognormal
/// cell observed above a threshold is modelled by `variant`. Each fraction
/// sets the threshold at that quantile of the true severity; the reported
/// intensity stays `lambda_reported`. False parameters are the infinite-sample
/// limit of the fit, so the bias reflects model error only.
pub fn truncation_bias_experiment(
    sigma: f64,
    lambda_reported: f64,
    fractions: &[f64],
    variant: TruncationVariant,
    settings: &BiasSettings,
) -> Result<Vec<BiasPoint>> {
    let mu = settings.mu;
    let truth = SeverityModel::lognormal(mu, sigma)?;
    fractions
        .iter()
        .map(|&frac| {
            if !(0.0..1.0).contains(&frac) {
                return Err(Error::Probability(frac));
            }
            let threshold = if frac == 0.0 { 0.0 } else { (mu + sigma * normal_quantile(frac)).exp() };
            let lambda = lambda_reported / (1.0 - frac);
            let m = settings.points;
            let step = 16.0 * truth.quantile(1.0 - 1e-4 / lambda)? / m as f64;
            let quantile = |freq: &FrequencyModel, sev: &dyn LossDistribution| -> Result<f64> {
                let lattice = discretize_severity(sev, step, m)?;
                fft_compound(freq, &lattice, default_tilt(m))?.quantile(settings.q)
            };
            let true_quantile = quantile(&FrequencyModel::poisson(lambda)?, &truth)?;

            let fitted = kl_fit(variant, mu, sigma, threshold)?;
            let model = SeverityModel::lognormal(fitted[0], fitted[1])?;
            let (model_lambda, model_quantile) = match variant {
                TruncationVariant::Naive => {
                    (lambda_reported, quantile(&FrequencyModel::poisson(lambda_reported)?, &model)?)
                }
                TruncationVariant::Shifted => {
                    let shifted = Shifted { base: &model, shift: threshold };
                    (lambda_reported, quantile(&FrequencyModel::poisson(lambda_reported)?, &shifted)?)
                }
                TruncationVariant::Truncated => {
                    let l = lambda_reported / model.sf_total(threshold);
                    (l, quantile(&FrequencyModel::poisson(l)?, &model)?)
                }
            };
            Ok(BiasPoint {
                fraction: frac,
                threshold,
                true_quantile,
                model_quantile,
                bias: model_quantile / true_quantile - 1.0,
                fitted,
                lambda: model_lambda,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FRACTIONS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

    fn run(sigma: f64, variant: TruncationVariant) -> Vec<BiasPoint> {
        let s = BiasSettings { points: 1 << 14, ..BiasSettings::default() };
        truncation_bias_experiment(sigma, 10.0, &FRACTIONS, variant, &s).unwrap()
    }

    #[test]
    fn naive_fit_is_truncated_normal_moments() {
        // the naive lognormal limit matches the truncated-normal moments of ln X
        let (mu, sigma, a): (f64, f64, f64) = (1.0, 1.5, 0.4);
        let l = (mu + sigma * a).exp();
        let fit = kl_fit(TruncationVariant::Naive, mu, sigma, l).unwrap();
        let lam = normal_pdf(a) / normal_sf(a);
        let mean = mu + sigma * lam;
        let var = sigma * sigma * (1.0 + a * lam - lam * lam);
        assert_relative_eq!(fit[0], mean, max_relative = 1e-7);
        assert_relative_eq!(fit[1], var.sqrt(), max_relative = 1e-7);
    }

    #[test]
    fn truncated_fit_recovers_truth() {
        let fit = kl_fit(TruncationVariant::Truncated, 0.5, 2.0, 3.0).unwrap();
        assert!((fit[0] - 0.5).abs() < 1e-6 && (fit[1] - 2.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn zero_fraction_has_no_bias() {
        for v in [TruncationVariant::Naive, TruncationVariant::Shifted, TruncationVariant::Truncated] {
            assert!(run(1.0, v)[0].bias.abs() < 1e-12);
        }
    }

    #[test]
    fn naive_underestimates() {
        let b: Vec<f64> = run(1.0, TruncationVariant::Naive).iter().map(|p| p.bias).collect();
        assert!(b[1..].iter().all(|&v| v < 0.0), "{b:?}");
        assert!(b.windows(2).all(|w| w[1] <= w[0]), "{b:?}");
    }

    #[test]
    fn truncated_is_unbiased() {
        for sigma in [1.0, 2.0] {
            for p in run(sigma, TruncationVariant::Truncated) {
                assert!(p.bias.abs() < 1e-3, "{p:?}");
            }
        }
    }
}
