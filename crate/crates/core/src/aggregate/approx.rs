use crate::dist::{FrequencyModel, SeverityModel};
use crate::error::{Error, Result};
use crate::numeric::{gamma_quantile, normal_quantile};
use serde::{Deserialize, Serialize};

/// Annual-loss quantile from the severity quantile at `1 - (1 - q)/E[N]`.
pub fn single_loss_var(freq: &FrequencyModel, sev: &SeverityModel, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    if !sev.is_subexponential() {
        return Err(Error::NotSubexponential(sev.family_name().into()));
    }
    let mean = freq.mean();
    if mean <= 0.0 {
        return Err(Error::Degenerate("expected count is zero".into()));
    }
    let p = 1.0 - (1.0 - q) / mean;
    if p <= 0.0 {
        return Err(Error::Probability(p));
    }
    sev.quantile(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMatch {
    Normal,
    TranslatedGamma,
}

/// Mean, variance and third cumulant of the compound sum.
pub fn compound_cumulants(freq: &FrequencyModel, sev: &SeverityModel, order: u32) -> Result<(f64, f64, f64)> {
    let ex = sev.mean()?;
    let vx = sev.variance()?;
    let mean = freq.mean() * ex;
    let var = freq.mean() * vx + freq.variance() * ex * ex;
    let k3 = if order >= 3 {
        let k3x = sev.third_central_moment()?;
        freq.mean() * k3x + 3.0 * freq.variance() * ex * vx + freq.third_cumulant() * ex.powi(3)
    } else {
        f64::NAN
    };
    Ok((mean, var, k3))
}

/// Quantile of a normal or translated-gamma law matched to the compound moments.
pub fn moment_match_quantile(freq: &FrequencyModel, sev: &SeverityModel, kind: MomentMatch, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    match kind {
        MomentMatch::Normal => {
            let (m, v, _) = compound_cumulants(freq, sev, 2)?;
            Ok(m + v.sqrt() * normal_quantile(q))
        }
        MomentMatch::TranslatedGamma => {
            let (m, v, k3) = compound_cumulants(freq, sev, 3)?;
            let skew = k3 / v.powf(1.5);
            if !(skew > 0.0) {
                return Err(Error::Numerical(format!("translated gamma needs positive skewness, got {skew}")));
            }
            let shape = 4.0 / (skew * skew);
            let scale = v.sqrt() * skew / 2.0;
            Ok(m - shape * scale + gamma_quantile(shape, scale, q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_mean_count_is_severity_quantile() {
        let sev = SeverityModel::lognormal(1.0, 2.0).unwrap();
        let freq = FrequencyModel::poisson(1.0).unwrap();
        assert_relative_eq!(single_loss_var(&freq, &sev, 0.99).unwrap(), sev.quantile(0.99).unwrap());
    }

    #[test]
    fn reference_value() {
        let sev = SeverityModel::lognormal(1.0, 2.0).unwrap();
        let freq = FrequencyModel::poisson(10.0).unwrap();
        let v = single_loss_var(&freq, &sev, 0.999).unwrap();
        assert_relative_eq!(v.ln(), 1.0 + 2.0 * 3.719_016_485_455_709, max_relative = 1e-12);
    }

    #[test]
    fn whitelist_and_degenerate() {
        let freq = FrequencyModel::poisson(10.0).unwrap();
        let light = SeverityModel::gpd(0.0, 1.0).unwrap();
        assert!(matches!(single_loss_var(&freq, &light, 0.999), Err(Error::NotSubexponential(_))));
        let none = FrequencyModel::poisson(0.0).unwrap();
        let sev = SeverityModel::lognormal(0.0, 1.0).unwrap();
        assert!(matches!(single_loss_var(&none, &sev, 0.999), Err(Error::Degenerate(_))));
    }

    #[test]
    fn degenerate_severity_moments() {
        let sev = SeverityModel::point_mass(2.5).unwrap();
        let freq = FrequencyModel::poisson(4.0).unwrap();
        let (m, v, _) = compound_cumulants(&freq, &sev, 2).unwrap();
        assert_relative_eq!(m, 10.0);
        assert_relative_eq!(v, 4.0 * 6.25);
        assert_relative_eq!(moment_match_quantile(&freq, &sev, MomentMatch::Normal, 0.5).unwrap(), 10.0);
    }

    #[test]
    fn third_cumulant_poisson_identity() {
        // κ3 of a compound Poisson equals λ E[X³]
        let sev = SeverityModel::lognormal(0.2, 0.4).unwrap();
        let freq = FrequencyModel::poisson(7.0).unwrap();
        let (_, _, k3) = compound_cumulants(&freq, &sev, 3).unwrap();
        assert_relative_eq!(k3, 7.0 * sev.raw_moment(3).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn infinite_moment_rejected() {
        let sev = SeverityModel::gpd(0.4, 1.0).unwrap();
        let freq = FrequencyModel::poisson(4.0).unwrap();
        assert!(moment_match_quantile(&freq, &sev, MomentMatch::TranslatedGamma, 0.99).is_err());
        assert!(moment_match_quantile(&freq, &sev, MomentMatch::Normal, 0.99).is_ok());
    }
}
