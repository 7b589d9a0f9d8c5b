use super::conditional::DependenceSpec;
use super::predictive::{predictive_capital, FlatPriorPoissonLognormal, ParameterSampler, PredictiveSettings};
use crate::aggregate::{default_tilt, discretize_severity, fft_compound};
use crate::cell::RiskCell;
use crate::dist::{FrequencyModel, SeverityModel};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, module, std_normal, substream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Settings of the parameter-uncertainty study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySettings {
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub years: Vec<usize>,
    pub replications: usize,
    /// Predictive simulations per replication.
    pub samples: usize,
    pub q: f64,
    /// Lattice size for the conditional quantiles.
    pub points: usize,
    pub seed: u64,
}

impl Default for UncertaintySettings {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            mu: 1.0,
            sigma: 2.0,
            years: vec![5, 10, 20, 40, 80],
            replications: 100,
            samples: 20_000,
            q: 0.999,
            points: 1 << 16,
            seed: 1,
        }
    }
}

/// Average relative excess of the predictive quantile over the plug-in one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyPoint {
    #[serde(rename = "T")]
    pub years: usize,
    pub mean_bias: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStudy {
    /// Quantile at the true parameters, the normalizer of every bias.
    pub true_quantile: f64,
    pub points: Vec<UncertaintyPoint>,
    /// Per-replication relative biases, indexed `[T][replication]`.
    pub replications: Vec<Vec<f64>>,
}

/// Poisson-lognormal annual-loss quantile by FFT on a lattice spanning four
/// times the severity quantile at level `1 - 1e-4 / λ`.
pub fn poisson_lognormal_quantile(lambda: f64, mu: f64, sigma: f64, q: f64, points: usize) -> Result<f64> {
    let sev = SeverityModel::lognormal(mu, sigma)?;
    let freq = FrequencyModel::poisson(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let top = 4.0 * sev.quantile((1.0 - 1e-4 / lambda).max(0.5))?;
    let lattice = discretize_severity(&sev, top / points as f64, points)?;
    fft_compound(&freq, &lattice, default_tilt(points))?.quantile(q)
}

fn poisson_lognormal_cells(p: &[f64]) -> Result<Vec<RiskCell>> {
    Ok(vec![RiskCell::new("cell", FrequencyModel::poisson(p[0])?, SeverityModel::lognormal(p[1], p[2])?)])
}

/// One replication: simulate `years` of data from the true model, then
/// compare the predictive quantile under flat priors with the plug-in
/// quantile at the MLE, relative to `true_quantile`.
fn replication(s: &UncertaintySettings, years: usize, index: u64, true_quantile: f64) -> Result<f64> {
    let mut rng = substream(s.seed, module::BIAS_STUDY, index);
    let freq = FrequencyModel::poisson(s.lambda)?;
    let counts: Vec<u64> = (0..years).map(|_| freq.sample(&mut rng)).collect();
    let n: u64 = counts.iter().sum();
    let losses: Vec<f64> = (0..n).map(|_| (s.mu + s.sigma * std_normal(&mut rng)).exp()).collect();
    let posterior = FlatPriorPoissonLognormal::new(&counts, &losses)?;
    let [l, m, sd] = posterior.mle();
    let plug_in = poisson_lognormal_quantile(l, m, sd, s.q, s.points)?;
    let settings = PredictiveSettings {
        samples: s.samples,
        seed: derive_seed(s.seed, module::PREDICTIVE, index),
        q: s.q,
        gamma: 0.95,
    };
    let predictive = predictive_capital(
        &poisson_lognormal_cells,
        &posterior as &dyn ParameterSampler,
        &DependenceSpec::Independent,
        &settings,
    )?;
    Ok((predictive.total.point - plug_in) / true_quantile)
}

/// Relative bias `E[Q_pred - Q(θ̂)] / Q(θ₀)` for each data length in the
/// grid, averaged over replications.
pub fn parameter_uncertainty_bias(settings: &UncertaintySettings) -> Result<UncertaintyStudy> {
    if settings.replications < 10 {
        return Err(Error::Domain(format!("need at least 10 replications, got {}", settings.replications)));
    }
    let true_quantile =
        poisson_lognormal_quantile(settings.lambda, settings.mu, settings.sigma, settings.q, settings.points)?;
    let r = settings.replications;
    let replications = settings
        .years
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (0..r)
                .into_par_iter()
                .map(|k| replication(settings, t, (i * r + k) as u64, true_quantile))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let points = settings
        .years
        .iter()
        .zip(&replications)
        .map(|(&t, b)| {
            let mean = b.iter().sum::<f64>() / r as f64;
            let var = b.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            UncertaintyPoint { years: t, mean_bias: mean, std_error: (var / r as f64).sqrt() }
        })
        .collect();
    Ok(UncertaintyStudy { true_quantile, points, replications })
}

pub fn write_uncertainty_csv<W: Write>(points: &[UncertaintyPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_quantile_scale() {
        // compound Poisson(10) lognormal(1, 2): the 0.999 quantile is in the
        // low thousands and above the single-loss approximation's region
        let q = poisson_lognormal_quantile(10.0, 1.0, 2.0, 0.999, 1 << 16).unwrap();
        let single = crate::aggregate::single_loss_var(
            &FrequencyModel::poisson(10.0).unwrap(),
            &SeverityModel::lognormal(1.0, 2.0).unwrap(),
            0.999,
        )
        .unwrap();
        assert!((q / single - 1.0).abs() < 0.2, "{q} vs {single}");
    }

    #[test]
    fn too_few_replications() {
        let s = UncertaintySettings { replications: 5, ..Default::default() };
        assert!(parameter_uncertainty_bias(&s).is_err());
    }

    #[test]
    fn long_history_has_small_bias() {
        let s = UncertaintySettings {
            years: vec![5, 400],
            replications: 10,
            samples: 20_000,
            points: 1 << 14,
            ..Default::default()
        };
        let study = parameter_uncertainty_bias(&s).unwrap();
        let short = study.points[0];
        let long = study.points[1];
        assert!(short.mean_bias > 0.0);
        assert!(long.mean_bias.abs() < short.mean_bias);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_uncertainty_csv(&[UncertaintyPoint { years: 40, mean_bias: 0.1, std_error: 0.01 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "T,mean_bias,std_error\n40,0.1,0.01\n");
    }
}
