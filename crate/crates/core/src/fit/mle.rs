use super::{LossRecord, SeverityFamily};
use crate::dist::{FrequencyModel, LossDistribution, SeverityModel};
use crate::error::{Error, Result};
use crate::numeric::{ln_gamma, minimize_multistart, neg_hessian_inverse, normal_quantile, SimplexOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimation {
    ClosedForm,
    MaximumLikelihood,
    /// Matching of four sample quantiles (g-and-h only).
    QuantileMatching,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub estimation: Estimation,
    pub iterations: usize,
    pub converged: bool,
    pub starts: usize,
}

/// Estimates for a Poisson frequency and a severity family, with the
/// covariance from the observed information of the joint likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: SeverityFamily,
    pub threshold: f64,
    /// Intensity of all losses, including those below the threshold.
    pub lambda: f64,
    /// Average reported count per period.
    pub observed_lambda: f64,
    pub severity: Vec<f64>,
    /// Covariance of `(lambda, severity...)`; absent when the observed
    /// information is not positive definite or the fit is not a likelihood optimum.
    pub covariance: Option<DMatrix<f64>>,
    pub log_likelihood: f64,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn parameter_names(&self) -> Vec<&'static str> {
        std::iter::once("lambda").chain(self.family.parameter_names().iter().copied()).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        std::iter::once(self.lambda).chain(self.severity.iter().copied()).collect()
    }

    pub fn std_errors(&self) -> Vec<Option<f64>> {
        let n = self.severity.len() + 1;
        match &self.covariance {
            Some(c) => (0..n).map(|i| Some(c[(i, i)].max(0.0).sqrt())).collect(),
            None => vec![None; n],
        }
    }

    /// Fitted severity. For the GPD family this is the law of the excess `x - L`.
    pub fn severity_model(&self) -> Result<SeverityModel> {
        self.family.build(&self.severity)
    }

    pub fn frequency_model(&self) -> Result<FrequencyModel> {
        FrequencyModel::poisson(self.lambda)
    }
}

/// Covariance as the inverse negative Hessian of `log_lik` at `theta`; `None`
/// (with a warning) when the Hessian is not negative definite.
pub fn observed_information<F: Fn(&[f64]) -> f64>(log_lik: F, theta: &[f64]) -> Option<DMatrix<f64>> {
    match neg_hessian_inverse(log_lik, theta) {
        Ok(c) => Some(c),
        Err(_) => {
            log::warn!("Hessian at {theta:?} is not negative definite (saddle or boundary); covariance omitted");
            None
        }
    }
}

/// Threshold seen by the severity model and the shift applied to amounts.
fn effective(record: &LossRecord, family: SeverityFamily) -> (f64, f64) {
    match family {
        SeverityFamily::Gpd => (0.0, record.threshold()),
        _ => (record.threshold(), 0.0),
    }
}

/// Log-likelihood of counts and amounts at `theta = (lambda, severity...)`.
pub fn joint_log_likelihood(record: &LossRecord, family: SeverityFamily, theta: &[f64]) -> f64 {
    let Some((&lambda, beta)) = theta.split_first() else {
        return f64::NEG_INFINITY;
    };
    let Ok(model) = family.build(beta) else {
        return f64::NEG_INFINITY;
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let (l, shift) = effective(record, family);
    let s = model.sf_total(l);
    let n = record.total_count() as f64;
    let t = record.num_periods() as f64;
    // Poisson(lambda s) counts times the truncated densities; the ln s terms cancel.
    let counts: f64 = record.counts().iter().map(|&k| ln_gamma(k as f64 + 1.0)).sum();
    let dens: f64 = record.amounts().map(|x| model.ln_density(x - shift).unwrap_or(f64::NEG_INFINITY)).sum();
    n * lambda.ln() - lambda * t * s - counts + dens
}

fn conditional_log_likelihood(ys: &[f64], l: f64, model: &SeverityModel) -> f64 {
    let s = model.sf_total(l);
    if !(s > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut acc = -(ys.len() as f64) * s.ln();
    for &y in ys {
        match model.ln_density(y) {
            Ok(v) if v.is_finite() => acc += v,
            _ => return f64::NEG_INFINITY,
        }
    }
    acc
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Type-7 sample quantile of sorted data.
fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Moment-matched starting point and which coordinates are positive.
fn initial(family: SeverityFamily, ys: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let logs = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln());
    let (lm, ls) = mean_sd(logs);
    let ls = ls.max(1e-3);
    // log-logistic shape with the same log-scale spread
    let shape = std::f64::consts::PI / (ls * 3f64.sqrt());
    match family {
        SeverityFamily::Lognormal => (vec![lm, ls], vec![false, true]),
        SeverityFamily::Gpd => {
            let (m, sd) = mean_sd(ys.iter().copied());
            let r = m * m / (sd * sd).max(f64::MIN_POSITIVE);
            let xi = (0.5 * (1.0 - r)).clamp(0.05, 0.9);
            (vec![xi, (m * (1.0 - xi)).max(1e-6)], vec![true, true])
        }
        SeverityFamily::Gb2 => (vec![shape, lm.exp(), 1.0, 1.0], vec![true; 4]),
        SeverityFamily::Gcd => (vec![shape, lm.exp(), 0.1 * lm.exp()], vec![true; 3]),
        SeverityFamily::GAndH => {
            let mut s = ys.to_vec();
            s.sort_by(f64::total_cmp);
            let (q1, q25, med, q75, q9) = (
                sample_quantile(&s, 0.1),
                sample_quantile(&s, 0.25),
                sample_quantile(&s, 0.5),
                sample_quantile(&s, 0.75),
                sample_quantile(&s, 0.9),
            );
            let z = normal_quantile(0.9);
            let g = if med > q1 && q9 > med { ((q9 - med) / (med - q1)).ln() / z } else { 0.0 };
            let b = ((q75 - q25) / 1.349).max(1e-6 * med.abs().max(1.0));
            (vec![med, b, g, 0.1], vec![false, true, false, true])
        }
    }
}

const PATTERNS: [[f64; 4]; 5] =
    [[0.0; 4], [1.0, -1.0, 1.0, -1.0], [-1.0, 1.0, -1.0, 1.0], [1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, -1.0, -1.0]];

/// Five starts around `base`: multiplicative jitter for positive coordinates,
/// additive jitter scaled by `spread` for the others.
fn starts(base: &[f64], positive: &[bool], spread: f64) -> Vec<Vec<f64>> {
    PATTERNS
        .iter()
        .map(|pat| {
            base.iter()
                .zip(positive)
                .zip(pat)
                .map(|((&v, &pos), &d)| if pos { v * (0.4 * d).exp() } else { v + 0.4 * d * spread })
                .collect()
        })
        .collect()
}

const GH_LEVELS: [f64; 4] = [0.1, 0.5, 0.9, 0.99];

/// Truncated maximum likelihood (or quantile matching for g-and-h) with a
/// Poisson frequency. The severity is fitted to the conditional law above the
/// threshold; the intensity follows as `observed / (1 - F(L))`.
pub fn fit_truncated_mle(record: &LossRecord, family: SeverityFamily) -> Result<FitResult> {
    let n = record.total_count();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 losses to fit a severity, got {n}")));
    }
    let (l, shift) = effective(record, family);
    let ys: Vec<f64> = record.amounts().map(|x| x - shift).collect();
    let (base, positive) = initial(family, &ys);
    let spread = base.get(1).copied().unwrap_or(1.0).abs().max(1e-3);
    let opts = SimplexOptions::default();
    let step: Vec<f64> = base.iter().map(|v| 0.2 * v.abs().max(0.1)).collect();

    let (beta, diagnostics) = if family == SeverityFamily::Lognormal && l <= 0.0 {
        let (m, s) = mean_sd(ys.iter().map(|y| y.ln()));
        if !(s > 0.0) {
            return Err(Error::Degenerate("all amounts are equal; lognormal sigma would be zero".into()));
        }
        let d = FitDiagnostics { estimation: Estimation::ClosedForm, iterations: 0, converged: true, starts: 0 };
        (vec![m, s], d)
    } else if family == SeverityFamily::GAndH {
        let mut sorted = ys.clone();
        sorted.sort_by(f64::total_cmp);
        let targets: Vec<f64> = GH_LEVELS.iter().map(|&p| sample_quantile(&sorted, p)).collect();
        let scale = (targets[2] - targets[0]).abs().max(f64::MIN_POSITIVE);
        let objective = |th: &[f64]| {
            let Ok(m) = family.build(th) else { return f64::INFINITY };
            let below = m.cdf_total(l);
            GH_LEVELS
                .iter()
                .zip(&targets)
                .map(|(&p, &x)| match m.quantile(below + (1.0 - below) * p) {
                    Ok(v) => ((v - x) / scale).powi(2),
                    Err(_) => f64::INFINITY,
                })
                .sum()
        };
        let st = starts(&base, &positive, spread);
        let m = minimize_multistart(objective, &st, &step, opts)?;
        let d = FitDiagnostics {
            estimation: Estimation::QuantileMatching,
            iterations: m.iterations,
            converged: m.converged,
            starts: st.len(),
        };
        (m.x, d)
    } else {
        let objective = |th: &[f64]| match family.build(th) {
            Ok(m) => -conditional_log_likelihood(&ys, l, &m),
            Err(_) => f64::INFINITY,
        };
        let st = starts(&base, &positive, spread);
        let m = minimize_multistart(objective, &st, &step, opts)?;
        let d = FitDiagnostics {
            estimation: Estimation::MaximumLikelihood,
            iterations: m.iterations,
            converged: m.converged,
            starts: st.len(),
        };
        (m.x, d)
    };

    let model = family.build(&beta)?;
    if model.cdf_total(l) >= 1.0 - 1e-12 {
        return Err(Error::EmptyTail(l));
    }
    let observed_lambda = record.observed_intensity();
    let lambda = observed_lambda / model.sf_total(l);
    let theta: Vec<f64> = std::iter::once(lambda).chain(beta.iter().copied()).collect();
    let joint = |th: &[f64]| joint_log_likelihood(record, family, th);
    let covariance = match diagnostics.estimation {
        Estimation::QuantileMatching => None,
        _ if observed_lambda == 0.0 => None,
        _ => observed_information(joint, &theta),
    };
    Ok(FitResult {
        family,
        threshold: record.threshold(),
        lambda,
        observed_lambda,
        severity: beta,
        covariance,
        log_likelihood: joint_log_likelihood(record, family, &theta),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::PeriodLosses;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn record(threshold: f64, amounts: Vec<f64>, per: usize) -> LossRecord {
        let periods = amounts
            .chunks(per)
            .enumerate()
            .map(|(i, c)| PeriodLosses { period: i as i64, amounts: c.to_vec() })
            .collect();
        LossRecord::new(threshold, periods).unwrap()
    }

    fn lognormal_sample(mu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, 0, 0);
        SeverityModel::lognormal(mu, sigma).unwrap().sample_n(&mut rng, n)
    }

    #[test]
    fn untruncated_lognormal_is_closed_form() {
        let xs = lognormal_sample(1.0, 0.5, 400, 1);
        let r = fit_truncated_mle(&record(0.0, xs.clone(), 8), SeverityFamily::Lognormal).unwrap();
        let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let m = logs.iter().sum::<f64>() / 400.0;
        let s = (logs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 400.0).sqrt();
        assert_eq!(r.diagnostics.estimation, Estimation::ClosedForm);
        assert_relative_eq!(r.severity[0], m, max_relative = 1e-14);
        assert_relative_eq!(r.severity[1], s, max_relative = 1e-14);
        assert_relative_eq!(r.lambda, 8.0);
    }

    #[test]
    fn poisson_information() {
        // var(lambda_hat) = lambda / T for the untruncated Poisson likelihood
        let xs = lognormal_sample(0.0, 1.0, 600, 2);
        let r = fit_truncated_mle(&record(0.0, xs, 12), SeverityFamily::Lognormal).unwrap();
        let cov = r.covariance.unwrap();
        assert_relative_eq!(cov[(0, 0)], r.lambda / 50.0, max_relative = 1e-4);
        // var(mu_hat) = sigma^2 / n
        assert_relative_eq!(cov[(1, 1)], r.severity[1].powi(2) / 600.0, max_relative = 1e-4);
    }

    #[test]
    fn truncated_lognormal_recovers_parameters() {
        let base = SeverityModel::lognormal(3.0, 1.0).unwrap();
        let l = base.quantile(0.3).unwrap();
        let mut rng = substream(3, 0, 0);
        let xs = base.truncate_left(l).unwrap().sample_n(&mut rng, 10_000);
        let r = fit_truncated_mle(&record(l, xs, 10), SeverityFamily::Lognormal).unwrap();
        let se = r.std_errors();
        assert!((r.severity[0] - 3.0).abs() < 3.0 * se[1].unwrap());
        assert!((r.severity[1] - 1.0).abs() < 3.0 * se[2].unwrap());
        // the fitted intensity corrects for unreported losses
        let s = r.severity_model().unwrap().sf_total(l);
        assert_relative_eq!(r.lambda * s, r.observed_lambda, max_relative = 4.0 * f64::EPSILON);
        assert!((r.lambda - 10.0 / 0.7).abs() < 3.0 * se[0].unwrap());
    }

    #[test]
    fn scale_invariance() {
        let xs = lognormal_sample(1.0, 0.8, 500, 4);
        let c = 7.5;
        let a = fit_truncated_mle(&record(0.0, xs.clone(), 10), SeverityFamily::Lognormal).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let b = fit_truncated_mle(&record(0.0, scaled, 10), SeverityFamily::Lognormal).unwrap();
        assert_relative_eq!(b.severity[0], a.severity[0] + c.ln(), max_relative = 1e-12);
        assert_relative_eq!(b.severity[1], a.severity[1], max_relative = 1e-12);

        // same check through the optimizer with a threshold
        let l = 1.0;
        let kept: Vec<f64> = xs.iter().copied().filter(|&x| x >= l).collect();
        let a = fit_truncated_mle(&record(l, kept.clone(), 10), SeverityFamily::Lognormal).unwrap();
        let scaled: Vec<f64> = kept.iter().map(|x| x * c).collect();
        let b = fit_truncated_mle(&record(l * c, scaled, 10), SeverityFamily::Lognormal).unwrap();
        assert!((b.severity[0] - a.severity[0] - c.ln()).abs() < 1e-6);
        assert!((b.severity[1] - a.severity[1]).abs() < 1e-6);
    }

    #[test]
    fn gpd_exceedances() {
        let mut rng = substream(5, 0, 0);
        let ys = SeverityModel::gpd(0.3, 2.0).unwrap().sample_n(&mut rng, 5000);
        let l = 10.0;
        let xs: Vec<f64> = ys.iter().map(|y| y + l).collect();
        let r = fit_truncated_mle(&record(l, xs, 50), SeverityFamily::Gpd).unwrap();
        let se = r.std_errors();
        assert!((r.severity[0] - 0.3).abs() < 3.0 * se[1].unwrap(), "{:?}", r.severity);
        assert!((r.severity[1] - 2.0).abs() < 3.0 * se[2].unwrap());
        assert_relative_eq!(r.lambda, r.observed_lambda);
    }

    #[test]
    fn other_families_converge() {
        let mut rng = substream(6, 0, 0);
        let xs = SeverityModel::gb2(2.0, 5.0, 1.5, 1.2).unwrap().sample_n(&mut rng, 3000);
        let r = fit_truncated_mle(&record(0.0, xs.clone(), 30), SeverityFamily::Gb2).unwrap();
        assert!(r.diagnostics.converged);
        let m = r.severity_model().unwrap();
        assert!(ks_ok(&xs, &m));

        let xs = SeverityModel::gcd(1.5, 4.0, 1.0).unwrap().sample_n(&mut rng, 3000);
        let r = fit_truncated_mle(&record(0.0, xs.clone(), 30), SeverityFamily::Gcd).unwrap();
        assert!(ks_ok(&xs, &r.severity_model().unwrap()));

        let xs = SeverityModel::g_and_h(10.0, 2.0, 0.5, 0.1).unwrap().sample_n(&mut rng, 5000);
        let r = fit_truncated_mle(&record(0.0, xs.clone(), 50), SeverityFamily::GAndH).unwrap();
        assert!(r.covariance.is_none());
        assert!((r.severity[2] - 0.5).abs() < 0.15 && (r.severity[3] - 0.1).abs() < 0.1, "{:?}", r.severity);
    }

    fn ks_ok(xs: &[f64], m: &SeverityModel) -> bool {
        crate::fit::ks_statistic(xs, m) < 1.63 / (xs.len() as f64).sqrt()
    }

    #[test]
    fn too_few_losses() {
        assert!(fit_truncated_mle(&record(0.0, vec![1.0], 1), SeverityFamily::Lognormal).is_err());
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let f = |x: &[f64]| {
            let (u, v) = (x[0] - 0.3, x[1] + 0.2);
            -(2.0 * u * u + u * v + 3.0 * v * v)
        };
        let c = observed_information(f, &[0.3, -0.2]).unwrap();
        // inverse of [[4, 1], [1, 6]]
        let det = 23.0;
        assert!((c[(0, 0)] - 6.0 / det).abs() < 1e-8);
        assert!((c[(0, 1)] + 1.0 / det).abs() < 1e-8);
        assert!((c[(1, 1)] - 4.0 / det).abs() < 1e-8);
        assert!(observed_information(|x: &[f64]| x[0] * x[0], &[0.0]).is_none());
    }
}
