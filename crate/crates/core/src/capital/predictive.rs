use super::conditional::DependenceSpec;
use crate::aggregate::{mc_quantile_ci, simulate_year, QuantileEstimate};
use crate::bayes::ParamChain;
use crate::cell::RiskCell;
use crate::dependence::{common_factor_year, freq_copula_year};
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::rng::{module, parallel_blocks, std_normal, Stream};
use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Source of parameter vectors for predictive simulation.
pub trait ParameterSampler: Sync {
    fn dim(&self) -> usize;
    /// Parameters for simulation number `k`.
    fn draw(&self, k: usize, rng: &mut Stream) -> Result<Vec<f64>>;
    /// Fails when `k` simulations cannot be served.
    fn ensure_capacity(&self, k: usize) -> Result<()> {
        let _ = k;
        Ok(())
    }
}

/// No parameter uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass(pub Vec<f64>);

impl ParameterSampler for PointMass {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn draw(&self, _: usize, _: &mut Stream) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// Stored posterior draws, used in order or resampled with replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSampler {
    draws: Vec<Vec<f64>>,
    resample: bool,
}

impl ChainSampler {
    pub fn new(draws: Vec<Vec<f64>>, resample: bool) -> Result<Self> {
        let d = draws.first().map(Vec::len).ok_or(Error::SamplerExhausted { available: 0, requested: 1 })?;
        if draws.iter().any(|v| v.len() != d) {
            return Err(Error::Domain("posterior draws have inconsistent dimensions".into()));
        }
        Ok(Self { draws, resample })
    }

    /// Post-burn-in draws of a chain.
    pub fn from_chain(chain: &ParamChain, resample: bool) -> Result<Self> {
        Self::new(chain.draws().to_vec(), resample)
    }
}

impl ParameterSampler for ChainSampler {
    fn dim(&self) -> usize {
        self.draws[0].len()
    }

    fn draw(&self, k: usize, rng: &mut Stream) -> Result<Vec<f64>> {
        let i = if self.resample { rng.random_range(0..self.draws.len()) } else { k };
        self.draws.get(i).cloned().ok_or(Error::SamplerExhausted { available: self.draws.len(), requested: k + 1 })
    }

    fn ensure_capacity(&self, k: usize) -> Result<()> {
        if !self.resample && self.draws.len() < k {
            return Err(Error::SamplerExhausted { available: self.draws.len(), requested: k });
        }
        Ok(())
    }
}

/// Estimator distribution approximated by a normal law around the MLE, with
/// draws outside `bounds` rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: DMatrix<f64>,
    bounds: Vec<(f64, f64)>,
}

const MAX_REJECTIONS: usize = 10_000;

impl GaussianSampler {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if covariance.nrows() != mean.len() || bounds.len() != mean.len() {
            return Err(Error::Domain("mean, covariance and bounds dimensions differ".into()));
        }
        let factor = Cholesky::new(covariance)
            .ok_or_else(|| Error::Matrix("parameter covariance is not positive definite".into()))?
            .l();
        Ok(Self { mean, factor, bounds })
    }

    /// From a fit with a covariance; intensity and positive-only severity
    /// parameters are kept positive.
    pub fn from_fit(fit: &FitResult) -> Result<Self> {
        let cov = fit.covariance.clone().ok_or_else(|| Error::Domain("fit has no covariance".into()))?;
        let names = fit.parameter_names();
        let bounds = names
            .iter()
            .map(|n| if *n == "mu" { (f64::NEG_INFINITY, f64::INFINITY) } else { (0.0, f64::INFINITY) })
            .collect();
        Self::new(fit.estimates(), cov, bounds)
    }
}

impl ParameterSampler for GaussianSampler {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn draw(&self, _: usize, rng: &mut Stream) -> Result<Vec<f64>> {
        let d = self.mean.len();
        for _ in 0..MAX_REJECTIONS {
            let z: Vec<f64> = (0..d).map(|_| std_normal(rng)).collect();
            let x: Vec<f64> =
                (0..d).map(|i| self.mean[i] + (0..=i).map(|k| self.factor[(i, k)] * z[k]).sum::<f64>()).collect();
            if x.iter().zip(&self.bounds).all(|(v, (lo, hi))| lo < v && v < hi) {
                return Ok(x);
            }
        }
        Err(Error::Numerical(format!("{MAX_REJECTIONS} consecutive normal draws fell outside the parameter bounds")))
    }
}

/// Posterior of `(λ, μ, σ)` for Poisson counts and lognormal losses under
/// flat priors: `λ ~ Gamma(ΣN + 1, 1 / T)`, `σ² ~ InvGamma(n / 2 - 1, S / 2)`
/// and `μ | σ ~ Normal(mean log-loss, σ² / n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPriorPoissonLognormal {
    total_count: u64,
    years: usize,
    n: usize,
    mean_log: f64,
    ss_log: f64,
}

impl FlatPriorPoissonLognormal {
    /// `counts` per year and the pooled losses of all years.
    pub fn new(counts: &[u64], losses: &[f64]) -> Result<Self> {
        let n = losses.len();
        if counts.is_empty() || counts.iter().sum::<u64>() != n as u64 {
            return Err(Error::Domain("loss count must equal the sum of yearly counts".into()));
        }
        if n < 3 {
            return Err(Error::PosteriorInvalid(format!("{n} losses are too few for a proper posterior of sigma")));
        }
        if losses.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Domain("losses must be positive".into()));
        }
        let logs: Vec<f64> = losses.iter().map(|x| x.ln()).collect();
        let mean_log = logs.iter().sum::<f64>() / n as f64;
        let ss_log = logs.iter().map(|v| (v - mean_log).powi(2)).sum();
        Ok(Self { total_count: n as u64, years: counts.len(), n, mean_log, ss_log })
    }

    /// Maximum-likelihood estimates `(λ, μ, σ)`.
    pub fn mle(&self) -> [f64; 3] {
        [self.total_count as f64 / self.years as f64, self.mean_log, (self.ss_log / self.n as f64).sqrt()]
    }
}

impl ParameterSampler for FlatPriorPoissonLognormal {
    fn dim(&self) -> usize {
        3
    }

    fn draw(&self, _: usize, rng: &mut Stream) -> Result<Vec<f64>> {
        let gamma =
            |shape: f64, scale: f64| Gamma::new(shape, scale).map_err(|e| Error::PosteriorInvalid(e.to_string()));
        let lambda = gamma(self.total_count as f64 + 1.0, 1.0 / self.years as f64)?.sample(rng);
        let var = 0.5 * self.ss_log / gamma(self.n as f64 / 2.0 - 1.0, 1.0)?.sample(rng);
        let mu = self.mean_log + (var / self.n as f64).sqrt() * std_normal(rng);
        Ok(vec![lambda, mu, var.sqrt()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveSettings {
    pub samples: usize,
    pub seed: u64,
    pub q: f64,
    pub gamma: f64,
}

impl Default for PredictiveSettings {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, q: 0.999, gamma: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveCapital {
    /// Quantile of the total; under `Perfect` the sum of cell quantiles.
    pub total: QuantileEstimate,
    pub per_cell: Vec<QuantileEstimate>,
    /// Simulated annual totals.
    pub samples: Vec<f64>,
}

/// Quantile of the full predictive annual loss: each simulation draws
/// parameters from `sampler`, builds the cells with `model` and simulates
/// one year under `dependence`.
pub fn predictive_capital<S, M>(
    model: &M,
    sampler: &S,
    dependence: &DependenceSpec,
    settings: &PredictiveSettings,
) -> Result<PredictiveCapital>
where
    S: ParameterSampler + ?Sized,
    M: Fn(&[f64]) -> Result<Vec<RiskCell>> + Sync,
{
    if matches!(dependence, DependenceSpec::AggregateLossCopula(_)) {
        return Err(Error::Domain("a copula on annual losses needs fixed marginals; use conditional capital".into()));
    }
    sampler.ensure_capacity(settings.samples)?;
    let years = parallel_blocks(settings.seed, module::PREDICTIVE, settings.samples, |rng, start, len| {
        (start..start + len)
            .map(|k| {
                let cells = model(&sampler.draw(k, rng)?)?;
                let z = |pairs: Vec<(u64, f64)>| pairs.into_iter().map(|p| p.1).collect::<Vec<f64>>();
                Ok(match dependence {
                    DependenceSpec::FrequencyCopula(c) => z(freq_copula_year(&cells, c, rng)),
                    DependenceSpec::CommonFactor(l) => z(common_factor_year(&cells, l, rng)),
                    _ => cells.iter().map(|c| simulate_year(c, rng)).collect(),
                })
            })
            .collect::<Vec<Result<Vec<f64>>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let cells = years.first().map_or(0, Vec::len);
    let per_cell = (0..cells)
        .map(|j| mc_quantile_ci(&years.iter().map(|y| y[j]).collect::<Vec<_>>(), settings.q, settings.gamma))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<f64> = years.iter().map(|y| y.iter().sum()).collect();
    let total = if matches!(dependence, DependenceSpec::Perfect) {
        let sum = |f: fn(&QuantileEstimate) -> f64| per_cell.iter().map(f).sum::<f64>();
        QuantileEstimate {
            q: settings.q,
            point: sum(|e| e.point),
            lower: sum(|e| e.lower),
            upper: sum(|e| e.upper),
            gamma: settings.gamma,
            k: settings.samples,
        }
    } else {
        mc_quantile_ci(&samples, settings.q, settings.gamma)?
    };
    Ok(PredictiveCapital { total, per_cell, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::mc_compound;
    use crate::dist::{FrequencyModel, SeverityModel};
    use crate::rng::substream;

    fn poisson_lognormal(p: &[f64]) -> Result<Vec<RiskCell>> {
        Ok(vec![RiskCell::new("c", FrequencyModel::poisson(p[0])?, SeverityModel::lognormal(p[1], p[2])?)])
    }

    fn settings() -> PredictiveSettings {
        PredictiveSettings { samples: 100_000, seed: 9, q: 0.999, gamma: 0.95 }
    }

    #[test]
    fn point_mass_matches_conditional() {
        let theta = vec![10.0, 1.0, 2.0];
        let p = predictive_capital(
            &poisson_lognormal,
            &PointMass(theta.clone()),
            &DependenceSpec::Independent,
            &settings(),
        )
        .unwrap();
        let cell = &poisson_lognormal(&theta).unwrap()[0];
        let z = mc_compound(cell, 100_000, 21);
        let c = mc_quantile_ci(&z, 0.999, 0.95).unwrap();
        assert!(p.total.lower <= c.upper && c.lower <= p.total.upper, "{:?} {:?}", p.total, c);
    }

    #[test]
    fn short_chain_is_exhausted() {
        let chain = ChainSampler::new(vec![vec![10.0, 1.0, 2.0]; 10], false).unwrap();
        let r = predictive_capital(&poisson_lognormal, &chain, &DependenceSpec::Independent, &settings());
        assert!(matches!(r, Err(Error::SamplerExhausted { available: 10, requested: 100_000 })));
        let chain = ChainSampler::new(vec![vec![10.0, 1.0, 2.0]; 10], true).unwrap();
        assert!(predictive_capital(&poisson_lognormal, &chain, &DependenceSpec::Independent, &settings()).is_ok());
    }

    #[test]
    fn flat_posterior_moments() {
        // 5 years, 12 losses with log-values of known mean and spread
        let logs = [0.0, 1.0, 2.0, 3.0, 0.5, 1.5, 2.5, 0.2, 1.2, 2.2, 0.8, 1.8];
        let losses: Vec<f64> = logs.iter().map(|v: &f64| v.exp()).collect();
        let post = FlatPriorPoissonLognormal::new(&[2, 3, 1, 4, 2], &losses).unwrap();
        let n = logs.len() as f64;
        let xbar = logs.iter().sum::<f64>() / n;
        let ss: f64 = logs.iter().map(|v| (v - xbar).powi(2)).sum();
        let mut rng = substream(1, 0, 0);
        let k = 400_000;
        let draws: Vec<Vec<f64>> = (0..k).map(|i| post.draw(i, &mut rng).unwrap()).collect();
        let mean = |i: usize| draws.iter().map(|d| d[i]).sum::<f64>() / k as f64;
        // λ ~ Gamma(13, 1/5): mean 2.6; E[σ²] = (S/2) / (n/2 - 2)
        assert!((mean(0) - 13.0 / 5.0).abs() < 0.01);
        assert!((mean(1) - xbar).abs() < 0.005);
        let var_mean = draws.iter().map(|d| d[2] * d[2]).sum::<f64>() / k as f64;
        let truth = 0.5 * ss / (n / 2.0 - 2.0);
        assert!((var_mean / truth - 1.0).abs() < 0.01, "{var_mean} vs {truth}");
        assert!(FlatPriorPoissonLognormal::new(&[2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn uncertainty_raises_capital() {
        let theta = [10.0, 1.0, 2.0];
        let fixed = predictive_capital(
            &poisson_lognormal,
            &PointMass(theta.to_vec()),
            &DependenceSpec::Independent,
            &settings(),
        )
        .unwrap();
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.04, 0.02]));
        let wide = GaussianSampler::new(
            theta.to_vec(),
            cov,
            vec![(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)],
        )
        .unwrap();
        let p = predictive_capital(&poisson_lognormal, &wide, &DependenceSpec::Independent, &settings()).unwrap();
        assert!(p.total.lower > fixed.total.upper, "{:?} {:?}", p.total, fixed.total);
    }

    #[test]
    fn perfect_mode_sums_cells() {
        let two = |p: &[f64]| -> Result<Vec<RiskCell>> {
            let mut c = poisson_lognormal(p)?;
            c.push(c[0].clone());
            Ok(c)
        };
        let s = PredictiveSettings { samples: 20_000, ..settings() };
        let p = predictive_capital(&two, &PointMass(vec![5.0, 0.0, 1.0]), &DependenceSpec::Perfect, &s).unwrap();
        assert_eq!(p.total.point, p.per_cell[0].point + p.per_cell[1].point);
    }
}
