use crate::error::{Error, Result};
use crate::numeric::{brent, gamma_cdf, gamma_sf, ln_gamma, minimize_multistart, SimplexOptions};
use serde::{Deserialize, Serialize};

/// Gamma law with `shape` and `scale`; mean `shape * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    shape: f64,
    scale: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("gamma needs shape > 0 and scale > 0, got ({shape}, {scale})")));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// Coefficient of variation `1 / sqrt(shape)`.
    pub fn vco(&self) -> f64 {
        self.shape.sqrt().recip()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gamma_cdf(self.shape, self.scale, x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        crate::numeric::gamma_quantile(self.shape, self.scale, p)
    }

    /// Posterior after observing one more year with `count` events.
    pub fn update(&self, count: u64) -> Self {
        Self { shape: self.shape + count as f64, scale: self.scale / (1.0 + self.scale) }
    }
}

/// Decomposition of the posterior mean into data and prior parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibilityReport {
    /// Credibility weight `T / (T + 1/scale)` in `[0, 1)`.
    pub weight: f64,
    /// Average count; zero when there are no years.
    pub sample_mean: f64,
    pub prior_mean: f64,
    pub posterior_mean: f64,
    pub years: usize,
}

/// Conjugate Poisson-Gamma update over the yearly `counts`, processed one
/// year at a time so batch and sequential use agree exactly.
pub fn poisson_gamma_posterior(prior: GammaPrior, counts: &[u64]) -> (GammaPrior, CredibilityReport) {
    let post = counts.iter().fold(prior, |p, &n| p.update(n));
    let t = counts.len() as f64;
    let sample_mean = if counts.is_empty() { 0.0 } else { counts.iter().sum::<u64>() as f64 / t };
    let weight = t / (t + 1.0 / prior.scale);
    let prior_mean = prior.mean();
    let report = CredibilityReport {
        weight,
        sample_mean,
        prior_mean,
        posterior_mean: weight * sample_mean + (1.0 - weight) * prior_mean,
        years: counts.len(),
    };
    (post, report)
}

/// Gamma prior with the given mean and `Pr[lo <= λ <= hi] = coverage`.
pub fn elicit_gamma_prior(mean: f64, lo: f64, hi: f64, coverage: f64) -> Result<GammaPrior> {
    if !(0.0 < lo && lo < mean && mean < hi) {
        return Err(Error::Elicitation(format!("need 0 < a < mean < b, got a={lo}, mean={mean}, b={hi}")));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::Probability(coverage));
    }
    let residual = |ln_shape: f64| {
        let shape = ln_shape.exp();
        let scale = mean / shape;
        1.0 - gamma_sf(shape, scale, hi) - gamma_cdf(shape, scale, lo) - coverage
    };
    let (a, b) = (1e-4f64.ln(), 1e6f64.ln());
    if residual(a).signum() == residual(b).signum() {
        return Err(Error::Elicitation(format!(
            "no gamma shape in [1e-4, 1e6] gives coverage {coverage} on [{lo}, {hi}]"
        )));
    }
    let shape = brent(residual, a, b, 1e-15)?.exp();
    let r = residual(shape.ln()).abs();
    if r >= 1e-8 {
        return Err(Error::Elicitation(format!("coverage residual {r:e} above 1e-8")));
    }
    GammaPrior::new(shape, mean / shape)
}

/// Yearly counts of one cell with exposure volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCounts {
    pub counts: Vec<u64>,
    pub volumes: Vec<f64>,
}

impl CellCounts {
    pub fn unit_volume(counts: Vec<u64>) -> Self {
        let volumes = vec![1.0; counts.len()];
        Self { counts, volumes }
    }
}

const MAX_LN_SHAPE: f64 = 18.420_680_743_952_367; // ln 1e8

/// Gamma prior maximizing the negative-binomial marginal likelihood of
/// counts pooled across cells, each cell with its own Poisson intensity.
pub fn empirical_bayes_gamma(cells: &[CellCounts]) -> Result<GammaPrior> {
    if cells.len() < 2 {
        return Err(Error::Domain(format!("empirical Bayes needs at least 2 cells, got {}", cells.len())));
    }
    for c in cells {
        if c.counts.len() != c.volumes.len() || c.volumes.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("each count needs a positive volume".into()));
        }
    }
    let sums: Vec<(f64, f64)> =
        cells.iter().map(|c| (c.counts.iter().sum::<u64>() as f64, c.volumes.iter().sum::<f64>())).collect();
    let neg_marginal = |th: &[f64]| {
        // identical cells push the shape to infinity; cap it
        if th[0] > MAX_LN_SHAPE {
            return f64::INFINITY;
        }
        let (shape, scale) = (th[0].exp(), th[1].exp());
        let lg = ln_gamma(shape);
        -sums
            .iter()
            .map(|&(n, v)| ln_gamma(shape + n) - lg - shape * scale.ln() - (shape + n) * (v + 1.0 / scale).ln())
            .sum::<f64>()
    };
    // method-of-moments start from the per-cell rates
    let rates: Vec<f64> = sums.iter().map(|(n, v)| n / v).collect();
    let j = rates.len() as f64;
    let m = rates.iter().sum::<f64>() / j;
    let var = rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (j - 1.0);
    let mean_inv_vol = sums.iter().map(|(_, v)| 1.0 / v).sum::<f64>() / j;
    let between = (var - m * mean_inv_vol).max(0.05 * m * m).max(1e-8);
    let scale0 = between / m.max(1e-8);
    let base = [(m.max(1e-8) / scale0).ln(), scale0.ln()];
    let starts: Vec<Vec<f64>> = [(0.0, 0.0), (0.5, -0.5), (-0.5, 0.5), (1.0, -1.0), (-1.0, 1.0)]
        .iter()
        .map(|(da, db)| vec![base[0] + da, base[1] + db])
        .collect();
    let best = minimize_multistart(neg_marginal, &starts, &[0.3, 0.3], SimplexOptions::default())?;
    if best.x[0] > MAX_LN_SHAPE - 1e-3 {
        log::warn!("empirical Bayes shape reached its cap; cells show no extra-Poisson variation");
    }
    GammaPrior::new(best.x[0].exp(), best.x[1].exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FrequencyModel;
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    const SPARSE_COUNTS: [u64; 15] = [0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 2, 1, 1, 2, 0];

    #[test]
    fn no_data_keeps_prior() {
        let p = GammaPrior::new(2.0, 0.5).unwrap();
        let (post, rep) = poisson_gamma_posterior(p, &[]);
        assert_eq!(post, p);
        assert_eq!(rep.weight, 0.0);
        assert_eq!(rep.posterior_mean, p.mean());
    }

    #[test]
    fn reference_posterior() {
        let p = GammaPrior::new(3.407, 0.147).unwrap();
        let (post, rep) = poisson_gamma_posterior(p, &SPARSE_COUNTS);
        assert_relative_eq!(post.shape(), 13.407, max_relative = 1e-14);
        assert_relative_eq!(post.scale(), 0.147 / (1.0 + 15.0 * 0.147), max_relative = 1e-13);
        assert_relative_eq!(rep.posterior_mean, post.mean(), max_relative = 1e-12);
        assert!((post.mean() - 0.615).abs() < 1e-3);
    }

    #[test]
    fn credibility_identity_and_sequential_consistency() {
        let mut rng = substream(1, 0, 0);
        for _ in 0..200 {
            let prior = GammaPrior::new(rng.random_range(0.1..20.0), rng.random_range(0.01..10.0)).unwrap();
            let counts: Vec<u64> = (0..rng.random_range(0..40)).map(|_| rng.random_range(0..9)).collect();
            let (post, rep) = poisson_gamma_posterior(prior, &counts);
            assert!((rep.posterior_mean - post.mean()).abs() <= 1e-12 * post.mean().max(1.0));
            let seq = counts.iter().fold(prior, |p, &n| poisson_gamma_posterior(p, &[n]).0);
            assert_eq!(seq, post);
        }
    }

    #[test]
    fn vague_prior_and_contraction() {
        let (_, rep) = poisson_gamma_posterior(GammaPrior::new(1e-12, 1e12).unwrap(), &SPARSE_COUNTS);
        assert!((rep.posterior_mean - 10.0 / 15.0).abs() < 1e-9);
        let prior = GammaPrior::new(2.0, 1.0).unwrap();
        let v: Vec<f64> =
            [10, 100, 1000].iter().map(|&t| poisson_gamma_posterior(prior, &vec![3; t]).0.variance()).collect();
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] < 1e-2);
    }

    #[test]
    fn elicitation_reference() {
        let p = elicit_gamma_prior(0.5, 0.25, 0.75, 2.0 / 3.0).unwrap();
        assert!((p.shape() - 3.407).abs() < 0.01 && (p.scale() - 0.147).abs() < 0.002);
        assert!((p.vco() - 0.542).abs() < 1e-3);
        assert_relative_eq!(p.mean(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn elicitation_diffuse_and_infeasible() {
        let tight = elicit_gamma_prior(1.0, 0.5, 2.0, 0.5).unwrap();
        let wide = elicit_gamma_prior(1.0, 0.01, 100.0, 0.5).unwrap();
        assert!(wide.shape() < tight.shape());
        assert!(matches!(elicit_gamma_prior(1.0, 0.999, 1.001, 0.999_999), Err(Error::Elicitation(_))));
    }

    fn simulate_cells(seed: u64, j: usize, years: usize, volume: f64) -> Vec<CellCounts> {
        let prior = GammaPrior::new(3.0, 0.2).unwrap();
        let mut rng = substream(seed, 0, 0);
        (0..j)
            .map(|_| {
                let lam = prior.quantile(crate::rng::open_unit(&mut rng));
                let f = FrequencyModel::poisson(lam * volume).unwrap();
                let counts = (0..years).map(|_| f.sample(&mut rng)).collect();
                CellCounts { counts, volumes: vec![volume; years] }
            })
            .collect()
    }

    #[test]
    fn empirical_bayes_recovers_prior() {
        let cells = simulate_cells(2, 50, 10, 1.0);
        let p = empirical_bayes_gamma(&cells).unwrap();
        let fit = |c: &[CellCounts]| empirical_bayes_gamma(c).map(|g| vec![g.shape(), g.scale()]);
        let boot = crate::fit::bootstrap(&cells, fit, 200, 7);
        let (sd_shape, sd_scale) = (boot.std_dev(0).unwrap(), boot.std_dev(1).unwrap());
        assert!((p.shape() - 3.0).abs() < 3.0 * sd_shape, "{p:?} sd {sd_shape}");
        assert!((p.scale() - 0.2).abs() < 3.0 * sd_scale, "{p:?} sd {sd_scale}");
    }

    #[test]
    fn empirical_bayes_volume_invariance() {
        let a = empirical_bayes_gamma(&simulate_cells(3, 200, 10, 1.0)).unwrap();
        let b = empirical_bayes_gamma(&simulate_cells(3, 200, 10, 2.0)).unwrap();
        assert!((a.mean() - b.mean()).abs() < 0.1 && (a.shape() / b.shape() - 1.0).abs() < 0.5, "{a:?} {b:?}");
    }

    #[test]
    fn identical_cells_converge_to_common_rate() {
        let cells: Vec<CellCounts> = (0..5).map(|_| CellCounts::unit_volume(vec![4; 2000])).collect();
        assert!((empirical_bayes_gamma(&cells).unwrap().mean() - 4.0).abs() < 1e-3);
    }
}
