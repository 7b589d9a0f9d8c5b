use super::copula::{to_open_unit, Copula, GaussianCopula};
use crate::aggregate::net_annual;
use crate::cell::RiskCell;
use crate::dist::{FrequencyFamily, FrequencyModel};
use crate::error::{Error, Result};
use crate::numeric::{gamma_quantile, normal_cdf, normal_quantile};
use crate::rng::{module, open_unit, parallel_blocks, std_normal, Stream};
use serde::{Deserialize, Serialize};

/// Simulated annual counts and losses, indexed `[cell][year]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulatedYears {
    pub counts: Vec<Vec<u64>>,
    pub losses: Vec<Vec<f64>>,
}

impl SimulatedYears {
    pub fn cells(&self) -> usize {
        self.losses.len()
    }

    pub fn years(&self) -> usize {
        self.losses.first().map_or(0, Vec::len)
    }

    /// Sum over cells, per year.
    pub fn total_losses(&self) -> Vec<f64> {
        (0..self.years()).map(|t| self.losses.iter().map(|c| c[t]).sum()).collect()
    }
}

fn collect_years<F>(seed: u64, cells: usize, years: usize, year: F) -> SimulatedYears
where
    F: Fn(&mut Stream) -> Vec<(u64, f64)> + Sync,
{
    let rows = parallel_blocks(seed, module::DEPENDENCE, years, |rng, _, len| (0..len).map(|_| year(rng)).collect());
    let mut out = SimulatedYears {
        counts: vec![Vec::with_capacity(years); cells],
        losses: vec![Vec::with_capacity(years); cells],
    };
    for row in rows {
        for (j, (n, z)) in row.into_iter().enumerate() {
            out.counts[j].push(n);
            out.losses[j].push(z);
        }
    }
    out
}

fn check_dim(copula: &dyn Copula, expected: usize) -> Result<()> {
    if copula.dim() != expected {
        return Err(Error::Domain(format!("copula dimension {} does not match {expected}", copula.dim())));
    }
    Ok(())
}

fn annual(cell: &RiskCell, n: u64, rng: &mut Stream) -> (u64, f64) {
    let gross: Vec<f64> = (0..n).map(|_| cell.severity.sample(rng)).collect();
    (n, net_annual(cell, &gross))
}

/// Counts coupled through a copula on their cdf levels; severities independent.
pub fn simulate_freq_copula(
    cells: &[RiskCell],
    copula: &dyn Copula,
    years: usize,
    seed: u64,
) -> Result<SimulatedYears> {
    check_dim(copula, cells.len())?;
    Ok(collect_years(seed, cells.len(), years, |rng| freq_copula_year(cells, copula, rng)))
}

pub(crate) fn freq_copula_year(cells: &[RiskCell], copula: &dyn Copula, rng: &mut Stream) -> Vec<(u64, f64)> {
    let mut u = vec![0.0; cells.len()];
    copula.fill_uniforms(rng, &mut u);
    cells.iter().zip(&u).map(|(c, &v)| annual(c, c.frequency.quantile(v), rng)).collect()
}

fn poisson_intensity(cell: &RiskCell) -> Result<f64> {
    match cell.frequency.family() {
        FrequencyFamily::Poisson { lambda } => Ok(lambda),
        other => Err(Error::Domain(format!("inter-arrival coupling needs Poisson counts, got {other:?}"))),
    }
}

/// Two Poisson processes whose k-th inter-arrival times are coupled through
/// a bivariate copula. Each year starts both processes afresh at time zero,
/// so years are independent.
pub fn simulate_interarrival_copula(
    cells: &[RiskCell],
    copula: &dyn Copula,
    years: usize,
    seed: u64,
) -> Result<SimulatedYears> {
    if cells.len() != 2 {
        return Err(Error::Domain(format!("inter-arrival coupling needs exactly two cells, got {}", cells.len())));
    }
    check_dim(copula, 2)?;
    let rates = [poisson_intensity(&cells[0])?, poisson_intensity(&cells[1])?];
    Ok(collect_years(seed, 2, years, |rng| {
        let mut clock = [0.0f64; 2];
        let mut gross: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut u = [0.0; 2];
        while clock.iter().any(|&t| t < 1.0) {
            copula.fill_uniforms(rng, &mut u);
            for j in 0..2 {
                if clock[j] < 1.0 {
                    clock[j] += -(-u[j]).ln_1p() / rates[j];
                    if clock[j] < 1.0 {
                        gross[j].push(cells[j].severity.sample(rng));
                    }
                }
            }
        }
        (0..2).map(|j| (gross[j].len() as u64, net_annual(&cells[j], &gross[j]))).collect()
    }))
}

/// Cell loadings on correlated standard normal factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorLoadings {
    frequency: Vec<Vec<f64>>,
    severity: Option<Vec<Vec<f64>>>,
    factors: GaussianCopula,
    freq_residual: Vec<f64>,
    sev_residual: Vec<f64>,
}

impl FactorLoadings {
    /// Rows are cells, columns are factors.
    pub fn new(frequency: Vec<Vec<f64>>, severity: Option<Vec<Vec<f64>>>, factors: GaussianCopula) -> Result<Self> {
        let k = factors.dim();
        let residuals = |rows: &[Vec<f64>]| -> Result<Vec<f64>> {
            rows.iter()
                .map(|r| {
                    if r.len() != k {
                        return Err(Error::Domain(format!("expected {k} loadings per cell, got {}", r.len())));
                    }
                    if r.iter().any(|v| !(v.abs() <= 1.0)) {
                        return Err(Error::Domain(format!("loadings must lie in [-1, 1], got {r:?}")));
                    }
                    let c = factors.correlation();
                    let explained: f64 =
                        (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| r[a] * r[b] * c[(a, b)]).sum();
                    let rest = 1.0 - explained;
                    if rest < -1e-12 {
                        return Err(Error::Domain(format!("loadings {r:?} leave negative residual variance {rest}")));
                    }
                    Ok(rest.max(0.0).sqrt())
                })
                .collect()
        };
        let freq_residual = residuals(&frequency)?;
        let sev_residual = match &severity {
            Some(s) if s.len() != frequency.len() => {
                return Err(Error::Domain("severity loadings need one row per cell".into()));
            }
            Some(s) => residuals(s)?,
            None => Vec::new(),
        };
        Ok(Self { frequency, severity, factors, freq_residual, sev_residual })
    }

    /// A single common factor.
    pub fn one_factor(frequency: Vec<f64>, severity: Option<Vec<f64>>) -> Result<Self> {
        let wrap = |v: Vec<f64>| v.into_iter().map(|x| vec![x]).collect();
        Self::new(wrap(frequency), severity.map(wrap), GaussianCopula::independent(1)?)
    }

    pub fn cells(&self) -> usize {
        self.frequency.len()
    }
}

fn latent(loadings: &[f64], omega: &[f64], residual: f64, rng: &mut Stream) -> f64 {
    loadings.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>() + residual * std_normal(rng)
}

/// Counts (and optionally severities) driven by common latent factors.
pub fn simulate_common_factor(
    cells: &[RiskCell],
    loadings: &FactorLoadings,
    years: usize,
    seed: u64,
) -> Result<SimulatedYears> {
    if loadings.cells() != cells.len() {
        return Err(Error::Domain(format!("{} loading rows for {} cells", loadings.cells(), cells.len())));
    }
    Ok(collect_years(seed, cells.len(), years, |rng| common_factor_year(cells, loadings, rng)))
}

pub(crate) fn common_factor_year(cells: &[RiskCell], loadings: &FactorLoadings, rng: &mut Stream) -> Vec<(u64, f64)> {
    let mut omega = vec![0.0; loadings.factors.dim()];
    loadings.factors.fill_normals(rng, &mut omega);
    cells
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            let y = latent(&loadings.frequency[j], &omega, loadings.freq_residual[j], rng);
            let n = cell.frequency.quantile(to_open_unit(normal_cdf(y)));
            let gross: Vec<f64> = match &loadings.severity {
                None => (0..n).map(|_| cell.severity.sample(rng)).collect(),
                Some(rows) => (0..n)
                    .map(|_| {
                        let r = latent(&rows[j], &omega, loadings.sev_residual[j], rng);
                        cell.severity.quantile_unchecked(to_open_unit(normal_cdf(r)))
                    })
                    .collect(),
            };
            (n, net_annual(cell, &gross))
        })
        .collect()
}

/// Idiosyncratic Poisson streams plus a common event stream that each cell
/// joins independently with its participation probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonShock {
    idiosyncratic: Vec<f64>,
    common: f64,
    participation: Vec<f64>,
}

impl CommonShock {
    pub fn new(idiosyncratic: Vec<f64>, common: f64, participation: Vec<f64>) -> Result<Self> {
        if idiosyncratic.len() != participation.len() {
            return Err(Error::Domain("need one participation probability per cell".into()));
        }
        if !(common >= 0.0 && common.is_finite()) || idiosyncratic.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::Domain("intensities must be finite and >= 0".into()));
        }
        if participation.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("participation probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { idiosyncratic, common, participation })
    }

    pub fn cells(&self) -> usize {
        self.idiosyncratic.len()
    }

    /// Marginal Poisson intensity of cell `j`.
    pub fn intensity(&self, j: usize) -> f64 {
        self.idiosyncratic[j] + self.common * self.participation[j]
    }

    pub fn count_covariance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.intensity(i)
        } else {
            self.common * self.participation[i] * self.participation[j]
        }
    }

    pub fn count_correlation(&self, i: usize, j: usize) -> f64 {
        self.count_covariance(i, j) / (self.intensity(i) * self.intensity(j)).sqrt()
    }
}

/// Annual counts per cell, indexed `[cell][year]`.
pub fn simulate_common_shock(shock: &CommonShock, years: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    let own = shock.idiosyncratic.iter().map(|&l| FrequencyModel::poisson(l)).collect::<Result<Vec<_>>>()?;
    let common = FrequencyModel::poisson(shock.common)?;
    let sim = collect_years(seed, shock.cells(), years, |rng| {
        let shared = common.sample(rng);
        own.iter()
            .zip(&shock.participation)
            .map(|(f, &p)| {
                let joined = (0..shared).filter(|_| open_unit(rng) < p).count() as u64;
                (joined + f.sample(rng), 0.0)
            })
            .collect()
    });
    Ok(sim.counts)
}

/// Marginal law of one stochastic profile parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum ProfileLaw {
    Fixed { value: f64 },
    Gamma { shape: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
}

impl ProfileLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProfileLaw::Fixed { value } => value.is_finite(),
            ProfileLaw::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            ProfileLaw::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid profile law {self:?}")))
        }
    }

    fn nonnegative(&self) -> bool {
        match *self {
            ProfileLaw::Fixed { value } => value >= 0.0,
            ProfileLaw::Gamma { .. } => true,
            ProfileLaw::Normal { .. } => false,
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ProfileLaw::Fixed { value } => value,
            ProfileLaw::Gamma { shape, scale } => gamma_quantile(shape, scale, u),
            ProfileLaw::Normal { mean, sd } => mean + sd * normal_quantile(u),
        }
    }
}

/// Poisson intensity and lognormal location as random profiles; the
/// lognormal shape stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProfile {
    pub intensity: ProfileLaw,
    pub location: ProfileLaw,
    pub sigma: f64,
}

/// Profile marginals for every cell and a copula over all `2 J` profiles,
/// ordered as all intensities first, then all locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePriorSpec {
    cells: Vec<CellProfile>,
    copula: GaussianCopula,
}

impl ProfilePriorSpec {
    pub fn new(cells: Vec<CellProfile>, copula: GaussianCopula) -> Result<Self> {
        for c in &cells {
            c.intensity.validate()?;
            c.location.validate()?;
            if !c.intensity.nonnegative() {
                return Err(Error::Domain(format!("intensity law {:?} can be negative", c.intensity)));
            }
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(Error::Domain(format!("lognormal sigma must be positive, got {}", c.sigma)));
            }
        }
        if copula.dim() != 2 * cells.len() {
            return Err(Error::Domain(format!(
                "profile copula has dimension {}, expected {}",
                copula.dim(),
                2 * cells.len()
            )));
        }
        Ok(Self { cells, copula })
    }

    pub fn cells(&self) -> &[CellProfile] {
        &self.cells
    }
}

/// Poisson draw by sequential inversion; falls back to the tabulated model
/// when `exp(-lambda)` would underflow.
fn poisson_draw(lambda: f64, rng: &mut Stream) -> Result<u64> {
    if lambda > 600.0 {
        return Ok(FrequencyModel::poisson(lambda)?.sample(rng));
    }
    let u = open_unit(rng);
    let (mut k, mut p) = (0u64, (-lambda).exp());
    let mut acc = p;
    while acc < u && p > 0.0 {
        k += 1;
        p *= lambda / k as f64;
        acc += p;
    }
    Ok(k)
}

/// Each year draws the profiles jointly, then counts and lognormal losses
/// independently given them.
pub fn simulate_stochastic_profiles(spec: &ProfilePriorSpec, years: usize, seed: u64) -> Result<SimulatedYears> {
    let j = spec.cells.len();
    let rows = parallel_blocks(seed, module::DEPENDENCE, years, |rng, _, len| {
        (0..len)
            .map(|_| {
                let mut u = vec![0.0; 2 * j];
                spec.copula.fill_uniforms(rng, &mut u);
                spec.cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let lambda = c.intensity.quantile(u[i]);
                        let mu = c.location.quantile(u[j + i]);
                        let n = poisson_draw(lambda, rng)?;
                        let z = (0..n).map(|_| (mu + c.sigma * std_normal(rng)).exp()).sum();
                        Ok((n, z))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    });
    let mut out =
        SimulatedYears { counts: vec![Vec::with_capacity(years); j], losses: vec![Vec::with_capacity(years); j] };
    for row in rows {
        for (i, (n, z)) in row?.into_iter().enumerate() {
            out.counts[i].push(n);
            out.losses[i].push(z);
        }
    }
    Ok(out)
}
