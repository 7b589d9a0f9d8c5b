//! Compound annual-loss distributions: Monte Carlo, Panjer recursion, FFT
//! with tilting, and closed-form approximations.

mod approx;
mod discrete;
mod fft;
mod monte_carlo;
mod panjer;

pub use approx::{compound_cumulants, moment_match_quantile, single_loss_var, MomentMatch};
pub use discrete::{discrete_quantile, discretize_severity, DiscreteDensity};
pub use fft::{default_tilt, fft_compound, CLIP_THRESHOLD};
pub use monte_carlo::{mc_compound, mc_quantile_ci, quantile_ci_indices, QuantileEstimate};
pub(crate) use monte_carlo::{net_annual, simulate_year};
pub use panjer::{panjer_prefix, panjer_quantile, panjer_recursion};

use crate::cell::{CoverMode, RiskCell};
use crate::dist::NetOfInsurance;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    Panjer,
    Fft,
    SingleLoss,
    MomentMatch(MomentMatch),
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "mc",
            Method::Panjer => "panjer",
            Method::Fft => "fft",
            Method::SingleLoss => "single-loss",
            Method::MomentMatch(MomentMatch::Normal) => "normal",
            Method::MomentMatch(MomentMatch::TranslatedGamma) => "translated-gamma",
        }
    }
}

/// Lattice settings for Panjer and FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    /// Number of lattice points.
    pub points: usize,
    /// Lattice step; `None` selects it from a pilot Monte Carlo run.
    pub step: Option<f64>,
    /// FFT tilt; `None` uses `20 / points`.
    pub tilt: Option<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { points: 1 << 16, step: None, tilt: None }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
    /// Confidence level of the order-statistic interval.
    pub gamma: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, gamma: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub tail_mass: f64,
    pub clipped_count: usize,
    pub clipped_mass: f64,
    pub step: Option<f64>,
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct CompoundResult {
    pub method: Method,
    pub quantiles: Vec<QuantileEstimate>,
    pub density: Option<DiscreteDensity>,
    pub samples: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// Pilot sample size used by the default grid rule.
pub const PILOT_SAMPLES: usize = 100_000;

/// Default lattice step: a Monte Carlo 0.9999-quantile estimate spread over a
/// quarter of the grid, so the lattice covers four times that quantile.
pub fn default_step(cell: &RiskCell, points: usize, seed: u64) -> Result<f64> {
    let pilot = mc_compound(cell, PILOT_SAMPLES, seed);
    let mut sorted = pilot;
    sorted.sort_by(f64::total_cmp);
    let idx = ((PILOT_SAMPLES as f64 * 0.9999).floor() as usize).min(PILOT_SAMPLES - 1);
    let q = sorted[idx];
    if !(q > 0.0) {
        return Err(Error::Grid("pilot 0.9999 quantile is zero; supply an explicit step".into()));
    }
    Ok(q / (points as f64 / 4.0))
}

/// Severity of a cell discretized onto a lattice, net of per-event insurance.
pub fn cell_severity_lattice(cell: &RiskCell, step: f64, points: usize) -> Result<DiscreteDensity> {
    match (cell.insurance, cell.cover_mode) {
        (None, _) => discretize_severity(&cell.severity, step, points),
        (Some(policy), CoverMode::PerEvent) => {
            discretize_severity(&NetOfInsurance { severity: &cell.severity, policy }, step, points)
        }
        (Some(_), CoverMode::Aggregate) => {
            Err(Error::Domain("aggregate insurance cover is only available by Monte Carlo".into()))
        }
    }
}

/// Annual-loss quantiles of one cell at the levels `qs`.
pub fn compound_quantiles(
    cell: &RiskCell,
    method: Method,
    qs: &[f64],
    grid: &GridSettings,
    mc: &McSettings,
) -> Result<CompoundResult> {
    let started = Instant::now();
    let mut diagnostics = Diagnostics::default();
    let mut density = None;
    let mut samples = None;
    let quantiles = match method {
        Method::MonteCarlo => {
            let z = mc_compound(cell, mc.samples, mc.seed);
            let est = qs.iter().map(|&q| mc_quantile_ci(&z, q, mc.gamma)).collect::<Result<Vec<_>>>()?;
            samples = Some(z);
            est
        }
        Method::Panjer | Method::Fft => {
            let step = match grid.step {
                Some(s) => s,
                None => default_step(cell, grid.points, mc.seed)?,
            };
            let sev = cell_severity_lattice(cell, step, grid.points)?;
            let h = if method == Method::Panjer {
                panjer_recursion(&cell.frequency, &sev)?
            } else {
                fft_compound(&cell.frequency, &sev, grid.tilt.unwrap_or_else(|| default_tilt(grid.points)))?
            };
            diagnostics.tail_mass = h.tail_mass();
            diagnostics.clipped_count = h.clipped_count();
            diagnostics.clipped_mass = h.clipped_mass();
            diagnostics.step = Some(step);
            let est = qs.iter().map(|&q| Ok(QuantileEstimate::exact(q, h.quantile(q)?))).collect::<Result<Vec<_>>>()?;
            density = Some(h);
            est
        }
        Method::SingleLoss | Method::MomentMatch(_) => {
            if cell.insurance.is_some() {
                return Err(Error::Domain(format!(
                    "{} approximation ignores insurance; use a lattice or MC method",
                    method.tag()
                )));
            }
            qs.iter()
                .map(|&q| {
                    let v = match method {
                        Method::SingleLoss => single_loss_var(&cell.frequency, &cell.severity, q)?,
                        Method::MomentMatch(kind) => moment_match_quantile(&cell.frequency, &cell.severity, kind, q)?,
                        _ => unreachable!(),
                    };
                    Ok(QuantileEstimate::exact(q, v))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    diagnostics.runtime = started.elapsed();
    Ok(CompoundResult { method, quantiles, density, samples, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{FrequencyModel, InsurancePolicy, SeverityModel};

    fn cell() -> RiskCell {
        RiskCell::new("c", FrequencyModel::poisson(3.0).unwrap(), SeverityModel::lognormal(0.0, 1.0).unwrap())
    }

    #[test]
    fn quantiles_nondecreasing_across_methods() {
        let grid = GridSettings { points: 1 << 12, step: None, tilt: None };
        let mc = McSettings { samples: 50_000, seed: 4, gamma: 0.95 };
        let qs = [0.5, 0.9, 0.99, 0.999];
        for m in [Method::MonteCarlo, Method::Panjer, Method::Fft, Method::MomentMatch(MomentMatch::Normal)] {
            let r = compound_quantiles(&cell(), m, &qs, &grid, &mc).unwrap();
            for w in r.quantiles.windows(2) {
                assert!(w[0].point <= w[1].point, "{m:?}");
            }
        }
    }

    #[test]
    fn insured_lattice_matches_simulation() {
        let c = cell().with_insurance(InsurancePolicy::new(1.0, 3.0).unwrap(), CoverMode::PerEvent);
        let grid = GridSettings { points: 1 << 13, step: Some(0.01), tilt: None };
        let mc = McSettings { samples: 200_000, seed: 8, gamma: 0.95 };
        let p = compound_quantiles(&c, Method::Panjer, &[0.99], &grid, &mc).unwrap();
        let s = compound_quantiles(&c, Method::MonteCarlo, &[0.99], &grid, &mc).unwrap();
        let est = s.quantiles[0];
        assert!(est.lower - 0.01 <= p.quantiles[0].point && p.quantiles[0].point <= est.upper + 0.01);
    }

    #[test]
    fn aggregate_cover_requires_mc() {
        let c = cell().with_insurance(InsurancePolicy::new(1.0, 3.0).unwrap(), CoverMode::Aggregate);
        let grid = GridSettings { points: 1 << 10, step: Some(0.1), tilt: None };
        assert!(compound_quantiles(&c, Method::Fft, &[0.9], &grid, &McSettings::default()).is_err());
    }
}
