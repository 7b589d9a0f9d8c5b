use crate::dist::LossDistribution;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use rayon::prelude::*;

/// Masses on the lattice `{0, Δ, 2Δ, ...}` with explicit residual tail mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity {
    step: f64,
    masses: Vec<f64>,
    tail_mass: f64,
    clipped_count: usize,
    clipped_mass: f64,
}

impl DiscreteDensity {
    /// Builds a lattice law; `tail_mass` is derived as `1 - Σ masses` (floored at zero).
    pub fn new(step: f64, masses: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Grid(format!("lattice step must be positive, got {step}")));
        }
        if masses.len() < 2 {
            return Err(Error::Grid("lattice needs at least two points".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::Grid(format!("negative or NaN mass {bad}")));
        }
        let total = masses.iter().copied().collect::<CompensatedSum>().value();
        if total > 1.0 + 1e-12 {
            return Err(Error::Grid(format!("masses sum to {total} > 1")));
        }
        Ok(Self { step, masses, tail_mass: (1.0 - total).max(0.0), clipped_count: 0, clipped_mass: 0.0 })
    }

    pub(crate) fn from_parts(step: f64, masses: Vec<f64>, tail_mass: f64) -> Self {
        Self { step, masses, tail_mass, clipped_count: 0, clipped_mass: 0.0 }
    }

    pub(crate) fn with_clipping(mut self, count: usize, mass: f64) -> Self {
        self.clipped_count = count;
        self.clipped_mass = mass;
        self
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Probability not represented on the lattice.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Number of negative round-off masses set to zero.
    pub fn clipped_count(&self) -> usize {
        self.clipped_count
    }

    /// Total absolute value of clipped masses.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(i, m)| i as f64 * self.step * m).collect::<CompensatedSum>().value()
    }

    /// Smallest lattice point `nΔ` whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        discrete_quantile(self, q)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let n = ((x / self.step).floor() as usize).min(self.masses.len() - 1);
        self.masses[..=n].iter().copied().collect::<CompensatedSum>().value()
    }
}

/// Smallest `nΔ` with cumulative mass at least `q`.
pub fn discrete_quantile(dist: &DiscreteDensity, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    if dist.tail_mass >= 1.0 - q {
        return Err(Error::InsufficientGrid { tail_mass: dist.tail_mass, q });
    }
    let mut acc = CompensatedSum::new();
    for (i, m) in dist.masses.iter().enumerate() {
        acc.add(*m);
        if acc.value() >= q {
            return Ok(i as f64 * dist.step);
        }
    }
    Err(Error::InsufficientGrid { tail_mass: dist.tail_mass, q })
}

/// Rounds a severity law onto the lattice: `f_0 = F(Δ/2)`,
/// `f_n = F(nΔ + Δ/2) - F(nΔ - Δ/2)`.
pub fn discretize_severity<D: LossDistribution + ?Sized>(dist: &D, step: f64, m: usize) -> Result<DiscreteDensity> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Grid(format!("lattice step must be positive, got {step}")));
    }
    if m < 2 {
        return Err(Error::Grid("lattice needs at least two points".into()));
    }
    // boundaries b_n = nΔ + Δ/2 for n = 0..m-1; (cdf, sf) at each
    let bounds: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|n| {
            let b = (n as f64 + 0.5) * step;
            (dist.cdf_total(b), dist.sf_total(b))
        })
        .collect();
    let mut masses = Vec::with_capacity(m);
    masses.push(bounds[0].0);
    for n in 1..m {
        let (c0, s0) = bounds[n - 1];
        let (c1, s1) = bounds[n];
        // upper tail differences are taken on the survival side to keep precision
        let f = if c0 > 0.5 { s0 - s1 } else { c1 - c0 };
        masses.push(f.max(0.0));
    }
    let tail = bounds[m - 1].1.max(0.0);
    Ok(DiscreteDensity::from_parts(step, masses, tail))
}
