use crate::error::{Error, Result};
use crate::numeric::{minimize_multistart, neg_hessian_inverse, SimplexOptions};
use nalgebra::DMatrix;

/// Normal approximation of a posterior around its mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianApprox {
    pub mode: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

/// Mode by multi-start simplex search inside `bounds`, covariance from the
/// inverse negative Hessian at the mode.
pub fn gaussian_posterior_approx<F: Fn(&[f64]) -> f64>(log_post: F, bounds: &[(f64, f64)]) -> Result<GaussianApprox> {
    if bounds.iter().any(|(a, b)| !(a < b && a.is_finite() && b.is_finite())) {
        return Err(Error::Domain("search box needs finite lower < upper bounds".into()));
    }
    let inside = |x: &[f64]| x.iter().zip(bounds).all(|(v, (a, b))| a <= v && v <= b);
    let objective = |x: &[f64]| if inside(x) { -log_post(x) } else { f64::INFINITY };
    let at = |fr: &[f64]| bounds.iter().zip(fr.iter().cycle()).map(|((a, b), f)| a + f * (b - a)).collect::<Vec<_>>();
    let starts = vec![at(&[0.5]), at(&[0.25, 0.75]), at(&[0.75, 0.25]), at(&[0.25]), at(&[0.75])];
    let step: Vec<f64> = bounds.iter().map(|(a, b)| 0.05 * (b - a)).collect();
    let best = minimize_multistart(objective, &starts, &step, SimplexOptions::default())?;
    let on_edge = best.x.iter().zip(bounds).any(|(v, (a, b))| {
        let tol = 1e-6 * (b - a);
        *v - a < tol || b - *v < tol
    });
    if on_edge {
        return Err(Error::Optimization(format!("posterior mode {:?} lies on the search box boundary", best.x)));
    }
    let covariance = neg_hessian_inverse(&log_post, &best.x)?;
    Ok(GaussianApprox { mode: best.x, covariance })
}

/// Minimum-variance unbiased linear pooling of independent estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub estimate: f64,
    pub weights: Vec<f64>,
    pub variance: f64,
}

pub fn min_variance_combine(estimates: &[f64], variances: &[f64]) -> Result<Combined> {
    if estimates.len() != variances.len() || estimates.is_empty() {
        return Err(Error::Domain("need one variance per estimate and at least one estimate".into()));
    }
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    let precision: f64 = variances.iter().map(|v| v.recip()).sum();
    let weights: Vec<f64> = variances.iter().map(|v| v.recip() / precision).collect();
    let estimate = weights.iter().zip(estimates).map(|(w, e)| w * e).sum();
    Ok(Combined { estimate, weights, variance: precision.recip() })
}
