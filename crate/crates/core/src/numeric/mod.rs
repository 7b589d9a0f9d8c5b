//! Small numerical toolkit: normal distribution helpers, adaptive quadrature,
//! bracketed root finding, a Nelder-Mead simplex and finite-difference Hessians.

mod hessian;
mod optimize;
mod quad;
mod roots;
mod special;

pub use hessian::{hessian, neg_hessian_inverse};
pub use optimize::{minimize_multistart, nelder_mead, Minimum, SimplexOptions};
pub use quad::{integrate, integrate_infinite, integrate_semi_infinite, Quadrature};
pub use roots::{brent, expand_bracket_up};
pub use special::{
    gamma_cdf, gamma_quantile, gamma_sf, ln_gamma, normal_cdf, normal_interval_prob, normal_ln_pdf, normal_pdf,
    normal_quantile, normal_sf, regularized_beta,
};

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(it: I) -> Self {
        let mut s = Self::new();
        for x in it {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Snaps `x` to the nearest integer when it is within a few ulps of it, so that
/// products such as `K * q` land on the intended integer.
pub(crate) fn snap_to_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}
