use crate::error::{Error, Result};
use nalgebra::DMatrix;

fn step(x: f64) -> f64 {
    1e-5_f64.max(1e-5 * x.abs())
}

/// Central finite-difference Hessian with step `h_i = max(1e-5, 1e-5 |x_i|)`.
pub fn hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|&v| step(v)).collect();
    let mut out = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    let f0 = f(x);
    for i in 0..n {
        p[i] = x[i] + h[i];
        let fp = f(&p);
        p[i] = x[i] - h[i];
        let fm = f(&p);
        p[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut eval = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Covariance `(-H)^{-1}` of a log-density at its mode. Fails when `-H` is not
/// positive definite.
pub fn neg_hessian_inverse<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<DMatrix<f64>> {
    let neg = -hessian(f, x);
    let sym = (&neg + neg.transpose()) * 0.5;
    let chol = sym.cholesky().ok_or(Error::NotNegativeDefinite)?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        // f = -(2x² + xy + 3y²) centered at the origin
        let f = |v: &[f64]| -(2.0 * v[0] * v[0] + v[0] * v[1] + 3.0 * v[1] * v[1]);
        let h = hessian(f, &[0.0, 0.0]);
        assert!((h[(0, 0)] + 4.0).abs() < 1e-8);
        assert!((h[(0, 1)] + 1.0).abs() < 1e-8);
        assert!((h[(1, 1)] + 6.0).abs() < 1e-8);
    }

    #[test]
    fn saddle_rejected() {
        let f = |v: &[f64]| v[0] * v[0] - v[1] * v[1];
        assert!(matches!(neg_hessian_inverse(f, &[0.0, 0.0]), Err(Error::NotNegativeDefinite)));
    }
}
