use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Convergence when the spread of simplex values falls below
    /// `ftol * (|f_best| + ftol)`.
    pub ftol: f64,
    /// and the simplex diameter falls below `xtol`.
    pub xtol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, ftol: 1e-13, xtol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization with dimension-adaptive coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], opts: SimplexOptions) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iter = 0;
    let mut converged = false;
    while iter < opts.max_iter {
        iter += 1;
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if vals[0].is_finite()
            && spread <= opts.ftol * (vals[0].abs() + opts.ftol)
            && diam <= opts.xtol * (1.0 + pts[0].iter().map(|v| v.abs()).fold(0.0, f64::max))
        {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(rho * alpha);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + sigma * (x - b)).collect();
                    vals[i] = eval(&p);
                    pts[i] = p;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], iterations: iter, converged }
}

/// Runs Nelder-Mead from each start (restarting once from its own optimum)
/// and returns the best converged result.
pub fn minimize_multistart<F: Fn(&[f64]) -> f64>(
    f: F,
    starts: &[Vec<f64>],
    step: &[f64],
    opts: SimplexOptions,
) -> Result<Minimum> {
    let mut best: Option<Minimum> = None;
    for s in starts {
        let first = nelder_mead(&f, s, step, opts);
        let small: Vec<f64> = step.iter().map(|v| 0.1 * v).collect();
        let m = nelder_mead(&f, &first.x, &small, opts);
        let m = if m.value <= first.value { m } else { first };
        if !m.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    match best {
        Some(m) if m.converged => Ok(m),
        Some(m) => Err(Error::Optimization(format!(
            "simplex did not converge after {} iterations (best value {})",
            m.iterations, m.value
        ))),
        None => Err(Error::Optimization("objective not finite at any start".into())),
    }
}
