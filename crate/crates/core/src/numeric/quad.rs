use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Gauss-Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * h;
    let err = ((resk - resg) * h).abs();
    (value, err)
}

const MAX_SEGMENTS: usize = 4000;

/// Globally adaptive Gauss-Kronrod quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = kronrod(&f, lo, hi);
    if !v.is_finite() {
        return Err(Error::Numerical(format!("integrand not finite on [{lo}, {hi}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a: lo, b: hi, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            break;
        }
        let seg = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(&f, seg.a, mid);
        let (v2, e2) = kronrod(&f, mid, seg.b);
        evals += 30;
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Numerical(format!("integrand not finite on [{}, {}]", seg.a, seg.b)));
        }
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // periodic resummation against drift
        if evals % 3000 == 15 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value: sign * value, error, evaluations: evals })
}

/// Integral over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let om = 1.0 - t;
        let v = f(a + t / om) / (om * om);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, abs_tol, rel_tol)
}

/// Integral over the real line through the map `x = t / (1 - t²)`.
pub fn integrate_infinite<F: Fn(f64) -> f64>(f: F, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let v = f(t / d) * (1.0 + t * t) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, -1.0, 1.0, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((q.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let q = integrate_infinite(|x| (-0.5 * x * x).exp(), 1e-12, 1e-12).unwrap();
        assert!((q.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let q = integrate_semi_infinite(|x| (-x).exp(), 1.0, 1e-13, 1e-13).unwrap();
        assert!((q.value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let q = integrate(|x| x, 1.0, 0.0, 1e-14, 1e-14).unwrap();
        assert!((q.value + 0.5).abs() < 1e-14);
    }
}
