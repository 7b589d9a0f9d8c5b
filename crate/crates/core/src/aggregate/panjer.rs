use super::DiscreteDensity;
use crate::dist::FrequencyModel;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// `Σ_j a[j] · b[len-1-j]` with eight independent accumulators.
fn dot_reversed(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ac = a.chunks_exact(8);
    let bc = b.rchunks_exact(8);
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for i in 0..8 {
            acc[i] += x[i] * y[7 - i];
        }
    }
    let tail: f64 = ar.iter().zip(br.iter().rev()).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

struct Recursion<'a> {
    a: f64,
    b: f64,
    lead: f64,
    denom: f64,
    f: &'a [f64],
    jf: Vec<f64>,
    h: Vec<f64>,
    clipped_count: usize,
    clipped_mass: f64,
}

impl<'a> Recursion<'a> {
    fn new(freq: &FrequencyModel, sev: &'a DiscreteDensity) -> Result<Self> {
        let c = freq.panjer_coefficients()?;
        let f = sev.masses();
        let f0 = f[0];
        let denom = 1.0 - c.a * f0;
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::RecursionSingular);
        }
        let jf = f.iter().enumerate().map(|(j, v)| j as f64 * v).collect();
        let mut h = Vec::with_capacity(f.len());
        h.push(freq.pgf(f0));
        Ok(Self {
            a: c.a,
            b: c.b,
            lead: c.p1 - (c.a + c.b) * c.p0,
            denom,
            f,
            jf,
            h,
            clipped_count: 0,
            clipped_mass: 0.0,
        })
    }

    /// Appends `h_n` for the next `n` and returns it.
    fn step(&mut self) -> f64 {
        let n = self.h.len();
        let nf = n as f64;
        let hist = &self.h[..n];
        let mut s = self.b / nf * dot_reversed(&self.jf[1..=n], hist);
        if self.a != 0.0 {
            s += self.a * dot_reversed(&self.f[1..=n], hist);
        }
        s += self.lead * self.f[n];
        let mut v = s / self.denom;
        if v < 0.0 {
            self.clipped_count += 1;
            self.clipped_mass += -v;
            v = 0.0;
        }
        self.h.push(v);
        v
    }
}

/// Compound lattice law by the extended Panjer recursion over the full grid.
pub fn panjer_recursion(freq: &FrequencyModel, sev: &DiscreteDensity) -> Result<DiscreteDensity> {
    panjer_prefix(freq, sev, sev.len())
}

/// First `len` compound masses.
pub fn panjer_prefix(freq: &FrequencyModel, sev: &DiscreteDensity, len: usize) -> Result<DiscreteDensity> {
    let len = len.clamp(2, sev.len());
    let mut r = Recursion::new(freq, sev)?;
    while r.h.len() < len {
        r.step();
    }
    let total = r.h.iter().copied().collect::<CompensatedSum>().value();
    let (cc, cm) = (r.clipped_count, r.clipped_mass);
    Ok(DiscreteDensity::from_parts(sev.step(), r.h, (1.0 - total).max(0.0)).with_clipping(cc, cm))
}

/// Compound quantile, stopping the recursion as soon as the cumulative mass reaches `q`.
pub fn panjer_quantile(freq: &FrequencyModel, sev: &DiscreteDensity, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    let mut r = Recursion::new(freq, sev)?;
    let mut acc = CompensatedSum::new();
    acc.add(r.h[0]);
    if acc.value() >= q {
        return Ok(0.0);
    }
    for n in 1..sev.len() {
        acc.add(r.step());
        if acc.value() >= q {
            return Ok(n as f64 * sev.step());
        }
    }
    Err(Error::InsufficientGrid { tail_mass: (1.0 - acc.value()).max(0.0), q })
}
