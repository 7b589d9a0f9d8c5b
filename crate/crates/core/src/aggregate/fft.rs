use super::DiscreteDensity;
use crate::dist::FrequencyModel;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Tilt recommended for double precision on a grid of `m` points.
pub fn default_tilt(m: usize) -> f64 {
    20.0 / m as f64
}

/// Magnitude below which negative masses are treated as round-off.
pub const CLIP_THRESHOLD: f64 = 1e-14;

/// Compound lattice law through the discrete Fourier transform of the
/// exponentially tilted severity masses.
pub fn fft_compound(freq: &FrequencyModel, sev: &DiscreteDensity, theta: f64) -> Result<DiscreteDensity> {
    let m = sev.len();
    if !m.is_power_of_two() {
        return Err(Error::Grid(format!("FFT grid length {m} is not a power of two")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::Grid(format!("tilt must be nonnegative, got {theta}")));
    }
    let mut buf: Vec<Complex64> =
        sev.masses().iter().enumerate().map(|(j, f)| Complex64::new(f * (-(j as f64) * theta).exp(), 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for v in buf.iter_mut() {
        *v = freq.pgf_complex(*v);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let mut clipped = 0usize;
    let mut clipped_mass = 0.0;
    let mut large_negative = 0.0f64;
    let masses: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let v = c.re * scale * (j as f64 * theta).exp();
            if v < 0.0 {
                clipped += 1;
                clipped_mass += -v;
                large_negative = large_negative.max(-v);
                0.0
            } else {
                v
            }
        })
        .collect();
    if large_negative > CLIP_THRESHOLD {
        log::warn!("FFT produced negative mass {large_negative:.3e} above round-off level; grid may be too coarse");
    }
    let total = masses.iter().copied().collect::<CompensatedSum>().value();
    Ok(DiscreteDensity::from_parts(sev.step(), masses, (1.0 - total).max(0.0)).with_clipping(clipped, clipped_mass))
}
