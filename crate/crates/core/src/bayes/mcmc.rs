use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, normal_interval_prob, normal_ln_pdf, normal_quantile, normal_sf};
use crate::rng::{module, open_unit, substream, Stream};
use rayon::prelude::*;
use std::io::Write;

/// Output of a random-walk Metropolis-Hastings-within-Gibbs run.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamChain {
    /// Every state, burn-in included.
    pub samples: Vec<Vec<f64>>,
    /// Per iteration and coordinate: whether the proposal was accepted.
    pub accepted: Vec<Vec<bool>>,
    pub scales: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub burn_in: usize,
}

impl ParamChain {
    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// States after burn-in.
    pub fn draws(&self) -> &[Vec<f64>] {
        &self.samples[self.burn_in.min(self.samples.len())..]
    }

    /// Per-coordinate acceptance rates after burn-in.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        acceptance(&self.accepted[self.burn_in.min(self.accepted.len())..], self.dim())
    }

    pub fn mean(&self, i: usize) -> f64 {
        let d = self.draws();
        d.iter().map(|s| s[i]).sum::<f64>() / d.len() as f64
    }

    pub fn variance(&self, i: usize) -> f64 {
        let d = self.draws();
        let m = self.mean(i);
        d.iter().map(|s| (s[i] - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64
    }

    /// Monte Carlo standard error of the mean of coordinate `i` by batch means
    /// over `sqrt(n)` batches.
    pub fn mc_standard_error(&self, i: usize) -> f64 {
        let v: Vec<f64> = self.draws().iter().map(|s| s[i]).collect();
        batch_means_se(&v)
    }

    /// CSV with columns `iteration`, one per parameter, then `accepted_<name>`.
    pub fn write_csv<W: Write>(&self, names: &[&str], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        header.extend(names.iter().map(|n| format!("accepted_{n}")));
        w.write_record(&header)?;
        for (it, (s, a)) in self.samples.iter().zip(&self.accepted).enumerate() {
            let mut row = vec![it.to_string()];
            row.extend(s.iter().map(|v| v.to_string()));
            row.extend(a.iter().map(|&b| u8::from(b).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Standard error of the mean of a correlated series by batch means over
/// `sqrt(n)` batches.
pub fn batch_means_se(v: &[f64]) -> f64 {
    let batches = (v.len() as f64).sqrt().floor().max(2.0) as usize;
    let size = v.len() / batches;
    let means: Vec<f64> = v.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn acceptance(flags: &[Vec<bool>], dim: usize) -> Vec<f64> {
    let n = flags.len().max(1) as f64;
    (0..dim).map(|i| flags.iter().filter(|a| a[i]).count() as f64 / n).collect()
}

/// Draw from `Normal(mean, sd)` truncated to `[lo, hi]` by inversion, working
/// on whichever tail keeps the probabilities away from one.
pub fn truncated_normal_sample(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut Stream) -> f64 {
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    let u = open_unit(rng);
    let z = if a > 0.0 {
        // upper tail: invert the survival function
        let (sa, sb) = (normal_sf(a), normal_sf(b));
        -normal_quantile(sa - u * (sa - sb))
    } else {
        let (ca, cb) = (normal_cdf(a), normal_cdf(b));
        normal_quantile(ca + u * (cb - ca))
    };
    (mean + sd * z.clamp(a, b)).clamp(lo, hi)
}

/// Log density of `Normal(mean, sd)` truncated to `[lo, hi]`.
pub fn truncated_normal_ln_pdf(x: f64, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if x < lo || x > hi {
        return f64::NEG_INFINITY;
    }
    normal_ln_pdf((x - mean) / sd) - sd.ln() - normal_interval_prob((lo - mean) / sd, (hi - mean) / sd).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcSettings {
    /// Iterations kept after burn-in.
    pub iterations: usize,
    /// Defaults to a tenth of `iterations`.
    pub burn_in: Option<usize>,
}

impl McmcSettings {
    pub fn new(iterations: usize) -> Self {
        Self { iterations, burn_in: None }
    }

    fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 10)
    }
}

fn check_inputs<F: Fn(&[f64]) -> f64>(
    log_post: &F,
    bounds: &[(f64, f64)],
    scales: &[f64],
    init: &[f64],
) -> Result<f64> {
    if bounds.len() != init.len() || scales.len() != init.len() {
        return Err(Error::McmcInit("bounds, scales and initial state differ in length".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::McmcInit("proposal scales must be positive".into()));
    }
    if init.iter().zip(bounds).any(|(x, (a, b))| !(a <= x && x <= b)) {
        return Err(Error::McmcInit(format!("initial state {init:?} is outside the bounds")));
    }
    let lp = log_post(init);
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return Err(Error::McmcInit(format!("log-posterior is not finite at {init:?}")));
    }
    Ok(lp)
}

/// Coordinate-wise random-walk Metropolis-Hastings with truncated-normal
/// proposals. `log_post` may be unnormalized.
pub fn rw_mh_gibbs<F: Fn(&[f64]) -> f64>(
    log_post: F,
    bounds: &[(f64, f64)],
    scales: &[f64],
    init: &[f64],
    settings: McmcSettings,
    rng: &mut Stream,
) -> Result<ParamChain> {
    let mut lp = check_inputs(&log_post, bounds, scales, init)?;
    let burn_in = settings.burn_in();
    let total = burn_in + settings.iterations;
    let mut state = init.to_vec();
    let mut samples = Vec::with_capacity(total);
    let mut accepted = Vec::with_capacity(total);
    for _ in 0..total {
        let mut flags = vec![false; state.len()];
        for i in 0..state.len() {
            let (lo, hi) = bounds[i];
            let s = scales[i];
            let current = state[i];
            let proposal = truncated_normal_sample(current, s, lo, hi, rng);
            state[i] = proposal;
            let lp_new = log_post(&state);
            // kernel ratio q(current | proposal) / q(proposal | current)
            let kernel = truncated_normal_ln_pdf(current, proposal, s, lo, hi)
                - truncated_normal_ln_pdf(proposal, current, s, lo, hi);
            let ln_ratio = lp_new - lp + kernel;
            if ln_ratio >= 0.0 || open_unit(rng).ln() < ln_ratio {
                lp = lp_new;
                flags[i] = true;
            } else {
                state[i] = current;
            }
        }
        samples.push(state.clone());
        accepted.push(flags);
    }
    Ok(ParamChain { samples, accepted, scales: scales.to_vec(), bounds: bounds.to_vec(), burn_in })
}

/// Independent chains from per-chain streams, run in parallel.
pub fn rw_mh_gibbs_chains<F: Fn(&[f64]) -> f64 + Sync>(
    log_post: F,
    bounds: &[(f64, f64)],
    scales: &[f64],
    init: &[f64],
    settings: McmcSettings,
    chains: usize,
    seed: u64,
) -> Result<Vec<ParamChain>> {
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, module::MCMC, c as u64);
            rw_mh_gibbs(&log_post, bounds, scales, init, settings, &mut rng)
        })
        .collect()
}

/// Target acceptance rate and the band accepted as tuned.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
pub const ACCEPTANCE_BAND: (f64, f64) = (0.15, 0.35);

/// One multiplicative adjustment of a proposal scale toward the target rate.
pub fn adjust_scale(scale: f64, rate: f64) -> f64 {
    scale * (rate.max(0.01) / TARGET_ACCEPTANCE).clamp(0.1, 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub scales: Vec<f64>,
    pub rates: Vec<f64>,
    pub rounds: usize,
    /// Last state of the tuning runs, a warm start for the main chain.
    pub state: Vec<f64>,
}

/// Pilot runs of `pilot` iterations, rescaling each coordinate until its
/// acceptance falls in the band. Tuning draws are discarded.
pub fn tune_proposals<F: Fn(&[f64]) -> f64>(
    log_post: F,
    bounds: &[(f64, f64)],
    scales: &[f64],
    init: &[f64],
    pilot: usize,
    rng: &mut Stream,
) -> Result<Tuning> {
    const MAX_ROUNDS: usize = 20;
    let pilot = pilot.max(1000);
    let mut scales = scales.to_vec();
    let mut state = init.to_vec();
    let mut rates = Vec::new();
    for round in 1..=MAX_ROUNDS {
        let chain =
            rw_mh_gibbs(&log_post, bounds, &scales, &state, McmcSettings { iterations: pilot, burn_in: Some(0) }, rng)?;
        rates = chain.acceptance_rates();
        state = chain.samples.last().cloned().unwrap_or(state);
        let inside = |r: f64| (ACCEPTANCE_BAND.0..=ACCEPTANCE_BAND.1).contains(&r);
        if rates.iter().all(|&r| inside(r)) {
            return Ok(Tuning { scales, rates, rounds: round, state });
        }
        for (s, &r) in scales.iter_mut().zip(&rates) {
            if !inside(r) {
                *s = adjust_scale(*s, r);
            }
        }
    }
    if rates.iter().any(|&r| r == 0.0 || r == 1.0) {
        return Err(Error::Tuning(format!("acceptance pinned at {rates:?} after {MAX_ROUNDS} adjustments")));
    }
    log::warn!("acceptance {rates:?} still outside the band after {MAX_ROUNDS} rounds");
    Ok(Tuning { scales, rates, rounds: MAX_ROUNDS, state })
}
