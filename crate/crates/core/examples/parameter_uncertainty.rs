//! Predictive versus plug-in capital under parameter uncertainty, and the
//! sensitivity of the bias estimate to the simulation size per replication.

use oprisk::capital::{parameter_uncertainty_bias, UncertaintySettings};
use std::time::Instant;

fn main() -> oprisk::error::Result<()> {
    let base = UncertaintySettings { replications: 30, ..Default::default() };
    for samples in [5_000, 20_000, 80_000] {
        let start = Instant::now();
        let s = UncertaintySettings { samples, ..base.clone() };
        let study = parameter_uncertainty_bias(&s)?;
        let row: Vec<String> =
            study.points.iter().map(|p| format!("T={}: {:.3}±{:.3}", p.years, p.mean_bias, p.std_error)).collect();
        println!("K={samples:>6} ({:>5.1}s) {}", start.elapsed().as_secs_f64(), row.join("  "));
    }
    Ok(())
}
