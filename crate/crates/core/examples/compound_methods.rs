//! Annual-loss quantiles of one cell by every solver.

use oprisk::aggregate::{compound_quantiles, GridSettings, McSettings, Method, MomentMatch};
use oprisk::cell::RiskCell;
use oprisk::dist::{FrequencyModel, SeverityModel};

fn main() -> oprisk::error::Result<()> {
    let cell = RiskCell::new("retail", FrequencyModel::poisson(10.0)?, SeverityModel::lognormal(1.0, 2.0)?);
    let qs = [0.99, 0.999, 0.9999];
    let grid = GridSettings { points: 1 << 16, ..Default::default() };
    let mc = McSettings { samples: 200_000, seed: 1, gamma: 0.95 };
    let methods = [
        Method::Panjer,
        Method::Fft,
        Method::MonteCarlo,
        Method::SingleLoss,
        Method::MomentMatch(MomentMatch::Normal),
        Method::MomentMatch(MomentMatch::TranslatedGamma),
    ];
    println!("{:<18} {:>12} {:>12} {:>12}", "method", qs[0], qs[1], qs[2]);
    for m in methods {
        let r = compound_quantiles(&cell, m, &qs, &grid, &mc)?;
        let v: Vec<String> = r.quantiles.iter().map(|e| format!("{:>12.2}", e.point)).collect();
        println!("{:<18} {}", m.tag(), v.join(" "));
        if m == Method::MonteCarlo {
            for e in &r.quantiles {
                println!("  q={} 95% interval [{:.2}, {:.2}] from order statistics", e.q, e.lower, e.upper);
            }
        }
    }
    Ok(())
}
