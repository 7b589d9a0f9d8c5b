//! Per-event and aggregate insurance cover, and the capped capital relief.

use oprisk::aggregate::McSettings;
use oprisk::capital::{conditional_capital, CapitalSettings, DependenceSpec};
use oprisk::cell::{CoverMode, RiskCell};
use oprisk::dist::{apply_aggregate_cover, apply_insurance, FrequencyModel, InsurancePolicy, SeverityModel};

fn main() -> oprisk::error::Result<()> {
    let policy = InsurancePolicy::new(2.0, 5.0)?;
    for x in [1.0, 4.0, 10.0] {
        println!("loss {x:>5}: retained {:.1} per event", apply_insurance(x, &policy));
    }
    let layer = InsurancePolicy::new(0.0, 5.0)?;
    println!("aggregate cover of 5 over losses 3,3,3 retains {:?}", apply_aggregate_cover(&[3.0, 3.0, 3.0], &layer));

    let settings = CapitalSettings { mc: McSettings { samples: 200_000, seed: 3, gamma: 0.95 }, ..Default::default() };
    for (label, mode, limit) in [
        ("small per-event", CoverMode::PerEvent, 50.0),
        ("large per-event", CoverMode::PerEvent, 1e5),
        ("aggregate", CoverMode::Aggregate, 1e4),
    ] {
        let cell = RiskCell::new(label, FrequencyModel::poisson(10.0)?, SeverityModel::lognormal(1.0, 2.0)?)
            .with_insurance(InsurancePolicy::new(10.0, limit)?, mode);
        let r = conditional_capital(&[cell], &DependenceSpec::Independent, &settings)?;
        let e = r.cells[0].insurance;
        println!(
            "{label:<16} gross {:>9.1}  raw relief {:>8.1}  applied {:>8.1}{}",
            e.pre_insurance,
            e.raw_reduction,
            e.applied_reduction,
            if e.capped() { "  (capped at 20%)" } else { "" }
        );
    }
    Ok(())
}
