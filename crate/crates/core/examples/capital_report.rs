//! Capital for three cells under several dependence assumptions.

use oprisk::aggregate::McSettings;
use oprisk::capital::{conditional_capital, CapitalSettings, DependenceSpec};
use oprisk::cell::RiskCell;
use oprisk::dependence::{FactorLoadings, GaussianCopula};
use oprisk::dist::{FrequencyModel, SeverityModel};

fn main() -> oprisk::error::Result<()> {
    let cells = vec![
        RiskCell::new("retail", FrequencyModel::poisson(20.0)?, SeverityModel::lognormal(0.5, 1.8)?),
        RiskCell::new("trading", FrequencyModel::neg_binomial(4.0, 0.4)?, SeverityModel::gpd(0.4, 3.0)?),
        RiskCell::new("payments", FrequencyModel::poisson(8.0)?, SeverityModel::lognormal(1.0, 2.0)?),
    ];
    let settings = CapitalSettings {
        mc: McSettings { samples: 200_000, seed: 1, gamma: 0.95 },
        subtract_expected_loss: true,
        ..Default::default()
    };
    let specs = [
        DependenceSpec::Perfect,
        DependenceSpec::Independent,
        DependenceSpec::FrequencyCopula(GaussianCopula::equicorrelated(3, 0.6)?),
        DependenceSpec::CommonFactor(FactorLoadings::one_factor(vec![0.7, 0.5, 0.6], Some(vec![0.3, 0.3, 0.3]))?),
        DependenceSpec::AggregateLossCopula(GaussianCopula::equicorrelated(3, 0.3)?),
    ];
    for dep in specs {
        let report = conditional_capital(&cells, &dep, &settings)?;
        print!("{report}");
        println!();
    }
    Ok(())
}
