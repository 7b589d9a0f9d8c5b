//! Fits a lognormal to losses reported above a threshold, with standard
//! errors, a bootstrap interval and a goodness-of-fit distance.

use oprisk::dist::{FrequencyModel, SeverityModel};
use oprisk::fit::{bootstrap, fit_truncated_mle, ks_statistic, LossRecord, SeverityFamily};
use oprisk::rng::substream;

fn main() -> oprisk::error::Result<()> {
    let (freq, sev) = (FrequencyModel::poisson(30.0)?, SeverityModel::lognormal(1.0, 2.0)?);
    let threshold = sev.quantile(0.3)?;
    let record = LossRecord::simulate(&freq, &sev, threshold, 15, &mut substream(4, 0, 0))?;
    println!("{} losses above {threshold:.3} over {} years", record.total_count(), record.num_periods());

    let fit = fit_truncated_mle(&record, SeverityFamily::Lognormal)?;
    let boot = bootstrap(
        record.periods(),
        |p| Ok(fit_truncated_mle(&LossRecord::new(threshold, p.to_vec())?, SeverityFamily::Lognormal)?.estimates()),
        200,
        9,
    );
    for (i, ((name, est), se)) in fit.parameter_names().iter().zip(fit.estimates()).zip(fit.std_errors()).enumerate() {
        let ci = boot.percentile_interval(i, 0.95);
        println!("{name:>6} = {est:8.4}  se {:?}  bootstrap 95% {:?}", se.map(|s| (s * 1e4).round() / 1e4), ci);
    }
    println!("bootstrap failures: {}", boot.failures);
    let reported: Vec<f64> = record.amounts().collect();
    let ks = ks_statistic(&reported, &fit.severity_model()?.truncate_left(threshold)?);
    println!("KS distance to the truncated fit: {ks:.4}");
    Ok(())
}
