//! Quantiles, moments and tail class of each severity family.

use oprisk::dist::SeverityModel;

fn main() -> oprisk::error::Result<()> {
    let body = SeverityModel::lognormal(1.0, 1.0)?;
    let models = [
        SeverityModel::lognormal(1.0, 2.0)?,
        SeverityModel::gpd(0.6, 2.0)?,
        SeverityModel::g_and_h(1.0, 2.0, 0.5, 0.2)?,
        SeverityModel::gb2(1.0, 2.0, 2.0, 1.5)?,
        SeverityModel::gcd(2.0, 1.0, 1.0)?,
        SeverityModel::splice_gpd_tail(&body, body.quantile(0.95)?, 0.4, 3.0)?,
    ];
    println!("{:<16} {:>10} {:>10} {:>12} {:>12} {:>8}", "family", "median", "q 0.999", "mean", "variance", "subexp");
    for m in &models {
        let show = |r: oprisk::error::Result<f64>| r.map_or_else(|_| "inf".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<16} {:>10.3} {:>10.3} {:>12} {:>12} {:>8}",
            m.family_name(),
            m.quantile(0.5)?,
            m.quantile(0.999)?,
            show(m.mean()),
            show(m.variance()),
            m.is_subexponential()
        );
    }
    Ok(())
}
