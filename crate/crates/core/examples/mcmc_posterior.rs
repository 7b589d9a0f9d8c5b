//! Random-walk Metropolis-Hastings within Gibbs for a lognormal severity
//! posterior, exported as CSV.

use oprisk::bayes::{rw_mh_gibbs, tune_proposals, McmcSettings};
use oprisk::dist::SeverityModel;
use oprisk::rng::substream;

fn main() -> oprisk::error::Result<()> {
    let data = SeverityModel::lognormal(1.0, 2.0)?.sample_n(&mut substream(1, 0, 0), 200);
    let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    // flat prior on (mu, sigma) within bounds
    let log_post = |t: &[f64]| {
        let (mu, sigma) = (t[0], t[1]);
        logs.iter().map(|y| -sigma.ln() - (y - mu).powi(2) / (2.0 * sigma * sigma)).sum::<f64>()
    };
    let bounds = [(-10.0, 10.0), (0.01, 10.0)];
    let mut rng = substream(2, 0, 0);
    let tuned = tune_proposals(log_post, &bounds, &[0.5, 0.5], &[0.0, 1.0], 2000, &mut rng)?;
    println!("tuned scales {:?}, acceptance {:?} after {} rounds", tuned.scales, tuned.rates, tuned.rounds);
    let chain = rw_mh_gibbs(log_post, &bounds, &tuned.scales, &tuned.state, McmcSettings::new(50_000), &mut rng)?;
    for (i, name) in ["mu", "sigma"].iter().enumerate() {
        println!(
            "{name}: mean {:.4}, sd {:.4}, MC se {:.5}",
            chain.mean(i),
            chain.variance(i).sqrt(),
            chain.mc_standard_error(i)
        );
    }
    let path = std::env::temp_dir().join("oprisk_chain.csv");
    chain.write_csv(&["mu", "sigma"], std::fs::File::create(&path)?)?;
    println!("chain written to {}", path.display());
    Ok(())
}
