//! Capital bias from ignoring, shifting or properly modelling a reporting
//! threshold, across truncation fractions.

use oprisk::fit::{truncation_bias_experiment, BiasSettings, TruncationVariant};

fn main() -> oprisk::error::Result<()> {
    let fractions = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let settings = BiasSettings::default();
    for sigma in [1.0, 2.0] {
        println!("sigma = {sigma}, reported intensity 10");
        println!("{:>9} {:>10} {:>10} {:>10}", "fraction", "naive", "shifted", "truncated");
        let run = |v| truncation_bias_experiment(sigma, 10.0, &fractions, v, &settings);
        let (n, s, t) =
            (run(TruncationVariant::Naive)?, run(TruncationVariant::Shifted)?, run(TruncationVariant::Truncated)?);
        for i in 0..fractions.len() {
            println!("{:>9} {:>10.4} {:>10.4} {:>10.4}", fractions[i], n[i].bias, s[i].bias, t[i].bias);
        }
    }
    Ok(())
}
