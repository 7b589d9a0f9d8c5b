//! Elicited prior, observed counts and an expert opinion combined year by
//! year, plus empirical Bayes across cells.

use oprisk::bayes::{
    credibility_trajectory, elicit_gamma_prior, empirical_bayes_gamma, min_variance_combine, poisson_gamma_posterior,
    CellCounts, ExpertOpinions,
};

fn main() -> oprisk::error::Result<()> {
    let prior = elicit_gamma_prior(0.5, 0.25, 0.75, 2.0 / 3.0)?;
    println!("elicited prior: shape {:.3}, scale {:.3}", prior.shape(), prior.scale());

    let counts = [0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 2, 1, 1, 2, 0];
    let experts = ExpertOpinions::new(vec![0.7], 4.0)?;
    println!("{:>4} {:>8} {:>8} {:>8}", "year", "mle", "prior+data", "+expert");
    for p in credibility_trajectory(prior, &counts, &experts)? {
        println!("{:>4} {:>8.4} {:>8.4} {:>8.4}", p.year, p.mle, p.two_source, p.three_source);
    }
    let (post, report) = poisson_gamma_posterior(prior, &counts);
    println!("credibility weight after 15 years: {:.4}; posterior mean {:.4}", report.weight, post.mean());

    let pooled = min_variance_combine(&[0.55, 0.7, 0.62], &[0.01, 0.04, 0.02])?;
    println!("minimum-variance combination {:.4} (weights {:?})", pooled.estimate, pooled.weights);

    let cells: Vec<CellCounts> = [[1, 0, 2, 1, 0], [3, 2, 4, 2, 3], [0, 1, 0, 0, 1], [2, 1, 1, 3, 2]]
        .iter()
        .map(|c| CellCounts { counts: c.to_vec(), volumes: vec![1.0; 5] })
        .collect();
    let eb = empirical_bayes_gamma(&cells)?;
    println!("empirical Bayes prior across 4 cells: shape {:.3}, scale {:.3}", eb.shape(), eb.scale());
    Ok(())
}
