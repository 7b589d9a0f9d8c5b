use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a sample has zero rank variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain(format!("need two samples of equal length >= 2, got {} and {}", x.len(), y.len())));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Rank correlation with a Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub rho: f64,
    pub std_error: f64,
}

/// Full-sample Spearman estimate; the standard error comes from the spread
/// of estimates over `batches` contiguous, equally sized sub-samples.
pub fn spearman_with_error(x: &[f64], y: &[f64], batches: usize) -> Result<RankCorrelation> {
    let rho = spearman_rho(x, y)?;
    let size = x.len() / batches.max(1);
    if batches < 2 || size < 2 {
        return Err(Error::Domain(format!("{} observations cannot form {batches} batches of at least 2", x.len())));
    }
    let parts = (0..batches)
        .map(|b| spearman_rho(&x[b * size..(b + 1) * size], &y[b * size..(b + 1) * size]))
        .collect::<Result<Vec<_>>>()?;
    let m = parts.iter().sum::<f64>() / batches as f64;
    let var = parts.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(RankCorrelation { rho, std_error: (var / batches as f64).sqrt() })
}
