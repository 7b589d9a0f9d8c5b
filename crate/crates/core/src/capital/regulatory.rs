use crate::cell::BusinessLine;
use crate::error::{Error, Result};

/// Basic indicator approach multiplier.
pub const BIA_ALPHA: f64 = 0.15;

/// `BIA_ALPHA` times the average of the positive annual gross incomes.
pub fn bia_charge(gross_incomes: &[f64]) -> Result<f64> {
    let positive: Vec<f64> = gross_incomes.iter().copied().filter(|g| *g > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::UndefinedCharge("no positive gross income".into()));
    }
    Ok(BIA_ALPHA * positive.iter().sum::<f64>() / positive.len() as f64)
}

/// Standardised approach: yearly beta-weighted sums over the eight lines
/// (rows in [`BusinessLine::ALL`] order, columns the last three years),
/// floored at zero and averaged.
pub fn tsa_charge(gross_incomes: &[[f64; 3]; 8]) -> f64 {
    (0..3)
        .map(|year| {
            BusinessLine::ALL.iter().zip(gross_incomes).map(|(line, gi)| line.beta() * gi[year]).sum::<f64>().max(0.0)
        })
        .sum::<f64>()
        / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basic_indicator() {
        assert_relative_eq!(bia_charge(&[100.0, 100.0, 100.0]).unwrap(), 15.0, max_relative = 1e-15);
        assert_relative_eq!(bia_charge(&[100.0, -50.0, 100.0]).unwrap(), 15.0, max_relative = 1e-15);
        assert_relative_eq!(bia_charge(&[200.0]).unwrap(), 30.0, max_relative = 1e-15);
        assert!(matches!(bia_charge(&[-1.0, 0.0]), Err(Error::UndefinedCharge(_))));
        assert!(bia_charge(&[]).is_err());
    }

    #[test]
    fn standardised() {
        assert_eq!(tsa_charge(&[[0.0; 3]; 8]), 0.0);
        let mut gi = [[0.0; 3]; 8];
        gi[2] = [100.0; 3];
        assert_relative_eq!(tsa_charge(&gi), 12.0, max_relative = 1e-15);
        // year 1: 0.18 * 100 - 0.12 * 1000 < 0 is floored
        let mut gi = [[0.0; 3]; 8];
        gi[0] = [100.0, 100.0, 100.0];
        gi[2] = [-1000.0, 0.0, 0.0];
        assert_relative_eq!(tsa_charge(&gi), (0.0 + 18.0 + 18.0) / 3.0, max_relative = 1e-15);
    }
}
