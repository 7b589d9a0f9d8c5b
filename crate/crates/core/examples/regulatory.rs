//! Basic Indicator and Standardised Approach charges from gross income.

use oprisk::capital::{bia_charge, tsa_charge};
use oprisk::cell::BusinessLine;

fn main() -> oprisk::error::Result<()> {
    let total = [120.0, -15.0, 140.0];
    println!("basic indicator charge: {:.2}", bia_charge(&total)?);
    let mut by_line = [[0.0; 3]; 8];
    for (i, line) in BusinessLine::ALL.iter().enumerate() {
        by_line[i] = [10.0 + i as f64, 12.0 + i as f64, 9.0 + 2.0 * i as f64];
        println!("{line:?}: beta {}", line.beta());
    }
    println!("standardised charge: {:.2}", tsa_charge(&by_line));
    Ok(())
}
