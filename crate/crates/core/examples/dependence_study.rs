//! Rank correlation between two cells' annual losses under each coupling
//! construction, plus a common-shock count model.

use oprisk::dependence::{dependence_study, simulate_common_shock, CommonShock, Construction, StudySettings};

fn main() -> oprisk::error::Result<()> {
    let settings = StudySettings { years: 200_000, batches: 50, seed: 1 };
    let params = [0.0, 0.25, 0.5, 0.75, 1.0];
    println!("{:<22} {}", "construction", params.map(|p| format!("{p:>7}")).join(""));
    for c in Construction::ALL {
        let rows = dependence_study(c, &params, &settings)?;
        println!("{:<22} {}", c.tag(), rows.iter().map(|r| format!("{:>7.3}", r.rho_s_estimate)).collect::<String>());
    }
    let shock = CommonShock::new(vec![3.0, 8.0], 2.0, vec![1.0, 1.0])?;
    let counts = simulate_common_shock(&shock, 100_000, 3)?;
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    println!(
        "common shock: intensities {:.2} and {:.2} (simulated {:.3}, {:.3}); count correlation {:.4}",
        shock.intensity(0),
        shock.intensity(1),
        mean(&counts[0]),
        mean(&counts[1]),
        shock.count_correlation(0, 1)
    );
    Ok(())
}
