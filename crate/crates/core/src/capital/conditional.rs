use crate::aggregate::{
    compound_quantiles, mc_compound, mc_quantile_ci, simulate_year, GridSettings, McSettings, Method, QuantileEstimate,
};
use crate::cell::RiskCell;
use crate::dependence::{
    common_factor_year, freq_copula_year, sample_gaussian_copula, Copula, FactorLoadings, GaussianCopula,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, module, parallel_blocks};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

/// Largest share of pre-insurance capital that insurance may remove.
pub const INSURANCE_CAP: f64 = 0.2;

/// How cells are combined into a total.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceSpec {
    /// Comonotone annual losses; the total is the sum of cell figures.
    Perfect,
    Independent,
    FrequencyCopula(GaussianCopula),
    CommonFactor(FactorLoadings),
    /// Copula placed directly on the cells' annual losses.
    AggregateLossCopula(GaussianCopula),
}

impl DependenceSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            DependenceSpec::Perfect => "perfect",
            DependenceSpec::Independent => "independent",
            DependenceSpec::FrequencyCopula(_) => "frequency-copula",
            DependenceSpec::CommonFactor(_) => "common-factor",
            DependenceSpec::AggregateLossCopula(_) => "aggregate-loss-copula",
        }
    }

    fn check(&self, cells: usize) -> Result<()> {
        let dim = match self {
            DependenceSpec::FrequencyCopula(c) | DependenceSpec::AggregateLossCopula(c) => c.dim(),
            DependenceSpec::CommonFactor(l) => l.cells(),
            _ => cells,
        };
        if dim != cells {
            return Err(Error::Domain(format!("dependence spec covers {dim} cells, model has {cells}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapitalSettings {
    pub q: f64,
    /// Method for the per-cell figures; joint figures always use Monte Carlo.
    pub method: Method,
    pub grid: GridSettings,
    pub mc: McSettings,
    /// Report `VaR - expected loss` instead of VaR.
    pub subtract_expected_loss: bool,
}

impl Default for CapitalSettings {
    fn default() -> Self {
        Self {
            q: 0.999,
            method: Method::MonteCarlo,
            grid: GridSettings::default(),
            mc: McSettings::default(),
            subtract_expected_loss: false,
        }
    }
}

/// One quantile with the expected loss from the same source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapitalFigure {
    pub method: Method,
    pub var: QuantileEstimate,
    pub expected_loss: f64,
}

impl CapitalFigure {
    pub fn capital(&self, subtract_expected_loss: bool) -> f64 {
        if subtract_expected_loss {
            self.var.point - self.expected_loss
        } else {
            self.var.point
        }
    }
}

/// Capital before and after insurance, with the reduction capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsuranceEffect {
    pub pre_insurance: f64,
    pub raw_reduction: f64,
    pub applied_reduction: f64,
}

impl InsuranceEffect {
    pub fn new(pre_insurance: f64, post_insurance: f64) -> Self {
        let raw_reduction = pre_insurance - post_insurance;
        let applied_reduction = raw_reduction.min(INSURANCE_CAP * pre_insurance.max(0.0));
        Self { pre_insurance, raw_reduction, applied_reduction }
    }

    pub fn none(capital: f64) -> Self {
        Self { pre_insurance: capital, raw_reduction: 0.0, applied_reduction: 0.0 }
    }

    pub fn capped(&self) -> bool {
        self.applied_reduction < self.raw_reduction
    }

    pub fn capital(&self) -> f64 {
        self.pre_insurance - self.applied_reduction
    }
}

/// Gross and (when insured) net figures for one cell or for the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalLine {
    pub label: String,
    pub gross: CapitalFigure,
    pub net: Option<CapitalFigure>,
    pub insurance: InsuranceEffect,
}

impl CapitalLine {
    fn new(label: String, gross: CapitalFigure, net: Option<CapitalFigure>, subtract_el: bool) -> Self {
        let pre = gross.capital(subtract_el);
        let insurance = match &net {
            Some(n) => InsuranceEffect::new(pre, n.capital(subtract_el)),
            None => InsuranceEffect::none(pre),
        };
        Self { label, gross, net, insurance }
    }

    pub fn capital(&self) -> f64 {
        self.insurance.capital()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalReport {
    pub q: f64,
    pub subtract_expected_loss: bool,
    pub cells: Vec<CapitalLine>,
    /// Sum of cell capitals, i.e. the total under perfect dependence.
    pub summed: f64,
    pub summed_pre_insurance: f64,
    /// Simulated total under the given dependence, absent for `Perfect`.
    pub joint: Option<CapitalLine>,
    pub dependence: String,
}

fn figure_from_samples(samples: &[f64], q: f64, gamma: f64) -> Result<CapitalFigure> {
    let var = mc_quantile_ci(samples, q, gamma)?;
    let expected_loss = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(CapitalFigure { method: Method::MonteCarlo, var, expected_loss })
}

fn cell_figure(cell: &RiskCell, settings: &CapitalSettings, mc: &McSettings) -> Result<CapitalFigure> {
    let r = compound_quantiles(cell, settings.method, &[settings.q], &settings.grid, mc)?;
    let expected_loss = match (&r.samples, &r.density) {
        (Some(z), _) => z.iter().sum::<f64>() / z.len() as f64,
        (None, Some(h)) => h.mean(),
        (None, None) => cell.frequency.mean() * cell.severity.mean()?,
    };
    Ok(CapitalFigure { method: settings.method, var: r.quantiles[0], expected_loss })
}

/// Annual losses per simulated year for the given cells, indexed `[year][cell]`.
pub(crate) fn joint_years(
    cells: &[RiskCell],
    dependence: &DependenceSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let z = |pairs: Vec<(u64, f64)>| pairs.into_iter().map(|p| p.1).collect::<Vec<f64>>();
    Ok(match dependence {
        DependenceSpec::Perfect | DependenceSpec::Independent => {
            parallel_blocks(seed, module::DEPENDENCE, k, |rng, _, len| {
                (0..len).map(|_| cells.iter().map(|c| simulate_year(c, rng)).collect()).collect()
            })
        }
        DependenceSpec::FrequencyCopula(c) => parallel_blocks(seed, module::DEPENDENCE, k, |rng, _, len| {
            (0..len).map(|_| z(freq_copula_year(cells, c, rng))).collect()
        }),
        DependenceSpec::CommonFactor(l) => parallel_blocks(seed, module::DEPENDENCE, k, |rng, _, len| {
            (0..len).map(|_| z(common_factor_year(cells, l, rng))).collect()
        }),
        DependenceSpec::AggregateLossCopula(c) => {
            let marginals: Vec<Vec<f64>> = cells
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    let mut s = mc_compound(cell, k, derive_seed(seed, module::COPULA, j as u64 + 1));
                    s.sort_by(f64::total_cmp);
                    s
                })
                .collect();
            sample_gaussian_copula(c, k, seed)
                .into_iter()
                .map(|u| marginals.iter().zip(&u).map(|(m, &v)| m[((v * k as f64) as usize).min(k - 1)]).collect())
                .collect()
        }
    })
}

/// Capital at fixed parameters: per-cell figures, their sum, and a Monte
/// Carlo total under `dependence`.
pub fn conditional_capital(
    cells: &[RiskCell],
    dependence: &DependenceSpec,
    settings: &CapitalSettings,
) -> Result<CapitalReport> {
    if cells.is_empty() {
        return Err(Error::Domain("no risk cells".into()));
    }
    dependence.check(cells.len())?;
    let el = settings.subtract_expected_loss;
    let lines = cells
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            let mc = McSettings { seed: derive_seed(settings.mc.seed, module::COMPOUND, j as u64), ..settings.mc };
            let gross = cell_figure(&cell.gross(), settings, &mc)?;
            let net = cell.insurance.map(|_| cell_figure(cell, settings, &mc)).transpose()?;
            Ok(CapitalLine::new(cell.label.clone(), gross, net, el))
        })
        .collect::<Result<Vec<_>>>()?;
    let summed = lines.iter().map(CapitalLine::capital).sum();
    let summed_pre_insurance = lines.iter().map(|l| l.insurance.pre_insurance).sum();
    let joint = match dependence {
        DependenceSpec::Perfect => None,
        _ if cells.len() == 1 => Some(CapitalLine { label: "total".into(), ..lines[0].clone() }),
        _ => {
            let seed = derive_seed(settings.mc.seed, module::DEPENDENCE, 0);
            let total = |cs: &[RiskCell]| -> Result<Vec<f64>> {
                Ok(joint_years(cs, dependence, settings.mc.samples, seed)?.iter().map(|y| y.iter().sum()).collect())
            };
            let gross_cells: Vec<RiskCell> = cells.iter().map(RiskCell::gross).collect();
            let gross = figure_from_samples(&total(&gross_cells)?, settings.q, settings.mc.gamma)?;
            let net = if cells.iter().any(|c| c.insurance.is_some()) {
                Some(figure_from_samples(&total(cells)?, settings.q, settings.mc.gamma)?)
            } else {
                None
            };
            Some(CapitalLine::new("total".into(), gross, net, el))
        }
    };
    Ok(CapitalReport {
        q: settings.q,
        subtract_expected_loss: el,
        cells: lines,
        summed,
        summed_pre_insurance,
        joint,
        dependence: dependence.tag().to_string(),
    })
}

/// Flat CSV record of one report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalRow {
    pub scope: String,
    pub label: String,
    pub method: String,
    pub q: f64,
    pub var: f64,
    pub var_lower: f64,
    pub var_upper: f64,
    pub gamma: f64,
    pub expected_loss: f64,
    pub pre_insurance: f64,
    pub insurance_reduction_raw: f64,
    pub insurance_reduction_applied: f64,
    pub capital: f64,
}

impl CapitalReport {
    pub fn rows(&self) -> Vec<CapitalRow> {
        let line_row = |scope: &str, l: &CapitalLine| {
            let fig = l.net.unwrap_or(l.gross);
            CapitalRow {
                scope: scope.into(),
                label: l.label.clone(),
                method: fig.method.tag().into(),
                q: self.q,
                var: fig.var.point,
                var_lower: fig.var.lower,
                var_upper: fig.var.upper,
                gamma: fig.var.gamma,
                expected_loss: fig.expected_loss,
                pre_insurance: l.insurance.pre_insurance,
                insurance_reduction_raw: l.insurance.raw_reduction,
                insurance_reduction_applied: l.insurance.applied_reduction,
                capital: l.capital(),
            }
        };
        let mut rows: Vec<CapitalRow> = self.cells.iter().map(|l| line_row("cell", l)).collect();
        rows.push(CapitalRow {
            scope: "summed".into(),
            label: "total".into(),
            method: "sum".into(),
            q: self.q,
            var: self.cells.iter().map(|l| l.net.unwrap_or(l.gross).var.point).sum(),
            var_lower: self.cells.iter().map(|l| l.net.unwrap_or(l.gross).var.lower).sum(),
            var_upper: self.cells.iter().map(|l| l.net.unwrap_or(l.gross).var.upper).sum(),
            gamma: 0.0,
            expected_loss: self.cells.iter().map(|l| l.net.unwrap_or(l.gross).expected_loss).sum(),
            pre_insurance: self.summed_pre_insurance,
            insurance_reduction_raw: self.cells.iter().map(|l| l.insurance.raw_reduction).sum(),
            insurance_reduction_applied: self.cells.iter().map(|l| l.insurance.applied_reduction).sum(),
            capital: self.summed,
        });
        if let Some(j) = &self.joint {
            rows.push(line_row(&format!("joint-{}", self.dependence), j));
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows() {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for CapitalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let measure = if self.subtract_expected_loss { "VaR - EL" } else { "VaR" };
        writeln!(f, "capital at q = {} ({measure})", self.q)?;
        let rows = self.rows();
        let width = rows.iter().map(|r| r.scope.len() + r.label.len() + 1).max().unwrap_or(0);
        for r in rows {
            write!(
                f,
                "  {:<width$} {:>12.2}  VaR {:.2} [{} {:.2} .. {:.2}]",
                format!("{} {}", r.scope, r.label),
                r.capital,
                r.var,
                r.method,
                r.var_lower,
                r.var_upper
            )?;
            if r.insurance_reduction_raw != 0.0 {
                write!(f, "  insurance -{:.2} (raw -{:.2})", r.insurance_reduction_applied, r.insurance_reduction_raw)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CoverMode;
    use crate::dependence::reference_cells;
    use crate::dist::{FrequencyModel, InsurancePolicy, SeverityModel};

    fn mc(samples: usize) -> CapitalSettings {
        CapitalSettings { mc: McSettings { samples, seed: 5, gamma: 0.95 }, ..Default::default() }
    }

    #[test]
    fn single_cell_totals_agree() {
        let cells = [reference_cells().unwrap()[0].clone()];
        let r = conditional_capital(&cells, &DependenceSpec::Independent, &mc(50_000)).unwrap();
        let j = r.joint.as_ref().unwrap();
        assert_eq!(r.summed, r.cells[0].capital());
        assert_eq!(j.capital(), r.summed);
    }

    #[test]
    fn comonotone_loss_copula_is_additive() {
        let cells = reference_cells().unwrap();
        let s = mc(100_000);
        let dep = DependenceSpec::AggregateLossCopula(GaussianCopula::equicorrelated(2, 1.0).unwrap());
        let r = conditional_capital(&cells, &dep, &s).unwrap();
        let j = r.joint.unwrap();
        let lo: f64 = r.cells.iter().map(|c| c.gross.var.lower).sum();
        let hi: f64 = r.cells.iter().map(|c| c.gross.var.upper).sum();
        assert!(j.gross.var.upper >= lo && j.gross.var.lower <= hi, "{:?} vs [{lo}, {hi}]", j.gross.var);
    }

    #[test]
    fn independence_diversifies() {
        let cells = reference_cells().unwrap();
        let r = conditional_capital(&cells, &DependenceSpec::Independent, &mc(200_000)).unwrap();
        let j = r.joint.unwrap();
        let summed_upper: f64 = r.cells.iter().map(|c| c.gross.var.upper).sum();
        assert!(j.gross.var.lower <= summed_upper);
    }

    #[test]
    fn insurance_cap_binds() {
        // a policy covering almost everything would cut capital far more than 20%
        let cell =
            RiskCell::new("c", FrequencyModel::poisson(5.0).unwrap(), SeverityModel::lognormal(1.0, 1.0).unwrap())
                .with_insurance(InsurancePolicy::new(0.0, 1e9).unwrap(), CoverMode::PerEvent);
        let r = conditional_capital(&[cell], &DependenceSpec::Perfect, &mc(20_000)).unwrap();
        let line = &r.cells[0];
        assert!(line.insurance.capped());
        assert!((line.capital() - 0.8 * line.insurance.pre_insurance).abs() < 1e-9 * line.insurance.pre_insurance);
        assert!(r.joint.is_none());
    }

    #[test]
    fn expected_loss_from_same_sample() {
        let cells = [reference_cells().unwrap()[0].clone()];
        let s = CapitalSettings { subtract_expected_loss: true, ..mc(50_000) };
        let r = conditional_capital(&cells, &DependenceSpec::Perfect, &s).unwrap();
        let z = mc_compound(&cells[0], 50_000, derive_seed(5, module::COMPOUND, 0));
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let q = mc_quantile_ci(&z, 0.999, 0.95).unwrap().point;
        assert_eq!(r.cells[0].capital(), q - mean);
    }

    #[test]
    fn csv_and_text() {
        let cells = reference_cells().unwrap();
        let r = conditional_capital(&cells, &DependenceSpec::Independent, &mc(20_000)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scope,label,method,q,var,var_lower,var_upper,gamma,expected_loss,"));
        assert_eq!(text.lines().count(), 1 + 2 + 2);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<CapitalRow> = rd.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, r.rows());
        assert!(r.to_string().contains("joint-independent"));
    }

    #[test]
    fn dimension_mismatch() {
        let cells = reference_cells().unwrap();
        let dep = DependenceSpec::FrequencyCopula(GaussianCopula::independent(3).unwrap());
        assert!(conditional_capital(&cells, &dep, &mc(1000)).is_err());
    }
}
