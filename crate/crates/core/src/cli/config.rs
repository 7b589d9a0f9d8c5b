use crate::aggregate::{GridSettings, McSettings, Method, MomentMatch};
use crate::cell::{BaselMapping, CoverMode, RiskCell};
use crate::dependence::{Construction, FactorLoadings, GaussianCopula};
use crate::dist::{FrequencyModel, InsurancePolicy, SeverityModel};
use crate::error::{Error, Result};
use crate::fit::SeverityFamily;
use serde::Deserialize;
use std::ops::Range;
use std::path::{Path, PathBuf};
use toml::Spanned;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    Aggregate,
    Capital,
    DependenceStudy,
    BiasStudy,
    Combine,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FrequencySpec {
    Poisson { lambda: f64 },
    NegativeBinomial { r: f64, p: f64 },
    Binomial { n: u32, p: f64 },
}

impl FrequencySpec {
    pub fn build(&self) -> Result<FrequencyModel> {
        match *self {
            FrequencySpec::Poisson { lambda } => FrequencyModel::poisson(lambda),
            FrequencySpec::NegativeBinomial { r, p } => FrequencyModel::neg_binomial(r, p),
            FrequencySpec::Binomial { n, p } => FrequencyModel::binomial(n, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeveritySpec {
    Lognormal { mu: f64, sigma: f64 },
    Gpd { xi: f64, beta: f64 },
    GAndH { a: f64, b: f64, g: f64, h: f64 },
    Gb2 { a: f64, b: f64, p: f64, q: f64 },
    Gcd { alpha: f64, m: f64, c: f64 },
}

impl SeveritySpec {
    pub fn build(&self) -> Result<SeverityModel> {
        match *self {
            SeveritySpec::Lognormal { mu, sigma } => SeverityModel::lognormal(mu, sigma),
            SeveritySpec::Gpd { xi, beta } => SeverityModel::gpd(xi, beta),
            SeveritySpec::GAndH { a, b, g, h } => SeverityModel::g_and_h(a, b, g, h),
            SeveritySpec::Gb2 { a, b, p, q } => SeverityModel::gb2(a, b, p, q),
            SeveritySpec::Gcd { alpha, m, c } => SeverityModel::gcd(alpha, m, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsuranceSpec {
    pub deductible: f64,
    pub limit: f64,
    #[serde(default)]
    pub mode: CoverMode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub label: String,
    pub frequency: Spanned<FrequencySpec>,
    pub severity: Spanned<SeveritySpec>,
    pub insurance: Option<Spanned<InsuranceSpec>>,
    pub mapping: Option<BaselMapping>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Mc,
    Panjer,
    Fft,
    SingleLoss,
    Normal,
    TranslatedGamma,
}

impl MethodName {
    pub fn method(self) -> Method {
        match self {
            MethodName::Mc => Method::MonteCarlo,
            MethodName::Panjer => Method::Panjer,
            MethodName::Fft => Method::Fft,
            MethodName::SingleLoss => Method::SingleLoss,
            MethodName::Normal => Method::MomentMatch(MomentMatch::Normal),
            MethodName::TranslatedGamma => Method::MomentMatch(MomentMatch::TranslatedGamma),
        }
    }
}

fn default_samples() -> usize {
    100_000
}
fn default_points() -> usize {
    1 << 16
}
fn default_quantiles() -> Vec<f64> {
    vec![0.999]
}
fn default_gamma() -> f64 {
    0.95
}
fn default_method() -> MethodName {
    MethodName::Fft
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    pub step: Option<f64>,
    pub tilt: Option<f64>,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub subtract_expected_loss: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: default_method(),
            samples: default_samples(),
            points: default_points(),
            step: None,
            tilt: None,
            quantiles: default_quantiles(),
            gamma: default_gamma(),
            subtract_expected_loss: false,
        }
    }
}

impl SolverSpec {
    pub fn grid(&self) -> GridSettings {
        GridSettings { points: self.points, step: self.step, tilt: self.tilt }
    }

    pub fn mc(&self, seed: u64) -> McSettings {
        McSettings { samples: self.samples, seed, gamma: self.gamma }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub losses: PathBuf,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default = "default_family")]
    pub family: SeverityFamily,
    #[serde(default)]
    pub bootstrap: usize,
}

fn default_family() -> SeverityFamily {
    SeverityFamily::Lognormal
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DependenceConfig {
    Perfect,
    Independent,
    FrequencyCopula { correlation: Vec<Vec<f64>> },
    AggregateLossCopula { correlation: Vec<Vec<f64>> },
    CommonFactor { loadings: Vec<f64>, severity_loadings: Option<Vec<f64>> },
}

impl DependenceConfig {
    pub fn build(&self) -> Result<crate::capital::DependenceSpec> {
        use crate::capital::DependenceSpec as D;
        Ok(match self {
            DependenceConfig::Perfect => D::Perfect,
            DependenceConfig::Independent => D::Independent,
            DependenceConfig::FrequencyCopula { correlation } => {
                D::FrequencyCopula(GaussianCopula::from_rows(correlation)?)
            }
            DependenceConfig::AggregateLossCopula { correlation } => {
                D::AggregateLossCopula(GaussianCopula::from_rows(correlation)?)
            }
            DependenceConfig::CommonFactor { loadings, severity_loadings } => {
                D::CommonFactor(FactorLoadings::one_factor(loadings.clone(), severity_loadings.clone())?)
            }
        })
    }
}

fn default_study_params() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_study_years() -> usize {
    1_000_000
}
fn default_batches() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub constructions: Vec<Construction>,
    #[serde(default = "default_study_params")]
    pub params: Vec<f64>,
    #[serde(default = "default_study_years")]
    pub years: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSpec {
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub years: Vec<usize>,
    pub replications: usize,
    pub samples: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_level")]
    pub q: f64,
}

fn default_level() -> f64 {
    0.999
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElicitationSpec {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertSpec {
    pub opinions: Vec<f64>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombineSpec {
    /// Gamma prior as `[shape, scale]`; alternative to `elicit`.
    pub prior: Option<[f64; 2]>,
    pub elicit: Option<ElicitationSpec>,
    pub counts: Vec<u64>,
    pub experts: Option<ExpertSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: Spanned<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub data: Option<DataSpec>,
    pub dependence: Option<DependenceConfig>,
    pub study: Option<StudySpec>,
    pub bias: Option<BiasSpec>,
    pub combine: Option<CombineSpec>,
    /// Source text, kept for line numbers in later validation errors.
    #[serde(skip)]
    source: String,
}

fn default_output() -> PathBuf {
    PathBuf::from(".")
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        *self.seed.get_ref()
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Spanned::new(self.seed.span(), seed);
    }

    /// Configuration error located at `span`.
    pub fn error_at(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        Error::Config { line: line_of(&self.source, span), message: message.into() }
    }

    /// Validated risk cells; model-parameter errors carry their line.
    pub fn risk_cells(&self) -> Result<Vec<RiskCell>> {
        let located = |span: Range<usize>, e: Error| match e {
            Error::Config { .. } => e,
            other => self.error_at(span, other.to_string()),
        };
        self.cells
            .iter()
            .map(|c| {
                let freq = c.frequency.get_ref().build().map_err(|e| located(c.frequency.span(), e))?;
                let sev = c.severity.get_ref().build().map_err(|e| located(c.severity.span(), e))?;
                let mut cell = RiskCell::new(c.label.clone(), freq, sev);
                if let Some(ins) = &c.insurance {
                    let i = ins.get_ref();
                    let policy = InsurancePolicy::new(i.deductible, i.limit).map_err(|e| located(ins.span(), e))?;
                    cell = cell.with_insurance(policy, i.mode);
                }
                if let Some(m) = c.mapping {
                    cell = cell.with_mapping(m);
                }
                Ok(cell)
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config {
                    line: 1,
                    message: format!("command {:?} needs a [{section}] section", self.command),
                })
            }
        };
        match self.command {
            Command::Fit => need(self.data.is_some(), "data")?,
            Command::Aggregate | Command::Capital => need(!self.cells.is_empty(), "[cells]")?,
            Command::DependenceStudy => need(self.study.is_some(), "study")?,
            Command::BiasStudy => need(self.bias.is_some(), "bias")?,
            Command::Combine => need(self.combine.is_some(), "combine")?,
        }
        self.risk_cells()?;
        if let Some(d) = &self.dependence {
            d.build().map_err(|e| Error::Config { line: 1, message: format!("dependence: {e}") })?;
        }
        Ok(())
    }

    /// Parses and validates configuration text; relative data paths are
    /// resolved against `base`.
    pub fn from_str_in(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(1, |s| line_of(text, s)),
            message: e.message().to_string(),
        })?;
        cfg.source = text.to_string();
        if let Some(d) = &mut cfg.data {
            if d.losses.is_relative() {
                d.losses = base.join(&d.losses);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let cfg = RunConfig::from_str_in(&text, base)?;
    if let Some(d) = &cfg.data {
        if !d.losses.exists() {
            return Err(Error::Config { line: 0, message: format!("loss file {} does not exist", d.losses.display()) });
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "aggregate"
seed = 7

[[cells]]
label = "retail"
frequency = { family = "poisson", lambda = 10.0 }
severity = { family = "lognormal", mu = 1.0, sigma = 2.0 }
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_str_in(text, Path::new("/tmp"))
    }

    #[test]
    fn minimal_config() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.command, Command::Aggregate);
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.solver, SolverSpec::default());
        let cells = cfg.risk_cells().unwrap();
        assert_eq!(cells[0].frequency.mean(), 10.0);
    }

    #[test]
    fn negative_intensity_has_line() {
        let text = MINIMAL.replace("lambda = 10.0", "lambda = -1.0");
        match parse(&text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("intensity"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_seed_rejected() {
        let text = MINIMAL.replace("seed = 7\n", "");
        match parse(&text) {
            Err(Error::Config { message, .. }) => assert!(message.contains("seed"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("sigma = 2.0", "sigma = 2.0, sigmaa = 1.0");
        assert!(matches!(parse(&text), Err(Error::Config { line: 8, .. })));
        let text = format!("{MINIMAL}\n[solver]\nmethd = \"fft\"\n");
        assert!(matches!(parse(&text), Err(Error::Config { line: 11, .. })), "{:?}", parse(&text));
    }

    #[test]
    fn sections_required_by_command() {
        let text = MINIMAL.replace("\"aggregate\"", "\"bias-study\"");
        assert!(matches!(parse(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn dependence_section() {
        let text = format!("{MINIMAL}\n[dependence]\nkind = \"frequency-copula\"\ncorrelation = [[1.0]]\n");
        assert!(parse(&text).is_ok());
        let text =
            format!("{MINIMAL}\n[dependence]\nkind = \"frequency-copula\"\ncorrelation = [[1.0, 2.0], [2.0, 1.0]]\n");
        assert!(parse(&text).is_err());
    }
}
