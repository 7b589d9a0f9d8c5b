use super::config::{parse_config, Command, RunConfig};
use super::ingest::{ingest_losses, write_rows};
use crate::aggregate::compound_quantiles;
use crate::bayes::{
    credibility_trajectory, elicit_gamma_prior, poisson_gamma_posterior, three_source_posterior, ExpertOpinions,
    GammaPrior,
};
use crate::capital::{
    conditional_capital, parameter_uncertainty_bias, write_uncertainty_csv, CapitalSettings, DependenceSpec,
    UncertaintySettings,
};
use crate::dependence::{dependence_study, write_study_csv, StudySettings};
use crate::error::{Error, Result};
use crate::fit::{bootstrap, fit_truncated_mle, ks_statistic, LossRecord, SeverityFamily};
use crate::rng::{derive_seed, module};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub cell: String,
    pub family: SeverityFamily,
    pub threshold: f64,
    pub parameter: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub bootstrap_lower: Option<f64>,
    pub bootstrap_upper: Option<f64>,
    pub log_likelihood: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub cell: String,
    pub method: String,
    pub q: f64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub gamma: f64,
    pub samples: usize,
}

/// Lattice mass `(x_j, h_j)` or simulated loss `(index, value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub grid_point_or_sample: f64,
    pub mass_or_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityRow {
    pub year: usize,
    pub mle: f64,
    pub two_source: f64,
    pub three_source: f64,
}

/// Files written and a short human-readable summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(path)?)))
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn fit_cell(
    cell: &str,
    record: &LossRecord,
    family: SeverityFamily,
    replicates: usize,
    seed: u64,
) -> Result<Vec<FitRow>> {
    let fit = fit_truncated_mle(record, family)?;
    let model = fit.severity_model()?;
    let l = record.threshold();
    let amounts: Vec<f64> = record.amounts().collect();
    let ks = match family {
        SeverityFamily::Gpd => ks_statistic(&amounts.iter().map(|x| x - l).collect::<Vec<_>>(), &model),
        _ if l > 0.0 => ks_statistic(&amounts, &model.truncate_left(l)?),
        _ => ks_statistic(&amounts, &model),
    };
    let boot = (replicates > 0).then(|| {
        bootstrap(
            record.periods(),
            |p| Ok(fit_truncated_mle(&LossRecord::new(l, p.to_vec())?, family)?.estimates()),
            replicates,
            seed,
        )
    });
    let std_errors = fit.std_errors();
    Ok(fit
        .parameter_names()
        .into_iter()
        .zip(fit.estimates())
        .enumerate()
        .map(|(i, (name, estimate))| {
            let interval = boot.as_ref().and_then(|b| b.percentile_interval(i, 0.95));
            FitRow {
                cell: cell.to_string(),
                family,
                threshold: l,
                parameter: name.to_string(),
                estimate,
                std_error: std_errors[i],
                bootstrap_lower: interval.map(|v| v.0),
                bootstrap_upper: interval.map(|v| v.1),
                log_likelihood: fit.log_likelihood,
                ks,
            }
        })
        .collect())
}

fn run_fit(cfg: &RunConfig) -> Result<RunOutcome> {
    let data =
        cfg.data.as_ref().ok_or_else(|| Error::Config { line: 1, message: "fit needs a [data] section".into() })?;
    let ingested = ingest_losses(&data.losses, data.threshold)?;
    let mut rows = Vec::new();
    for (j, (cell, record)) in ingested.records.iter().enumerate() {
        rows.extend(fit_cell(
            cell,
            record,
            data.family,
            data.bootstrap,
            derive_seed(cfg.seed(), module::FIT, j as u64),
        )?);
    }
    let (path, out) = create(&cfg.output_dir, "fit.csv")?;
    write_rows(&rows, out)?;
    let mut summary = format!(
        "fitted {} cells; {} rows below threshold rejected\n",
        ingested.records.len(),
        ingested.rejected_total()
    );
    for r in &rows {
        summary.push_str(&format!("  {} {} = {:.6}\n", r.cell, r.parameter, r.estimate));
    }
    Ok(RunOutcome { artifacts: vec![path], summary })
}

fn run_aggregate(cfg: &RunConfig) -> Result<RunOutcome> {
    let cells = cfg.risk_cells()?;
    let s = &cfg.solver;
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for (j, cell) in cells.iter().enumerate() {
        let mc = s.mc(derive_seed(cfg.seed(), module::COMPOUND, j as u64));
        let r = compound_quantiles(cell, s.method.method(), &s.quantiles, &s.grid(), &mc)?;
        let detail: Vec<DensityRow> = match (&r.density, &r.samples) {
            (Some(d), _) => d
                .masses()
                .iter()
                .enumerate()
                .map(|(i, &m)| DensityRow { grid_point_or_sample: i as f64 * d.step(), mass_or_value: m })
                .collect(),
            (None, Some(xs)) => xs
                .iter()
                .enumerate()
                .map(|(i, &x)| DensityRow { grid_point_or_sample: i as f64, mass_or_value: x })
                .collect(),
            (None, None) => Vec::new(),
        };
        if !detail.is_empty() {
            let kind = if r.density.is_some() { "density" } else { "samples" };
            let (path, out) = create(&cfg.output_dir, &format!("{}_{kind}.csv", file_stem(&cell.label)))?;
            write_rows(&detail, out)?;
            artifacts.push(path);
        }
        rows.extend(r.quantiles.iter().map(|e| AggregateRow {
            cell: cell.label.clone(),
            method: r.method.tag().to_string(),
            q: e.q,
            estimate: e.point,
            lo: e.lower,
            hi: e.upper,
            gamma: e.gamma,
            samples: e.k,
        }));
    }
    let (path, out) = create(&cfg.output_dir, "aggregate.csv")?;
    write_rows(&rows, out)?;
    artifacts.insert(0, path);
    let summary = rows.iter().map(|r| format!("{} q={} {}: {:.4}\n", r.cell, r.q, r.method, r.estimate)).collect();
    Ok(RunOutcome { artifacts, summary })
}

fn run_capital(cfg: &RunConfig) -> Result<RunOutcome> {
    let cells = cfg.risk_cells()?;
    let s = &cfg.solver;
    let dependence = cfg.dependence.as_ref().map_or(Ok(DependenceSpec::Perfect), |d| d.build())?;
    let settings = CapitalSettings {
        q: *s.quantiles.first().unwrap_or(&0.999),
        method: s.method.method(),
        grid: s.grid(),
        mc: s.mc(cfg.seed()),
        subtract_expected_loss: s.subtract_expected_loss,
    };
    let report = conditional_capital(&cells, &dependence, &settings)?;
    let (csv_path, out) = create(&cfg.output_dir, "capital.csv")?;
    report.write_csv(out)?;
    let summary = report.to_string();
    let (txt_path, mut out) = create(&cfg.output_dir, "capital.txt")?;
    std::io::Write::write_all(&mut out, summary.as_bytes())?;
    Ok(RunOutcome { artifacts: vec![csv_path, txt_path], summary })
}

fn run_dependence_study(cfg: &RunConfig) -> Result<RunOutcome> {
    let study = cfg.study.as_ref().ok_or_else(|| Error::Config { line: 1, message: "missing [study]".into() })?;
    let settings = StudySettings { years: study.years, batches: study.batches, seed: cfg.seed() };
    let mut rows = Vec::new();
    for &c in &study.constructions {
        rows.extend(dependence_study(c, &study.params, &settings)?);
    }
    let (path, out) = create(&cfg.output_dir, "dependence_study.csv")?;
    write_study_csv(&rows, out)?;
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{} rho={}: rho_S={:.4} (se {:.4})\n",
                r.construction, r.copula_param, r.rho_s_estimate, r.mc_std_error
            )
        })
        .collect();
    Ok(RunOutcome { artifacts: vec![path], summary })
}

fn run_bias_study(cfg: &RunConfig) -> Result<RunOutcome> {
    let b = cfg.bias.as_ref().ok_or_else(|| Error::Config { line: 1, message: "missing [bias]".into() })?;
    let settings = UncertaintySettings {
        lambda: b.lambda,
        mu: b.mu,
        sigma: b.sigma,
        years: b.years.clone(),
        replications: b.replications,
        samples: b.samples,
        q: b.q,
        points: b.points,
        seed: cfg.seed(),
    };
    let study = parameter_uncertainty_bias(&settings)?;
    let (path, out) = create(&cfg.output_dir, "bias_study.csv")?;
    write_uncertainty_csv(&study.points, out)?;
    let mut summary = format!("quantile at true parameters: {:.4}\n", study.true_quantile);
    for p in &study.points {
        summary.push_str(&format!("T={}: relative bias {:.4} (se {:.4})\n", p.years, p.mean_bias, p.std_error));
    }
    Ok(RunOutcome { artifacts: vec![path], summary })
}

fn run_combine(cfg: &RunConfig) -> Result<RunOutcome> {
    let c = cfg.combine.as_ref().ok_or_else(|| Error::Config { line: 1, message: "missing [combine]".into() })?;
    let prior = match (c.prior, c.elicit) {
        (Some([shape, scale]), None) => GammaPrior::new(shape, scale)?,
        (None, Some(e)) => elicit_gamma_prior(e.mean, e.lower, e.upper, e.coverage)?,
        _ => {
            return Err(Error::Config {
                line: 1,
                message: "[combine] needs exactly one of `prior` and `elicit`".into(),
            })
        }
    };
    let experts = match &c.experts {
        Some(e) => ExpertOpinions::new(e.opinions.clone(), e.xi)?,
        None => ExpertOpinions::none(),
    };
    let rows: Vec<CredibilityRow> = credibility_trajectory(prior, &c.counts, &experts)?
        .into_iter()
        .map(|p| CredibilityRow { year: p.year, mle: p.mle, two_source: p.two_source, three_source: p.three_source })
        .collect();
    let (path, out) = create(&cfg.output_dir, "credibility.csv")?;
    write_rows(&rows, out)?;
    let (post, report) = poisson_gamma_posterior(prior, &c.counts);
    let gig = three_source_posterior(prior, &c.counts, &experts)?;
    let summary = format!(
        "prior Gamma({:.6}, {:.6}); posterior Gamma({:.6}, {:.6}), mean {:.6}, credibility weight {:.4}; with experts mean {:.6}\n",
        prior.shape(),
        prior.scale(),
        post.shape(),
        post.scale(),
        post.mean(),
        report.weight,
        gig.mean()?
    );
    Ok(RunOutcome { artifacts: vec![path], summary })
}

/// Executes the configured command, writing its CSV artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    match cfg.command {
        Command::Fit => run_fit(cfg),
        Command::Aggregate => run_aggregate(cfg),
        Command::Capital => run_capital(cfg),
        Command::DependenceStudy => run_dependence_study(cfg),
        Command::BiasStudy => run_bias_study(cfg),
        Command::Combine => run_combine(cfg),
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Parses `config_path`, applies overrides, runs, and returns the process
/// exit code.
pub fn execute(config_path: &Path, overrides: &Overrides) -> i32 {
    let outcome = (|| -> Result<RunOutcome> {
        let mut cfg = parse_config(config_path)?;
        if let Some(seed) = overrides.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &overrides.out {
            cfg.output_dir = out.clone();
        }
        match overrides.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config { line: 0, message: format!("cannot build a pool of {n} threads: {e}") })?
                .install(|| run(&cfg)),
            None => run(&cfg),
        }
    })();
    match outcome {
        Ok(o) => {
            print!("{}", o.summary);
            for a in &o.artifacts {
                println!("wrote {}", a.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.category().exit_code()
        }
    }
}
