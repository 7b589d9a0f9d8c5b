use oprisk::aggregate::{compound_quantiles, McSettings, Method};
use oprisk::cli::{
    parse_config, read_rows, run, write_rows, AggregateRow, CredibilityRow, DensityRow, FitRow, RunConfig,
};
use oprisk::rng::{derive_seed, module};
use std::path::{Path, PathBuf};
use std::process::Command;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn oprisk(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_oprisk")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

const AGGREGATE: &str = r#"
command = "aggregate"
seed = 17

[solver]
method = "mc"
samples = 20000
quantiles = [0.9, 0.99]

[[cells]]
label = "a"
frequency = { family = "poisson", lambda = 3.0 }
severity = { family = "lognormal", mu = 0.0, sigma = 1.0 }
"#;

const DEPENDENCE: &str = r#"
command = "dependence-study"
seed = 4

[study]
constructions = ["frequency-copula", "profile-both"]
params = [0.0, 0.5, 1.0]
years = 20000
batches = 20
"#;

const BIAS: &str = r#"
command = "bias-study"
seed = 2

[bias]
lambda = 10.0
mu = 1.0
sigma = 2.0
years = [5, 20]
replications = 10
samples = 20000
points = 4096
"#;

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn aggregate_run_matches_library_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", AGGREGATE);
    let (code, stdout, _) = oprisk(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("aggregate.csv"));

    let text = std::fs::read(dir.path().join("aggregate.csv")).unwrap();
    let rows: Vec<AggregateRow> = read_rows(text.as_slice()).unwrap();
    let parsed = parse_config(&cfg).unwrap();
    let cell = &parsed.risk_cells().unwrap()[0];
    let mc = McSettings { samples: 20_000, seed: derive_seed(17, module::COMPOUND, 0), gamma: 0.95 };
    let direct = compound_quantiles(cell, Method::MonteCarlo, &[0.9, 0.99], &parsed.solver.grid(), &mc).unwrap();
    for (row, est) in rows.iter().zip(&direct.quantiles) {
        assert_eq!((row.q, row.estimate, row.lo, row.hi), (est.q, est.point, est.lower, est.upper));
    }
    let mut again = Vec::new();
    write_rows(&rows, &mut again).unwrap();
    assert_eq!(again, text);

    let samples = std::fs::read(dir.path().join("a_samples.csv")).unwrap();
    let back: Vec<DensityRow> = read_rows(samples.as_slice()).unwrap();
    assert_eq!(back.len(), 20_000);
    let mut again = Vec::new();
    write_rows(&back, &mut again).unwrap();
    assert_eq!(again, samples);
}

#[test]
fn same_seed_is_byte_identical_across_thread_counts() {
    for (name, text, artifact) in
        [("dep.toml", DEPENDENCE, "dependence_study.csv"), ("bias.toml", BIAS, "bias_study.csv")]
    {
        let dir = TempDir::new().unwrap();
        let cfg = write(dir.path(), name, text);
        let outputs: Vec<Vec<u8>> = ["1", "3", "3"]
            .iter()
            .enumerate()
            .map(|(i, threads)| {
                let out = dir.path().join(format!("out{i}"));
                let (code, _, err) =
                    oprisk(&["--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()]);
                assert_eq!(code, 0, "{err}");
                std::fs::read(out.join(artifact)).unwrap()
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{name}");
        assert_eq!(outputs[1], outputs[2], "{name}");
    }
}

#[test]
fn bias_study_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bias.toml", BIAS);
    assert_eq!(oprisk(&["--config", cfg.to_str().unwrap()]).0, 0);
    let text = std::fs::read_to_string(dir.path().join("bias_study.csv")).unwrap();
    assert!(text.starts_with("T,mean_bias,std_error\n5,"), "{text}");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn seed_override_changes_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", AGGREGATE);
    let run_with = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        assert_eq!(oprisk(&["--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]).0, 0);
        std::fs::read(out.join("aggregate.csv")).unwrap()
    };
    assert_eq!(run_with("17", "x"), std::fs::read(dir.path().join("x/aggregate.csv")).unwrap());
    assert_ne!(run_with("17", "y"), run_with("18", "z"));
}

#[test]
fn fit_and_combine_outputs_reparse() {
    let dir = TempDir::new().unwrap();
    let mut losses = String::from("period,cell,amount\n");
    for year in 0..12 {
        for k in 0..(8 + year % 3) {
            let u = (k as f64 + 0.5) / (8 + year % 3) as f64;
            losses.push_str(&format!("{year},retail,{}\n", (1.0 + 1.5 * (u - 0.5) * 3.0).exp()));
        }
    }
    write(dir.path(), "losses.csv", &losses);
    let fit = write(
        dir.path(),
        "fit.toml",
        "command = \"fit\"\nseed = 1\n[data]\nlosses = \"losses.csv\"\nthreshold = 0.5\nbootstrap = 20\n",
    );
    let (code, _, err) = oprisk(&["--config", fit.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read(dir.path().join("fit.csv")).unwrap();
    let rows: Vec<FitRow> = read_rows(text.as_slice()).unwrap();
    assert_eq!(rows.iter().map(|r| r.parameter.as_str()).collect::<Vec<_>>(), ["lambda", "mu", "sigma"]);
    let mut again = Vec::new();
    write_rows(&rows, &mut again).unwrap();
    assert_eq!(again, text);

    let combine = write(
        dir.path(),
        "combine.toml",
        "command = \"combine\"\nseed = 1\n[combine]\nprior = [3.407, 0.147]\ncounts = [0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 2, 1, 1, 2, 0]\nexperts = { opinions = [0.7], xi = 4.0 }\n",
    );
    assert_eq!(oprisk(&["--config", combine.to_str().unwrap()]).0, 0);
    let rows: Vec<CredibilityRow> =
        read_rows(std::fs::File::open(dir.path().join("credibility.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 15);
    assert!((rows[14].two_source - 0.615).abs() < 1e-3);
}

#[test]
fn capital_writes_csv_and_text() {
    let dir = TempDir::new().unwrap();
    let mut cfg: RunConfig = parse_config(&configs().join("capital.toml")).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.artifacts.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("capital.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("joint-frequency-copula,")), "{csv}");
    assert_eq!(std::fs::read_to_string(dir.path().join("capital.txt")).unwrap(), outcome.summary);
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = TempDir::new().unwrap();
    let no_seed = write(dir.path(), "a.toml", &AGGREGATE.replace("seed = 17\n", ""));
    let (code, _, err) = oprisk(&["--config", no_seed.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let bad_key = write(dir.path(), "b.toml", &AGGREGATE.replace("samples", "smaples"));
    let (code, _, err) = oprisk(&["--config", bad_key.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 7"), "{err}");

    write(dir.path(), "bad.csv", "period,cell,amount\n1,a,2.0\n2,a,many\n");
    let data = write(dir.path(), "c.toml", "command = \"fit\"\nseed = 1\n[data]\nlosses = \"bad.csv\"\n");
    let (code, _, err) = oprisk(&["--config", data.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("line 3"), "{err}");

    let heavy = AGGREGATE
        .replace("method = \"mc\"", "method = \"normal\"")
        .replace("{ family = \"lognormal\", mu = 0.0, sigma = 1.0 }", "{ family = \"gpd\", xi = 0.6, beta = 1.0 }");
    let numerics = write(dir.path(), "d.toml", &heavy);
    assert_eq!(oprisk(&["--config", numerics.to_str().unwrap()]).0, 4);

    let infeasible = write(
        dir.path(),
        "e.toml",
        "command = \"combine\"\nseed = 1\n[combine]\ncounts = [1, 2]\nelicit = { mean = 1.0, lower = 0.999, upper = 1.001, coverage = 0.999999 }\n",
    );
    assert_eq!(oprisk(&["--config", infeasible.to_str().unwrap()]).0, 5);
}
