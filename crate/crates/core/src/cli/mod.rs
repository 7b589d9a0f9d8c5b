//! Configuration-driven command-line driver: TOML run configs, loss-file
//! ingestion and CSV artifacts.

mod config;
mod ingest;
mod run;

pub use config::{
    parse_config, BiasSpec, CellSpec, CombineSpec, Command, DataSpec, DependenceConfig, ElicitationSpec, ExpertSpec,
    FrequencySpec, InsuranceSpec, MethodName, RunConfig, SeveritySpec, SolverSpec, StudySpec,
};
pub use ingest::{ingest_losses, ingest_rows, read_rows, record_rows, write_rows, Ingested, LossRow};
pub use run::{execute, run, AggregateRow, CredibilityRow, DensityRow, FitRow, Overrides, RunOutcome};
