//! Dependence between risk cells: copulas, common factors, common shocks and
//! stochastic risk profiles, plus rank-correlation measurement.

mod copula;
mod rank;
mod simulate;
mod study;

pub use copula::{sample_gaussian_copula, Copula, GaussianCopula, EIGEN_FLOOR, REPAIR_TOLERANCE};
pub use rank::{average_ranks, spearman_rho, spearman_with_error, RankCorrelation};
pub(crate) use simulate::{common_factor_year, freq_copula_year};
pub use simulate::{
    simulate_common_factor, simulate_common_shock, simulate_freq_copula, simulate_interarrival_copula,
    simulate_stochastic_profiles, CellProfile, CommonShock, FactorLoadings, ProfileLaw, ProfilePriorSpec,
    SimulatedYears,
};
pub use study::{
    dependence_study, diversification_check, reference_cells, reference_profiles, simulate_construction,
    write_study_csv, Construction, Diversification, StudyRow, StudySettings,
};
