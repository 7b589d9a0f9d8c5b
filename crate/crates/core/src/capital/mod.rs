//! Capital charges: regulatory formulas, capital at fixed parameters, the
//! full predictive distribution under parameter uncertainty and the
//! parameter-uncertainty bias study.

mod conditional;
mod predictive;
mod regulatory;
mod uncertainty;

pub use crate::dist::apply_aggregate_cover;
pub use conditional::{
    conditional_capital, CapitalFigure, CapitalLine, CapitalReport, CapitalRow, CapitalSettings, DependenceSpec,
    InsuranceEffect, INSURANCE_CAP,
};
pub use predictive::{
    predictive_capital, ChainSampler, FlatPriorPoissonLognormal, GaussianSampler, ParameterSampler, PointMass,
    PredictiveCapital, PredictiveSettings,
};
pub use regulatory::{bia_charge, tsa_charge, BIA_ALPHA};
pub use uncertainty::{
    parameter_uncertainty_bias, poisson_lognormal_quantile, write_uncertainty_csv, UncertaintyPoint,
    UncertaintySettings, UncertaintyStudy,
};
