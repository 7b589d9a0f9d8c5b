//! Bayesian inference for intensities and severity parameters.

mod approx;
mod conjugate;
mod experts;
mod mcmc;

pub use approx::{gaussian_posterior_approx, min_variance_combine, Combined, GaussianApprox};
pub use conjugate::{
    elicit_gamma_prior, empirical_bayes_gamma, poisson_gamma_posterior, CellCounts, CredibilityReport, GammaPrior,
};
pub use experts::{credibility_trajectory, three_source_posterior, CredibilityPoint, ExpertOpinions, GigPosterior};
pub use mcmc::{
    adjust_scale, batch_means_se, rw_mh_gibbs, rw_mh_gibbs_chains, truncated_normal_ln_pdf, truncated_normal_sample,
    tune_proposals, McmcSettings, ParamChain, Tuning, ACCEPTANCE_BAND, TARGET_ACCEPTANCE,
};
