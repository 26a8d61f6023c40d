//! Hierarchical sampling, forward Monte Carlo and Bayesian inversion.

pub mod bayes;
pub mod diagnostics;
pub mod forward;
pub mod mcmc;
pub mod prior;
pub mod samplers;

pub use bayes::{
    evidence_from_draws, gaussian_logpdf_reduced, importance_evidence, importance_evidence_with, potential, BayesProblem,
    EvidenceEstimate, ForwardMap, WeightedDraw, LOGPDF_REL_CLIP,
};
pub use diagnostics::{chain_diagnostics, coefficient_of_variation, spread, ChainDiagnostics, Spread};
pub use forward::{mc_forward, ForwardOutcome, ForwardSample, ForwardSummary, Welford};
pub use mcmc::{
    mcmc_gibbs, mcmc_gibbs_with, reflect, run_chains, write_chain_csv, Chain, ChainConfig, ChainRecord, ChainState,
    ChainSummary,
};
pub use prior::{HyperPrior, Preset};
pub use samplers::{full_sample, rb_sample, ConstantField, Decomp, FullSampler, PriorModel, RbSampler};
