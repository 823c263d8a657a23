//! Bayes and minimax point estimation of multinomial parameters under the
//! Bhattacharyya losses 1 − B and 1 − B².
//!
//! | Loss    | Bayes estimator                                                  |
//! |---------|------------------------------------------------------------------|
//! | 1 − B   | E[√p] normalized to unit length, squared element-wise            |
//! | 1 − B²  | top eigenvector of E[√(p_i p_j)], squared element-wise           |
//!
//! Both need only two posterior moments ([`PosteriorMoments`]), which are
//! closed-form for Dirichlet posteriors and weighted sums for particle
//! posteriors. On top of that sit exact binomial risk evaluation
//! ([`risk`]) and the minimax searches ([`minimax`]): a scan over conjugate
//! Beta(β, β) priors and Kempthorne's least-favorable-prior algorithm.
//!
//! ```
//! use bhatt_core::{bayes_b2, posterior_update, PosteriorMoments};
//!
//! // Jeffreys prior, 3 heads in 10 flips
//! let post = posterior_update(0.5, 10, 3).unwrap();
//! let est = bayes_b2(&post).unwrap();
//! assert!(est[0] < post.posterior_mean()[0]);
//! ```
//!
//! Grid sweeps, β scans and optimizer restarts run on rayon when the
//! `parallel` feature (default) is enabled; see [`Exec`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
mod error;
pub mod estimators;
pub mod exec;
pub mod minimax;
pub mod optimize;
pub mod posterior;
pub mod risk;
pub mod simplex;
pub mod special;

pub use eigen::{top_eigenpair, TopEigenpair};
pub use error::{Error, Result};
pub use estimators::{bayes_b1, bayes_b2, bayes_estimate, estimator_table, mle, EstimatorKind, EstimatorTable};
pub use exec::Exec;
pub use minimax::{
    bayes_estimator_for_discrete_prior, beta_scan, default_initial_prior, kempthorne, BetaScan, BetaScanConfig,
    EstimatorFamily, KempthorneConfig, KempthorneResult,
};
pub use posterior::{
    posterior_update, DirichletPosterior, MomentMatrix, ParticlePosterior, Posterior, PosteriorMoments,
};
pub use risk::{
    bayes_risk, max_risk, max_risk_with, pointwise_risk, posterior_risk, relative_suboptimality, risk_curve,
    DiscretePrior, MaxRisk, MaxRiskConfig, Prior, RiskReport,
};
pub use simplex::{bhattacharyya, loss, LossKind, ProbVector};

/// Version string recorded in CLI output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
