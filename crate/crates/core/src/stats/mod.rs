//! Posterior inference for the binomial regressions, plus the logistic MLE
//! used when fitting ownership models.

mod logistic;
mod mcmc;
mod models;
mod summary;

pub use logistic::{logistic_fit, LogisticFit};
pub use mcmc::{metropolis_sample, Chain, SamplerSettings, Samples};
pub use models::*;
pub use summary::{hpdi, rhat, PosteriorSummary};
