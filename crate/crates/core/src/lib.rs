//! Dynamic proportional reversed hazards (DPRH) models for paired
//! lifetimes: joint law, censored likelihood, maximum likelihood and
//! Bayesian estimation, data generation and simulation studies.

pub mod baselines;
pub mod bayes;
pub mod data;
pub mod error;
pub mod likelihood;
pub mod mle;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod roots;
pub mod sampling;
pub mod special;
pub mod studies;
pub mod twin;

pub use baselines::{Baseline, BaselineFamily};
pub use data::CensoredPair;
pub use error::{DprhError, Result};
pub use likelihood::{IndexSet, Sample};
pub use model::{Component, DprhParams, ParamCase};
