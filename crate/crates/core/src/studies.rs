//! Monte Carlo studies of estimator bias, MSE and interval coverage.
//!
//! Each replicate draws a censored sample from the true model, estimates the
//! free parameters and records whether the interval covers the truth.
//! Replicate `k` uses seeds derived from `(seed, k)`, so any replicate can be
//! rerun on its own and results do not depend on thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{credible_interval, mh_sample, posterior_mode, MhOptions, PriorSpec};
use crate::error::{DprhError, Result};
use crate::likelihood::Sample;
use crate::mle::{fit_mle, FitOptions, ModelSpec, ThetaPrimeSpec, ThetaSpec};
use crate::model::DprhParams;
use crate::sampling::{generate_sample, CensoringScheme, ConditionalDraw};
use crate::special::{derive_seed, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// MLE with `θ1, θ2` held at their true values.
    MleThetaKnown,
    Mle,
    /// Posterior mode under Gamma priors centred at the replicate's MLE.
    BayesGamma,
    /// Posterior mode under Normal priors centred at the replicate's MLE.
    BayesNormal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub true_params: DprhParams,
    pub n: usize,
    /// Target censored fraction of each coordinate.
    #[serde(default = "default_p")]
    pub p: f64,
    pub r: usize,
    pub estimator: Estimator,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Estimate a common `θ` when the true `θ1 = θ2`.
    #[serde(default = "default_true")]
    pub tie_theta: bool,
    /// Data generator. Defaults to the additive conditional draw, the
    /// conventional generator for this study design; use `exact` to simulate
    /// from the model itself.
    #[serde(default = "default_sampler")]
    pub sampler: ConditionalDraw,
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Variance of the Gamma priors.
    #[serde(default = "default_prior_variance")]
    pub prior_variance: f64,
    /// Standard deviation of the Normal priors.
    #[serde(default = "default_prior_sd")]
    pub prior_sd: f64,
    #[serde(default)]
    pub mh: MhOptions,
}

fn default_p() -> f64 {
    0.10
}
fn default_alpha() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_sampler() -> ConditionalDraw {
    ConditionalDraw::Additive
}
fn default_starts() -> usize {
    5
}
fn default_prior_variance() -> f64 {
    1.2
}
fn default_prior_sd() -> f64 {
    0.1
}

impl StudyConfig {
    pub fn new(true_params: DprhParams, n: usize, r: usize, estimator: Estimator) -> Self {
        StudyConfig {
            true_params,
            n,
            p: default_p(),
            r,
            estimator,
            seed: 0,
            alpha: default_alpha(),
            tie_theta: true,
            sampler: default_sampler(),
            starts: default_starts(),
            prior_variance: default_prior_variance(),
            prior_sd: default_prior_sd(),
            mh: MhOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(DprhError::invalid("r", format!("need at least 2 replicates, got {}", self.r)));
        }
        if self.n < 5 {
            return Err(DprhError::invalid("n", format!("need at least 5 pairs, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(DprhError::invalid("p", format!("must lie in [0, 1), got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DprhError::invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Free-parameter layout implied by the estimator.
    pub fn model_spec(&self) -> ModelSpec {
        let t = &self.true_params;
        let theta = match self.estimator {
            Estimator::MleThetaKnown => ThetaSpec::Fixed {
                theta1: t.theta1,
                theta2: t.theta2,
            },
            _ if self.tie_theta && t.theta1 == t.theta2 => ThetaSpec::Tied,
            _ => ThetaSpec::Free,
        };
        ModelSpec::full(t.baseline.family())
            .with_theta(theta)
            .with_theta_prime(ThetaPrimeSpec::Free)
    }
}

/// Estimates from one replicate, with an interval per parameter when available.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateEstimate {
    pub estimates: Vec<f64>,
    pub intervals: Option<Vec<(f64, f64)>>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub names: Vec<String>,
    pub truth: Vec<f64>,
    pub n: usize,
    pub p: f64,
    pub r: usize,
    pub estimator: Estimator,
    pub seed: u64,
    pub effective: usize,
    pub failures: usize,
    pub non_converged: usize,
    /// More than 10% of replicates failed.
    pub unreliable: bool,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    pub mse: Vec<f64>,
    pub variance: Vec<f64>,
    /// Fraction of intervals covering the truth, over replicates that produced one.
    pub coverage: Vec<Option<f64>>,
    pub coverage_count: usize,
    pub failure_messages: Vec<String>,
}

impl StudyReport {
    /// Rows `Estimates`, `Bias`, `MSE` and `Cov. Probability` with one column
    /// per parameter.
    pub fn table(&self) -> String {
        let mut s = format!(
            "n = {}, p = {}, r = {} ({} used), estimator = {:?}\n",
            self.n, self.p, self.r, self.effective, self.estimator
        );
        s.push_str(&format!("{:<18}", ""));
        for name in &self.names {
            s.push_str(&format!("{name:>14}"));
        }
        s.push('\n');
        let mut row = |label: &str, vals: Vec<String>| {
            s.push_str(&format!("{label:<18}"));
            for v in vals {
                s.push_str(&format!("{v:>14}"));
            }
            s.push('\n');
        };
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>();
        row("True value", fmt(&self.truth));
        row("Estimates", fmt(&self.mean));
        row("Bias", fmt(&self.bias));
        row("MSE", fmt(&self.mse));
        row(
            "Cov. Probability",
            self.coverage
                .iter()
                .map(|c| c.map_or("-".into(), |v| format!("{v:.4}")))
                .collect(),
        );
        if self.unreliable {
            s.push_str(&format!("warning: {} of {} replicates failed\n", self.failures, self.r));
        }
        s
    }
}

/// Estimate one replicate with the configured estimator.
pub fn estimate_replicate(cfg: &StudyConfig, sample: &Sample, seed: u64) -> Result<ReplicateEstimate> {
    let spec = cfg.model_spec();
    let truth_start = cfg.true_params;
    let bayes = matches!(cfg.estimator, Estimator::BayesGamma | Estimator::BayesNormal);
    let opts = FitOptions {
        starts: cfg.starts,
        seed,
        alpha: cfg.alpha,
        dispersion: !bayes,
        ..Default::default()
    };
    // start at a data-driven point so the truth does not leak into the fit
    let fit = fit_mle(sample, &spec, None, &opts).or_else(|_| fit_mle(sample, &spec, Some(&truth_start), &opts))?;
    if !bayes {
        let intervals = fit.ci.clone().ok_or_else(|| {
            DprhError::Numerical(format!("no confidence intervals: {}", fit.warnings.join("; ")))
        })?;
        return Ok(ReplicateEstimate {
            estimates: fit.estimates,
            intervals: Some(intervals),
            converged: fit.converged,
        });
    }
    let prior = match cfg.estimator {
        Estimator::BayesGamma => PriorSpec::gamma_centered(&fit.estimates, cfg.prior_variance)?,
        _ => PriorSpec::normal_centered(&fit.estimates, cfg.prior_sd)?,
    };
    let chain = mh_sample(sample, &spec, &prior, &fit.estimates, derive_seed(seed, 1), &cfg.mh)?;
    let mode = posterior_mode(&chain)?;
    let intervals = (0..mode.len())
        .map(|i| credible_interval(&chain, i, cfg.alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateEstimate {
        estimates: mode,
        intervals: Some(intervals),
        converged: fit.converged,
    })
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study_with(cfg, |sample, seed| estimate_replicate(cfg, sample, seed))
}

/// Run a study with a caller-supplied estimator. It receives the replicate's
/// sample and a seed for its own randomness.
pub fn run_study_with<F>(cfg: &StudyConfig, estimator: F) -> Result<StudyReport>
where
    F: Fn(&Sample, u64) -> Result<ReplicateEstimate> + Sync,
{
    cfg.validate()?;
    let spec = cfg.model_spec();
    let truth = spec.extract(&cfg.true_params);
    let k = truth.len();
    let scheme = if cfg.p > 0.0 {
        CensoringScheme::solve(&cfg.true_params, cfg.p)?
    } else {
        CensoringScheme::none()
    };
    let outcomes: Vec<Result<ReplicateEstimate>> = (0..cfg.r)
        .into_par_iter()
        .map(|rep| {
            let data_seed = derive_seed(cfg.seed, 2 * rep as u64);
            let pairs = generate_sample(&cfg.true_params, cfg.n, &scheme, data_seed, cfg.sampler)?;
            let sample = Sample::new(pairs)?;
            let est = estimator(&sample, derive_seed(cfg.seed, 2 * rep as u64 + 1))?;
            if est.estimates.len() != k || est.estimates.iter().any(|v| !v.is_finite()) {
                return Err(DprhError::Numerical(format!(
                    "estimator returned {:?}; expected {k} finite values",
                    est.estimates
                )));
            }
            Ok(est)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failure_messages = Vec::new();
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(e) => ok.push(e),
            Err(e) => failure_messages.push(format!("replicate {rep}: {e}")),
        }
    }
    let failures = failure_messages.len();
    let effective = ok.len();
    if effective == 0 {
        return Err(DprhError::Convergence(format!(
            "all {} replicates failed; first: {}",
            cfg.r, failure_messages[0]
        )));
    }
    let m = effective as f64;
    let col = |i: usize| ok.iter().map(|e| e.estimates[i]).collect::<Vec<f64>>();
    let mut mean = Vec::with_capacity(k);
    let mut bias = Vec::with_capacity(k);
    let mut mse = Vec::with_capacity(k);
    let mut variance = Vec::with_capacity(k);
    for i in 0..k {
        let xs = col(i);
        let mu = pairwise_sum(&xs) / m;
        let dev: Vec<f64> = xs.iter().map(|x| x - truth[i]).collect();
        let sq: Vec<f64> = dev.iter().map(|d| d * d).collect();
        let centred: Vec<f64> = xs.iter().map(|x| (x - mu).powi(2)).collect();
        mean.push(mu);
        bias.push(pairwise_sum(&dev) / m);
        mse.push(pairwise_sum(&sq) / m);
        variance.push(pairwise_sum(&centred) / m);
    }
    let with_ci: Vec<&Vec<(f64, f64)>> = ok.iter().filter_map(|e| e.intervals.as_ref()).collect();
    let coverage = (0..k)
        .map(|i| {
            if with_ci.is_empty() {
                None
            } else {
                let hit = with_ci
                    .iter()
                    .filter(|ci| ci[i].0 <= truth[i] && truth[i] <= ci[i].1)
                    .count();
                Some(hit as f64 / with_ci.len() as f64)
            }
        })
        .collect();
    Ok(StudyReport {
        names: spec.param_names(),
        truth,
        n: cfg.n,
        p: cfg.p,
        r: cfg.r,
        estimator: cfg.estimator,
        seed: cfg.seed,
        effective,
        failures,
        non_converged: ok.iter().filter(|e| !e.converged).count(),
        unreliable: failures * 10 > cfg.r,
        mean,
        bias,
        mse,
        variance,
        coverage,
        coverage_count: with_ci.len(),
        failure_messages,
    })
}
