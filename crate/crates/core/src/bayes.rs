//! Bayesian fitting: priors, random-walk Metropolis–Hastings, posterior
//! summaries and bootstrap standard errors of the posterior mode.
//!
//! Proposals are Normal random walks on the natural parameter scale. Their
//! scales are tuned by Robbins–Monro updates during burn-in only and frozen
//! afterwards, so the retained draws come from a fixed Markov kernel.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{DprhError, Result};
use crate::likelihood::Sample;
use crate::mle::ModelSpec;
use crate::special::{derive_seed, mean, sample_sd, sorted_quantile};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Prior for one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Prior {
    /// Density `rate^shape x^(shape-1) e^(-rate x) / Γ(shape)` on `x > 0`.
    Gamma { shape: f64, rate: f64 },
    Normal { mean: f64, sd: f64 },
    /// Improper constant density; contributes zero.
    Flat,
}

impl Prior {
    pub fn gamma(shape: f64, rate: f64) -> Result<Prior> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(DprhError::invalid("shape", format!("must be > 0, got {shape}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DprhError::invalid("rate", format!("must be > 0, got {rate}")));
        }
        Ok(Prior::Gamma { shape, rate })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Prior> {
        if !mean.is_finite() {
            return Err(DprhError::invalid("mean", format!("must be finite, got {mean}")));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(DprhError::invalid("sd", format!("must be > 0, got {sd}")));
        }
        Ok(Prior::Normal { mean, sd })
    }

    /// Gamma prior with the given mean and variance: `shape = mean²/var`,
    /// `rate = mean/var`.
    pub fn gamma_moment_matched(mean: f64, var: f64) -> Result<Prior> {
        if !(mean > 0.0) || !(var > 0.0) {
            return Err(DprhError::invalid(
                "gamma prior",
                format!("mean and variance must be > 0, got mean {mean}, variance {var}"),
            ));
        }
        Prior::gamma(mean * mean / var, mean / var)
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Prior::Gamma { shape, rate } => {
                if x > 0.0 {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI
            }
            Prior::Flat => 0.0,
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Gamma { shape, rate } => write!(f, "Gamma(shape={shape}, rate={rate})"),
            Prior::Normal { mean, sd } => write!(f, "Normal(mean={mean}, sd={sd})"),
            Prior::Flat => write!(f, "Flat"),
        }
    }
}

/// Independent priors, one per free parameter in [`ModelSpec::param_names`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub priors: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(priors: Vec<Prior>) -> Self {
        PriorSpec { priors }
    }

    pub fn flat(k: usize) -> Self {
        PriorSpec {
            priors: vec![Prior::Flat; k],
        }
    }

    /// Moment-matched Gamma priors with means `centers` and common variance `var`.
    pub fn gamma_centered(centers: &[f64], var: f64) -> Result<Self> {
        centers
            .iter()
            .map(|c| Prior::gamma_moment_matched(*c, var))
            .collect::<Result<Vec<_>>>()
            .map(PriorSpec::new)
    }

    pub fn normal_centered(centers: &[f64], sd: f64) -> Result<Self> {
        centers
            .iter()
            .map(|c| Prior::normal(*c, sd))
            .collect::<Result<Vec<_>>>()
            .map(PriorSpec::new)
    }

    pub fn log_density(&self, values: &[f64]) -> f64 {
        self.priors
            .iter()
            .zip(values)
            .map(|(p, v)| p.log_density(*v))
            .sum()
    }
}

/// Unnormalised log posterior: censored log-likelihood plus log prior.
pub fn log_posterior(sample: &Sample, spec: &ModelSpec, prior: &PriorSpec, values: &[f64]) -> f64 {
    let lp = prior.log_density(values);
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return f64::NEG_INFINITY;
    }
    let ll = spec.log_likelihood(sample, values);
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll + lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalKind {
    /// Update one coordinate at a time; one step is a full sweep.
    ComponentWise,
    /// Update all coordinates at once with independent Normal increments.
    Joint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MhOptions {
    pub steps: usize,
    /// Defaults to 20% of `steps`.
    pub burn_in: Option<usize>,
    /// Keep every `thin`-th step.
    pub thin: usize,
    pub proposal: ProposalKind,
    /// Starting proposal standard deviations; defaults to
    /// `0.1 * max(|x_i|, 0.01)`.
    pub initial_scales: Option<Vec<f64>>,
    pub target_acceptance: f64,
    pub max_consecutive_rejections: usize,
}

impl Default for MhOptions {
    fn default() -> Self {
        MhOptions {
            steps: 10_000,
            burn_in: None,
            thin: 1,
            proposal: ProposalKind::ComponentWise,
            initial_scales: None,
            target_acceptance: 0.3,
            max_consecutive_rejections: 10_000,
        }
    }
}

impl MhOptions {
    pub fn burn_in_steps(&self) -> usize {
        self.burn_in.unwrap_or(self.steps / 5)
    }
}

/// Stored draws of one chain. Every `thin`-th step is kept, burn-in included;
/// [`PosteriorChain::post_burn_in`] gives the retained draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub names: Vec<String>,
    pub steps: Vec<usize>,
    pub draws: Vec<Vec<f64>>,
    pub log_posts: Vec<f64>,
    /// Accepted component updates at each stored step.
    pub accepted: Vec<usize>,
    pub burn_in: usize,
    pub thin: usize,
    pub total_steps: usize,
    /// Per-parameter acceptance rate after burn-in, over all steps.
    pub acceptance: Vec<f64>,
    pub proposal_scales: Vec<f64>,
}

impl PosteriorChain {
    pub fn post_burn_in(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.steps
            .iter()
            .zip(&self.draws)
            .filter(move |(s, _)| **s >= self.burn_in)
            .map(|(_, d)| d)
    }

    pub fn retained(&self) -> usize {
        self.post_burn_in().count()
    }

    /// Post-burn-in draws of parameter `i`.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        self.post_burn_in().map(|d| d[i]).collect()
    }

    pub fn overall_acceptance(&self) -> f64 {
        mean(&self.acceptance)
    }

    /// CSV trace with columns `step`, parameter names, `log_post`, `accepted`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string()];
        header.extend(self.names.iter().cloned());
        header.extend(["log_post".to_string(), "accepted".to_string()]);
        w.write_record(&header)?;
        for ((s, d), (lp, a)) in self.steps.iter().zip(&self.draws).zip(self.log_posts.iter().zip(&self.accepted)) {
            let mut rec = vec![s.to_string()];
            rec.extend(d.iter().map(|v| v.to_string()));
            rec.push(lp.to_string());
            rec.push(a.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Random-walk Metropolis–Hastings on an arbitrary log density.
pub fn mh_sample_fn<F: Fn(&[f64]) -> f64>(
    log_post: F,
    names: Vec<String>,
    init: &[f64],
    seed: u64,
    opts: &MhOptions,
) -> Result<PosteriorChain> {
    let k = init.len();
    if names.len() != k {
        return Err(DprhError::invalid("names", "one name per parameter required"));
    }
    if opts.thin == 0 {
        return Err(DprhError::invalid("thin", "must be >= 1"));
    }
    let burn_in = opts.burn_in_steps();
    if burn_in >= opts.steps {
        return Err(DprhError::invalid(
            "burn_in",
            format!("must be below the number of steps ({}), got {burn_in}", opts.steps),
        ));
    }
    if !(opts.target_acceptance > 0.0 && opts.target_acceptance < 1.0) {
        return Err(DprhError::invalid("target_acceptance", "must lie in (0, 1)"));
    }
    let mut x = init.to_vec();
    let mut lp = log_post(&x);
    if !lp.is_finite() {
        return Err(DprhError::Numerical(format!(
            "log posterior is {lp} at the initial point {init:?}"
        )));
    }
    let mut log_scale: Vec<f64> = match &opts.initial_scales {
        Some(s) if s.len() == k && s.iter().all(|v| *v > 0.0) => s.iter().map(|v| v.ln()).collect(),
        Some(_) => {
            return Err(DprhError::invalid(
                "initial_scales",
                format!("need {k} positive values"),
            ))
        }
        None => init.iter().map(|v| (0.1 * v.abs().max(0.01)).ln()).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_store = opts.steps.div_ceil(opts.thin);
    let mut chain = PosteriorChain {
        names,
        steps: Vec::with_capacity(n_store),
        draws: Vec::with_capacity(n_store),
        log_posts: Vec::with_capacity(n_store),
        accepted: Vec::with_capacity(n_store),
        burn_in,
        thin: opts.thin,
        total_steps: opts.steps,
        acceptance: vec![0.0; k],
        proposal_scales: Vec::new(),
    };
    let mut post_acc = vec![0usize; k];
    let mut rejections = 0usize;
    let reject = |rejections: &mut usize| -> Result<()> {
        *rejections += 1;
        if *rejections >= opts.max_consecutive_rejections {
            Err(DprhError::Convergence(format!(
                "{} consecutive proposals rejected; proposal scale is probably too large",
                *rejections
            )))
        } else {
            Ok(())
        }
    };
    for step in 0..opts.steps {
        let adapting = step < burn_in;
        let gain = 1.0 / ((step + 1) as f64).powf(0.6);
        let mut n_acc = 0;
        match opts.proposal {
            ProposalKind::ComponentWise => {
                for i in 0..k {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let old = x[i];
                    x[i] = old + log_scale[i].exp() * z;
                    let lp_new = log_post(&x);
                    let a = if lp_new.is_nan() { f64::NEG_INFINITY } else { lp_new - lp };
                    let u: f64 = rng.random();
                    let ok = a >= 0.0 || u.ln() < a;
                    if ok {
                        lp = lp_new;
                        n_acc += 1;
                        rejections = 0;
                        if !adapting {
                            post_acc[i] += 1;
                        }
                    } else {
                        x[i] = old;
                        reject(&mut rejections)?;
                    }
                    if adapting {
                        let acc_prob = a.min(0.0).exp();
                        log_scale[i] += gain * (acc_prob - opts.target_acceptance);
                    }
                }
            }
            ProposalKind::Joint => {
                let prop: Vec<f64> = x
                    .iter()
                    .zip(&log_scale)
                    .map(|(v, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        v + s.exp() * z
                    })
                    .collect();
                let lp_new = log_post(&prop);
                let a = if lp_new.is_nan() { f64::NEG_INFINITY } else { lp_new - lp };
                let u: f64 = rng.random();
                if a >= 0.0 || u.ln() < a {
                    x = prop;
                    lp = lp_new;
                    n_acc = k;
                    rejections = 0;
                    if !adapting {
                        post_acc.iter_mut().for_each(|c| *c += 1);
                    }
                } else {
                    reject(&mut rejections)?;
                }
                if adapting {
                    let acc_prob = a.min(0.0).exp();
                    log_scale.iter_mut().for_each(|s| *s += gain * (acc_prob - opts.target_acceptance));
                }
            }
        }
        if step % opts.thin == 0 {
            chain.steps.push(step);
            chain.draws.push(x.clone());
            chain.log_posts.push(lp);
            chain.accepted.push(n_acc);
        }
    }
    let kept = (opts.steps - burn_in) as f64;
    chain.acceptance = post_acc.iter().map(|c| *c as f64 / kept).collect();
    chain.proposal_scales = log_scale.iter().map(|s| s.exp()).collect();
    Ok(chain)
}

/// Metropolis–Hastings on the posterior of a DPRH model.
pub fn mh_sample(
    sample: &Sample,
    spec: &ModelSpec,
    prior: &PriorSpec,
    init: &[f64],
    seed: u64,
    opts: &MhOptions,
) -> Result<PosteriorChain> {
    let k = spec.n_free();
    if prior.priors.len() != k || init.len() != k {
        return Err(DprhError::invalid(
            "prior",
            format!(
                "expected {k} priors and initial values, got {} and {}",
                prior.priors.len(),
                init.len()
            ),
        ));
    }
    mh_sample_fn(
        |x| log_posterior(sample, spec, prior, x),
        spec.param_names(),
        init,
        seed,
        opts,
    )
}

pub const MIN_MODE_DRAWS: usize = 500;
const KDE_GRID: usize = 512;

/// Mode of a Gaussian kernel density estimate with bandwidth
/// `0.9 min(sd, IQR/1.34) n^{-1/7}`, Silverman's rule with the `n^{-1/7}` rate
/// suited to locating a mode rather than estimating the density. Located on a 512-point grid over the data range and refined by a
/// parabola through the best grid point and its neighbours.
pub fn kde_mode(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(DprhError::invalid("draws", "need at least two values"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Ok(lo);
    }
    let n = xs.len() as f64;
    let sd = sample_sd(xs);
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-1.0 / 7.0);
    let dx = (hi - lo) / (KDE_GRID - 1) as f64;
    let grid = |j: usize| lo + j as f64 * dx;
    // kernels further than 8h contribute nothing at f64 precision
    let density = |g: f64| -> f64 {
        let a = sorted.partition_point(|v| *v < g - 8.0 * h);
        let b = sorted.partition_point(|v| *v <= g + 8.0 * h);
        sorted[a..b]
            .iter()
            .map(|v| {
                let z = (g - v) / h;
                (-0.5 * z * z).exp()
            })
            .sum()
    };
    let dens: Vec<f64> = (0..KDE_GRID).map(|j| density(grid(j))).collect();
    let (jmax, _) = dens
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| if *v > bv { (j, *v) } else { (bj, bv) });
    if jmax == 0 || jmax == KDE_GRID - 1 {
        return Ok(grid(jmax));
    }
    let (l, c, r) = (dens[jmax - 1], dens[jmax], dens[jmax + 1]);
    let denom = l - 2.0 * c + r;
    let shift = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    Ok(grid(jmax) + shift.clamp(-0.5, 0.5) * dx)
}

/// Per-parameter posterior mode from the retained draws.
pub fn posterior_mode(chain: &PosteriorChain) -> Result<Vec<f64>> {
    let m = chain.retained();
    if m < MIN_MODE_DRAWS {
        return Err(DprhError::invalid(
            "chain",
            format!("need at least {MIN_MODE_DRAWS} post-burn-in draws for a mode, got {m}"),
        ));
    }
    (0..chain.names.len()).map(|i| kde_mode(&chain.marginal(i))).collect()
}

/// Central credible interval from the empirical `alpha/2` and `1 - alpha/2`
/// quantiles of the retained draws.
pub fn credible_interval(chain: &PosteriorChain, i: usize, alpha: f64) -> Result<(f64, f64)> {
    if i >= chain.names.len() {
        return Err(DprhError::invalid("param_index", format!("{i} out of range")));
    }
    if chain.retained() < 2 {
        return Err(DprhError::invalid("chain", "need at least two post-burn-in draws"));
    }
    let mut xs = chain.marginal(i);
    xs.sort_by(f64::total_cmp);
    quantile_interval(&xs, alpha)
}

pub fn quantile_interval(sorted: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DprhError::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok((
        sorted_quantile(sorted, alpha / 2.0),
        sorted_quantile(sorted, 1.0 - alpha / 2.0),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub mode: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub alpha: f64,
    pub retained: usize,
    pub acceptance: Vec<f64>,
    pub params: Vec<ParamSummary>,
}

pub fn summarize(chain: &PosteriorChain, alpha: f64) -> Result<PosteriorSummary> {
    let mode = posterior_mode(chain)?;
    let params = (0..chain.names.len())
        .map(|i| {
            let xs = chain.marginal(i);
            let (lower, upper) = credible_interval(chain, i, alpha)?;
            Ok(ParamSummary {
                name: chain.names[i].clone(),
                mean: mean(&xs),
                sd: sample_sd(&xs),
                mode: mode[i],
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary {
        alpha,
        retained: chain.retained(),
        acceptance: chain.acceptance.clone(),
        params,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub names: Vec<String>,
    pub b_requested: usize,
    pub b_effective: usize,
    /// Posterior modes of the successful replicates, in replicate order.
    pub modes: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// `Σ (λ_b - λ̄)² / (B - 1)`.
    pub variance: Vec<f64>,
    /// Square root of `variance`.
    pub se: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Bootstrap spread of the posterior mode: resample pairs with replacement
/// `b` times and rerun the sampler from `init` on each resample.
pub fn bootstrap_se(
    sample: &Sample,
    spec: &ModelSpec,
    prior: &PriorSpec,
    init: &[f64],
    b: usize,
    seed: u64,
    opts: &MhOptions,
) -> Result<BootstrapResult> {
    bootstrap_with(sample.len(), b, seed, spec.param_names(), |idx, chain_seed| {
        let resampled = sample.resample(idx);
        let chain = mh_sample(&resampled, spec, prior, init, chain_seed, opts)?;
        posterior_mode(&chain)
    })
}

/// Bootstrap driver over an arbitrary estimator of resampled index sets.
pub fn bootstrap_with<F>(n: usize, b: usize, seed: u64, names: Vec<String>, estimator: F) -> Result<BootstrapResult>
where
    F: Fn(&[usize], u64) -> Result<Vec<f64>> + Sync,
{
    if b < 2 {
        return Err(DprhError::invalid("B", format!("need at least 2 replicates, got {b}")));
    }
    if n == 0 {
        return Err(DprhError::Data("cannot bootstrap an empty sample".into()));
    }
    let outcomes: Vec<Result<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * r as u64));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimator(&idx, derive_seed(seed, 2 * r as u64 + 1))
        })
        .collect();
    let mut modes = Vec::new();
    let mut warnings = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => modes.push(v),
            Err(e) => warnings.push(format!("replicate {r} dropped: {e}")),
        }
    }
    let be = modes.len();
    if be < 2 {
        return Err(DprhError::Convergence(format!(
            "only {be} of {b} bootstrap replicates succeeded"
        )));
    }
    let k = names.len();
    let col = |i: usize| modes.iter().map(|m| m[i]).collect::<Vec<f64>>();
    let mean_v: Vec<f64> = (0..k).map(|i| mean(&col(i))).collect();
    let variance: Vec<f64> = (0..k)
        .map(|i| {
            let m = mean_v[i];
            modes.iter().map(|v| (v[i] - m).powi(2)).sum::<f64>() / (be - 1) as f64
        })
        .collect();
    Ok(BootstrapResult {
        names,
        b_requested: b,
        b_effective: be,
        se: variance.iter().map(|v| v.sqrt()).collect(),
        modes,
        mean: mean_v,
        variance,
        warnings,
    })
}
