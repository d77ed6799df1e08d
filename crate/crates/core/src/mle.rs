//! Maximum likelihood fitting of DPRH models to left-censored pairs.
//!
//! A [`ModelSpec`] says which parameters are free: the θ pair can be free,
//! tied (`θ1 = θ2`) or fixed, the θ' pair free, tied, fixed or set equal to
//! the θ pair (independence), and the baseline either estimated or fixed.
//! Positive parameters are optimised on the log scale. The observed
//! information is taken on the natural scale.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineFamily};
use crate::error::{DprhError, Result};
use crate::likelihood::Sample;
use crate::model::{DprhParams, EPS_CASE};
use crate::optim::{bfgs, nelder_mead, BfgsOptions, NelderMeadOptions};
use crate::special::{chi_square_sf, derive_seed, sorted_quantile, z_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ThetaSpec {
    Free,
    /// `θ1 = θ2 = θ`.
    Tied,
    Fixed { theta1: f64, theta2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ThetaPrimeSpec {
    Free,
    /// `θ1' = θ2' = θ'`.
    Tied,
    /// `θi' = θi`: independent components.
    EqualTheta,
    Fixed { theta1_prime: f64, theta2_prime: f64 },
}

/// Which parameters are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: BaselineFamily,
    pub theta: ThetaSpec,
    pub theta_prime: ThetaPrimeSpec,
    /// Known baseline; when set its parameters are not estimated.
    pub fixed_baseline: Option<Baseline>,
}

impl ModelSpec {
    /// All of `θ1, θ2, θ1', θ2'` and the baseline parameters free.
    pub fn full(family: BaselineFamily) -> Self {
        ModelSpec {
            family,
            theta: ThetaSpec::Free,
            theta_prime: ThetaPrimeSpec::Free,
            fixed_baseline: None,
        }
    }

    pub fn with_theta(mut self, t: ThetaSpec) -> Self {
        self.theta = t;
        self
    }

    pub fn with_theta_prime(mut self, t: ThetaPrimeSpec) -> Self {
        self.theta_prime = t;
        self
    }

    pub fn with_fixed_baseline(mut self, b: Baseline) -> Self {
        self.family = b.family();
        self.fixed_baseline = Some(b);
        self
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        match self.theta {
            ThetaSpec::Free => v.extend(["theta1".into(), "theta2".into()]),
            ThetaSpec::Tied => v.push("theta".into()),
            ThetaSpec::Fixed { .. } => {}
        }
        match self.theta_prime {
            ThetaPrimeSpec::Free => v.extend(["theta1_prime".into(), "theta2_prime".into()]),
            ThetaPrimeSpec::Tied => v.push("theta_prime".into()),
            ThetaPrimeSpec::EqualTheta | ThetaPrimeSpec::Fixed { .. } => {}
        }
        if self.fixed_baseline.is_none() {
            v.extend(self.family.param_names().iter().map(|s| s.to_string()));
        }
        v
    }

    pub fn n_free(&self) -> usize {
        self.param_names().len()
    }

    fn n_theta_free(&self) -> usize {
        let a = match self.theta {
            ThetaSpec::Free => 2,
            ThetaSpec::Tied => 1,
            ThetaSpec::Fixed { .. } => 0,
        };
        let b = match self.theta_prime {
            ThetaPrimeSpec::Free => 2,
            ThetaPrimeSpec::Tied => 1,
            _ => 0,
        };
        a + b
    }

    /// Whether free parameter `i` is constrained positive.
    pub fn is_positive(&self, i: usize) -> bool {
        let k = self.n_theta_free();
        i < k || self.family.param_is_positive(i - k)
    }

    /// Assemble model parameters from free values in [`ModelSpec::param_names`] order.
    pub fn build(&self, values: &[f64]) -> Result<DprhParams> {
        if values.len() != self.n_free() {
            return Err(DprhError::invalid(
                "parameters",
                format!("expected {} values, got {}", self.n_free(), values.len()),
            ));
        }
        let mut it = values.iter().copied();
        let mut next = || it.next().expect("length checked");
        let (t1, t2) = match self.theta {
            ThetaSpec::Free => (next(), next()),
            ThetaSpec::Tied => {
                let t = next();
                (t, t)
            }
            ThetaSpec::Fixed { theta1, theta2 } => (theta1, theta2),
        };
        let (p1, p2) = match self.theta_prime {
            ThetaPrimeSpec::Free => (next(), next()),
            ThetaPrimeSpec::Tied => {
                let t = next();
                (t, t)
            }
            ThetaPrimeSpec::EqualTheta => (t1, t2),
            ThetaPrimeSpec::Fixed {
                theta1_prime,
                theta2_prime,
            } => (theta1_prime, theta2_prime),
        };
        let baseline = match self.fixed_baseline {
            Some(b) => b,
            None => {
                let rest: Vec<f64> = (0..self.family.param_names().len()).map(|_| next()).collect();
                Baseline::from_params(self.family, &rest)?
            }
        };
        DprhParams::new(t1, t2, p1, p2, baseline)
    }

    /// Free values of `p` in [`ModelSpec::param_names`] order. Tied values
    /// are averaged.
    pub fn extract(&self, p: &DprhParams) -> Vec<f64> {
        let mut v = Vec::new();
        match self.theta {
            ThetaSpec::Free => v.extend([p.theta1, p.theta2]),
            ThetaSpec::Tied => v.push(0.5 * (p.theta1 + p.theta2)),
            ThetaSpec::Fixed { .. } => {}
        }
        match self.theta_prime {
            ThetaPrimeSpec::Free => v.extend([p.theta1_prime, p.theta2_prime]),
            ThetaPrimeSpec::Tied => v.push(0.5 * (p.theta1_prime + p.theta2_prime)),
            _ => {}
        }
        if self.fixed_baseline.is_none() {
            if p.baseline.family() == self.family {
                v.extend(p.baseline.params());
            } else {
                v.extend(std::iter::repeat_n(1.0, self.family.param_names().len()));
            }
        }
        v
    }

    fn to_internal(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.is_positive(i) { v.ln() } else { *v })
            .collect()
    }

    fn from_internal(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| if self.is_positive(i) { v.exp() } else { *v })
            .collect()
    }

    /// Log-likelihood at free values; `-inf` for invalid parameters.
    pub fn log_likelihood(&self, sample: &Sample, values: &[f64]) -> f64 {
        match self.build(values) {
            Ok(p) => sample.log_likelihood(&p),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Data-driven starting point: baseline from a family heuristic, then
    /// `θ` chosen so the median of `max(t1, t2)` sits at the median of `F0^θ`,
    /// split evenly, with `θi' = θi`.
    pub fn default_start(&self, sample: &Sample) -> Result<DprhParams> {
        let baseline = match self.fixed_baseline {
            Some(b) => b,
            None => {
                let vals: Vec<f64> = sample.pairs().iter().flat_map(|p| [p.t1, p.t2]).collect();
                Baseline::default_start(self.family, &vals)?
            }
        };
        let mut maxes: Vec<f64> = sample.pairs().iter().map(|p| p.t1.max(p.t2)).collect();
        maxes.sort_by(f64::total_cmp);
        let lu = baseline.log_cdf(sorted_quantile(&maxes, 0.5));
        let theta = if lu.is_finite() && lu < 0.0 {
            (0.5f64.ln() / lu).clamp(1e-3, 1e3)
        } else {
            1.0
        };
        let (t1, t2) = match self.theta {
            ThetaSpec::Fixed { theta1, theta2 } => (theta1, theta2),
            _ => (0.5 * theta, 0.5 * theta),
        };
        let (p1, p2) = match self.theta_prime {
            ThetaPrimeSpec::Fixed {
                theta1_prime,
                theta2_prime,
            } => (theta1_prime, theta2_prime),
            _ => (t1, t2),
        };
        DprhParams::new(t1, t2, p1, p2, baseline)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of starts; the first is the supplied or default start, the
    /// others jitter it on the optimisation scale.
    pub starts: usize,
    /// Standard deviation of the start jitter on the log scale.
    pub jitter: f64,
    pub seed: u64,
    /// Level for confidence intervals (`1 - alpha` coverage).
    pub alpha: f64,
    pub max_evals: usize,
    /// Run a BFGS polish after the simplex search.
    pub polish: bool,
    /// Compute the observed information, standard errors and intervals.
    pub dispersion: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 5,
            jitter: 0.5,
            seed: 1,
            alpha: 0.05,
            max_evals: 20_000,
            polish: true,
            dispersion: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params_hat: DprhParams,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub loglik: f64,
    pub n: usize,
    pub aic: f64,
    /// Inverse observed information over the free parameters.
    pub dispersion: Option<Vec<Vec<f64>>>,
    pub se: Option<Vec<f64>>,
    pub ci: Option<Vec<(f64, f64)>>,
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.se.as_ref().map(|s| s[i])
    }

    /// Plain-text table of estimates, standard errors and intervals.
    pub fn table(&self) -> String {
        let level = 100.0 * (1.0 - self.alpha);
        let mut s = format!(
            "{:<14} {:>12} {:>12} {:>12} {:>12}\n",
            "parameter",
            "estimate",
            "std.err",
            format!("{level:.0}% LCL"),
            format!("{level:.0}% UCL")
        );
        for (i, name) in self.names.iter().enumerate() {
            let se = self.se.as_ref().map(|v| v[i]);
            let ci = self.ci.as_ref().map(|v| v[i]);
            let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
            s.push_str(&format!(
                "{:<14} {:>12.4} {:>12} {:>12} {:>12}\n",
                name,
                self.estimates[i],
                f(se),
                f(ci.map(|c| c.0)),
                f(ci.map(|c| c.1))
            ));
        }
        s.push_str(&format!(
            "log L = {:.4}   AIC = {:.2}   n = {}   converged = {}\n",
            self.loglik, self.aic, self.n, self.converged
        ));
        s
    }
}

struct RunOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    evals: usize,
    converged: bool,
}

fn optimise(obj: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64], opts: &FitOptions) -> RunOutcome {
    let nm_opts = NelderMeadOptions {
        max_evals: opts.max_evals,
        ..Default::default()
    };
    let first = nelder_mead(obj, x0, &nm_opts);
    // a fresh simplex around the first answer guards against collapse
    let second = nelder_mead(
        obj,
        &first.x,
        &NelderMeadOptions {
            initial_step: 0.02,
            ..nm_opts
        },
    );
    let mut evals = first.evals + second.evals;
    let mut iterations = first.iterations + second.iterations;
    let mut best = if second.f <= first.f { second } else { first };
    let mut converged = best.converged;
    if opts.polish && best.f.is_finite() {
        let polished = bfgs(obj, &best.x, &BfgsOptions::default());
        evals += polished.evals;
        iterations += polished.iterations;
        if polished.f <= best.f {
            converged = polished.converged || converged;
            best = polished;
        }
    }
    RunOutcome {
        x: best.x,
        f: best.f,
        iterations,
        evals,
        converged,
    }
}

/// Fit by maximum likelihood from `init` (or a data-driven default) plus
/// jittered restarts.
pub fn fit_mle(
    sample: &Sample,
    spec: &ModelSpec,
    init: Option<&DprhParams>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let init = match init {
        Some(p) => *p,
        None => spec.default_start(sample)?,
    };
    fit_mle_from(sample, spec, &[init], opts)
}

/// Fit from several explicit starts; `opts.starts` counts jittered copies of
/// the first one on top of these.
pub fn fit_mle_from(
    sample: &Sample,
    spec: &ModelSpec,
    inits: &[DprhParams],
    opts: &FitOptions,
) -> Result<FitResult> {
    if sample.len() < 5 {
        return Err(DprhError::Data(format!(
            "need at least 5 pairs to fit, got {}",
            sample.len()
        )));
    }
    if inits.is_empty() {
        return Err(DprhError::invalid("init", "no starting values"));
    }
    let k = spec.n_free();
    let first = spec.extract(&inits[0]);
    for (i, v) in first.iter().enumerate() {
        if spec.is_positive(i) && !(*v > 0.0) {
            return Err(DprhError::invalid(
                spec.param_names()[i].clone(),
                format!("starting value must be > 0, got {v}"),
            ));
        }
    }
    let ll0 = spec.log_likelihood(sample, &first);
    if !ll0.is_finite() {
        return Err(DprhError::Numerical(format!(
            "log-likelihood is {ll0} at the starting point {:?}; check that the data lie in the baseline support",
            spec.build(&first).map(|p| p.to_string_short()).unwrap_or_default()
        )));
    }
    let obj = |x: &[f64]| -spec.log_likelihood(sample, &spec.from_internal(x));

    let mut starts: Vec<Vec<f64>> = inits.iter().map(|p| spec.to_internal(&spec.extract(p))).collect();
    let base = starts[0].clone();
    for s in 1..opts.starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, s as u64));
        starts.push(
            base.iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + opts.jitter * e
                })
                .collect(),
        );
    }
    let runs: Vec<RunOutcome> = starts.par_iter().map(|x0| optimise(&obj, x0, opts)).collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let evaluations = runs.iter().map(|r| r.evals).sum();
    // best objective, first index on ties
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one start");
    if !best.f.is_finite() {
        return Err(DprhError::Convergence("no start reached a finite likelihood".into()));
    }
    let estimates = spec.from_internal(&best.x);
    let params_hat = spec.build(&estimates)?;
    let loglik = -best.f;
    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push("optimiser stopped before meeting its convergence tolerances".to_string());
    }
    let s = params_hat.theta_sum();
    for (name, v) in [("theta1_prime", params_hat.theta1_prime), ("theta2_prime", params_hat.theta2_prime)] {
        if (s - v).abs() < 10.0 * EPS_CASE {
            warnings.push(format!(
                "{name} is within 1e-8 of theta1 + theta2; asymptotic normality may not hold there"
            ));
        }
    }
    let mut fit = FitResult {
        spec: *spec,
        params_hat,
        names: spec.param_names(),
        estimates,
        loglik,
        n: sample.len(),
        aic: -2.0 * loglik + 2.0 * k as f64,
        dispersion: None,
        se: None,
        ci: None,
        alpha: opts.alpha,
        converged: best.converged,
        iterations,
        evaluations,
        warnings,
    };
    if opts.dispersion {
        match observed_information(sample, spec, &fit.estimates).and_then(|info| invert_information(&info)) {
            Ok((cov, notes)) => {
                fit.warnings.extend(notes);
                fit.dispersion = Some(cov);
                match asymptotic_ci(&fit, opts.alpha) {
                    Ok(ci) => {
                        let cov = fit.dispersion.as_ref().expect("just set");
                        fit.se = Some((0..k).map(|i| cov[i][i].sqrt()).collect());
                        fit.ci = Some(ci);
                    }
                    Err(e) => fit.warnings.push(e.to_string()),
                }
            }
            Err(e) => fit.warnings.push(format!("no dispersion matrix: {e}")),
        }
    }
    Ok(fit)
}

/// Negative Hessian of the log-likelihood at `values` (natural scale), by
/// central differences with steps `max(1e-5, 1e-4 |λ_i|)`, symmetrised.
pub fn observed_information(sample: &Sample, spec: &ModelSpec, values: &[f64]) -> Result<Vec<Vec<f64>>> {
    let f = |x: &[f64]| spec.log_likelihood(sample, x);
    hessian_information(&f, values, &spec.param_names())
}

/// `-∇²f` at `x` by central differences; errors if any evaluation is not finite.
pub fn hessian_information<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    names: &[String],
) -> Result<Vec<Vec<f64>>> {
    let k = x.len();
    let h: Vec<f64> = x.iter().map(|v| (1e-4 * v.abs()).max(1e-5)).collect();
    let mut xp = x.to_vec();
    let eval = |xp: &[f64]| -> Result<f64> {
        let v = f(xp);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DprhError::Numerical(format!(
                "log-likelihood not finite near the estimate (at {xp:?}); {names:?} may be on a boundary"
            )))
        }
    };
    let f0 = eval(&xp)?;
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        xp[i] = x[i] + h[i];
        let fp = eval(&xp)?;
        xp[i] = x[i] - h[i];
        let fm = eval(&xp)?;
        xp[i] = x[i];
        m[i][i] = -(fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = eval(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?;
            m[i][j] = -v / (4.0 * h[i] * h[j]);
            m[j][i] = m[i][j];
        }
    }
    Ok(m)
}

/// Invert a symmetric information matrix. Fails when the condition number
/// exceeds `1e12`; notes an indefinite matrix or wrong-signed diagonal.
pub fn invert_information(info: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let k = info.len();
    let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (info[i][j] + info[j][i]));
    let mut notes = Vec::new();
    for i in 0..k {
        if m[(i, i)] <= 0.0 {
            notes.push(format!("information diagonal entry {i} is not positive"));
        }
    }
    let eig = SymmetricEigen::new(m);
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > 1e12 {
        return Err(DprhError::Numerical(format!(
            "observed information is singular (condition number {:.3e}); some parameters are not identifiable from these data",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    if eig.eigenvalues.iter().any(|v| *v < 0.0) {
        notes.push("observed information is not positive definite; the estimate may not be a maximum".into());
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let cov = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let cov: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 0.5 * (cov[(i, j)] + cov[(j, i)])).collect())
        .collect();
    Ok((cov, notes))
}

/// Wald intervals `λ̂ ± z_{α/2} sqrt(var λ̂)` from the dispersion matrix.
pub fn asymptotic_ci(fit: &FitResult, alpha: f64) -> Result<Vec<(f64, f64)>> {
    let cov = fit
        .dispersion
        .as_ref()
        .ok_or_else(|| DprhError::Numerical("no dispersion matrix available".into()))?;
    wald_intervals(&fit.estimates, cov, &fit.names, alpha)
}

pub fn wald_intervals(
    estimates: &[f64],
    cov: &[Vec<f64>],
    names: &[String],
    alpha: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DprhError::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let z = z_two_sided(alpha);
    estimates
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let var = cov[i][i];
            if !(var >= 0.0) {
                return Err(DprhError::Numerical(format!(
                    "negative variance {var:e} for {}",
                    names.get(i).map(String::as_str).unwrap_or("?")
                )));
            }
            let half = z * var.sqrt();
            Ok((est - half, est + half))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub null: FitResult,
    pub alt: FitResult,
}

/// Likelihood ratio test of a nested `null` model against `alt`. The
/// alternative is also started from the null solution so it cannot end below it.
pub fn likelihood_ratio_test(
    sample: &Sample,
    null: &ModelSpec,
    alt: &ModelSpec,
    init: Option<&DprhParams>,
    opts: &FitOptions,
) -> Result<LrtResult> {
    let (kn, ka) = (null.n_free(), alt.n_free());
    if kn > ka {
        return Err(DprhError::invalid(
            "null",
            format!("null model has more free parameters ({kn}) than the alternative ({ka})"),
        ));
    }
    let null_fit = fit_mle(sample, null, init, opts)?;
    let mut alt_starts = vec![null_fit.params_hat];
    if let Some(p) = init {
        alt_starts.push(*p);
    }
    let alt_fit = fit_mle_from(sample, alt, &alt_starts, opts)?;
    let diff = alt_fit.loglik - null_fit.loglik;
    if diff < -1e-6 {
        return Err(DprhError::Convergence(format!(
            "alternative log-likelihood {} is below the null's {}; the models may not be nested",
            alt_fit.loglik, null_fit.loglik
        )));
    }
    let statistic = (2.0 * diff).max(0.0);
    let dof = ka - kn;
    Ok(LrtResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        null: null_fit,
        alt: alt_fit,
    })
}

impl DprhParams {
    /// Compact one-line description used in diagnostics.
    pub fn to_string_short(&self) -> String {
        format!(
            "theta=({}, {}), theta'=({}, {}), baseline={}",
            self.theta1, self.theta2, self.theta1_prime, self.theta2_prime, self.baseline
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CensoredPair;
    use crate::likelihood::complete_mle_closed_form;
    use crate::sampling::generate_iw_tied;

    fn iw(a: f64) -> Baseline {
        Baseline::inverse_weibull(a).unwrap()
    }

    #[test]
    fn spec_names_and_round_trip() {
        let spec = ModelSpec::full(BaselineFamily::GeneralizedRayleigh)
            .with_theta(ThetaSpec::Tied)
            .with_theta_prime(ThetaPrimeSpec::Tied);
        assert_eq!(spec.param_names(), ["theta", "theta_prime", "alpha", "lambda"]);
        let p = spec.build(&[2.0, 0.5, 1.5, 0.1]).unwrap();
        assert_eq!(p.theta1, 2.0);
        assert_eq!(p.theta2_prime, 0.5);
        assert_eq!(spec.extract(&p), vec![2.0, 0.5, 1.5, 0.1]);
        let null = spec.with_theta_prime(ThetaPrimeSpec::EqualTheta);
        assert_eq!(null.n_free(), 3);
        let gir = ModelSpec::full(BaselineFamily::GeneralizedInverseRayleigh);
        assert!(gir.is_positive(5) && !gir.is_positive(6));
    }

    #[test]
    fn quadratic_information_is_recovered() {
        let a = [[4.0, 1.0], [1.0, 3.0]];
        let c = [0.5, -2.0];
        let f = |x: &[f64]| {
            let d = [x[0] - c[0], x[1] - c[1]];
            -0.5 * (d[0] * (a[0][0] * d[0] + a[0][1] * d[1]) + d[1] * (a[1][0] * d[0] + a[1][1] * d[1]))
        };
        let names = vec!["a".to_string(), "b".to_string()];
        let m = hessian_information(&f, &c, &names).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - a[i][j]).abs() < 1e-4, "{m:?}");
            }
        }
        let (cov, notes) = invert_information(&m).unwrap();
        assert!(notes.is_empty());
        let det = 11.0;
        assert!((cov[0][0] - 3.0 / det).abs() < 1e-4);
        assert!((cov[0][1] + 1.0 / det).abs() < 1e-4);
    }

    #[test]
    fn singular_information_is_an_error() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(invert_information(&m).is_err());
    }

    #[test]
    fn wald_interval_reference() {
        let ci = wald_intervals(&[0.0], &[vec![1.0]], &["x".into()], 0.05).unwrap();
        assert!((ci[0].0 + 1.959964).abs() < 1e-6 && (ci[0].1 - 1.959964).abs() < 1e-6);
        assert!(wald_intervals(&[0.0], &[vec![-1.0]], &["x".into()], 0.05)
            .unwrap_err()
            .to_string()
            .contains('x'));
    }

    #[test]
    fn numeric_fit_matches_closed_form() {
        let data = generate_iw_tied(1.5, 1.7, 1.8, 1.3, 200, 0.0, 5).unwrap();
        let b = iw(1.3);
        let exact = complete_mle_closed_form(&data, &b).unwrap();
        let spec = ModelSpec::full(BaselineFamily::InverseWeibull).with_fixed_baseline(b);
        let sample = Sample::new(data).unwrap();
        let fit = fit_mle(&sample, &spec, None, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{:?}", fit.warnings);
        for i in 0..4 {
            assert!((fit.estimates[i] - exact[i]).abs() < 1e-5, "{:?} vs {exact:?}", fit.estimates);
        }
        assert!((fit.aic - (-2.0 * fit.loglik + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn bad_start_is_diagnosed() {
        let sample = Sample::new(vec![CensoredPair::complete(1.0, 2.0); 6]).unwrap();
        let spec = ModelSpec::full(BaselineFamily::GeneralizedInverseRayleigh);
        let start = DprhParams::new(1.0, 1.0, 1.0, 1.0, Baseline::generalized_inverse_rayleigh(1.0, 1.0, 5.0).unwrap())
            .unwrap();
        let err = fit_mle(&sample, &spec, Some(&start), &FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("starting point"), "{err}");
    }

    #[test]
    fn lrt_identical_specs() {
        let data = generate_iw_tied(1.2, 1.4, 1.4, 1.1, 80, 0.1, 3).unwrap();
        let sample = Sample::new(data).unwrap();
        let spec = ModelSpec::full(BaselineFamily::InverseWeibull)
            .with_theta(ThetaSpec::Tied)
            .with_theta_prime(ThetaPrimeSpec::Tied);
        let opts = FitOptions {
            dispersion: false,
            ..Default::default()
        };
        let r = likelihood_ratio_test(&sample, &spec, &spec, None, &opts).unwrap();
        assert_eq!(r.dof, 0);
        assert!(r.statistic < 1e-6);
    }
}
