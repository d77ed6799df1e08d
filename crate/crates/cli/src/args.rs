use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dprh::baselines::parse_named_params;
use dprh::bayes::ProposalKind;
use dprh::sampling::ConditionalDraw;
use dprh::{Baseline, BaselineFamily, DprhParams};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "dprh", version, about = "Dynamic proportional reversed hazards models for paired left-censored lifetimes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(next_help_heading = "Global options")]
pub struct GlobalArgs {
    /// Master random seed [default: 1; a study uses its config's seed]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the result here instead of standard output
    #[arg(short, long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format for results
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (0 = one per core); results do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// More diagnostics on standard error (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

impl GlobalArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the joint law at given points
    Eval(EvalArgs),
    /// Draw a left-censored sample (CSV columns t1,d1,t2,d2)
    Simulate(SimulateArgs),
    /// Maximum likelihood fit
    FitMle(FitMleArgs),
    /// Posterior sampling by Metropolis-Hastings
    FitBayes(FitBayesArgs),
    /// Monte Carlo study of an estimator
    Study(StudyArgs),
    /// Fit and validate twin onset-age data
    AnalyzeTwins(TwinArgs),
}

fn parse_family(s: &str) -> Result<BaselineFamily, String> {
    s.parse().map_err(|e: dprh::DprhError| e.to_string())
}

/// Model parameters given on the command line.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Common θ for both components (θ1 = θ2)
    #[arg(long, conflicts_with_all = ["theta1", "theta2"])]
    pub theta: Option<f64>,
    /// θ1, the rate of component 1 while both are alive
    #[arg(long, requires = "theta2")]
    pub theta1: Option<f64>,
    /// θ2, the rate of component 2 while both are alive
    #[arg(long, requires = "theta1")]
    pub theta2: Option<f64>,
    /// θ1', the rate of component 1 once component 2 has failed
    #[arg(long)]
    pub theta1p: f64,
    /// θ2', the rate of component 2 once component 1 has failed
    #[arg(long)]
    pub theta2p: f64,
    /// Inverse Weibull shape; shorthand for `--baseline inverse-weibull --param alpha=...`
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Baseline family
    #[arg(long, value_parser = parse_family)]
    pub baseline: Option<BaselineFamily>,
    /// Baseline parameter, repeatable
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

impl ModelArgs {
    pub fn build(&self) -> Result<DprhParams, CliError> {
        let (t1, t2) = match (self.theta, self.theta1, self.theta2) {
            (Some(t), _, _) => (t, t),
            (None, Some(a), Some(b)) => (a, b),
            _ => return Err(CliError::Usage("give --theta or both --theta1 and --theta2".into())),
        };
        let baseline = match (self.alpha, self.baseline) {
            (Some(a), None | Some(BaselineFamily::InverseWeibull)) if self.params.is_empty() => {
                Baseline::inverse_weibull(a)?
            }
            (Some(_), _) => {
                return Err(CliError::Usage(
                    "--alpha is the inverse Weibull shorthand; use --param with other baselines".into(),
                ))
            }
            (None, Some(fam)) => baseline_from_params(fam, &self.params)?,
            (None, None) => return Err(CliError::Usage("give --alpha or --baseline with --param".into())),
        };
        Ok(DprhParams::new(t1, t2, self.theta1p, self.theta2p, baseline)?)
    }
}

pub fn baseline_from_params(family: BaselineFamily, items: &[String]) -> Result<Baseline, CliError> {
    let named = parse_named_params(items)?;
    let pairs: Vec<(&str, f64)> = named.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Ok(Baseline::from_named(family, &pairs)?)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation point, repeatable
    #[arg(long = "at", value_name = "Y1,Y2", required = true, value_parser = parse_point)]
    pub points: Vec<(f64, f64)>,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected Y1,Y2")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("not a number: `{v}`"));
    Ok((p(a)?, p(b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Exact,
    Additive,
}

impl From<Sampler> for ConditionalDraw {
    fn from(s: Sampler) -> Self {
        match s {
            Sampler::Exact => ConditionalDraw::Exact,
            Sampler::Additive => ConditionalDraw::Additive,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of pairs
    #[arg(long)]
    pub n: usize,
    /// Expected censored fraction of each component
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Conditional draw for the smaller component
    #[arg(long, value_enum, default_value_t = Sampler::Exact)]
    pub sampler: Sampler,
}

/// Which parameters are estimated.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArgs {
    /// Baseline family
    #[arg(long, value_parser = parse_family)]
    pub baseline: BaselineFamily,
    /// Hold the baseline at these parameter values, repeatable
    #[arg(long = "known", value_name = "NAME=VALUE")]
    pub known: Vec<String>,
    /// Estimate a common θ = θ1 = θ2
    #[arg(long)]
    pub tie_theta: bool,
    /// Estimate a common θ' = θ1' = θ2'
    #[arg(long, conflicts_with = "independent")]
    pub tie_theta_prime: bool,
    /// Fit the independence model θi' = θi
    #[arg(long)]
    pub independent: bool,
}

impl SpecArgs {
    pub fn build(&self) -> Result<dprh::mle::ModelSpec, CliError> {
        use dprh::mle::{ModelSpec, ThetaPrimeSpec, ThetaSpec};
        let mut spec = ModelSpec::full(self.baseline);
        if !self.known.is_empty() {
            spec = spec.with_fixed_baseline(baseline_from_params(self.baseline, &self.known)?);
        }
        if self.tie_theta {
            spec = spec.with_theta(ThetaSpec::Tied);
        }
        if self.tie_theta_prime {
            spec = spec.with_theta_prime(ThetaPrimeSpec::Tied);
        }
        if self.independent {
            spec = spec.with_theta_prime(ThetaPrimeSpec::EqualTheta);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitMleArgs {
    /// CSV with columns t1,d1,t2,d2
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Starting value for a free parameter, repeatable
    #[arg(long = "init", value_name = "NAME=VALUE")]
    pub init: Vec<String>,
    /// Number of optimiser starts
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
    /// Confidence level is 1 - alpha
    #[arg(long = "ci-alpha", default_value_t = 0.05)]
    pub ci_alpha: f64,
    /// Also test independence (θi' = θi) by likelihood ratio
    #[arg(long)]
    pub lrt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Gamma priors moment-matched to the MLE and `--prior-variance`
    Gamma,
    /// Normal priors at the MLE with sd `--prior-sd`
    Normal,
    /// Improper flat priors
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    ComponentWise,
    Joint,
}

impl From<Proposal> for ProposalKind {
    fn from(p: Proposal) -> Self {
        match p {
            Proposal::ComponentWise => ProposalKind::ComponentWise,
            Proposal::Joint => ProposalKind::Joint,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McmcArgs {
    /// Prior family, centred at the MLE
    #[arg(long, value_enum, default_value_t = PriorKind::Gamma)]
    pub prior: PriorKind,
    /// Variance of the Gamma priors
    #[arg(long, default_value_t = 1.2)]
    pub prior_variance: f64,
    /// Standard deviation of the Normal priors
    #[arg(long, default_value_t = 0.1)]
    pub prior_sd: f64,
    /// Chain length including burn-in
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Burn-in steps (default: 20% of --steps)
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Keep every k-th draw
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Random-walk proposal: one parameter at a time or all at once
    #[arg(long, value_enum, default_value_t = Proposal::ComponentWise)]
    pub proposal: Proposal,
    /// Bootstrap replicates for the spread of the posterior mode (0 = none)
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    /// Write the chain as CSV
    #[arg(long, value_name = "PATH")]
    pub chain_out: Option<PathBuf>,
    /// Credible level is 1 - alpha
    #[arg(long = "ci-alpha", default_value_t = 0.05)]
    pub ci_alpha: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitBayesArgs {
    /// CSV with columns t1,d1,t2,d2
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StudyArgs {
    /// Study configuration (JSON)
    #[arg(long)]
    pub config: PathBuf,
    /// Override the sample size; repeat to run several sizes
    #[arg(long = "n")]
    pub sizes: Vec<usize>,
    /// Override the number of replicates
    #[arg(long)]
    pub r: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TwinArgs {
    /// CSV with columns pair_id,zygosity,sex,age1,status1,age2,status2
    #[arg(long)]
    pub data: PathBuf,
    /// Baseline families to compare, repeatable
    #[arg(long = "baseline", value_parser = parse_family,
          default_values = ["generalized-rayleigh", "exponentiated-gumbel", "generalized-exponential"])]
    pub baselines: Vec<BaselineFamily>,
    /// Horizon age b; risk-free times are b - age
    #[arg(long, default_value_t = dprh::twin::DEFAULT_HORIZON)]
    pub b: f64,
    /// Keep only this zygosity code
    #[arg(long)]
    pub category: Option<u32>,
    /// Probability threshold for the validation table
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Also sample the posterior for the best-AIC baseline
    #[arg(long)]
    pub bayes: bool,
    #[command(flatten)]
    pub mcmc: McmcArgs,
}
