use std::fmt::Write as _;

use serde::Serialize;

use dprh::bayes::{bootstrap_se, mh_sample, summarize, BootstrapResult, MhOptions, PosteriorSummary, PriorSpec};
use dprh::data::{read_pairs_path, write_pairs};
use dprh::mle::{fit_mle as run_fit, likelihood_ratio_test, FitOptions, FitResult, ModelSpec, ThetaPrimeSpec};
use dprh::model::ReversedHazardVector;
use dprh::sampling::{generate_sample, CensoringScheme};
use dprh::special::derive_seed;
use dprh::studies::{run_study, StudyConfig, StudyReport};
use dprh::twin::{
    compare_baselines, dependence_test, load_twins_path, monotonicity_violations, potential_appendectomy_prob,
    validation_report, PairProbability, ValidationReport,
};
use dprh::{BaselineFamily, Component, DprhParams, Sample};

use crate::args::{
    EvalArgs, FitBayesArgs, FitMleArgs, GlobalArgs, McmcArgs, PriorKind, SimulateArgs, StudyArgs, TwinArgs,
};
use crate::output::{emit, to_json, write_bytes, Envelope, SCHEMA_VERSION};
use crate::CliError;

#[derive(Serialize)]
struct PointEval {
    y1: f64,
    y2: f64,
    joint_cdf: f64,
    /// Absent on the diagonal, where the joint law has a singular part.
    joint_pdf: Option<f64>,
    marginal_cdf: [f64; 2],
    marginal_pdf: [f64; 2],
    local_dependence: Option<f64>,
    reversed_hazard: ReversedHazardVector,
}

#[derive(Serialize)]
struct EvalResult {
    params: DprhParams,
    case: u8,
    /// `P(Y1 > Y2)` and `P(Y2 > Y1)`.
    prob_exceeds: [f64; 2],
    points: Vec<PointEval>,
}

pub fn eval(global: &GlobalArgs, args: &EvalArgs) -> Result<(), CliError> {
    let p = args.model.build()?;
    let mut points = Vec::new();
    for &(y1, y2) in &args.points {
        let off_diag = y1 != y2;
        points.push(PointEval {
            y1,
            y2,
            joint_cdf: p.joint_cdf(y1, y2)?,
            joint_pdf: off_diag.then(|| p.joint_pdf(y1, y2)).transpose()?,
            marginal_cdf: [p.marginal_cdf(Component::First, y1), p.marginal_cdf(Component::Second, y2)],
            marginal_pdf: [p.marginal_pdf(Component::First, y1), p.marginal_pdf(Component::Second, y2)],
            local_dependence: off_diag.then(|| p.local_dependence_beta(y1, y2)).transpose()?,
            reversed_hazard: p.reversed_hazard_vector(y1, y2)?,
        });
    }
    let result = EvalResult {
        params: p,
        case: p.case_id().number(),
        prob_exceeds: [p.prob_first_exceeds(Component::First), p.prob_first_exceeds(Component::Second)],
        points,
    };
    emit(global, "eval", args, &result, || {
        let mut s = format!("{} (case {})\n", p.to_string_short(), result.case);
        let _ = writeln!(s, "{:>12} {:>12} {:>14} {:>14} {:>12}", "y1", "y2", "F(y1,y2)", "f(y1,y2)", "beta");
        for e in &result.points {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
            let _ = writeln!(
                s,
                "{:>12} {:>12} {:>14.6e} {:>14} {:>12}",
                e.y1,
                e.y2,
                e.joint_cdf,
                opt(e.joint_pdf),
                opt(e.local_dependence)
            );
        }
        s
    })
}

#[derive(Serialize)]
struct SimulateRecord {
    params: DprhParams,
    scheme: CensoringScheme,
    n: usize,
    censored_fraction: (f64, f64),
    index_set_counts: [usize; 8],
}

pub fn simulate(global: &GlobalArgs, args: &SimulateArgs) -> Result<(), CliError> {
    let p = args.model.build()?;
    let scheme = CensoringScheme::solve(&p, args.p)?;
    let pairs = generate_sample(&p, args.n, &scheme, global.seed(), args.sampler.into())?;
    let mut csv = Vec::new();
    write_pairs(&mut csv, &pairs)?;
    write_bytes(global.output.as_deref(), &csv)?;
    let sample = Sample::new(pairs)?;
    let record = SimulateRecord {
        params: p,
        scheme,
        n: args.n,
        censored_fraction: sample.censored_fraction(),
        index_set_counts: sample.counts(),
    };
    // with -o the run record goes to stdout; otherwise stdout holds the data
    let json = to_json(&Envelope {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        seed: global.seed(),
        format: global.format,
        config: args,
        result: &record,
    })?;
    if global.output.is_some() {
        write_bytes(None, json.as_bytes())?;
    } else {
        log::info!("{json}");
    }
    Ok(())
}

fn load_sample(path: &std::path::Path) -> Result<Sample, CliError> {
    Ok(Sample::new(read_pairs_path(path)?)?)
}

/// Start from the default, overriding named free parameters.
fn resolve_init(spec: &ModelSpec, sample: &Sample, items: &[String]) -> Result<Option<DprhParams>, CliError> {
    if items.is_empty() {
        return Ok(None);
    }
    let names = spec.param_names();
    let mut values = spec.extract(&spec.default_start(sample)?);
    for (k, v) in dprh::baselines::parse_named_params(items)? {
        let i = names
            .iter()
            .position(|n| *n == k)
            .ok_or_else(|| CliError::Usage(format!("--init {k}: not a free parameter (free: {})", names.join(", "))))?;
        values[i] = v;
    }
    Ok(Some(spec.build(&values)?))
}

#[derive(Serialize)]
struct LrtSummary {
    null: String,
    statistic: f64,
    dof: usize,
    p_value: f64,
    null_loglik: f64,
}

#[derive(Serialize)]
struct FitMleResult {
    fit: FitResult,
    independence_test: Option<LrtSummary>,
}

fn not_converged(fit: &FitResult) -> Result<(), CliError> {
    if fit.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "optimiser did not converge for {}: {}",
            fit.spec.family,
            fit.warnings.join("; ")
        )))
    }
}

pub fn fit_mle(global: &GlobalArgs, args: &FitMleArgs) -> Result<(), CliError> {
    let sample = load_sample(&args.data)?;
    let spec = args.spec.build()?;
    let init = resolve_init(&spec, &sample, &args.init)?;
    let opts = FitOptions {
        starts: args.starts,
        seed: global.seed(),
        alpha: args.ci_alpha,
        ..Default::default()
    };
    let fit = run_fit(&sample, &spec, init.as_ref(), &opts)?;
    for w in &fit.warnings {
        log::warn!("{w}");
    }
    let independence_test = if args.lrt {
        let null = spec.with_theta_prime(ThetaPrimeSpec::EqualTheta);
        let t = likelihood_ratio_test(&sample, &null, &spec, init.as_ref(), &FitOptions { dispersion: false, ..opts })?;
        Some(LrtSummary {
            null: "theta_i' = theta_i".into(),
            statistic: t.statistic,
            dof: t.dof,
            p_value: t.p_value,
            null_loglik: t.null.loglik,
        })
    } else {
        None
    };
    let result = FitMleResult { fit, independence_test };
    emit(global, "fit-mle", args, &result, || {
        let mut s = result.fit.table();
        if let Some(t) = &result.independence_test {
            let _ = writeln!(s, "LRT {}: statistic {:.4}, dof {}, p = {:.3e}", t.null, t.statistic, t.dof, t.p_value);
        }
        s
    })?;
    not_converged(&result.fit)
}

fn mh_options(m: &McmcArgs) -> MhOptions {
    MhOptions {
        steps: m.steps,
        burn_in: m.burn_in,
        thin: m.thin,
        proposal: m.proposal.into(),
        ..Default::default()
    }
}

fn prior_for(m: &McmcArgs, centers: &[f64]) -> Result<PriorSpec, CliError> {
    Ok(match m.prior {
        PriorKind::Gamma => PriorSpec::gamma_centered(centers, m.prior_variance)?,
        PriorKind::Normal => PriorSpec::normal_centered(centers, m.prior_sd)?,
        PriorKind::Flat => PriorSpec::flat(centers.len()),
    })
}

#[derive(Serialize)]
struct BayesResult {
    mle: Vec<(String, f64)>,
    prior: PriorSpec,
    summary: PosteriorSummary,
    bootstrap: Option<BootstrapResult>,
}

fn run_bayes(
    sample: &Sample,
    spec: &ModelSpec,
    start: &FitResult,
    m: &McmcArgs,
    seed: u64,
) -> Result<BayesResult, CliError> {
    let prior = prior_for(m, &start.estimates)?;
    let opts = mh_options(m);
    let chain = mh_sample(sample, spec, &prior, &start.estimates, derive_seed(seed, 1), &opts)?;
    if let Some(path) = &m.chain_out {
        let f = std::fs::File::create(path).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })?;
        chain.write_csv(std::io::BufWriter::new(f))?;
    }
    let summary = summarize(&chain, m.ci_alpha)?;
    for (n, a) in chain.names.iter().zip(&summary.acceptance) {
        if !(0.1..=0.6).contains(a) {
            log::warn!("acceptance rate for {n} is {a:.3}; consider more burn-in");
        }
    }
    let bootstrap = if m.bootstrap > 0 {
        let b = bootstrap_se(sample, spec, &prior, &start.estimates, m.bootstrap, derive_seed(seed, 2), &opts)?;
        for w in &b.warnings {
            log::warn!("{w}");
        }
        Some(b)
    } else {
        None
    };
    Ok(BayesResult {
        mle: start.names.iter().cloned().zip(start.estimates.iter().copied()).collect(),
        prior,
        summary,
        bootstrap,
    })
}

fn bayes_table(r: &BayesResult) -> String {
    let mut s = format!(
        "{:<14}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}\n",
        "", "MLE", "mean", "sd", "mode", "lower", "upper", "boot SE"
    );
    for (i, p) in r.summary.params.iter().enumerate() {
        let boot = r.bootstrap.as_ref().map_or("-".to_string(), |b| format!("{:.4}", b.se[i]));
        let _ = writeln!(
            s,
            "{:<14}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12}",
            p.name, r.mle[i].1, p.mean, p.sd, p.mode, p.lower, p.upper, boot
        );
    }
    let _ = writeln!(s, "retained draws: {}", r.summary.retained);
    s
}

pub fn fit_bayes(global: &GlobalArgs, args: &FitBayesArgs) -> Result<(), CliError> {
    let sample = load_sample(&args.data)?;
    let spec = args.spec.build()?;
    let opts = FitOptions {
        seed: global.seed(),
        ..Default::default()
    };
    let start = run_fit(&sample, &spec, None, &opts)?;
    not_converged(&start)?;
    let result = run_bayes(&sample, &spec, &start, &args.mcmc, global.seed())?;
    emit(global, "fit-bayes", args, &result, || bayes_table(&result))
}

#[derive(Serialize)]
struct StudyRun {
    config: StudyConfig,
    report: StudyReport,
}

pub fn study(global: &GlobalArgs, args: &StudyArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut base: StudyConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = global.seed {
        base.seed = s;
    }
    if let Some(r) = args.r {
        base.r = r;
    }
    let sizes = if args.sizes.is_empty() { vec![base.n] } else { args.sizes.clone() };
    let mut runs = Vec::new();
    for n in sizes {
        let cfg = StudyConfig { n, ..base.clone() };
        cfg.validate()?;
        log::info!("study n = {n}, r = {}", cfg.r);
        let report = run_study(&cfg)?;
        runs.push(StudyRun { config: cfg, report });
    }
    let resolved = serde_json::json!({ "args": args, "study": base });
    emit(global, "study", &resolved, &runs, || {
        runs.iter().map(|r| r.report.table()).collect::<Vec<_>>().join("\n")
    })?;
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| r.report.unreliable)
        .map(|r| format!("n = {}: {} of {} replicates failed", r.report.n, r.report.failures, r.report.r))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("unreliable study: {}", bad.join("; "))))
    }
}

#[derive(Serialize)]
struct FailedFit {
    family: BaselineFamily,
    error: String,
}

#[derive(Serialize)]
struct TwinResult {
    rows_read: usize,
    filtered_out: usize,
    simultaneous: Vec<String>,
    pairs_used: usize,
    fits: Vec<FitResult>,
    failed: Vec<FailedFit>,
    best: BaselineFamily,
    dependence_test: LrtSummary,
    probabilities: Vec<PairProbability>,
    validation: ValidationReport,
    monotonicity_violations: Vec<String>,
    bayes: Option<BayesResult>,
}

pub fn analyze_twins(global: &GlobalArgs, args: &TwinArgs) -> Result<(), CliError> {
    let load = load_twins_path(&args.data, args.category, args.b)?;
    let opts = FitOptions {
        seed: global.seed(),
        ..Default::default()
    };
    let (fits, failed) = compare_baselines(&load.records, &args.baselines, args.b, &opts);
    let failed: Vec<FailedFit> = failed
        .into_iter()
        .map(|(family, e)| {
            log::warn!("{family}: {e}");
            FailedFit {
                family,
                error: e.to_string(),
            }
        })
        .collect();
    let best = fits
        .first()
        .ok_or_else(|| CliError::Numerical("no baseline could be fitted".into()))?
        .clone();
    for f in &fits {
        for w in &f.warnings {
            log::warn!("{}: {w}", f.spec.family);
        }
    }
    let t = dependence_test(&load.records, best.spec.family, args.b, &FitOptions { dispersion: false, ..opts })?;
    let probabilities = load
        .records
        .iter()
        .map(|r| potential_appendectomy_prob(&best.params_hat, r, args.b))
        .collect::<dprh::Result<Vec<_>>>()?;
    let validation = validation_report(&best.params_hat, &load.records, args.b, args.threshold);
    let monotone = monotonicity_violations(&best.params_hat, &load.records, args.b, 50);
    let bayes = if args.bayes {
        let sample = dprh::twin::to_sample(&load.records, args.b)?;
        Some(run_bayes(&sample, &best.spec, &best, &args.mcmc, global.seed())?)
    } else {
        None
    };
    let result = TwinResult {
        rows_read: load.rows_read,
        filtered_out: load.filtered_out,
        simultaneous: load.simultaneous,
        pairs_used: load.records.len(),
        fits,
        failed,
        best: best.spec.family,
        dependence_test: LrtSummary {
            null: "theta' = theta".into(),
            statistic: t.statistic,
            dof: t.dof,
            p_value: t.p_value,
            null_loglik: t.null.loglik,
        },
        probabilities,
        validation,
        monotonicity_violations: monotone,
        bayes,
    };
    emit(global, "analyze-twins", args, &result, || twin_text(&result))?;
    not_converged(&best)
}

fn twin_text(r: &TwinResult) -> String {
    let mut s = format!(
        "{} pairs used ({} rows, {} filtered, {} simultaneous)\n\n",
        r.pairs_used,
        r.rows_read,
        r.filtered_out,
        r.simultaneous.len()
    );
    for f in &r.fits {
        let _ = writeln!(s, "{}", f.table());
    }
    let t = &r.dependence_test;
    let _ = writeln!(s, "LRT {}: statistic {:.4}, dof {}, p = {:.3e}\n", t.null, t.statistic, t.dof, t.p_value);
    let _ = writeln!(s, "{:<12}{:>8}{:>12}{:>10}{:>12}", "pair", "given", "P", "co-twin", "consistent");
    for row in &r.validation.rows {
        let given = r.probabilities.iter().find(|p| p.pair_id == row.pair_id).map_or(0, |p| p.given);
        let _ = writeln!(
            s,
            "{:<12}{:>8}{:>12.4}{:>10}{:>12}",
            row.pair_id,
            given,
            row.probability,
            if row.co_twin_operated { "event" } else { "none" },
            if row.consistent { "yes" } else { "no" }
        );
    }
    let _ = writeln!(
        s,
        "consistent: {}/{} ({:.4}) at threshold {}",
        r.validation.consistent, r.validation.total, r.validation.fraction, r.validation.threshold
    );
    if let Some(b) = &r.bayes {
        s.push('\n');
        s.push_str(&bayes_table(b));
    }
    s
}
