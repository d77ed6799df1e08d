mod common;

use dprh::bayes::{bootstrap_se, kde_mode, mh_sample, mh_sample_fn, posterior_mode, summarize, MhOptions, Prior, PriorSpec};
use dprh::likelihood::complete_mle_closed_form;
use dprh::mle::{
    fit_mle, hessian_information, likelihood_ratio_test, observed_information, FitOptions, ModelSpec,
    ThetaPrimeSpec, ThetaSpec,
};
use dprh::sampling::{generate_iw_tied, generate_sample, CensoringScheme, ConditionalDraw};
use dprh::{BaselineFamily, DprhParams, Sample};

fn tied_spec() -> ModelSpec {
    ModelSpec::full(BaselineFamily::InverseWeibull).with_theta(ThetaSpec::Tied)
}

fn synthetic(n: usize, seed: u64) -> Sample {
    let p = DprhParams::new(1.5, 1.5, 1.7, 1.8, common::iw(1.3)).unwrap();
    let scheme = CensoringScheme::solve(&p, 0.1).unwrap();
    Sample::new(generate_sample(&p, n, &scheme, seed, ConditionalDraw::Exact).unwrap()).unwrap()
}

fn quiet() -> FitOptions {
    FitOptions {
        dispersion: false,
        ..Default::default()
    }
}

#[test]
fn numeric_fit_matches_closed_form_on_many_sets() {
    let b = common::iw(1.3);
    let spec = ModelSpec::full(BaselineFamily::InverseWeibull).with_fixed_baseline(b);
    for seed in 0..20 {
        let data = generate_iw_tied(1.5, 1.7, 1.8, 1.3, 200, 0.0, 1000 + seed).unwrap();
        let exact = complete_mle_closed_form(&data, &b).unwrap();
        let fit = fit_mle(&Sample::new(data).unwrap(), &spec, None, &quiet()).unwrap();
        for i in 0..4 {
            assert!((fit.estimates[i] - exact[i]).abs() < 1e-5, "seed {seed}: {:?} vs {exact:?}", fit.estimates);
        }
    }
}

#[test]
fn restarting_from_the_solution_stays_put() {
    let sample = synthetic(100, 4);
    let fit = fit_mle(&sample, &tied_spec(), None, &quiet()).unwrap();
    let again = fit_mle(&sample, &tied_spec(), Some(&fit.params_hat), &quiet()).unwrap();
    for (a, b) in fit.estimates.iter().zip(&again.estimates) {
        assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", fit.estimates, again.estimates);
    }
    assert!(again.loglik >= fit.loglik - 1e-9);
}

#[test]
fn dispersion_is_symmetric_psd_and_intervals_bracket() {
    let sample = synthetic(100, 8);
    let fit = fit_mle(&sample, &tied_spec(), None, &FitOptions::default()).unwrap();
    let cov = fit.dispersion.as_ref().expect("dispersion");
    let k = cov.len();
    let trace: f64 = (0..k).map(|i| cov[i][i]).sum();
    for i in 0..k {
        for j in 0..k {
            assert!((cov[i][j] - cov[j][i]).abs() < 1e-8);
        }
    }
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| cov[i][j]);
    let eig = m.symmetric_eigen().eigenvalues;
    assert!(eig.iter().all(|e| *e >= -1e-8 * trace), "{eig}");
    for (e, (lo, hi)) in fit.estimates.iter().zip(fit.ci.as_ref().unwrap()) {
        assert!(lo < e && e < hi);
    }
    assert!((fit.aic - (-2.0 * fit.loglik + 2.0 * k as f64)).abs() < 1e-9);
}

#[test]
fn information_is_stable_under_step_halving() {
    let sample = synthetic(100, 12);
    let spec = tied_spec();
    let fit = fit_mle(&sample, &spec, None, &quiet()).unwrap();
    let x0 = fit.estimates.clone();
    let full = observed_information(&sample, &spec, &x0).unwrap();
    // differencing g(y) = f(x0 + (y - x0)/2) with the default steps is
    // differencing f with half steps; the chain rule gives a factor 4
    let g = |y: &[f64]| {
        let x: Vec<f64> = y.iter().zip(&x0).map(|(y, x)| x + (y - x) / 2.0).collect();
        spec.log_likelihood(&sample, &x)
    };
    let half = hessian_information(&g, &x0, &spec.param_names()).unwrap();
    for i in 0..x0.len() {
        for j in 0..x0.len() {
            let (a, b) = (full[i][j], 4.0 * half[i][j]);
            let scale = (full[i][i] * full[j][j]).sqrt();
            assert!((a - b).abs() < 1e-3 * scale, "({i},{j}): {a} vs {b}");
        }
    }
}

#[test]
fn lrt_size_is_calibrated() {
    // data under θi' = θi; test that against free θ' (2 degrees of freedom)
    let truth = DprhParams::independent(1.3, 1.3, common::iw(1.2)).unwrap();
    let scheme = CensoringScheme::solve(&truth, 0.1).unwrap();
    let alt = tied_spec();
    let null = alt.with_theta_prime(ThetaPrimeSpec::EqualTheta);
    let opts = FitOptions {
        starts: 2,
        ..quiet()
    };
    let reps = 200;
    let mut rejected = 0;
    for r in 0..reps {
        let data = generate_sample(&truth, 100, &scheme, 5000 + r, ConditionalDraw::Exact).unwrap();
        let t = likelihood_ratio_test(&Sample::new(data).unwrap(), &null, &alt, None, &opts).unwrap();
        assert_eq!(t.dof, 2);
        if t.p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / reps as f64;
    assert!((rate - 0.05).abs() <= 0.03, "rejection rate {rate}");
}

#[test]
fn mse_falls_with_sample_size() {
    let truth = [1.5, 1.7, 1.8, 1.3];
    let mse = |n: usize| {
        let mut acc = [0.0; 4];
        for r in 0..40 {
            let fit = fit_mle(&synthetic(n, 700 + r), &tied_spec(), None, &quiet()).unwrap();
            for i in 0..4 {
                acc[i] += (fit.estimates[i] - truth[i]).powi(2) / 40.0;
            }
        }
        acc
    };
    let (small, large) = (mse(30), mse(200));
    for i in 0..4 {
        assert!(large[i] < small[i], "{small:?} vs {large:?}");
    }
}

/// Batch-means Monte Carlo standard error of the mean of `xs`.
fn batch_se(xs: &[f64]) -> f64 {
    let batches = 25;
    let len = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(len).take(batches).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[test]
fn sampler_recovers_bivariate_normal() {
    let (m1, m2, s1, s2, rho) = (2.0, -1.0, 0.5, 1.5, 0.6);
    let log_post = |x: &[f64]| {
        let (a, b) = ((x[0] - m1) / s1, (x[1] - m2) / s2);
        -(a * a - 2.0 * rho * a * b + b * b) / (2.0 * (1.0 - rho * rho))
    };
    for proposal in [dprh::bayes::ProposalKind::ComponentWise, dprh::bayes::ProposalKind::Joint] {
        let opts = MhOptions {
            steps: 200_000,
            proposal,
            ..Default::default()
        };
        let chain = mh_sample_fn(log_post, vec!["a".into(), "b".into()], &[0.0, 0.0], 5, &opts).unwrap();
        let (x, y) = (chain.marginal(0), chain.marginal(1));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&x), mean(&y));
        assert!((mx - m1).abs() < 3.0 * batch_se(&x), "{proposal:?} mean {mx}");
        assert!((my - m2).abs() < 3.0 * batch_se(&y), "{proposal:?} mean {my}");
        let sq = |v: &[f64], m: f64, t: f64| v.iter().map(|a| (a - m).powi(2) - t).collect::<Vec<_>>();
        let (vx, vy) = (sq(&x, m1, s1 * s1), sq(&y, m2, s2 * s2));
        assert!(mean(&vx).abs() < 3.0 * batch_se(&vx), "{proposal:?} var");
        assert!(mean(&vy).abs() < 3.0 * batch_se(&vy), "{proposal:?} var");
        let cxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - m1) * (b - m2) - rho * s1 * s2).collect();
        assert!(mean(&cxy).abs() < 3.0 * batch_se(&cxy), "{proposal:?} cov");
        let acc = chain.acceptance.iter().copied().fold(f64::NAN, f64::max);
        assert!(acc > 0.1 && acc < 0.6, "{acc}");
    }
}

#[test]
fn flat_prior_mode_agrees_with_mle() {
    let spec = tied_spec();
    for seed in 0..3 {
        let sample = synthetic(100, 300 + seed);
        let fit = fit_mle(&sample, &spec, None, &quiet()).unwrap();
        let prior = PriorSpec::new(vec![Prior::gamma(1.0, 1e-3).unwrap(); 4]);
        let chain = mh_sample(&sample, &spec, &prior, &fit.estimates, seed, &MhOptions::default()).unwrap();
        let s = summarize(&chain, 0.05).unwrap();
        for (p, m) in s.params.iter().zip(&fit.estimates) {
            assert!((p.mode - m).abs() < 2.0 * p.sd, "{}: mode {} mle {m} sd {}", p.name, p.mode, p.sd);
            assert!(p.lower <= p.mode && p.mode <= p.upper);
        }
    }
}

#[test]
fn kde_mode_of_gamma_draws() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Gamma};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let g = Gamma::new(4.0, 0.5).unwrap();
    let xs: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
    let m = kde_mode(&xs).unwrap();
    assert!((m - 1.5).abs() < 0.03, "{m}");
}

#[test]
fn bootstrap_se_shrinks_with_n() {
    let spec = tied_spec();
    let opts = MhOptions {
        steps: 1500,
        ..Default::default()
    };
    let se_theta = |n: usize| {
        let sample = synthetic(n, 77);
        let fit = fit_mle(&sample, &spec, None, &quiet()).unwrap();
        let prior = PriorSpec::gamma_centered(&fit.estimates, 1.2).unwrap();
        let chain = mh_sample(&sample, &spec, &prior, &fit.estimates, 1, &opts).unwrap();
        assert_eq!(posterior_mode(&chain).unwrap().len(), 4);
        let r = bootstrap_se(&sample, &spec, &prior, &fit.estimates, 12, 9, &opts).unwrap();
        assert_eq!(r.b_effective, 12);
        assert!((r.se[0] - r.variance[0].sqrt()).abs() < 1e-15);
        r.se[0]
    };
    let (small, large) = (se_theta(100), se_theta(400));
    assert!(large < small, "{small} vs {large}");
}
