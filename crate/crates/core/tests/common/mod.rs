//! Reference implementations used as test oracles. They are written from the
//! model definition in plain (non-log) arithmetic and share nothing with the
//! library's model code apart from the baseline `F0`/`f0`.
#![allow(dead_code)]

use dprh::quadrature::Quadrature;
use dprh::{Baseline, DprhParams};
use rand::Rng;

/// Joint density from its definition.
pub fn pdf(p: &DprhParams, y1: f64, y2: f64) -> f64 {
    let b = &p.baseline;
    let th = p.theta1 + p.theta2;
    let (u1, u2) = (b.cdf(y1), b.cdf(y2));
    let ff = b.pdf(y1) * b.pdf(y2);
    if ff == 0.0 {
        return 0.0;
    }
    if y1 < y2 {
        p.theta1_prime * p.theta2 * ff * u1.powf(p.theta1_prime - 1.0) * u2.powf(th - p.theta1_prime - 1.0)
    } else {
        p.theta1 * p.theta2_prime * ff * u1.powf(th - p.theta2_prime - 1.0) * u2.powf(p.theta2_prime - 1.0)
    }
}

/// Joint CDF for `u1 = F0(y1) <= u2 = F0(y2)` with coordinate 1 the smaller,
/// obtained by integrating the density in closed form:
/// `F = (θ1/θ) u1^θ + (θ2/δ) u1^{θ1'} u2^δ - θ1'θ2/(δθ) u1^θ`, `δ = θ - θ1'`,
/// and `F = u1^θ (1 + θ2 ln(u2/u1))` when `δ = 0`.
fn cdf_lo_first(th1: f64, th2: f64, p1: f64, u1: f64, u2: f64) -> f64 {
    let th = th1 + th2;
    let d = th - p1;
    if d == 0.0 {
        u1.powf(th) * (1.0 + th2 * (u2 / u1).ln())
    } else {
        th1 / th * u1.powf(th) + th2 / d * u1.powf(p1) * u2.powf(d) - p1 * th2 / (d * th) * u1.powf(th)
    }
}

/// Literal closed-form joint CDF (all four parameter cases).
pub fn cdf(p: &DprhParams, y1: f64, y2: f64) -> f64 {
    let b = &p.baseline;
    let (u1, u2) = (b.cdf(y1), b.cdf(y2));
    if u1 == 0.0 || u2 == 0.0 {
        return 0.0;
    }
    if y1 <= y2 {
        cdf_lo_first(p.theta1, p.theta2, p.theta1_prime, u1, u2)
    } else {
        cdf_lo_first(p.theta2, p.theta1, p.theta2_prime, u2, u1)
    }
}

/// `∫∫ f` over `(lo1, y1) x (lo2, y2)` by nested adaptive quadrature, with
/// the inner integral split at the diagonal kink.
pub fn quad_cdf(p: &DprhParams, lo1: f64, y1: f64, lo2: f64, y2: f64) -> f64 {
    let q = Quadrature::with_tol(1e-11, 1e-10);
    let inner = |s: f64| {
        let g = |t: f64| pdf(p, s, t);
        if s > lo2 && s < y2 {
            q.integrate(g, lo2, s).value + q.integrate(g, s, y2).value
        } else {
            q.integrate(g, lo2, y2).value
        }
    };
    q.integrate(inner, lo1, y1).value
}

/// Mixed second difference of the oracle CDF.
pub fn fd_pdf(p: &DprhParams, y1: f64, y2: f64, h: f64) -> f64 {
    let c = |a: f64, b: f64| cdf(p, a, b);
    (c(y1 + h, y2 + h) - c(y1 + h, y2 - h) - c(y1 - h, y2 + h) + c(y1 - h, y2 - h)) / (4.0 * h * h)
}

/// `∂F/∂y1`, `∂F/∂y2` by central differences of the oracle CDF.
pub fn fd_partials(p: &DprhParams, y1: f64, y2: f64, h: f64) -> (f64, f64) {
    let c = |a: f64, b: f64| cdf(p, a, b);
    (
        (c(y1 + h, y2) - c(y1 - h, y2)) / (2.0 * h),
        (c(y1, y2 + h) - c(y1, y2 - h)) / (2.0 * h),
    )
}

/// Local dependence `F f / (∂1F ∂2F)` from finite differences.
pub fn fd_beta(p: &DprhParams, y1: f64, y2: f64, h: f64) -> f64 {
    let (f1, f2) = fd_partials(p, y1, y2, h);
    cdf(p, y1, y2) * pdf(p, y1, y2) / (f1 * f2)
}

/// Log-likelihood contribution of one left-censored pair written out per
/// observation pattern, using quadrature for the censored coordinates:
/// observed coordinates enter through the density, censored ones through
/// integrals of it.
pub fn loglik_term_quadrature(p: &DprhParams, t1: f64, d1: bool, t2: f64, d2: bool) -> f64 {
    let (a, _) = p.baseline.support();
    let q = Quadrature::with_tol(1e-13, 1e-11);
    let v = match (d1, d2) {
        (true, true) => pdf(p, t1, t2),
        (true, false) => {
            let g = |s: f64| pdf(p, t1, s);
            if t1 < t2 {
                q.integrate(g, a, t1).value + q.integrate(g, t1, t2).value
            } else {
                q.integrate(g, a, t2).value
            }
        }
        (false, true) => {
            let g = |s: f64| pdf(p, s, t2);
            if t2 < t1 {
                q.integrate(g, a, t2).value + q.integrate(g, t2, t1).value
            } else {
                q.integrate(g, a, t1).value
            }
        }
        (false, false) => cdf(p, t1, t2),
    };
    v.ln()
}

pub fn iw(alpha: f64) -> Baseline {
    Baseline::inverse_weibull(alpha).unwrap()
}

/// Random IW-baseline parameters in one of the four cases: 1 generic,
/// 2 `θ1' = θ`, 3 `θ2' = θ`, 4 both.
pub fn random_iw_params<R: Rng>(rng: &mut R, case: u8) -> DprhParams {
    let t1: f64 = rng.random_range(0.4..2.5);
    let t2: f64 = rng.random_range(0.4..2.5);
    let th = t1 + t2;
    let mut p1: f64 = rng.random_range(0.3..4.0);
    let mut p2: f64 = rng.random_range(0.3..4.0);
    // keep generic draws away from the degenerate manifold
    if (p1 - th).abs() < 0.05 {
        p1 += 0.1;
    }
    if (p2 - th).abs() < 0.05 {
        p2 += 0.1;
    }
    match case {
        2 => p1 = th,
        3 => p2 = th,
        4 => {
            p1 = th;
            p2 = th;
        }
        _ => {}
    }
    let alpha = rng.random_range(0.8..2.5);
    DprhParams::new(t1, t2, p1, p2, iw(alpha)).unwrap()
}

/// A point `(y1, y2)` drawn so that both `F0` values are moderate.
pub fn random_point<R: Rng>(rng: &mut R, b: &Baseline) -> (f64, f64) {
    loop {
        let y1 = b.quantile(rng.random_range(0.1..0.95)).unwrap();
        let y2 = b.quantile(rng.random_range(0.1..0.95)).unwrap();
        if (y1 - y2).abs() > 0.02 * y1.max(y2) {
            return (y1, y2);
        }
    }
}
