//! Baseline distributions `F0` for the proportional reversed hazards layer.
//!
//! Every family exposes its CDF, density, their logarithms, a closed-form
//! quantile and its support. All model code works with `log F0` and
//! `log f0`, since the joint law raises `F0` to sums and differences of the
//! proportionality constants and direct powers underflow quickly.
//!
//! Two families overlap with the proportionality constants. For the
//! generalized Rayleigh family `F0 = (1 - e^{-(λy)^2})^α`, so only the
//! products `α·θ` enter the joint density; for the inverse exponential
//! `F0^θ = e^{-θλ/y}`, so only `λ·θ` does. With every `θ` free, `α` (resp.
//! `λ`) is not identifiable on its own and the observed information is
//! singular.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DprhError, Result};
use crate::roots;
use crate::special::{log1m_exp, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineFamily {
    #[serde(rename = "exponentiated-gumbel")]
    ExponentiatedGumbel,
    #[serde(rename = "generalized-exponential")]
    GeneralizedExponential,
    #[serde(rename = "generalized-inverse-rayleigh")]
    GeneralizedInverseRayleigh,
    #[serde(rename = "generalized-rayleigh")]
    GeneralizedRayleigh,
    #[serde(rename = "inverse-exponential")]
    InverseExponential,
    #[serde(rename = "burr-iii")]
    BurrIII,
    #[serde(rename = "inverse-weibull")]
    InverseWeibull,
}

impl BaselineFamily {
    pub const ALL: [BaselineFamily; 7] = [
        BaselineFamily::ExponentiatedGumbel,
        BaselineFamily::GeneralizedExponential,
        BaselineFamily::GeneralizedInverseRayleigh,
        BaselineFamily::GeneralizedRayleigh,
        BaselineFamily::InverseExponential,
        BaselineFamily::BurrIII,
        BaselineFamily::InverseWeibull,
    ];

    /// Lowercase key used on the command line and in config files.
    pub fn key(self) -> &'static str {
        match self {
            BaselineFamily::ExponentiatedGumbel => "exponentiated-gumbel",
            BaselineFamily::GeneralizedExponential => "generalized-exponential",
            BaselineFamily::GeneralizedInverseRayleigh => "generalized-inverse-rayleigh",
            BaselineFamily::GeneralizedRayleigh => "generalized-rayleigh",
            BaselineFamily::InverseExponential => "inverse-exponential",
            BaselineFamily::BurrIII => "burr-iii",
            BaselineFamily::InverseWeibull => "inverse-weibull",
        }
    }

    /// Parameter names in canonical order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            BaselineFamily::ExponentiatedGumbel
            | BaselineFamily::GeneralizedExponential
            | BaselineFamily::InverseExponential => &["lambda"],
            BaselineFamily::GeneralizedInverseRayleigh => &["alpha", "lambda", "mu"],
            BaselineFamily::GeneralizedRayleigh => &["alpha", "lambda"],
            BaselineFamily::BurrIII => &["c"],
            BaselineFamily::InverseWeibull => &["alpha"],
        }
    }

    /// Whether the parameter at `index` must be strictly positive. Only the
    /// location `mu` of the generalized inverse Rayleigh family is unrestricted.
    pub fn param_is_positive(self, index: usize) -> bool {
        !(self == BaselineFamily::GeneralizedInverseRayleigh && index == 2)
    }
}

impl fmt::Display for BaselineFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for BaselineFamily {
    type Err = DprhError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        BaselineFamily::ALL
            .iter()
            .copied()
            .find(|f| f.key() == lower)
            .ok_or_else(|| {
                let keys: Vec<&str> = BaselineFamily::ALL.iter().map(|f| f.key()).collect();
                DprhError::invalid(
                    "baseline",
                    format!("unknown family `{s}`; expected one of {}", keys.join(", ")),
                )
            })
    }
}

/// A baseline distribution with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaselineRecord", into = "BaselineRecord")]
pub enum Baseline {
    ExponentiatedGumbel { lambda: f64 },
    GeneralizedExponential { lambda: f64 },
    GeneralizedInverseRayleigh { alpha: f64, lambda: f64, mu: f64 },
    GeneralizedRayleigh { alpha: f64, lambda: f64 },
    InverseExponential { lambda: f64 },
    BurrIII { c: f64 },
    InverseWeibull { alpha: f64 },
}

/// Serialized form: `{"family": "inverse-weibull", "alpha": 1.3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BaselineRecord {
    family: BaselineFamily,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

impl TryFrom<BaselineRecord> for Baseline {
    type Error = DprhError;

    fn try_from(r: BaselineRecord) -> Result<Self> {
        let pairs: Vec<(&str, f64)> = r.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Baseline::from_named(r.family, &pairs)
    }
}

impl From<Baseline> for BaselineRecord {
    fn from(b: Baseline) -> Self {
        let family = b.family();
        let params = family
            .param_names()
            .iter()
            .zip(b.params())
            .map(|(n, v)| (n.to_string(), v))
            .collect();
        BaselineRecord { family, params }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DprhError::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl Baseline {
    pub fn exponentiated_gumbel(lambda: f64) -> Result<Self> {
        Baseline::ExponentiatedGumbel { lambda }.validated()
    }
    pub fn generalized_exponential(lambda: f64) -> Result<Self> {
        Baseline::GeneralizedExponential { lambda }.validated()
    }
    pub fn generalized_inverse_rayleigh(alpha: f64, lambda: f64, mu: f64) -> Result<Self> {
        Baseline::GeneralizedInverseRayleigh { alpha, lambda, mu }.validated()
    }
    pub fn generalized_rayleigh(alpha: f64, lambda: f64) -> Result<Self> {
        Baseline::GeneralizedRayleigh { alpha, lambda }.validated()
    }
    pub fn inverse_exponential(lambda: f64) -> Result<Self> {
        Baseline::InverseExponential { lambda }.validated()
    }
    pub fn burr_iii(c: f64) -> Result<Self> {
        Baseline::BurrIII { c }.validated()
    }
    pub fn inverse_weibull(alpha: f64) -> Result<Self> {
        Baseline::InverseWeibull { alpha }.validated()
    }

    /// Build from a family and its parameters in canonical order.
    pub fn from_params(family: BaselineFamily, p: &[f64]) -> Result<Self> {
        let names = family.param_names();
        if p.len() != names.len() {
            return Err(DprhError::invalid(
                family.key(),
                format!("expected {} parameters ({}), got {}", names.len(), names.join(", "), p.len()),
            ));
        }
        let b = match family {
            BaselineFamily::ExponentiatedGumbel => Baseline::ExponentiatedGumbel { lambda: p[0] },
            BaselineFamily::GeneralizedExponential => {
                Baseline::GeneralizedExponential { lambda: p[0] }
            }
            BaselineFamily::GeneralizedInverseRayleigh => Baseline::GeneralizedInverseRayleigh {
                alpha: p[0],
                lambda: p[1],
                mu: p[2],
            },
            BaselineFamily::GeneralizedRayleigh => Baseline::GeneralizedRayleigh {
                alpha: p[0],
                lambda: p[1],
            },
            BaselineFamily::InverseExponential => Baseline::InverseExponential { lambda: p[0] },
            BaselineFamily::BurrIII => Baseline::BurrIII { c: p[0] },
            BaselineFamily::InverseWeibull => Baseline::InverseWeibull { alpha: p[0] },
        };
        b.validated()
    }

    /// Build from `name=value` pairs; every parameter of the family must be given once.
    pub fn from_named(family: BaselineFamily, pairs: &[(&str, f64)]) -> Result<Self> {
        let names = family.param_names();
        for (k, _) in pairs {
            if !names.contains(k) {
                return Err(DprhError::invalid(
                    *k,
                    format!("not a parameter of {family} (expected {})", names.join(", ")),
                ));
            }
        }
        let mut values = Vec::with_capacity(names.len());
        for n in names {
            let v = pairs
                .iter()
                .find(|(k, _)| k == n)
                .map(|(_, v)| *v)
                .ok_or_else(|| DprhError::invalid(*n, format!("missing for {family}")))?;
            values.push(v);
        }
        Baseline::from_params(family, &values)
    }

    fn validated(self) -> Result<Self> {
        let fam = self.family();
        for (i, (name, v)) in fam.param_names().iter().zip(self.params()).enumerate() {
            if fam.param_is_positive(i) {
                check_positive(name, v)?;
            } else if !v.is_finite() {
                return Err(DprhError::invalid(*name, format!("must be finite, got {v}")));
            }
        }
        Ok(self)
    }

    pub fn family(&self) -> BaselineFamily {
        match self {
            Baseline::ExponentiatedGumbel { .. } => BaselineFamily::ExponentiatedGumbel,
            Baseline::GeneralizedExponential { .. } => BaselineFamily::GeneralizedExponential,
            Baseline::GeneralizedInverseRayleigh { .. } => {
                BaselineFamily::GeneralizedInverseRayleigh
            }
            Baseline::GeneralizedRayleigh { .. } => BaselineFamily::GeneralizedRayleigh,
            Baseline::InverseExponential { .. } => BaselineFamily::InverseExponential,
            Baseline::BurrIII { .. } => BaselineFamily::BurrIII,
            Baseline::InverseWeibull { .. } => BaselineFamily::InverseWeibull,
        }
    }

    /// Parameters in canonical order (see [`BaselineFamily::param_names`]).
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Baseline::ExponentiatedGumbel { lambda }
            | Baseline::GeneralizedExponential { lambda }
            | Baseline::InverseExponential { lambda } => vec![lambda],
            Baseline::GeneralizedInverseRayleigh { alpha, lambda, mu } => vec![alpha, lambda, mu],
            Baseline::GeneralizedRayleigh { alpha, lambda } => vec![alpha, lambda],
            Baseline::BurrIII { c } => vec![c],
            Baseline::InverseWeibull { alpha } => vec![alpha],
        }
    }

    /// Support `(a, b)`; endpoints may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Baseline::ExponentiatedGumbel { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Baseline::GeneralizedInverseRayleigh { mu, .. } => (mu, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `log F0(y)`; `-inf` at or below the lower support bound.
    pub fn log_cdf(&self, y: f64) -> f64 {
        let (a, _) = self.support();
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= a {
            return f64::NEG_INFINITY;
        }
        if y == f64::INFINITY {
            return 0.0;
        }
        match *self {
            Baseline::ExponentiatedGumbel { lambda } => -(-lambda * y).exp(),
            Baseline::GeneralizedExponential { lambda } => log1m_exp(-lambda * y),
            Baseline::GeneralizedInverseRayleigh { alpha, lambda, mu } => {
                let x = y - mu;
                let log_k = log1m_exp(-lambda / (x * x));
                log1m_exp(alpha * log_k)
            }
            Baseline::GeneralizedRayleigh { alpha, lambda } => {
                let s = (lambda * y) * (lambda * y);
                alpha * log1m_exp(-s)
            }
            Baseline::InverseExponential { lambda } => -lambda / y,
            Baseline::BurrIII { c } => -softplus(-c * y.ln()),
            Baseline::InverseWeibull { alpha } => -(-alpha * y.ln()).exp(),
        }
    }

    /// `log f0(y)`; `-inf` outside the open support.
    pub fn log_pdf(&self, y: f64) -> f64 {
        let (a, b) = self.support();
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= a || y >= b {
            return f64::NEG_INFINITY;
        }
        match *self {
            Baseline::ExponentiatedGumbel { lambda } => {
                lambda.ln() - lambda * y - (-lambda * y).exp()
            }
            Baseline::GeneralizedExponential { lambda } => lambda.ln() - lambda * y,
            Baseline::GeneralizedInverseRayleigh { alpha, lambda, mu } => {
                let x = y - mu;
                let s = lambda / (x * x);
                let log_k = log1m_exp(-s);
                alpha.ln() + (alpha - 1.0) * log_k - s + std::f64::consts::LN_2 + lambda.ln()
                    - 3.0 * x.ln()
            }
            Baseline::GeneralizedRayleigh { alpha, lambda } => {
                let s = (lambda * y) * (lambda * y);
                alpha.ln() + (alpha - 1.0) * log1m_exp(-s) + std::f64::consts::LN_2
                    + 2.0 * lambda.ln()
                    + y.ln()
                    - s
            }
            Baseline::InverseExponential { lambda } => lambda.ln() - 2.0 * y.ln() - lambda / y,
            Baseline::BurrIII { c } => {
                let ly = y.ln();
                c.ln() - (c + 1.0) * ly - 2.0 * softplus(-c * ly)
            }
            Baseline::InverseWeibull { alpha } => {
                let ly = y.ln();
                alpha.ln() - (alpha + 1.0) * ly - (-alpha * ly).exp()
            }
        }
    }

    /// `F0(y)`, clamped to 0 below and 1 above the support.
    pub fn cdf(&self, y: f64) -> f64 {
        self.log_cdf(y).exp()
    }

    /// `f0(y)`, zero outside the support.
    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    /// Quantile from a log-probability: `y` with `log F0(y) = log_u`, for `log_u < 0`.
    /// Working in log space keeps tiny probabilities such as `F0(t)·U^{1/θ}` exact.
    pub fn quantile_log(&self, log_u: f64) -> Result<f64> {
        if !(log_u < 0.0) || log_u == f64::NEG_INFINITY {
            return Err(DprhError::Domain(format!(
                "quantile needs log-probability in (-inf, 0), got {log_u}"
            )));
        }
        let y = match *self {
            Baseline::ExponentiatedGumbel { lambda } => -(-log_u).ln() / lambda,
            Baseline::GeneralizedExponential { lambda } => -log1m_exp(log_u) / lambda,
            Baseline::GeneralizedInverseRayleigh { alpha, lambda, mu } => {
                // 1 - u = k^alpha, k = 1 - e^{-s}, s = lambda / (y - mu)^2
                let log_k = log1m_exp(log_u) / alpha;
                let s = -log1m_exp(log_k);
                mu + (lambda / s).sqrt()
            }
            Baseline::GeneralizedRayleigh { alpha, lambda } => {
                let s = -log1m_exp(log_u / alpha);
                s.sqrt() / lambda
            }
            Baseline::InverseExponential { lambda } => -lambda / log_u,
            Baseline::BurrIII { c } => {
                // y^{-c} = (1 - u) / u
                let log_ratio = log1m_exp(log_u) - log_u;
                (-log_ratio / c).exp()
            }
            Baseline::InverseWeibull { alpha } => (-log_u).powf(-1.0 / alpha),
        };
        if y.is_nan() {
            return Err(DprhError::Numerical(format!(
                "quantile of {} failed at log u = {log_u}",
                self.family()
            )));
        }
        Ok(y)
    }

    /// `F0^{-1}(u)` for `0 < u < 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(DprhError::Domain(format!("quantile needs u in (0, 1), got {u}")));
        }
        self.quantile_log(u.ln())
    }

    /// Quantile by bracketed bisection on the CDF, to `1e-10` relative width.
    /// Fallback for families without a closed-form inverse.
    pub fn quantile_bisection(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(DprhError::Domain(format!("quantile needs u in (0, 1), got {u}")));
        }
        let (a, b) = self.support();
        let target = u.ln();
        let g = |y: f64| self.log_cdf(y) - target;
        let start = if a.is_finite() { a + 1.0 } else { 0.0 };
        let floor = if a.is_finite() { a } else { f64::MIN };
        let (lo, hi) = roots::bracket_increasing(&g, start, floor, b.min(f64::MAX))?;
        if lo == hi {
            return Ok(lo);
        }
        let width = 1e-10 * (lo.abs().max(hi.abs())).max(1e-300);
        roots::bisect(g, lo, hi, width)
    }

    /// Baseline reversed hazard `r0 = f0 / F0`, computed as `exp(log f0 - log F0)`.
    pub fn reversed_hazard(&self, y: f64) -> Result<f64> {
        let lc = self.log_cdf(y);
        if lc == f64::NEG_INFINITY {
            return Err(DprhError::Domain(format!(
                "reversed hazard undefined where F0 = 0 (y = {y})"
            )));
        }
        Ok((self.log_pdf(y) - lc).exp())
    }

    /// Heuristic starting values for fitting this family to data on its natural scale.
    pub fn default_start(family: BaselineFamily, values: &[f64]) -> Result<Baseline> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Err(DprhError::Data("no finite values to seed baseline".into()));
        }
        v.sort_by(f64::total_cmp);
        let median = v[v.len() / 2];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let scale = if median.abs() > 0.0 { median.abs() } else { 1.0 };
        match family {
            BaselineFamily::ExponentiatedGumbel => Baseline::exponentiated_gumbel(1.0 / scale),
            BaselineFamily::GeneralizedExponential => {
                Baseline::generalized_exponential(1.0 / mean.abs().max(1e-12))
            }
            BaselineFamily::GeneralizedInverseRayleigh => {
                let mu = v[0] - 0.1 * scale;
                let x = median - mu;
                Baseline::generalized_inverse_rayleigh(1.0, x * x, mu)
            }
            BaselineFamily::GeneralizedRayleigh => {
                Baseline::generalized_rayleigh(1.0, 1.0 / mean.abs().max(1e-12))
            }
            BaselineFamily::InverseExponential => Baseline::inverse_exponential(scale),
            BaselineFamily::BurrIII => Baseline::burr_iii(1.0),
            BaselineFamily::InverseWeibull => Baseline::inverse_weibull(1.0),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = self.family();
        write!(f, "{}(", fam)?;
        for (i, (n, v)) in fam.param_names().iter().zip(self.params()).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, ")")
    }
}

/// Parse `name=value` pairs such as `alpha=1.3`.
pub fn parse_named_params(items: &[String]) -> Result<Vec<(String, f64)>> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| DprhError::invalid(s.as_str(), "expected name=value"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| DprhError::invalid(k.trim(), format!("not a number: `{v}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(x: f64) -> f64 {
        x.exp()
    }

    #[test]
    fn cdf_reference_values() {
        let iw = Baseline::inverse_weibull(1.0).unwrap();
        assert!((iw.cdf(1.0) - e(-1.0)).abs() < 1e-15);
        let ge = Baseline::generalized_exponential(1.0).unwrap();
        assert_eq!(ge.cdf(f64::INFINITY), 1.0);
        assert!((ge.cdf(1e6) - 1.0).abs() < 1e-15);
        let burr = Baseline::burr_iii(2.0).unwrap();
        assert!((burr.cdf(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pdf_reference_values() {
        let ie = Baseline::inverse_exponential(1.0).unwrap();
        assert!((ie.pdf(1.0) - e(-1.0)).abs() < 1e-15);
        assert_eq!(ie.pdf(-1.0), 0.0);
        // generalized Rayleigh(1, 1) at 1: 2 e^{-1}
        let gr = Baseline::generalized_rayleigh(1.0, 1.0).unwrap();
        assert!((gr.pdf(1.0) - 2.0 * e(-1.0)).abs() < 1e-14);
    }

    #[test]
    fn pdf_matches_central_difference() {
        let iw = Baseline::inverse_weibull(2.0).unwrap();
        let h = 1e-5;
        let fd = (iw.cdf(2.0 + h) - iw.cdf(2.0 - h)) / (2.0 * h);
        assert!((iw.pdf(2.0) - fd).abs() < 1e-6);
        let gr = Baseline::generalized_rayleigh(1.0, 1.0).unwrap();
        let fd = (gr.cdf(1.0 + h) - gr.cdf(1.0 - h)) / (2.0 * h);
        assert!((gr.pdf(1.0) - fd).abs() < 1e-6);
    }

    #[test]
    fn quantile_reference_values() {
        let iw = Baseline::inverse_weibull(1.0).unwrap();
        assert!((iw.quantile(e(-1.0)).unwrap() - 1.0).abs() < 1e-14);
        let ge = Baseline::generalized_exponential(2.0).unwrap();
        assert!((ge.quantile(0.5).unwrap() - (-(0.5f64).ln() / 2.0)).abs() < 1e-15);
        assert!(iw.quantile(0.0).is_err());
        assert!(iw.quantile(1.0).is_err());
        assert!(iw.quantile(-0.2).is_err());
    }

    #[test]
    fn reversed_hazard_inverse_exponential() {
        let ie = Baseline::inverse_exponential(2.5).unwrap();
        for &y in &[0.3, 1.0, 4.0] {
            let r = ie.reversed_hazard(y).unwrap();
            assert!((r - 2.5 / (y * y)).abs() < 1e-12 * r);
        }
        assert!(ie.reversed_hazard(0.0).is_err());
    }

    #[test]
    fn reversed_hazard_is_log_cdf_slope() {
        let iw = Baseline::inverse_weibull(2.0).unwrap();
        let h = 1e-6;
        let fd = (iw.log_cdf(1.5 + h) - iw.log_cdf(1.5 - h)) / (2.0 * h);
        assert!((iw.reversed_hazard(1.5).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(Baseline::inverse_weibull(0.0).is_err());
        assert!(Baseline::generalized_rayleigh(1.0, -2.0).is_err());
        assert!(Baseline::burr_iii(f64::NAN).is_err());
        // location may be negative
        assert!(Baseline::generalized_inverse_rayleigh(1.0, 1.0, -3.0).is_ok());
        let err = Baseline::from_named(BaselineFamily::InverseWeibull, &[("lambda", 1.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn supports_and_clamping() {
        let eg = Baseline::exponentiated_gumbel(1.0).unwrap();
        assert_eq!(eg.support(), (f64::NEG_INFINITY, f64::INFINITY));
        assert!(eg.cdf(-5.0) > 0.0);
        let gir = Baseline::generalized_inverse_rayleigh(1.5, 2.0, 1.0).unwrap();
        assert_eq!(gir.support().0, 1.0);
        assert_eq!(gir.cdf(0.5), 0.0);
        assert_eq!(gir.pdf(1.0), 0.0);
        let iw = Baseline::inverse_weibull(1.0).unwrap();
        assert_eq!(iw.cdf(-1.0), 0.0);
        assert_eq!(iw.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn json_round_trip_and_keys() {
        for fam in BaselineFamily::ALL {
            assert_eq!(fam.key().parse::<BaselineFamily>().unwrap(), fam);
            let b = random_baseline(fam, &mut ChaCha8Rng::seed_from_u64(1));
            let s = serde_json::to_string(&b).unwrap();
            assert!(s.contains(fam.key()));
            let back: Baseline = serde_json::from_str(&s).unwrap();
            assert_eq!(back, b);
        }
        let bad = r#"{"family":"inverse-weibull","alpha":-1.0}"#;
        assert!(serde_json::from_str::<Baseline>(bad).is_err());
        assert!("weibull".parse::<BaselineFamily>().is_err());
    }

    #[test]
    fn bisection_quantile_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fam in BaselineFamily::ALL {
            let b = random_baseline(fam, &mut rng);
            for &u in &[0.01, 0.3, 0.5, 0.9, 0.999] {
                let q = b.quantile(u).unwrap();
                let qb = b.quantile_bisection(u).unwrap();
                assert!((q - qb).abs() <= 1e-8 * q.abs().max(1.0), "{b} u={u}: {q} vs {qb}");
            }
        }
    }

    pub(crate) fn random_baseline(fam: BaselineFamily, rng: &mut impl Rng) -> Baseline {
        let p: Vec<f64> = fam
            .param_names()
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if fam.param_is_positive(i) {
                    rng.random_range(0.5..3.0)
                } else {
                    rng.random_range(-2.0..2.0)
                }
            })
            .collect();
        Baseline::from_params(fam, &p).unwrap()
    }

    /// Interior grid on the bulk of the distribution (quantiles 1%..99%).
    fn interior_points(b: &Baseline, k: usize) -> Vec<f64> {
        (1..k)
            .map(|i| b.quantile(0.01 + 0.98 * i as f64 / k as f64).unwrap())
            .collect()
    }

    #[test]
    fn family_invariants_over_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for fam in BaselineFamily::ALL {
            for _ in 0..50 {
                let b = random_baseline(fam, &mut rng);
                let (a, hi) = b.support();
                // limits at the support edges
                let lo_probe = if a.is_finite() { a + 1e-15 } else { -1e6 };
                assert!(b.cdf(lo_probe) < 1e-6, "{b}: F0(a+) = {}", b.cdf(lo_probe));
                assert!(b.cdf(hi.min(1e12)) > 1.0 - 1e-6, "{b}");
                let ys = interior_points(&b, 40);
                let mut prev = 0.0;
                for &y in &ys {
                    let c = b.cdf(y);
                    assert!(c >= prev, "{b}: not monotone at {y}");
                    prev = c;
                    assert!(b.pdf(y) >= 0.0);
                    // finite-difference derivative
                    let h = 1e-5 * y.abs().max(1e-2);
                    let fd = (b.cdf(y + h) - b.cdf(y - h)) / (2.0 * h);
                    let pdf = b.pdf(y);
                    assert!(
                        (fd - pdf).abs() <= 1e-5 * pdf.max(1e-3),
                        "{b} y={y}: pdf {pdf} fd {fd}"
                    );
                    // quantile round trip
                    let back = b.quantile(c).unwrap();
                    assert!((back - y).abs() <= 1e-8 * y.abs().max(1.0), "{b} y={y} back={back}");
                    // reversed hazard identity
                    let r = b.reversed_hazard(y).unwrap();
                    assert!((r * c - pdf).abs() <= 1e-10 * pdf.max(1e-300).max(1e-10));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn quantile_round_trip(fam_idx in 0usize..7, seed in 0u64..1000, u in 0.001f64..0.999) {
            let fam = BaselineFamily::ALL[fam_idx];
            let b = random_baseline(fam, &mut ChaCha8Rng::seed_from_u64(seed));
            let y = b.quantile(u).unwrap();
            prop_assert!((b.cdf(y) - u).abs() < 1e-10);
        }
    }
}
