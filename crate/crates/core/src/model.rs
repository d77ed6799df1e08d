//! The DPRH joint law: density, distribution function, marginals and derived
//! quantities.
//!
//! Everything is evaluated on the log scale in terms of `u = F0(y)`. With
//! `θ = θ1 + θ2`, the joint CDF for `y1 < y2` is
//!
//! ```text
//! F(y1, y2) = u1^θ · [1 + θ2 · g(θ - θ1', ln u2 - ln u1)],   g(δ, L) = (e^{δL} - 1) / δ
//! ```
//!
//! and the mirror image for `y1 > y2`. `g` tends to `L` as `δ → 0`, which is
//! exactly the logarithmic form of the degenerate parameter cases, so a single
//! expression covers all four cases once `g` is evaluated carefully near
//! `δ = 0` (see [`log_g`]).

use serde::{Deserialize, Serialize};

use crate::baselines::Baseline;
use crate::error::{DprhError, Result};
use crate::special::{log_add_exp, log1m_exp, softplus};

/// Width of the band `|θ1 + θ2 - θi'| < EPS_CASE` treated as the degenerate
/// (logarithmic) case.
pub const EPS_CASE: f64 = 1e-9;

/// One of the two components of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Component {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Component::First),
            2 => Ok(Component::Second),
            _ => Err(DprhError::invalid("component", format!("must be 1 or 2, got {i}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Component::First => Component::Second,
            Component::Second => Component::First,
        }
    }

    /// 1 or 2.
    pub fn index(self) -> usize {
        match self {
            Component::First => 1,
            Component::Second => 2,
        }
    }
}

/// Which closed form of the joint CDF applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamCase {
    /// `θ1 + θ2 ≠ θ1'` and `θ1 + θ2 ≠ θ2'`.
    Case1,
    /// `θ1 + θ2 = θ1'` only.
    Case2,
    /// `θ1 + θ2 = θ2'` only.
    Case3,
    /// `θ1 + θ2 = θ1' = θ2'`.
    Case4,
}

impl ParamCase {
    pub fn number(self) -> u8 {
        match self {
            ParamCase::Case1 => 1,
            ParamCase::Case2 => 2,
            ParamCase::Case3 => 3,
            ParamCase::Case4 => 4,
        }
    }
}

/// Parameters of a DPRH model: the four proportionality constants and the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct DprhParams {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_prime: f64,
    pub theta2_prime: f64,
    pub baseline: Baseline,
}

#[derive(Deserialize)]
struct RawParams {
    theta1: f64,
    theta2: f64,
    theta1_prime: f64,
    theta2_prime: f64,
    baseline: Baseline,
}

impl TryFrom<RawParams> for DprhParams {
    type Error = DprhError;
    fn try_from(r: RawParams) -> Result<Self> {
        DprhParams::new(r.theta1, r.theta2, r.theta1_prime, r.theta2_prime, r.baseline)
    }
}

fn check_theta(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DprhError::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// `ln g(δ, L)` for `L >= 0`, with `g(δ, L) = expm1(δL)/δ` and `g(0, L) = L`.
pub(crate) fn log_g(delta: f64, l: f64) -> f64 {
    if l <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if l == f64::INFINITY {
        return if delta >= 0.0 { f64::INFINITY } else { -(-delta).ln() };
    }
    if delta.abs() < EPS_CASE {
        l.ln()
    } else if delta > 0.0 {
        let x = delta * l;
        x + log1m_exp(-x) - delta.ln()
    } else {
        log1m_exp(delta * l) - (-delta).ln()
    }
}

/// Parameters arranged by role at a point: `lo` is the component with the
/// smaller value.
struct Roles {
    theta_lo: f64,
    theta_hi: f64,
    prime_lo: f64,
}

/// CDF, first partials, density and `β` for a point already sorted into
/// `(lo, hi)` roles, all on the log scale in terms of `ln u_lo <= ln u_hi`.
impl Roles {
    fn theta(&self) -> f64 {
        self.theta_lo + self.theta_hi
    }

    /// `θ - θ_lo'`, the exponent gap governing the case.
    fn delta(&self) -> f64 {
        self.theta() - self.prime_lo
    }

    fn log_cdf(&self, lu_lo: f64, lu_hi: f64) -> f64 {
        if lu_lo == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let lg = log_g(self.delta(), lu_hi - lu_lo);
        self.theta() * lu_lo + softplus(self.theta_hi.ln() + lg)
    }

    /// `ln ∂F/∂y_lo`, without the `f0(y_lo)` factor.
    fn log_partial_lo(&self, lu_lo: f64, lu_hi: f64) -> f64 {
        let lg = log_g(self.delta(), lu_hi - lu_lo);
        (self.theta() - 1.0) * lu_lo
            + log_add_exp(self.theta_lo.ln(), self.prime_lo.ln() + self.theta_hi.ln() + lg)
    }

    /// `ln ∂F/∂y_hi`, without the `f0(y_hi)` factor.
    fn log_partial_hi(&self, lu_lo: f64, lu_hi: f64) -> f64 {
        self.theta_hi.ln() + self.prime_lo * lu_lo + (self.delta() - 1.0) * lu_hi
    }

    /// Joint density without the `f0(y_lo) f0(y_hi)` factor.
    fn log_density(&self, lu_lo: f64, lu_hi: f64) -> f64 {
        self.prime_lo.ln() + self.theta_hi.ln() + (self.prime_lo - 1.0) * lu_lo
            + (self.delta() - 1.0) * lu_hi
    }

    /// Local dependence `β` at a point with `y_lo < y_hi`.
    fn log_beta(&self, lu_lo: f64, lu_hi: f64) -> f64 {
        let lg = log_g(self.delta(), lu_hi - lu_lo);
        let num = softplus(self.theta_hi.ln() + lg);
        let den = log_add_exp(self.theta_lo.ln(), self.prime_lo.ln() + self.theta_hi.ln() + lg);
        self.prime_lo.ln() + num - den
    }
}

/// Components of the reversed hazard vector at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReversedHazardVector {
    /// Point at which the diagonal rates are evaluated: the later of the two
    /// failure times, where the pair is last seen jointly.
    pub at: f64,
    /// `λ10(at) = θ1 r0(at)`.
    pub lambda10: f64,
    /// `λ20(at) = θ2 r0(at)`.
    pub lambda20: f64,
    /// The conditional rate of the earlier component: `λ12(y1|y2) = θ1' r0(y1)`
    /// when `y1 < y2`, `λ21(y2|y1) = θ2' r0(y2)` when `y1 > y2`, absent on the diagonal.
    pub conditional: Option<(Component, f64)>,
}

impl ReversedHazardVector {
    pub fn diagonal_sum(&self) -> f64 {
        self.lambda10 + self.lambda20
    }
}

impl DprhParams {
    pub fn new(
        theta1: f64,
        theta2: f64,
        theta1_prime: f64,
        theta2_prime: f64,
        baseline: Baseline,
    ) -> Result<Self> {
        check_theta("theta1", theta1)?;
        check_theta("theta2", theta2)?;
        check_theta("theta1_prime", theta1_prime)?;
        check_theta("theta2_prime", theta2_prime)?;
        Ok(DprhParams {
            theta1,
            theta2,
            theta1_prime,
            theta2_prime,
            baseline,
        })
    }

    /// Independent components: `θi' = θi`.
    pub fn independent(theta1: f64, theta2: f64, baseline: Baseline) -> Result<Self> {
        DprhParams::new(theta1, theta2, theta1, theta2, baseline)
    }

    /// `θ1 + θ2`.
    pub fn theta_sum(&self) -> f64 {
        self.theta1 + self.theta2
    }

    pub fn case_id(&self) -> ParamCase {
        let s = self.theta_sum();
        let c1 = (s - self.theta1_prime).abs() < EPS_CASE;
        let c2 = (s - self.theta2_prime).abs() < EPS_CASE;
        match (c1, c2) {
            (false, false) => ParamCase::Case1,
            (true, false) => ParamCase::Case2,
            (false, true) => ParamCase::Case3,
            (true, true) => ParamCase::Case4,
        }
    }

    /// The component swap `(y1, θ1, θ1') ↔ (y2, θ2, θ2')`.
    pub fn swapped(&self) -> Self {
        DprhParams {
            theta1: self.theta2,
            theta2: self.theta1,
            theta1_prime: self.theta2_prime,
            theta2_prime: self.theta1_prime,
            baseline: self.baseline,
        }
    }

    fn roles(&self, lower: Component) -> Roles {
        match lower {
            Component::First => Roles {
                theta_lo: self.theta1,
                theta_hi: self.theta2,
                prime_lo: self.theta1_prime,
            },
            Component::Second => Roles {
                theta_lo: self.theta2,
                theta_hi: self.theta1,
                prime_lo: self.theta2_prime,
            },
        }
    }

    /// The component with the smaller value; ties resolve to the first.
    fn lower(y1: f64, y2: f64) -> Component {
        if y1 <= y2 {
            Component::First
        } else {
            Component::Second
        }
    }

    fn check_point(y1: f64, y2: f64) -> Result<()> {
        if y1.is_nan() || y2.is_nan() {
            return Err(DprhError::Domain("NaN coordinate".into()));
        }
        Ok(())
    }

    /// Log joint density. `-inf` outside the support; ties are a domain error
    /// since the diagonal carries no density.
    pub fn log_joint_pdf(&self, y1: f64, y2: f64) -> Result<f64> {
        Self::check_point(y1, y2)?;
        if y1 == y2 {
            return Err(DprhError::Domain(format!(
                "joint density undefined on the diagonal y1 = y2 = {y1}"
            )));
        }
        let b = &self.baseline;
        let (lf1, lf2) = (b.log_pdf(y1), b.log_pdf(y2));
        if lf1 == f64::NEG_INFINITY || lf2 == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let (lu1, lu2) = (b.log_cdf(y1), b.log_cdf(y2));
        let v = if y1 < y2 {
            self.roles(Component::First).log_density(lu1, lu2)
        } else {
            self.roles(Component::Second).log_density(lu2, lu1)
        };
        Ok(v + lf1 + lf2)
    }

    pub fn joint_pdf(&self, y1: f64, y2: f64) -> Result<f64> {
        Ok(self.log_joint_pdf(y1, y2)?.exp())
    }

    /// Log joint CDF; covers all four parameter cases and the diagonal.
    pub fn log_joint_cdf(&self, y1: f64, y2: f64) -> Result<f64> {
        Self::check_point(y1, y2)?;
        let b = &self.baseline;
        let (lu1, lu2) = (b.log_cdf(y1), b.log_cdf(y2));
        Ok(match Self::lower(y1, y2) {
            Component::First => self.roles(Component::First).log_cdf(lu1, lu2),
            Component::Second => self.roles(Component::Second).log_cdf(lu2, lu1),
        }
        .min(0.0))
    }

    pub fn joint_cdf(&self, y1: f64, y2: f64) -> Result<f64> {
        Ok(self.log_joint_cdf(y1, y2)?.exp())
    }

    /// `ln ∂F(y1, y2)/∂y_which`. Continuous across the diagonal.
    pub fn log_partial(&self, which: Component, y1: f64, y2: f64) -> Result<f64> {
        Self::check_point(y1, y2)?;
        let b = &self.baseline;
        let y_w = if which == Component::First { y1 } else { y2 };
        let lf = b.log_pdf(y_w);
        if lf == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let (lu1, lu2) = (b.log_cdf(y1), b.log_cdf(y2));
        let lower = Self::lower(y1, y2);
        let r = self.roles(lower);
        let (lu_lo, lu_hi) = match lower {
            Component::First => (lu1, lu2),
            Component::Second => (lu2, lu1),
        };
        if lu_lo == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let v = if which == lower {
            r.log_partial_lo(lu_lo, lu_hi)
        } else {
            r.log_partial_hi(lu_lo, lu_hi)
        };
        Ok(v + lf)
    }

    /// Marginal CDF of `Y_which`, i.e. `F(y, b-)` or `F(b-, y)`.
    pub fn log_marginal_cdf(&self, which: Component, y: f64) -> f64 {
        let lu = self.baseline.log_cdf(y);
        if lu == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.roles(which).log_cdf(lu, 0.0).min(0.0)
    }

    pub fn marginal_cdf(&self, which: Component, y: f64) -> f64 {
        self.log_marginal_cdf(which, y).exp()
    }

    /// Marginal log density of `Y_which`.
    pub fn log_marginal_pdf(&self, which: Component, y: f64) -> f64 {
        let lf = self.baseline.log_pdf(y);
        if lf == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let lu = self.baseline.log_cdf(y);
        self.roles(which).log_partial_lo(lu, 0.0) + lf
    }

    pub fn marginal_pdf(&self, which: Component, y: f64) -> f64 {
        self.log_marginal_pdf(which, y).exp()
    }

    /// CDF of `max(Y1, Y2)`: `F0(y)^{θ1 + θ2}`.
    pub fn max_cdf(&self, y: f64) -> f64 {
        (self.theta_sum() * self.baseline.log_cdf(y)).exp()
    }

    /// `P(Y_i > Y_{3-i}) = θi / (θ1 + θ2)`.
    pub fn prob_first_exceeds(&self, i: Component) -> f64 {
        match i {
            Component::First => self.theta1 / self.theta_sum(),
            Component::Second => self.theta2 / self.theta_sum(),
        }
    }

    /// Reversed hazard vector at `(y1, y2)`. The diagonal rates are evaluated
    /// at `max(y1, y2)`, where they enter the density reconstruction.
    pub fn reversed_hazard_vector(&self, y1: f64, y2: f64) -> Result<ReversedHazardVector> {
        Self::check_point(y1, y2)?;
        let b = &self.baseline;
        let at = y1.max(y2);
        let r_at = b.reversed_hazard(at)?;
        let conditional = if y1 < y2 {
            Some((Component::First, self.theta1_prime * b.reversed_hazard(y1)?))
        } else if y2 < y1 {
            Some((Component::Second, self.theta2_prime * b.reversed_hazard(y2)?))
        } else {
            None
        };
        Ok(ReversedHazardVector {
            at,
            lambda10: self.theta1 * r_at,
            lambda20: self.theta2 * r_at,
            conditional,
        })
    }

    /// `ln f(y11,y21) + ln f(y12,y22) - ln f(y12,y21) - ln f(y11,y22)`; the
    /// TP2 inequality holds at the quadruple when this is nonnegative.
    pub fn tp2_log_gap(&self, y11: f64, y12: f64, y21: f64, y22: f64) -> Result<f64> {
        if !(y11 < y12 && y21 < y22) {
            return Err(DprhError::Domain(format!(
                "TP2 needs y11 < y12 and y21 < y22, got ({y11}, {y12}, {y21}, {y22})"
            )));
        }
        if [y11, y12].iter().any(|a| *a == y21 || *a == y22) {
            return Err(DprhError::Domain(
                "TP2 quadruple has a tie across components".into(),
            ));
        }
        Ok(self.log_joint_pdf(y11, y21)? + self.log_joint_pdf(y12, y22)?
            - self.log_joint_pdf(y12, y21)?
            - self.log_joint_pdf(y11, y22)?)
    }

    /// TP2 inequality at a quadruple, allowing `1e-9` of rounding in the log gap.
    pub fn tp2_holds(&self, y11: f64, y12: f64, y21: f64, y22: f64) -> Result<bool> {
        Ok(self.tp2_log_gap(y11, y12, y21, y22)? >= -1e-9)
    }

    /// Local dependence `β = F f / (∂1F ∂2F)`.
    pub fn local_dependence_beta(&self, y1: f64, y2: f64) -> Result<f64> {
        Self::check_point(y1, y2)?;
        if y1 == y2 {
            return Err(DprhError::Domain(format!(
                "local dependence undefined on the diagonal y1 = y2 = {y1}"
            )));
        }
        let b = &self.baseline;
        let (lu1, lu2) = (b.log_cdf(y1), b.log_cdf(y2));
        if !lu1.is_finite() || !lu2.is_finite() {
            return Err(DprhError::Domain(format!(
                "local dependence needs 0 < F0 at ({y1}, {y2})"
            )));
        }
        let v = if y1 < y2 {
            self.roles(Component::First).log_beta(lu1, lu2)
        } else {
            self.roles(Component::Second).log_beta(lu2, lu1)
        };
        Ok(v.exp())
    }

    /// `P(Y_other <= y_other | Y_given = y_given)`, the partial derivative of
    /// `F` in the conditioning coordinate over the marginal density there.
    pub fn conditional_cdf(&self, given: Component, y_given: f64, y_other: f64) -> Result<f64> {
        let (y1, y2) = match given {
            Component::First => (y_given, y_other),
            Component::Second => (y_other, y_given),
        };
        let num = self.log_partial(given, y1, y2)?;
        let den = self.log_marginal_pdf(given, y_given);
        if den == f64::NEG_INFINITY {
            return Err(DprhError::Domain(format!(
                "conditioning value {y_given} has zero density"
            )));
        }
        Ok((num - den).exp().min(1.0))
    }

    /// `(θ1, θ2, θ1', θ2')`.
    pub fn thetas(&self) -> [f64; 4] {
        [self.theta1, self.theta2, self.theta1_prime, self.theta2_prime]
    }
}
