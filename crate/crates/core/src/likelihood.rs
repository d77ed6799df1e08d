//! Likelihood of left-censored pairs.
//!
//! Each pair falls into one of eight index sets according to which
//! coordinates are observed and how the two recorded values are ordered:
//!
//! | set | d1 | d2 | order    | contribution            |
//! |-----|----|----|----------|-------------------------|
//! | I1  | 1  | 1  | t1 > t2  | density                 |
//! | I2  | 1  | 1  | t1 < t2  | density                 |
//! | I3  | 1  | 0  | t1 >= t2 | ∂F/∂y1 at (t1, t2)      |
//! | I4  | 0  | 1  | t2 >= t1 | ∂F/∂y2 at (t1, t2)      |
//! | I5  | 1  | 0  | t1 < t2  | ∂F/∂y1 at (t1, t2)      |
//! | I6  | 0  | 1  | t2 < t1  | ∂F/∂y2 at (t1, t2)      |
//! | I7  | 0  | 0  | t1 >= t2 | F(t1, t2)               |
//! | I8  | 0  | 0  | t1 < t2  | F(t1, t2)               |
//!
//! Ties between a censoring value and the partner's value go to the lower set
//! id. A tie between two observed values has probability zero under the model
//! and is rejected.
//!
//! The `I5`/`I6` partials are written as `f0 u_lo^{θ-1} [θ_lo + θ_lo' θ_hi g]`
//! with `g >= 0`, so they are positive for every parameter value and need no
//! signed log-sum-exp.

use serde::{Deserialize, Serialize};

use crate::baselines::Baseline;
use crate::data::CensoredPair;
use crate::error::{DprhError, Result};
use crate::model::{Component, DprhParams};
use crate::special::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexSet {
    I1,
    I2,
    I3,
    I4,
    I5,
    I6,
    I7,
    I8,
}

impl IndexSet {
    pub const ALL: [IndexSet; 8] = [
        IndexSet::I1,
        IndexSet::I2,
        IndexSet::I3,
        IndexSet::I4,
        IndexSet::I5,
        IndexSet::I6,
        IndexSet::I7,
        IndexSet::I8,
    ];

    /// 1-based set number.
    pub fn id(self) -> usize {
        self as usize + 1
    }
}

pub fn classify(pair: &CensoredPair) -> Result<IndexSet> {
    let CensoredPair { t1, d1, t2, d2 } = *pair;
    if t1.is_nan() || t2.is_nan() {
        return Err(DprhError::Data("NaN in observation".into()));
    }
    Ok(match (d1, d2) {
        (true, true) => {
            if t1 > t2 {
                IndexSet::I1
            } else if t1 < t2 {
                IndexSet::I2
            } else {
                return Err(DprhError::Data(format!(
                    "both components observed at the same value {t1}; simultaneous failures must be removed"
                )));
            }
        }
        (true, false) => {
            if t1 >= t2 {
                IndexSet::I3
            } else {
                IndexSet::I5
            }
        }
        (false, true) => {
            if t2 >= t1 {
                IndexSet::I4
            } else {
                IndexSet::I6
            }
        }
        (false, false) => {
            if t1 >= t2 {
                IndexSet::I7
            } else {
                IndexSet::I8
            }
        }
    })
}

/// Number of pairs in each of `I1..I8`.
pub fn set_counts(data: &[CensoredPair]) -> Result<[usize; 8]> {
    let mut counts = [0usize; 8];
    for p in data {
        counts[classify(p)? as usize] += 1;
    }
    Ok(counts)
}

/// Log-likelihood contribution of one pair. May be `-inf` when the pair is
/// impossible under `params` (for example outside the baseline support).
pub fn log_contribution(params: &DprhParams, pair: &CensoredPair) -> Result<f64> {
    let set = classify(pair)?;
    log_contribution_in(params, pair, set)
}

fn log_contribution_in(params: &DprhParams, pair: &CensoredPair, set: IndexSet) -> Result<f64> {
    let (t1, t2) = (pair.t1, pair.t2);
    match set {
        IndexSet::I1 | IndexSet::I2 => params.log_joint_pdf(t1, t2),
        IndexSet::I3 | IndexSet::I5 => params.log_partial(Component::First, t1, t2),
        IndexSet::I4 | IndexSet::I6 => params.log_partial(Component::Second, t1, t2),
        IndexSet::I7 | IndexSet::I8 => params.log_joint_cdf(t1, t2),
    }
}

/// A sample with its index sets resolved once, for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct Sample {
    pairs: Vec<CensoredPair>,
    sets: Vec<IndexSet>,
}

impl Sample {
    pub fn new(pairs: Vec<CensoredPair>) -> Result<Self> {
        let sets = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| classify(p).map_err(|e| DprhError::Data(format!("pair {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sample { pairs, sets })
    }

    pub fn pairs(&self) -> &[CensoredPair] {
        &self.pairs
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn counts(&self) -> [usize; 8] {
        let mut c = [0; 8];
        for s in &self.sets {
            c[*s as usize] += 1;
        }
        c
    }

    /// Fraction of censored coordinates for component 1 and 2.
    pub fn censored_fraction(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let c1 = self.pairs.iter().filter(|p| !p.d1).count() as f64;
        let c2 = self.pairs.iter().filter(|p| !p.d2).count() as f64;
        (c1 / n, c2 / n)
    }

    /// Censored log-likelihood; `-inf` whenever any contribution is not finite.
    /// Contributions are summed pairwise in index order, so the value does not
    /// depend on how it is computed.
    pub fn log_likelihood(&self, params: &DprhParams) -> f64 {
        let mut terms = Vec::with_capacity(self.len());
        for (p, s) in self.pairs.iter().zip(&self.sets) {
            match log_contribution_in(params, p, *s) {
                Ok(v) if v.is_finite() => terms.push(v),
                _ => return f64::NEG_INFINITY,
            }
        }
        pairwise_sum(&terms)
    }

    /// Resample pairs by index (used for the bootstrap).
    pub fn resample(&self, idx: &[usize]) -> Sample {
        Sample {
            pairs: idx.iter().map(|&i| self.pairs[i]).collect(),
            sets: idx.iter().map(|&i| self.sets[i]).collect(),
        }
    }
}

/// Censored log-likelihood of `data` under `params`. Fails only on data that
/// cannot be classified; impossible observations give `-inf`.
pub fn censored_log_likelihood(params: &DprhParams, data: &[CensoredPair]) -> Result<f64> {
    Ok(Sample::new(data.to_vec())?.log_likelihood(params))
}

/// Maximum likelihood estimates `(θ1, θ2, θ1', θ2')` for complete data with a
/// known baseline.
pub fn complete_mle_closed_form(data: &[CensoredPair], baseline: &Baseline) -> Result<[f64; 4]> {
    let mut max_sum = Vec::new();
    let mut gap1 = Vec::new(); // over I1: ln F0(y1) - ln F0(y2)
    let mut gap2 = Vec::new(); // over I2: ln F0(y2) - ln F0(y1)
    for (i, p) in data.iter().enumerate() {
        if !p.is_complete() {
            return Err(DprhError::Data(format!(
                "pair {} is censored; the closed form needs complete data",
                i + 1
            )));
        }
        let (l1, l2) = (baseline.log_cdf(p.t1), baseline.log_cdf(p.t2));
        if !(l1.is_finite() && l2.is_finite()) {
            return Err(DprhError::Domain(format!("pair {} outside the baseline support", i + 1)));
        }
        match classify(p)? {
            IndexSet::I1 => {
                max_sum.push(l1);
                gap1.push(l1 - l2);
            }
            _ => {
                max_sum.push(l2);
                gap2.push(l2 - l1);
            }
        }
    }
    let (m1, m2) = (gap1.len(), gap2.len());
    if m1 == 0 || m2 == 0 {
        return Err(DprhError::EstimateUndefined(format!(
            "closed-form MLE needs both orderings (m1 = {m1}, m2 = {m2})"
        )));
    }
    let s = pairwise_sum(&max_sum);
    let g1 = pairwise_sum(&gap1);
    let g2 = pairwise_sum(&gap2);
    if !(s < 0.0) || !(g1 > 0.0) || !(g2 > 0.0) {
        return Err(DprhError::EstimateUndefined(
            "zero denominator in closed-form MLE".into(),
        ));
    }
    Ok([-(m1 as f64) / s, -(m2 as f64) / s, m2 as f64 / g2, m1 as f64 / g1])
}
