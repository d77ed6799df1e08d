//! Paired onset-age data, such as ages at appendectomy in twin pairs.
//!
//! An onset age `T` observed before the horizon `b` becomes a risk-free time
//! `Y = b - T`. A subject without the event by interview age `t` has
//! `Y <= b - t`, i.e. `Y` is left-censored at `b - t`. So the event indicator
//! becomes the observation flag `d` of the censored pair directly.
//!
//! CSV columns: `pair_id,zygosity,sex,age1,status1,age2,status2`, where the
//! statuses are 1 for an observed event and 0 otherwise.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineFamily;
use crate::data::CensoredPair;
use crate::error::{DprhError, Result};
use crate::likelihood::Sample;
use crate::mle::{fit_mle, likelihood_ratio_test, FitOptions, FitResult, LrtResult, ModelSpec, ThetaPrimeSpec, ThetaSpec};
use crate::model::{Component, DprhParams};

pub const DEFAULT_HORIZON: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinRecord {
    pub pair_id: String,
    pub zygosity: u32,
    pub sex: String,
    /// Age at event, or at interview when `status1 == 0`.
    pub age1: f64,
    pub status1: u8,
    pub age2: f64,
    pub status2: u8,
}

impl TwinRecord {
    pub fn event1(&self) -> bool {
        self.status1 == 1
    }

    pub fn event2(&self) -> bool {
        self.status2 == 1
    }

    /// Risk-free pair `(b - T1, b - T2)` with event statuses as observation flags.
    pub fn to_pair(&self, b: f64) -> CensoredPair {
        CensoredPair::new(b - self.age1, self.event1(), b - self.age2, self.event2())
    }

    /// The twin with the smaller age (larger risk-free time) is the one
    /// conditioned on.
    pub fn conditioning(&self) -> Component {
        if self.age2 < self.age1 {
            Component::Second
        } else {
            Component::First
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwinLoad {
    pub records: Vec<TwinRecord>,
    pub rows_read: usize,
    /// Rows dropped by the zygosity filter.
    pub filtered_out: usize,
    /// Pair ids dropped because both ages are equal (simultaneous events).
    pub simultaneous: Vec<String>,
}

fn status(v: u8, line: usize, col: &str) -> Result<u8> {
    if v > 1 {
        return Err(DprhError::Data(format!("line {line}: {col} must be 0 or 1, got {v}")));
    }
    Ok(v)
}

/// Read twin records, keeping only zygosity `category` when given. Ages must
/// lie in `(0, b)`. Pairs with equal ages are dropped and listed.
pub fn load_twins<R: Read>(reader: R, category: Option<u32>, b: f64) -> Result<TwinLoad> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = TwinLoad {
        records: Vec::new(),
        rows_read: 0,
        filtered_out: 0,
        simultaneous: Vec::new(),
    };
    for (i, row) in rdr.deserialize::<TwinRecord>().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| DprhError::Data(format!("line {line}: {e}")))?;
        out.rows_read += 1;
        status(rec.status1, line, "status1")?;
        status(rec.status2, line, "status2")?;
        for (col, age) in [("age1", rec.age1), ("age2", rec.age2)] {
            if !(age > 0.0 && age < b) {
                return Err(DprhError::Data(format!(
                    "line {line}: {col} = {age} is outside (0, {b})"
                )));
            }
        }
        if category.is_some_and(|c| c != rec.zygosity) {
            out.filtered_out += 1;
            continue;
        }
        if rec.age1 == rec.age2 {
            log::info!("pair {} dropped: simultaneous ages {}", rec.pair_id, rec.age1);
            out.simultaneous.push(rec.pair_id);
            continue;
        }
        out.records.push(rec);
    }
    if out.records.is_empty() {
        return Err(DprhError::Data(format!(
            "no usable twin records ({} rows read, {} filtered, {} simultaneous)",
            out.rows_read,
            out.filtered_out,
            out.simultaneous.len()
        )));
    }
    Ok(out)
}

pub fn load_twins_path(path: impl AsRef<Path>, category: Option<u32>, b: f64) -> Result<TwinLoad> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| DprhError::Data(format!("cannot open {}: {e}", path.display())))?;
    load_twins(std::io::BufReader::new(f), category, b)
}

pub fn write_twins<W: Write>(writer: W, records: &[TwinRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_sample(records: &[TwinRecord], b: f64) -> Result<Sample> {
    Sample::new(records.iter().map(|r| r.to_pair(b)).collect())
}

/// Tied model: `θ1 = θ2 = θ`, `θ1' = θ2' = θ'`, baseline estimated.
pub fn tied_spec(family: BaselineFamily) -> ModelSpec {
    ModelSpec::full(family)
        .with_theta(ThetaSpec::Tied)
        .with_theta_prime(ThetaPrimeSpec::Tied)
}

/// Fit the tied model to the risk-free times.
pub fn analyze(
    records: &[TwinRecord],
    family: BaselineFamily,
    b: f64,
    init: Option<&DprhParams>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if records.len() < 10 {
        return Err(DprhError::Data(format!(
            "need at least 10 twin pairs, got {}",
            records.len()
        )));
    }
    let sample = to_sample(records, b)?;
    fit_mle(&sample, &tied_spec(family), init, opts)
}

/// Fits for several baselines, sorted by increasing AIC. Failed fits are
/// returned separately.
pub fn compare_baselines(
    records: &[TwinRecord],
    families: &[BaselineFamily],
    b: f64,
    opts: &FitOptions,
) -> (Vec<FitResult>, Vec<(BaselineFamily, DprhError)>) {
    let mut fits = Vec::new();
    let mut failed = Vec::new();
    for fam in families {
        match analyze(records, *fam, b, None, opts) {
            Ok(f) => fits.push(f),
            Err(e) => failed.push((*fam, e)),
        }
    }
    fits.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    (fits, failed)
}

/// Test of independence `θ' = θ` against the tied dependent model.
pub fn dependence_test(
    records: &[TwinRecord],
    family: BaselineFamily,
    b: f64,
    opts: &FitOptions,
) -> Result<LrtResult> {
    let sample = to_sample(records, b)?;
    let alt = tied_spec(family);
    let null = alt.with_theta_prime(ThetaPrimeSpec::EqualTheta);
    likelihood_ratio_test(&sample, &null, &alt, None, opts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairProbability {
    pub pair_id: String,
    /// Coordinate conditioned on (1 or 2).
    pub given: usize,
    pub probability: f64,
    /// The conditioning twin's age is an interview age, not an event age.
    pub ambiguous: bool,
}

/// `P(Y_other <= y_other | Y_given = y_given)` where the conditioning twin is
/// the one with the smaller age.
pub fn potential_appendectomy_prob(params: &DprhParams, record: &TwinRecord, b: f64) -> Result<PairProbability> {
    let given = record.conditioning();
    let pair = record.to_pair(b);
    let (yg, yo, observed) = match given {
        Component::First => (pair.t1, pair.t2, pair.d1),
        Component::Second => (pair.t2, pair.t1, pair.d2),
    };
    Ok(PairProbability {
        pair_id: record.pair_id.clone(),
        given: given.index(),
        probability: params.conditional_cdf(given, yg, yo)?,
        ambiguous: !observed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationRow {
    pub pair_id: String,
    pub probability: f64,
    pub co_twin_operated: bool,
    pub consistent: bool,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub threshold: f64,
    pub rows: Vec<ValidationRow>,
    pub consistent: usize,
    pub total: usize,
    pub fraction: f64,
    /// Records whose probability could not be computed.
    pub skipped: Vec<String>,
}

/// Whether a probability agrees with the co-twin's observed status: at least
/// `threshold` when the co-twin has not had the event yet, below it when
/// the co-twin has.
pub fn is_consistent(probability: f64, co_twin_operated: bool, threshold: f64) -> bool {
    if co_twin_operated {
        probability < threshold
    } else {
        probability >= threshold
    }
}

pub fn validation_report(params: &DprhParams, records: &[TwinRecord], b: f64, threshold: f64) -> ValidationReport {
    validation_report_with(records, threshold, |r| {
        potential_appendectomy_prob(params, r, b).map(|p| p.probability)
    })
}

/// Validation with an arbitrary probability function.
pub fn validation_report_with<F>(records: &[TwinRecord], threshold: f64, prob: F) -> ValidationReport
where
    F: Fn(&TwinRecord) -> Result<f64>,
{
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for r in records {
        match prob(r) {
            Ok(p) => {
                let (co_twin_operated, given_observed) = match r.conditioning() {
                    Component::First => (r.event2(), r.event1()),
                    Component::Second => (r.event1(), r.event2()),
                };
                rows.push(ValidationRow {
                    pair_id: r.pair_id.clone(),
                    probability: p,
                    co_twin_operated,
                    consistent: is_consistent(p, co_twin_operated, threshold),
                    ambiguous: !given_observed,
                });
            }
            Err(e) => skipped.push(format!("{}: {e}", r.pair_id)),
        }
    }
    let consistent = rows.iter().filter(|r| r.consistent).count();
    let total = rows.len();
    ValidationReport {
        threshold,
        fraction: if total > 0 { consistent as f64 / total as f64 } else { f64::NAN },
        rows,
        consistent,
        total,
        skipped,
    }
}

/// Pairs whose conditional probability is not nondecreasing in the
/// conditioning risk-free time on a grid from just above `y_other` up to the
/// observed value. Reported, not enforced.
pub fn monotonicity_violations(params: &DprhParams, records: &[TwinRecord], b: f64, grid: usize) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        let given = r.conditioning();
        let pair = r.to_pair(b);
        let (yg, yo) = match given {
            Component::First => (pair.t1, pair.t2),
            Component::Second => (pair.t2, pair.t1),
        };
        let mut prev = f64::NEG_INFINITY;
        for j in 1..=grid {
            let y = yo + (yg - yo) * j as f64 / grid as f64;
            match params.conditional_cdf(given, y, yo) {
                Ok(p) if p + 1e-12 >= prev => prev = p,
                _ => {
                    out.push(r.pair_id.clone());
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, a1: f64, s1: u8, a2: f64, s2: u8) -> TwinRecord {
        TwinRecord {
            pair_id: id.into(),
            zygosity: 2,
            sex: "M".into(),
            age1: a1,
            status1: s1,
            age2: a2,
            status2: s2,
        }
    }

    #[test]
    fn load_filters_and_drops_ties() {
        let text = "pair_id,zygosity,sex,age1,status1,age2,status2\n\
                    a,2,M,36,0,11,1\n\
                    b,1,F,20,1,30,0\n\
                    c,2,M,25,1,25,1\n";
        let l = load_twins(text.as_bytes(), Some(2), 80.0).unwrap();
        assert_eq!(l.rows_read, 3);
        assert_eq!(l.filtered_out, 1);
        assert_eq!(l.simultaneous, vec!["c".to_string()]);
        assert_eq!(l.records, vec![rec("a", 36.0, 0, 11.0, 1)]);
    }

    #[test]
    fn load_reports_bad_lines() {
        let text = "pair_id,zygosity,sex,age1,status1,age2,status2\na,2,M,36,0,11,1\nb,2,M,90,0,11,1\n";
        let e = load_twins(text.as_bytes(), None, 80.0).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("age1"), "{e}");
        let text = "pair_id,zygosity,sex,age1,status1,age2,status2\na,2,M,36,3,11,1\n";
        assert!(load_twins(text.as_bytes(), None, 80.0).unwrap_err().to_string().contains("line 2"));
        let text = "pair_id,zygosity,sex,age1,status1,age2,status2\na,1,M,36,0,11,1\n";
        assert!(load_twins(text.as_bytes(), Some(2), 80.0).is_err());
    }

    #[test]
    fn write_then_load_round_trips() {
        let recs = vec![rec("x1", 36.5, 0, 11.25, 1), rec("x2", 1.0 / 3.0, 1, 79.9, 0)];
        let mut buf = Vec::new();
        write_twins(&mut buf, &recs).unwrap();
        assert_eq!(load_twins(buf.as_slice(), None, 80.0).unwrap().records, recs);
    }

    #[test]
    fn transform_is_an_involution() {
        let r = rec("a", 36.0, 0, 11.0, 1);
        let p = r.to_pair(80.0);
        assert_eq!((p.t1, p.d1, p.t2, p.d2), (44.0, false, 69.0, true));
        assert_eq!(80.0 - p.t1, 36.0);
        assert_eq!(r.conditioning(), Component::Second);
    }

    #[test]
    fn validation_threshold_logic() {
        let recs = vec![
            rec("a", 36.0, 0, 11.0, 1),
            rec("b", 45.0, 1, 56.0, 1),
            rec("c", 20.0, 1, 30.0, 0),
            rec("d", 50.0, 1, 10.0, 1),
        ];
        let r = validation_report_with(&recs, 0.5, |_| Ok(1.0));
        // co-twins: a -> twin 1 (not operated), b -> 2 (operated), c -> 2 (not), d -> 1 (operated)
        assert_eq!(r.fraction, 0.5);
        let probs = [0.9, 0.1, 0.4, 0.6];
        let f = |t: f64| {
            validation_report_with(&recs, t, |x| {
                Ok(probs[recs.iter().position(|y| y.pair_id == x.pair_id).unwrap()])
            })
        };
        let mut prev_not = usize::MAX;
        let mut prev_op = 0;
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let rep = f(t);
            let not_ok = rep.rows.iter().filter(|r| !r.co_twin_operated && r.consistent).count();
            let op_ok = rep.rows.iter().filter(|r| r.co_twin_operated && r.consistent).count();
            assert!(not_ok <= prev_not && op_ok >= prev_op);
            prev_not = not_ok;
            prev_op = op_ok;
        }
        assert_eq!(f(0.5).consistent, 2);
    }
}
