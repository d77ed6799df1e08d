//! Globally adaptive Gauss–Kronrod (7/15) integration on finite and
//! infinite intervals.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Integrate `f` over `(a, b)`; either bound may be infinite.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> QuadResult {
        if a == b {
            return QuadResult {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            };
        }
        if a > b {
            let r = self.integrate(f, b, a);
            return QuadResult {
                value: -r.value,
                ..r
            };
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.finite(&f, a, b),
            (true, false) => self.finite(
                &|t: f64| {
                    let s = 1.0 - t;
                    f(a + t / s) / (s * s)
                },
                0.0,
                1.0,
            ),
            (false, true) => self.finite(
                &|t: f64| {
                    // x = b - (1 - t) / t
                    f(b - (1.0 - t) / t) / (t * t)
                },
                0.0,
                1.0,
            ),
            (false, false) => self.finite(
                &|t: f64| {
                    let s = 1.0 - t * t;
                    f(t / s) * (1.0 + t * t) / (s * s)
                },
                -1.0,
                1.0,
            ),
        }
    }

    fn finite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> QuadResult {
        let guarded = |x: f64| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let (value, error) = gk15(&guarded, a, b);
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, value, error });
        let mut total = value;
        let mut total_err = error;
        while heap.len() < self.max_intervals {
            if total_err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                break;
            }
            let worst = heap.pop().expect("heap never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                heap.push(worst);
                break;
            }
            let (v1, e1) = gk15(&guarded, worst.a, mid);
            let (v2, e2) = gk15(&guarded, mid, worst.b);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        // re-sum in a fixed order to avoid drift from incremental updates
        let mut segs: Vec<Segment> = heap.into_vec();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = segs.iter().map(|s| s.value).sum();
        let error = segs.iter().map(|s| s.error).sum();
        QuadResult {
            value,
            error,
            intervals: segs.len(),
        }
    }
}

/// Convenience wrapper with default tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    Quadrature::default().integrate(f, a, b).value
}
