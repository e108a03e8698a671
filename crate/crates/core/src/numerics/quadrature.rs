//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// How an infinite upper limit is handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailRule {
    /// Map `[a, inf)` onto `[0, 1)` with `x = a + t / (1 - t)`.
    Transform,
    /// Replace `+inf` by a finite cutoff. Callers pick the cutoff so that the
    /// integrand envelope has decayed below 1e-14 of its peak; for
    /// `exp(-pi * lambda * r^2)` envelopes `6 / sqrt(lambda)` is enough.
    Truncate { upper: f64 },
}

/// Tolerances for [`integrate_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail: TailRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 2000,
            tail: TailRule::Transform,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.abs_tol.is_nan()
            || self.abs_tol <= 0.0
            || self.rel_tol.is_nan()
            || self.rel_tol <= 0.0
            || self.max_subdivisions < 1
        {
            return Err(Error::Invalid(format!(
                "quadrature spec needs abs_tol > 0, rel_tol > 0 and max_subdivisions >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the 7-point rule living on the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

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
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`; `b` may be `f64::INFINITY`.
///
/// Returns an estimate whose error estimate is below
/// `max(abs_tol, rel_tol * |result|)`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if b.is_infinite() && b > 0.0 {
        return match spec.tail {
            TailRule::Transform => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    let x = a + t / s;
                    let v = f(x) / (s * s);
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                };
                adaptive(&g, 0.0, 1.0, spec)
            }
            TailRule::Truncate { upper } => {
                if upper <= a {
                    Ok(0.0)
                } else {
                    adaptive(&f, a, upper, spec)
                }
            }
        };
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Invalid(format!(
            "unsupported integration limits [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive(&f, b, a, spec).map(|v| -v);
    }
    adaptive(&f, a, b, spec)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    let first = gk15(f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NoConvergence {
                estimate: total,
                error: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::NoConvergence {
                estimate: total,
                error: total_err,
                subdivisions,
            });
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // Guard against drift in the running sums.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Like [`integrate_1d`] but returns the best estimate when the tolerance is
/// not met; used inside nested integrals whose outer level only needs a
/// number.
pub fn integrate_best_effort<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> f64 {
    match integrate_1d(f, a, b, spec) {
        Ok(v) => v,
        Err(Error::NoConvergence {
            estimate, error, ..
        }) => {
            log::debug!("quadrature on [{a}, {b}] stopped at error {error:e}");
            estimate
        }
        Err(_) => f64::NAN,
    }
}

/// Fixed-rule 15-point Kronrod estimate over `[a, b]`, no adaptivity.
pub fn kronrod15<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    gk15(&f, a, b).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = integrate_1d(|x| x, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_1d(
            |x: f64| (-x).exp(),
            0.0,
            f64::INFINITY,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
        let spec = QuadratureSpec {
            tail: TailRule::Truncate { upper: 40.0 },
            ..QuadratureSpec::default()
        };
        let v = integrate_1d(|x: f64| (-x).exp(), 0.0, f64::INFINITY, &spec).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn sine_period_vanishes() {
        let spec = QuadratureSpec::default();
        let v = integrate_1d(f64::sin, 0.0, 2.0 * PI, &spec).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = spec.abs_tol);
    }

    #[test]
    fn endpoint_singularity() {
        // 1/sqrt(x) on (0, 1] integrates to 2.
        let spec = QuadratureSpec::with_tolerances(1e-10, 1e-9);
        let v = integrate_1d(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let spec = QuadratureSpec::default();
        let v = integrate_1d(|x| x * x, 1.0, 0.0, &spec).unwrap();
        assert_abs_diff_eq!(v, -1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let spec = QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_subdivisions: 3,
            tail: TailRule::Transform,
        };
        let err = integrate_1d(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &spec).unwrap_err();
        match err {
            Error::NoConvergence { estimate, .. } => assert!(estimate.is_finite()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = QuadratureSpec {
            abs_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(integrate_1d(|x| x, 0.0, 1.0, &spec).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cubics_are_exact(c0 in -5.0..5.0f64, c1 in -5.0..5.0f64, c2 in -5.0..5.0f64, c3 in -5.0..5.0f64,
                            a in -3.0..3.0f64, w in 0.01..4.0f64) {
            let b = a + w;
            let f = |x: f64| c0 + c1 * x + c2 * x * x + c3 * x * x * x;
            let anti = |x: f64| c0 * x + c1 * x * x / 2.0 + c2 * x.powi(3) / 3.0 + c3 * x.powi(4) / 4.0;
            let spec = QuadratureSpec::default();
            let v = integrate_1d(f, a, b, &spec).unwrap();
            proptest::prop_assert!((v - (anti(b) - anti(a))).abs() <= spec.abs_tol);
        }
    }
}
