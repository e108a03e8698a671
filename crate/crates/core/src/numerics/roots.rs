//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// Brent's method on a sign-changing bracket `[lo, hi]`.
///
/// The function is internally oriented so that it is negative at `lo`; the
/// iterates for `f` and `-f` are therefore identical. Terminates once the
/// bracket is narrower than `tol` (plus a few ulps of the root) or `f` hits
/// zero exactly.
pub fn find_root_monotone<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let sign = if f_lo < 0.0 { 1.0 } else { -1.0 };
    let g = |x: f64| sign * f(x);

    let (mut a, mut b, mut c) = (lo, hi, hi);
    let (mut fa, mut fb) = (sign * f_lo, sign * f_hi);
    let mut fc = fb;
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..MAX_ITER {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b);
    }
    Ok(b)
}

/// Plain bisection; slower than [`find_root_monotone`] but immune to
/// pathological interpolation steps.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let sign = if f_lo < 0.0 { 1.0 } else { -1.0 };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = sign * f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_root() {
        let r = find_root_monotone(|x| x - 2.0, 0.0, 4.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_half_life() {
        let r = find_root_monotone(|x: f64| (-x).exp() - 0.5, 0.0, 10.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::LN_2, epsilon = 1e-11);
    }

    #[test]
    fn cubic_through_origin() {
        let r = find_root_monotone(|x: f64| x * x * x, -1.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn no_sign_change() {
        let err = find_root_monotone(|x| x * x + 1.0, -1.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        assert!(bisect(|x| x + 5.0, 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn bisection_agrees() {
        let r = bisect(|x: f64| x.ln() - 1.0, 1.0, 5.0, 1e-13).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::E, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn orientation_does_not_matter(root in -10.0..10.0f64, scale in 0.1..50.0f64, skew in 0.0..3.0f64) {
            let f = |x: f64| scale * (x - root) + skew * (x - root).powi(3);
            let up = find_root_monotone(f, -20.0, 20.0, 1e-12).unwrap();
            let down = find_root_monotone(|x| -f(x), -20.0, 20.0, 1e-12).unwrap();
            proptest::prop_assert_eq!(up, down);
            proptest::prop_assert!((up - root).abs() < 1e-9);
        }
    }
}
