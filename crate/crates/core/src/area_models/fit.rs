//! Conditional moments and moment-matched continuous parts.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::RegionKind;
use crate::numerics::{beta_reg, find_root_monotone, ln_gamma};

use super::events::{prob_e1, prob_e3, E3Method};
use super::moments::{moments_cc, moments_ce};

pub const WEIBULL_SHAPE_RANGE: (f64, f64) = (0.05, 50.0);
pub const BETA_SHAPE_RANGE: (f64, f64) = (0.01, 200.0);
/// Ratio of the untruncated beta support top to the truncation point.
pub const BETA_SUPPORT_FACTOR: f64 = 1.5;

const MIN_CONDITIONING: f64 = 1e-12;

/// Mean and variance of the area conditioned on the event that keeps the
/// continuous part: `E1^c` for CC, `E3^c` for CE.
pub fn conditional_moments(
    kind: RegionKind,
    lambda0: f64,
    r_c: f64,
    e3: E3Method,
) -> Result<(f64, f64)> {
    match kind {
        RegionKind::CC => {
            let (m1, m2) = moments_cc(lambda0, r_c)?;
            let p1 = prob_e1(lambda0, r_c);
            conditional_from_parts(m1, m2, p1, PI * r_c * r_c)
        }
        RegionKind::CE => {
            let (m1, m2) = moments_ce(lambda0, r_c)?;
            let p3 = prob_e3(lambda0, r_c, e3)?;
            conditional_from_parts(m1, m2, p3, 0.0)
        }
    }
}

/// Removes an atom of mass `p_atom` at `atom` from a law with moments
/// `(m1, m2)` by total expectation and total variance.
pub fn conditional_from_parts(m1: f64, m2: f64, p_atom: f64, atom: f64) -> Result<(f64, f64)> {
    let q = 1.0 - p_atom;
    if q < MIN_CONDITIONING {
        return Err(Error::DegenerateConditioning { probability: q });
    }
    let mean = (m1 - atom * p_atom) / q;
    let var_total = m2 - m1 * m1;
    let var = (var_total - p_atom * q * (atom - mean).powi(2)) / q;
    Ok((mean, var))
}

/// Weibull `(shape, scale)` with the given mean and variance.
pub fn fit_weibull(mean: f64, var: f64) -> Result<(f64, f64)> {
    let (lo, hi) = WEIBULL_SHAPE_RANGE;
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::FitRange {
            what: "Weibull shape",
            lo,
            hi,
        });
    }
    let cv2 = var / (mean * mean);
    let excess = |k: f64| (ln_gamma(1.0 + 2.0 / k) - 2.0 * ln_gamma(1.0 + 1.0 / k)).exp_m1() - cv2;
    let shape = find_root_monotone(|ln_k: f64| excess(ln_k.exp()), lo.ln(), hi.ln(), 1e-15)
        .map(f64::exp)
        .map_err(|_| Error::FitRange {
            what: "Weibull shape",
            lo,
            hi,
        })?;
    let scale = mean / ln_gamma(1.0 + 1.0 / shape).exp();
    Ok((shape, scale))
}

/// Weibull fit of the CE area conditioned on `E3^c`.
pub fn fit_ce_weibull(lambda0: f64, r_c: f64, e3: E3Method) -> Result<(f64, f64)> {
    let (mean, var) = conditional_moments(RegionKind::CE, lambda0, r_c, e3)?;
    fit_weibull(mean, var)
}

/// First two moments of `t ~ Beta(a, b)` restricted to `[0, theta]`.
pub fn truncated_beta_moments(a: f64, b: f64, theta: f64) -> (f64, f64) {
    let i0 = beta_reg(a, b, theta);
    let i1 = beta_reg(a + 1.0, b, theta);
    let i2 = beta_reg(a + 2.0, b, theta);
    let m1 = a / (a + b) * i1 / i0;
    let m2 = a * (a + 1.0) / ((a + b) * (a + b + 1.0)) * i2 / i0;
    (m1, m2 - m1 * m1)
}

/// Shapes `(a, b)` of a beta law on `[0, 1]` truncated to `[0, theta]` whose
/// mean and variance are `mean` and `var`.
pub fn fit_truncated_beta(mean: f64, var: f64, theta: f64) -> Result<(f64, f64)> {
    let (lo, hi) = BETA_SHAPE_RANGE;
    let fail = || Error::FitRange {
        what: "beta shape",
        lo,
        hi,
    };
    if !(mean > 0.0 && mean < theta && var > 0.0) {
        return Err(fail());
    }
    // Mean is decreasing in b for fixed a.
    let b_for = |a: f64| -> Option<f64> {
        let f = |ln_b: f64| truncated_beta_moments(a, ln_b.exp(), theta).0 - mean;
        let (flo, fhi) = (f(lo.ln()), f(hi.ln()));
        if flo < 0.0 || fhi > 0.0 {
            return None;
        }
        find_root_monotone(f, lo.ln(), hi.ln(), 1e-14)
            .ok()
            .map(f64::exp)
    };
    let residual = |a: f64| b_for(a).map(|b| truncated_beta_moments(a, b, theta).1 / var - 1.0);

    let grid: Vec<f64> = (0..=240)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 240.0).exp())
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &a in &grid {
        let Some(r) = residual(a) else {
            prev = None;
            continue;
        };
        if let Some((a_prev, r_prev)) = prev {
            if r_prev * r <= 0.0 {
                let ln_a = find_root_monotone(
                    |x: f64| residual(x.exp()).unwrap_or(f64::NAN),
                    a_prev.ln(),
                    a.ln(),
                    1e-14,
                )
                .map_err(|_| fail())?;
                let a = ln_a.exp();
                let b = b_for(a).ok_or_else(fail)?;
                return Ok((a, b));
            }
        }
        prev = Some((a, r));
    }
    Err(fail())
}

/// Truncated-beta fit of the CC area conditioned on `E1^c`, with the
/// untruncated support `[0, 1.5 pi R_c^2]`.
pub fn fit_cc_truncated_beta(lambda0: f64, r_c: f64) -> Result<(f64, f64)> {
    let (mean, var) = conditional_moments(RegionKind::CC, lambda0, r_c, E3Method::MonteCarlo)?;
    let z = BETA_SUPPORT_FACTOR * PI * r_c * r_c;
    fit_truncated_beta(mean / z, var / (z * z), 1.0 / BETA_SUPPORT_FACTOR)
}
