//! First and second moments of the CC and CE areas of a typical cell.
//!
//! Second moments are computed at unit density as a function of
//! `rho = R_c * sqrt(lambda)` and rescaled by `1 / lambda^2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use crate::error::{ensure, Result};
use crate::geometry::union_two_circles_area;
use crate::geometry::RegionKind;
use crate::numerics::{integrate_1d, integrate_best_effort, QuadratureSpec};

/// Radial cutoff (unit density) for the CE integral's infinite upper limit.
pub const RADIAL_CUTOFF: f64 = 6.0;

fn axis_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-9,
        max_subdivisions: 400,
        ..QuadratureSpec::default()
    }
}

/// `2 pi * int int int exp(-V(r1, r2, u)) du r2 dr2 r1 dr1` over
/// `[lo, hi]^2 x [0, 2 pi]` at unit density.
fn second_moment_unit(lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let spec = axis_spec();
    let angular = |r1: f64, r2: f64| {
        // The integrand is symmetric about u = pi.
        2.0 * integrate_best_effort(
            |u| (-union_two_circles_area(r1, r2, u)).exp(),
            0.0,
            PI,
            &spec,
        )
    };
    // Symmetric in (r1, r2): integrate r2 <= r1 and double.
    let outer = integrate_1d(
        |r1| {
            let inner = integrate_best_effort(|r2| angular(r1, r2) * r2, lo, r1, &spec);
            2.0 * inner * r1
        },
        lo,
        hi,
        &QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-8,
            ..QuadratureSpec::default()
        },
    )?;
    Ok(2.0 * PI * outer)
}

type CacheKey = (u8, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Unit-density second moment of the `kind` area for normalized radius `rho`.
pub fn second_moment_scaled(kind: RegionKind, rho: f64) -> Result<f64> {
    ensure(rho >= 0.0, "rho", rho, "rho >= 0")?;
    let key = (kind as u8, rho.to_bits());
    if let Some(&v) = cache().read().expect("moment cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = match kind {
        RegionKind::CC => second_moment_unit(0.0, rho)?,
        RegionKind::CE => second_moment_unit(rho, rho.max(0.0) + RADIAL_CUTOFF)?,
    };
    cache()
        .write()
        .expect("moment cache poisoned")
        .insert(key, v);
    Ok(v)
}

fn check(lambda0: f64, r_c: f64) -> Result<()> {
    ensure(
        lambda0 > 0.0 && lambda0.is_finite(),
        "lambda0",
        lambda0,
        "lambda0 > 0",
    )?;
    ensure(r_c >= 0.0, "r_c", r_c, "r_c >= 0")
}

/// Mean and second moment of the CC area.
pub fn moments_cc(lambda0: f64, r_c: f64) -> Result<(f64, f64)> {
    check(lambda0, r_c)?;
    let m1 = -(-PI * lambda0 * r_c * r_c).exp_m1() / lambda0;
    let rho = r_c * lambda0.sqrt();
    let m2 = if rho.is_infinite() {
        second_moment_scaled(RegionKind::CE, 0.0)?
    } else {
        second_moment_scaled(RegionKind::CC, rho)?
    };
    Ok((m1, m2 / (lambda0 * lambda0)))
}

/// Mean and second moment of the CE area.
pub fn moments_ce(lambda0: f64, r_c: f64) -> Result<(f64, f64)> {
    check(lambda0, r_c)?;
    let m1 = (-PI * lambda0 * r_c * r_c).exp() / lambda0;
    let rho = r_c * lambda0.sqrt();
    let m2 = if rho.is_infinite() {
        0.0
    } else {
        second_moment_scaled(RegionKind::CE, rho)?
    };
    Ok((m1, m2 / (lambda0 * lambda0)))
}
