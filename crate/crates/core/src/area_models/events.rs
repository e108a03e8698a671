//! Probabilities of the characteristic-radius events.
//!
//! `E1 = {R_c < R_m}`: the disc of radius `R_c` fits inside the cell.
//! `E3 = {R_M <= R_c}`: the cell fits inside the disc, so it has no CE region.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::{sample_ppp, CellBuilder, Window};
use crate::numerics::{integrate_best_effort, QuadratureSpec, RngStream};

/// Method used for `P[E3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E3Method {
    /// Empirical CDF of `R_M * sqrt(lambda)` over a fixed-seed cell sample.
    #[default]
    MonteCarlo,
    /// Series in `c = 4 pi lambda r^2` truncated after the cubic term.
    TruncatedSeries,
}

/// `P[R_m > R_c] = exp(-4 pi lambda R_c^2)`.
pub fn prob_e1(lambda0: f64, r_c: f64) -> f64 {
    (-4.0 * PI * lambda0 * r_c * r_c).exp()
}

/// Cells in the reference sample of normalized circumradii.
pub const E3_SAMPLE_CELLS: usize = 100_000;
const E3_SEED: u64 = 0x05EE_D0E3;

/// Sorted sample of `R_M * sqrt(lambda)` from interior cells of unit-density
/// patterns, generated once with a fixed seed.
pub fn normalized_circumradii() -> &'static [f64] {
    static SAMPLE: OnceLock<Vec<f64>> = OnceLock::new();
    SAMPLE.get_or_init(|| {
        let window = Window::for_density(1.0);
        let root = RngStream::new(E3_SEED, 0);
        // About 100 interior cells per pattern at unit density.
        let patterns = E3_SAMPLE_CELLS / 90 + 1;
        let per_pattern: Vec<Vec<f64>> = (0..patterns as u64)
            .into_par_iter()
            .map(|i| {
                let mut stream = root.derive(i);
                let pattern = sample_ppp(1.0, window, &mut stream).expect("unit density is valid");
                let builder = CellBuilder::new(&pattern);
                pattern
                    .interior_indices()
                    .into_iter()
                    .filter_map(|j| builder.voronoi(j).ok().map(|c| c.r_max))
                    .collect()
            })
            .collect();
        let mut all: Vec<f64> = per_pattern
            .into_iter()
            .flatten()
            .take(E3_SAMPLE_CELLS)
            .collect();
        all.sort_by(f64::total_cmp);
        all
    })
}

fn prob_e3_monte_carlo(rho: f64) -> f64 {
    let sample = normalized_circumradii();
    sample.partition_point(|&r| r <= rho) as f64 / sample.len() as f64
}

fn kernel(t: f64) -> f64 {
    if t <= 0.5 {
        (PI * t).sin().powi(2)
    } else {
        1.0
    }
}

fn kernel_integral(u: f64) -> f64 {
    if u <= 0.5 {
        0.5 * u - (2.0 * PI * u).sin() / (4.0 * PI)
    } else {
        0.25 + (u - 0.5)
    }
}

fn xi(k: usize, c: f64) -> f64 {
    let spec = QuadratureSpec::with_tolerances(1e-13, 1e-10);
    let w = |u: f64| kernel(u) * (c * kernel_integral(u)).exp();
    match k {
        1 => w(1.0),
        2 => integrate_best_effort(|u| w(u) * w(1.0 - u), 0.0, 1.0, &spec),
        3 => integrate_best_effort(
            |u1| w(u1) * integrate_best_effort(|u2| w(u2) * w(1.0 - u1 - u2), 0.0, 1.0 - u1, &spec),
            0.0,
            1.0,
            &spec,
        ),
        _ => unreachable!("series is truncated at k = 3"),
    }
}

/// Series value and the magnitude of its last retained term, both scaled by
/// `exp(-c)`.
fn prob_e3_series(rho: f64) -> (f64, f64) {
    let c = 4.0 * PI * rho * rho;
    let mut sum = 0.0;
    let mut last = 0.0;
    let mut factorial = 1.0;
    for k in 1..=3 {
        factorial *= k as f64;
        last = (-c).powi(k as i32) / factorial * xi(k, c);
        sum += last;
    }
    let damp = (-c).exp();
    (1.0 - damp * (1.0 - sum), (damp * last).abs())
}

/// `P[R_M <= R_c]`.
pub fn prob_e3(lambda0: f64, r_c: f64, method: E3Method) -> Result<f64> {
    ensure(lambda0 > 0.0, "lambda0", lambda0, "lambda0 > 0")?;
    ensure(r_c >= 0.0, "r_c", r_c, "r_c >= 0")?;
    if r_c == 0.0 {
        return Ok(0.0);
    }
    let rho = r_c * lambda0.sqrt();
    match method {
        E3Method::MonteCarlo => Ok(prob_e3_monte_carlo(rho)),
        E3Method::TruncatedSeries => {
            let (p, last) = prob_e3_series(rho);
            if !(0.0..=1.0).contains(&p) || last > 1e-3 {
                log::warn!(
                    "P[E3] series unreliable at rho = {rho:.4} (value {p:.4e}, last term {last:.2e}); using Monte Carlo"
                );
                Ok(prob_e3_monte_carlo(rho))
            } else {
                Ok(p)
            }
        }
    }
}
