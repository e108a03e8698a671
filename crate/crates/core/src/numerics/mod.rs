//! Numerical kernels shared by the analytical model and the simulator.

mod quadrature;
mod rng;
mod roots;

pub use quadrature::{integrate_1d, integrate_best_effort, kronrod15, QuadratureSpec, TailRule};
pub use rng::{rng_uniform, RngStream};
pub use roots::{bisect, find_root_monotone};

pub use statrs::function::beta::{beta_reg, ln_beta};
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Truncation point for Poisson sums with mean `mu`: the tail beyond it is
/// below 1e-10.
pub fn poisson_series_cutoff(mu: f64) -> usize {
    (mu + 10.0 * mu.sqrt() + 20.0).ceil() as usize
}
