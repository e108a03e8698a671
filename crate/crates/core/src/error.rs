use thiserror::Error;

/// Errors raised by the analytical model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("cell of base station {bs_index} reaches the window boundary")]
    UnboundedCell { bs_index: usize },

    #[error("requested region of cell {bs_index} is empty")]
    EmptyRegion { bs_index: usize },

    #[error("conditioning probability {probability:e} is too small")]
    DegenerateConditioning { probability: f64 },

    #[error("no {what} parameter in [{lo}, {hi}] matches the target moments")]
    FitRange {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("{name} = {value} violates {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("interference integral diverges: 2*alpha = {two_alpha} must exceed 2")]
    Divergence { two_alpha: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    cond: bool,
    name: &'static str,
    value: f64,
    constraint: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint,
        })
    }
}
