//! Atom-plus-continuous area laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RegionKind;
use crate::numerics::{
    beta_reg, find_root_monotone, integrate_1d, ln_beta, ln_gamma, QuadratureSpec, RngStream,
};

use super::events::{prob_e1, prob_e3, E3Method};
use super::fit::{conditional_moments, fit_truncated_beta, fit_weibull, BETA_SUPPORT_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContinuousPart {
    /// `(x - y)^(a-1) (z - x)^(b-1)` on `[v, w]`; here `v = y = 0`.
    TruncatedBeta {
        a_shape: f64,
        b_shape: f64,
        w: f64,
        z: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalKind {
    PdfContinuous,
    Cdf,
}

/// Inverse moment with a flag raised when the value depends on the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseMoment {
    pub value: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedAreaDistribution {
    pub kind: RegionKind,
    pub atom_location: f64,
    pub atom_mass: f64,
    /// `None` for a pure point mass.
    pub continuous: Option<ContinuousPart>,
    pub lambda0: f64,
    pub r_c: f64,
    pub conditional_mean: f64,
    pub conditional_variance: f64,
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::with_tolerances(1e-14, 1e-10)
}

impl ContinuousPart {
    fn beta_ln_norm(a: f64, b: f64, theta: f64) -> f64 {
        ln_beta(a, b) + beta_reg(a, b, theta).ln()
    }

    /// Density of the continuous part.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ContinuousPart::TruncatedBeta {
                a_shape: a,
                b_shape: b,
                w,
                z,
            } => {
                if x <= 0.0 || x > w {
                    return 0.0;
                }
                let t = x / z;
                let ln =
                    (a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - Self::beta_ln_norm(a, b, w / z);
                ln.exp() / z
            }
            ContinuousPart::Weibull { shape, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let s = x / scale;
                shape / scale * s.powf(shape - 1.0) * (-s.powf(shape)).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ContinuousPart::TruncatedBeta {
                a_shape: a,
                b_shape: b,
                w,
                z,
            } => {
                if x <= 0.0 {
                    0.0
                } else if x >= w {
                    1.0
                } else {
                    (beta_reg(a, b, x / z) / beta_reg(a, b, w / z)).min(1.0)
                }
            }
            ContinuousPart::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            ContinuousPart::TruncatedBeta {
                a_shape: a,
                b_shape: b,
                w,
                z,
            } => {
                let target = p * beta_reg(a, b, w / z);
                find_root_monotone(|t| beta_reg(a, b, t) - target, 0.0, w / z, 1e-15)
                    .map(|t| t * z)
                    .unwrap_or(if p < 0.5 { 0.0 } else { w })
            }
            ContinuousPart::Weibull { shape, scale } => scale * (-(-p).ln_1p()).powf(1.0 / shape),
        }
    }

    /// `E[f(X)]` under the continuous part, with substitutions that remove
    /// the power-law endpoint behaviour.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match *self {
            ContinuousPart::TruncatedBeta {
                a_shape: a,
                b_shape: b,
                w,
                z,
            } => {
                // x = w * v^(1/a) makes x^(a-1) dx proportional to dv.
                let theta = w / z;
                let c = (a * theta.ln() - a.ln() - Self::beta_ln_norm(a, b, theta)).exp();
                integrate_1d(
                    |v| {
                        let x = w * v.powf(1.0 / a);
                        c * ((b - 1.0) * (-(x / z)).ln_1p()).exp() * f(x)
                    },
                    0.0,
                    1.0,
                    &spec(),
                )
            }
            ContinuousPart::Weibull { shape, scale } => integrate_1d(
                |y| f(scale * y.powf(1.0 / shape)) * (-y).exp(),
                0.0,
                f64::INFINITY,
                &spec(),
            ),
        }
    }

    /// `int_{x_min}^{top} f(x) / x dx` via `x = e^s`.
    fn inverse_tail(&self, x_min: f64) -> Result<f64> {
        let top = match *self {
            ContinuousPart::TruncatedBeta { w, .. } => w,
            ContinuousPart::Weibull { shape, scale } => scale * 80f64.powf(1.0 / shape),
        };
        if x_min >= top {
            return Ok(0.0);
        }
        integrate_1d(|s| self.pdf(s.exp()), x_min.ln(), top.ln(), &spec())
    }
}

impl MixedAreaDistribution {
    /// Fits the model law of the `kind` area at density `lambda0` and radius `r_c`.
    pub fn fit(kind: RegionKind, lambda0: f64, r_c: f64, e3: E3Method) -> Result<Self> {
        let (mean, var) = conditional_moments(kind, lambda0, r_c, e3)?;
        let (atom_location, atom_mass, continuous) = match kind {
            RegionKind::CC => {
                let w = PI * r_c * r_c;
                let z = BETA_SUPPORT_FACTOR * w;
                let (a, b) = fit_truncated_beta(mean / z, var / (z * z), w / z)?;
                (
                    w,
                    prob_e1(lambda0, r_c),
                    ContinuousPart::TruncatedBeta {
                        a_shape: a,
                        b_shape: b,
                        w,
                        z,
                    },
                )
            }
            RegionKind::CE => {
                let (shape, scale) = fit_weibull(mean, var)?;
                (
                    0.0,
                    prob_e3(lambda0, r_c, e3)?,
                    ContinuousPart::Weibull { shape, scale },
                )
            }
        };
        Ok(Self {
            kind,
            atom_location,
            atom_mass,
            continuous: Some(continuous),
            lambda0,
            r_c,
            conditional_mean: mean,
            conditional_variance: var,
        })
    }

    pub fn point_mass(kind: RegionKind, location: f64) -> Self {
        Self {
            kind,
            atom_location: location,
            atom_mass: 1.0,
            continuous: None,
            lambda0: f64::NAN,
            r_c: f64::NAN,
            conditional_mean: location,
            conditional_variance: 0.0,
        }
    }

    pub fn from_continuous(
        kind: RegionKind,
        atom_location: f64,
        atom_mass: f64,
        part: ContinuousPart,
    ) -> Self {
        Self {
            kind,
            atom_location,
            atom_mass,
            continuous: Some(part),
            lambda0: f64::NAN,
            r_c: f64::NAN,
            conditional_mean: f64::NAN,
            conditional_variance: f64::NAN,
        }
    }

    fn continuous_cdf(&self, x: f64) -> f64 {
        self.continuous.map_or(0.0, |c| c.cdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let atom = if x >= self.atom_location {
            self.atom_mass
        } else {
            0.0
        };
        let cont = (1.0 - self.atom_mass) * self.continuous_cdf(x);
        match self.kind {
            RegionKind::CC if x >= self.atom_location => 1.0,
            _ => (atom + cont).min(1.0),
        }
    }

    /// `P[X < x]`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 && self.atom_location == 0.0 {
            return 0.0;
        }
        let atom = if x > self.atom_location {
            self.atom_mass
        } else {
            0.0
        };
        (atom + (1.0 - self.atom_mass) * self.continuous_cdf(x)).min(1.0)
    }

    /// Continuous density weighted by `1 - atom_mass`.
    pub fn pdf_continuous(&self, x: f64) -> f64 {
        (1.0 - self.atom_mass) * self.continuous.map_or(0.0, |c| c.pdf(x))
    }

    pub fn eval(&self, x: f64, what: EvalKind) -> f64 {
        match what {
            EvalKind::Cdf => self.cdf(x),
            EvalKind::PdfContinuous => self.pdf_continuous(x),
        }
    }

    /// Upper end of the support used for binning: `pi R_c^2` for CC and the
    /// `1 - 1e-9` quantile for CE.
    pub fn support_top(&self) -> f64 {
        match (self.kind, self.continuous) {
            (RegionKind::CC, _) | (_, None) => self.atom_location,
            (RegionKind::CE, Some(c)) => c.quantile(1.0 - 1e-9),
        }
    }

    /// `E[f(X) | continuous part]`.
    pub fn expect_continuous<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match self.continuous {
            Some(c) => c.expect(f),
            None => Err(Error::DegenerateConditioning { probability: 0.0 }),
        }
    }

    /// `E[f(X)]` including the atom.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let atom = self.atom_mass * f(self.atom_location);
        if self.atom_mass >= 1.0 || self.continuous.is_none() {
            return Ok(atom);
        }
        Ok(atom + (1.0 - self.atom_mass) * self.expect_continuous(f)?)
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        let u = stream.uniform();
        match self.continuous {
            Some(c) if u >= self.atom_mass => c.quantile(stream.uniform()),
            _ => self.atom_location,
        }
    }

    /// `E[1/X]` with the continuous integral cut at `1e-6` times the
    /// conditional mean.
    ///
    /// With `condition_on_continuous` the result is the continuous part
    /// alone. Otherwise the CC atom adds `P[E1] / (pi R_c^2)` and the CE value
    /// is weighted by `P[E3^c]`; the CE atom at zero area holds no users and
    /// is left out.
    pub fn inverse_moment(&self, condition_on_continuous: bool) -> Result<InverseMoment> {
        let Some(c) = self.continuous.filter(|_| self.atom_mass < 1.0) else {
            return Ok(InverseMoment {
                value: 1.0 / self.atom_location,
                singular: self.atom_location == 0.0,
            });
        };
        let mean = if self.conditional_mean.is_finite() {
            self.conditional_mean
        } else {
            c.expect(|x| x)?
        };
        let x_min = 1e-6 * mean;
        let coarse = c.inverse_tail(x_min)?;
        let fine = c.inverse_tail(0.5 * x_min)?;
        let singular = (fine - coarse).abs() > 0.01 * coarse.abs();
        if singular {
            log::warn!("inverse moment depends on the lower cutoff ({coarse:.4e} -> {fine:.4e})");
        }
        let value = if condition_on_continuous {
            coarse
        } else {
            match self.kind {
                RegionKind::CC => {
                    self.atom_mass / self.atom_location + (1.0 - self.atom_mass) * coarse
                }
                RegionKind::CE => (1.0 - self.atom_mass) * coarse,
            }
        };
        Ok(InverseMoment { value, singular })
    }
}

/// Value of the model CDF or weighted continuous density at `x`.
pub fn eval_mixed(dist: &MixedAreaDistribution, x: f64, what: EvalKind) -> f64 {
    dist.eval(x, what)
}

/// Closed-form `E[1/X]` of a Weibull law with `shape > 1`.
pub fn weibull_inverse_moment(shape: f64, scale: f64) -> f64 {
    (ln_gamma(1.0 - 1.0 / shape)).exp() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_mass_inverse() {
        let d = MixedAreaDistribution::point_mass(RegionKind::CC, 2.5);
        assert_relative_eq!(
            d.inverse_moment(false).unwrap().value,
            0.4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn weibull_inverse_closed_form() {
        let part = ContinuousPart::Weibull {
            shape: 2.0,
            scale: 3.0,
        };
        let d = MixedAreaDistribution::from_continuous(RegionKind::CE, 0.0, 0.0, part);
        let im = d.inverse_moment(true).unwrap();
        assert!(!im.singular);
        assert_relative_eq!(im.value, PI.sqrt() / 3.0, max_relative = 1e-5);
        assert_relative_eq!(
            weibull_inverse_moment(2.0, 3.0),
            PI.sqrt() / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn singular_beta_is_flagged() {
        let part = ContinuousPart::TruncatedBeta {
            a_shape: 0.5,
            b_shape: 2.0,
            w: 1.0,
            z: 1.5,
        };
        let d = MixedAreaDistribution::from_continuous(RegionKind::CC, 1.0, 0.2, part);
        assert!(d.inverse_moment(true).unwrap().singular);
        let part = ContinuousPart::TruncatedBeta {
            a_shape: 3.0,
            b_shape: 2.0,
            w: 1.0,
            z: 1.5,
        };
        let d = MixedAreaDistribution::from_continuous(RegionKind::CC, 1.0, 0.2, part);
        assert!(!d.inverse_moment(true).unwrap().singular);
    }

    #[test]
    fn continuous_parts_normalize() {
        for part in [
            ContinuousPart::TruncatedBeta {
                a_shape: 0.6,
                b_shape: 3.0,
                w: 2.0,
                z: 3.0,
            },
            ContinuousPart::TruncatedBeta {
                a_shape: 4.0,
                b_shape: 0.4,
                w: 2.0,
                z: 3.0,
            },
            ContinuousPart::Weibull {
                shape: 1.7,
                scale: 0.8,
            },
        ] {
            assert_relative_eq!(part.expect(|_| 1.0).unwrap(), 1.0, max_relative = 1e-6);
            // Density integrates to the CDF.
            let q = part.quantile(0.3);
            assert_relative_eq!(part.cdf(q), 0.3, max_relative = 1e-9);
        }
    }

    #[test]
    fn atoms_in_cdf() {
        let cc = MixedAreaDistribution::from_continuous(
            RegionKind::CC,
            2.0,
            0.3,
            ContinuousPart::TruncatedBeta {
                a_shape: 2.0,
                b_shape: 2.0,
                w: 2.0,
                z: 3.0,
            },
        );
        assert_eq!(cc.cdf(2.0), 1.0);
        assert!((cc.cdf_left(2.0) - 0.7).abs() < 1e-12);
        let ce = MixedAreaDistribution::from_continuous(
            RegionKind::CE,
            0.0,
            0.25,
            ContinuousPart::Weibull {
                shape: 1.5,
                scale: 1.0,
            },
        );
        assert_eq!(ce.cdf(0.0), 0.25);
        assert_eq!(ce.cdf_left(0.0), 0.0);
        let mut prev = 0.0;
        for i in 0..200 {
            let v = ce.cdf(i as f64 * 0.05);
            assert!(v >= prev);
            prev = v;
        }
        assert!(ce.cdf(1e3) > 1.0 - 1e-12);
    }
}
