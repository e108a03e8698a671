//! Zero-truncated Poisson user loads and pilot assignment / utilization
//! probabilities.

use serde::{Deserialize, Serialize};

use crate::area_models::{E3Method, MixedAreaDistribution};
use crate::error::{ensure, Error, Result};
use crate::geometry::RegionKind;
use crate::numerics::{ln_gamma, poisson_series_cutoff};

/// Pilot budget: `B_C` CC pilots shared by every cell and `beta_f` groups of
/// `B_E` CE pilots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPlan {
    pub b: u32,
    pub b_c: u32,
    pub b_e: u32,
    pub beta_f: u32,
    pub t_c: u32,
}

impl PilotPlan {
    pub fn new(b: u32, b_c: u32, b_e: u32, beta_f: u32, t_c: u32) -> Result<Self> {
        let plan = Self {
            b,
            b_c,
            b_e,
            beta_f,
            t_c,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_f < 1 {
            return Err(Error::Invalid(format!(
                "beta_f = {} must be at least 1",
                self.beta_f
            )));
        }
        if self.b_c as u64 + self.beta_f as u64 * self.b_e as u64 != self.b as u64 {
            return Err(Error::Invalid(format!(
                "pilot partition violated: B_C + beta_f * B_E = {} + {} * {} != B = {}",
                self.b_c, self.beta_f, self.b_e, self.b
            )));
        }
        if self.b > self.t_c {
            return Err(Error::Invalid(format!(
                "B = {} exceeds T_c = {}",
                self.b, self.t_c
            )));
        }
        Ok(())
    }

    /// Plan with `B_C` as close as possible to `fraction * B` such that
    /// `B - B_C` splits into `beta_f` equal groups.
    pub fn from_fraction(b: u32, fraction: f64, beta_f: u32, t_c: u32) -> Result<Self> {
        ensure(
            (0.0..=1.0).contains(&fraction),
            "fraction",
            fraction,
            "0 <= B_C / B <= 1",
        )?;
        ensure(beta_f >= 1, "beta_f", beta_f as f64, "beta_f >= 1")?;
        let target = fraction * b as f64;
        let b_c = (0..=b)
            .filter(|bc| (b - bc).is_multiple_of(beta_f))
            .min_by(|x, y| {
                (*x as f64 - target)
                    .abs()
                    .total_cmp(&(*y as f64 - target).abs())
            })
            .ok_or_else(|| {
                Error::Invalid(format!("no partition of B = {b} with beta_f = {beta_f}"))
            })?;
        Self::new(b, b_c, (b - b_c) / beta_f, beta_f, t_c)
    }

    /// Pool size for the given user class.
    pub fn pool(&self, kind: RegionKind) -> u32 {
        match kind {
            RegionKind::CC => self.b_c,
            RegionKind::CE => self.b_e,
        }
    }

    /// Fraction of the coherence block left for data, `1 - B / T_c`.
    pub fn data_fraction(&self) -> f64 {
        1.0 - self.b as f64 / self.t_c as f64
    }
}

/// How a cell's CE pilot group relates to the tagged cell's group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupInclusion {
    /// Every CE interferer is counted on every CE pilot.
    #[default]
    One,
    /// Cells pick one of `beta_f` groups uniformly.
    InverseReuse,
}

impl GroupInclusion {
    pub fn probability(self, beta_f: u32) -> f64 {
        match self {
            GroupInclusion::One => 1.0,
            GroupInclusion::InverseReuse => 1.0 / beta_f as f64,
        }
    }
}

/// User intensity and the CC / CE area laws that drive the per-cell loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub lambda_u: f64,
    pub area_cc: MixedAreaDistribution,
    pub area_ce: MixedAreaDistribution,
}

impl LoadModel {
    pub fn new(
        lambda_u: f64,
        area_cc: MixedAreaDistribution,
        area_ce: MixedAreaDistribution,
    ) -> Result<Self> {
        ensure(
            lambda_u > 0.0 && lambda_u.is_finite(),
            "lambda_u",
            lambda_u,
            "lambda_u > 0",
        )?;
        Ok(Self {
            lambda_u,
            area_cc,
            area_ce,
        })
    }

    /// Loads with both area laws fitted at `(lambda0, r_c)`.
    pub fn fit(lambda_u: f64, lambda0: f64, r_c: f64, e3: E3Method) -> Result<Self> {
        let cc = MixedAreaDistribution::fit(RegionKind::CC, lambda0, r_c, e3)?;
        let ce = MixedAreaDistribution::fit(RegionKind::CE, lambda0, r_c, e3)?;
        Self::new(lambda_u, cc, ce)
    }

    pub fn area(&self, kind: RegionKind) -> &MixedAreaDistribution {
        match kind {
            RegionKind::CC => &self.area_cc,
            RegionKind::CE => &self.area_ce,
        }
    }

    /// `P[E3^c]`: probability that a cell has a CE region.
    pub fn prob_has_ce(&self) -> f64 {
        1.0 - self.area_ce.atom_mass
    }
}

/// `P[N = n]` for a Poisson(`mu`) count conditioned on `N >= 1`.
pub fn trunc_poisson_pmf(n: u64, mu: f64) -> Result<f64> {
    ensure(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0")?;
    if n == 0 {
        return Ok(0.0);
    }
    let ln = -mu + n as f64 * mu.ln() - ln_gamma(n as f64 + 1.0) - (-(-mu).exp_m1()).ln();
    Ok(ln.exp())
}

/// `(P[assigned], E[min(N, K)] / K)` for a zero-truncated Poisson(`mu`)
/// load competing for `k` pilots.
fn load_terms(mu: f64, k: u32) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let kf = k as f64;
    if mu < 1e-12 {
        return (1.0, 1.0 / kf);
    }
    let n_max = poisson_series_cutoff(mu).max(k as usize + 1);
    let ln_norm = -mu - (-(-mu).exp_m1()).ln();
    let ln_mu = mu.ln();
    // Walk the pmf in log space from n = 1; terms far below the mode vanish.
    let mut ln_p = ln_norm + ln_mu;
    let (mut assign, mut util, mut total) = (0.0, 0.0, 0.0);
    for n in 1..=n_max {
        if n > 1 {
            ln_p += ln_mu - (n as f64).ln();
        }
        let p = ln_p.exp();
        let nf = n as f64;
        total += p;
        if n as u32 <= k {
            assign += p;
            util += nf / kf * p;
        } else {
            assign += kf / nf * p;
            util += p;
        }
    }
    // Mass beyond the cutoff is saturated: assignment K/n -> 0, usage 1.
    let tail = (1.0 - total).max(0.0);
    (assign.min(1.0), (util + tail).min(1.0))
}

fn area_expectation<F: Fn(f64) -> f64>(kind: RegionKind, load: &LoadModel, f: F) -> Result<f64> {
    let dist = load.area(kind);
    match kind {
        RegionKind::CC => dist.expect(f),
        RegionKind::CE => {
            if dist.atom_mass >= 1.0 {
                return Err(Error::DegenerateConditioning { probability: 0.0 });
            }
            dist.expect_continuous(f)
        }
    }
}

/// `(P[a random user of the class holds a pilot], P[it holds a given pilot])`.
///
/// The CE value is conditioned on the cell having a CE region.
pub fn prob_assign(kind: RegionKind, plan: &PilotPlan, load: &LoadModel) -> Result<(f64, f64)> {
    let k = plan.pool(kind);
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let lu = load.lambda_u;
    let any = area_expectation(kind, load, |x| load_terms(lu * x, k).0)?.clamp(0.0, 1.0);
    Ok((any, any / k as f64))
}

/// Probability that a given pilot of the class is used in a cell (CE:
/// conditioned on the cell having a CE region).
pub fn prob_utilization(kind: RegionKind, plan: &PilotPlan, load: &LoadModel) -> Result<f64> {
    let k = plan.pool(kind);
    if k == 0 {
        return Ok(0.0);
    }
    let lu = load.lambda_u;
    Ok(area_expectation(kind, load, |x| load_terms(lu * x, k).1)?.clamp(0.0, 1.0))
}

/// Probability that an interfering cell's CE users share the tagged CE pilot
/// group.
pub fn group_inclusion(mode: GroupInclusion, plan: &PilotPlan) -> f64 {
    mode.probability(plan.beta_f)
}
