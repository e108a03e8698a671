//! Serving-distance laws, dominant-interferer coverage probabilities and
//! average user / cell spectral efficiencies.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::area_models::E3Method;
use crate::error::{ensure, Error, Result};
use crate::geometry::RegionKind;
use crate::interference::{
    dominant_distance, kappa_from_radius, radius_from_kappa, RadialDensityModel,
    ResidualInterference, DEFAULT_C2,
};
use crate::numerics::{
    find_root_monotone, integrate_1d, integrate_best_effort, QuadratureSpec, RngStream,
};
use crate::pilots::{prob_assign, prob_utilization, GroupInclusion, LoadModel, PilotPlan};

/// Upper limit (bits) of the SE threshold integral.
pub const SE_T_MAX: f64 = 40.0;
/// Coverage below which the SE threshold integral stops.
pub const SE_COVERAGE_FLOOR: f64 = 1e-6;

/// Scalar model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub lambda0: f64,
    pub lambda_u: f64,
    pub alpha: f64,
    pub c2: f64,
    pub r_c: f64,
    pub plan: PilotPlan,
    pub group_inclusion: GroupInclusion,
    pub e3_method: E3Method,
    /// Replaces both pilot utilizations in the interferer densities.
    pub utilization_override: Option<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let lambda0 = 4e-6;
        Self {
            lambda0,
            lambda_u: 150.0 * lambda0,
            alpha: 3.7,
            c2: DEFAULT_C2,
            r_c: radius_from_kappa(0.6, DEFAULT_C2, lambda0),
            plan: PilotPlan {
                b: 100,
                b_c: 58,
                b_e: 14,
                beta_f: 3,
                t_c: 200,
            },
            group_inclusion: GroupInclusion::One,
            e3_method: E3Method::MonteCarlo,
            utilization_override: None,
        }
    }
}

impl NetworkConfig {
    pub fn kappa(&self) -> f64 {
        kappa_from_radius(self.r_c, self.c2, self.lambda0)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.r_c = radius_from_kappa(kappa, self.c2, self.lambda0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.lambda0 > 0.0 && self.lambda0.is_finite(),
            "lambda0",
            self.lambda0,
            "lambda0 > 0",
        )?;
        ensure(
            self.lambda_u > 0.0 && self.lambda_u.is_finite(),
            "lambda_u",
            self.lambda_u,
            "lambda_u > 0",
        )?;
        ensure(self.alpha > 1.0, "alpha", self.alpha, "alpha > 1")?;
        ensure(self.c2 > 0.0, "c2", self.c2, "c2 > 0")?;
        ensure(
            self.r_c > 0.0 && self.r_c.is_finite(),
            "r_c",
            self.r_c,
            "R_c > 0",
        )?;
        if let Some(u) = self.utilization_override {
            ensure(
                (0.0..=1.0).contains(&u),
                "utilization_override",
                u,
                "probability in [0, 1]",
            )?;
        }
        self.plan.validate()
    }
}

/// Truncated-Rayleigh serving-distance law of a CC or CE user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServingDistance {
    pub kind: RegionKind,
    pub lambda0: f64,
    pub c2: f64,
    pub r_c: f64,
}

impl ServingDistance {
    fn k(&self) -> f64 {
        PI * self.c2 * self.lambda0
    }

    pub fn cdf(&self, d: f64) -> f64 {
        let k = self.k();
        match self.kind {
            RegionKind::CC => {
                if d <= 0.0 {
                    0.0
                } else if d >= self.r_c {
                    1.0
                } else {
                    (-k * d * d).exp_m1() / (-k * self.r_c * self.r_c).exp_m1()
                }
            }
            RegionKind::CE => {
                if d <= self.r_c {
                    0.0
                } else {
                    -(-k * (d * d - self.r_c * self.r_c)).exp_m1()
                }
            }
        }
    }

    pub fn pdf(&self, d: f64) -> f64 {
        let k = self.k();
        match self.kind {
            RegionKind::CC if d > 0.0 && d <= self.r_c => {
                2.0 * k * d * (-k * d * d).exp() / -(-k * self.r_c * self.r_c).exp_m1()
            }
            RegionKind::CE if d > self.r_c => {
                2.0 * k * d * (-k * (d * d - self.r_c * self.r_c)).exp()
            }
            _ => 0.0,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.k();
        match self.kind {
            RegionKind::CC => {
                let top = (-k * self.r_c * self.r_c).exp_m1();
                (-(p * top).ln_1p() / k).sqrt().min(self.r_c)
            }
            RegionKind::CE => (self.r_c * self.r_c - (-p).ln_1p() / k).sqrt(),
        }
    }
}

pub fn serving_distance(kind: RegionKind, config: &NetworkConfig) -> ServingDistance {
    ServingDistance {
        kind,
        lambda0: config.lambda0,
        c2: config.c2,
        r_c: config.r_c,
    }
}

/// Coverage probabilities over a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub kind: RegionKind,
    /// Linear SINR thresholds.
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Probabilities and densities of the analytical model for one configuration.
#[derive(Debug, Clone)]
pub struct AnalyticalModel {
    pub config: NetworkConfig,
    pub load: LoadModel,
    /// `(any pilot, given pilot)` assignment probabilities per class.
    pub assign_cc: (f64, f64),
    pub assign_ce: (f64, f64),
    pub utilization_cc: f64,
    pub utilization_ce: f64,
    pub density_cc: RadialDensityModel,
    pub density_ce: RadialDensityModel,
    residual_cc: ResidualInterference,
    residual_ce: ResidualInterference,
}

fn coverage_spec() -> QuadratureSpec {
    QuadratureSpec::with_tolerances(1e-9, 1e-8)
}

impl AnalyticalModel {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        let load = LoadModel::fit(c.lambda_u, c.lambda0, c.r_c, c.e3_method)?;
        let assign_cc = prob_assign(RegionKind::CC, &c.plan, &load)?;
        let assign_ce = prob_assign(RegionKind::CE, &c.plan, &load)?;
        let utilization_cc = prob_utilization(RegionKind::CC, &c.plan, &load)?;
        let utilization_ce = prob_utilization(RegionKind::CE, &c.plan, &load)?;
        let kappa = c.kappa();
        let u_cc = c.utilization_override.unwrap_or(utilization_cc);
        let u_ce = c.utilization_override.unwrap_or(utilization_ce);
        let density_cc = RadialDensityModel::cc(c.lambda0, kappa, c.c2, u_cc)?;
        let density_ce = RadialDensityModel::ce(
            c.lambda0,
            kappa,
            c.c2,
            u_ce,
            load.prob_has_ce(),
            c.group_inclusion.probability(c.plan.beta_f),
        )?;
        Ok(Self {
            residual_cc: ResidualInterference::new(density_cc, c.alpha)?,
            residual_ce: ResidualInterference::new(density_ce, c.alpha)?,
            config: c.clone(),
            load,
            assign_cc,
            assign_ce,
            utilization_cc,
            utilization_ce,
            density_cc,
            density_ce,
        })
    }

    pub fn density(&self, kind: RegionKind) -> &RadialDensityModel {
        match kind {
            RegionKind::CC => &self.density_cc,
            RegionKind::CE => &self.density_ce,
        }
    }

    pub fn residual(&self, kind: RegionKind) -> &ResidualInterference {
        match kind {
            RegionKind::CC => &self.residual_cc,
            RegionKind::CE => &self.residual_ce,
        }
    }

    pub fn serving(&self, kind: RegionKind) -> ServingDistance {
        serving_distance(kind, &self.config)
    }

    pub fn prob_has_ce(&self) -> f64 {
        self.load.prob_has_ce()
    }

    /// Dominant distance `d*` at which the aggregate-interference proxy equals
    /// `d^(-2 alpha) / t`; `0` or `+inf` when it falls outside the search range.
    fn critical_distance(&self, kind: RegionKind, d: f64, t: f64) -> f64 {
        let res = self.residual(kind);
        let alpha = self.config.alpha;
        let target = -2.0 * alpha * d.ln() - t.ln();
        let scale = 1.0 / self.config.lambda0.sqrt();
        let (lo, hi) = ((1e-3 * scale).ln(), (1e4 * scale).ln());
        let h = |u: f64| res.aggregate(u.exp()).ln() - target;
        if h(lo) <= 0.0 {
            return 0.0;
        }
        if h(hi) >= 0.0 {
            return f64::INFINITY;
        }
        find_root_monotone(h, lo, hi, 1e-12).map_or(f64::NAN, f64::exp)
    }

    /// `P[SINR >= t]` of a user holding a pilot of class `kind`.
    pub fn coverage(&self, kind: RegionKind, t: f64) -> Result<f64> {
        ensure(t >= 0.0, "T", t, "T >= 0")?;
        if t == 0.0 || self.density(kind).plateau() == 0.0 {
            return Ok(1.0);
        }
        let serving = self.serving(kind);
        let law = dominant_distance(self.density(kind));
        let value = integrate_1d(
            |p: f64| {
                let d_star = self.critical_distance(kind, serving.quantile(p), t);
                if d_star.is_infinite() {
                    0.0
                } else {
                    law.survival(d_star)
                }
            },
            0.0,
            1.0,
            &coverage_spec(),
        )
        .or_else(|e| match e {
            Error::NoConvergence { estimate, .. } => Ok(estimate),
            other => Err(other),
        })?;
        Ok(value.clamp(0.0, 1.0))
    }

    pub fn coverage_curve(&self, kind: RegionKind, thresholds: &[f64]) -> Result<CoverageCurve> {
        let probabilities = thresholds
            .par_iter()
            .map(|&t| self.coverage(kind, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverageCurve {
            kind,
            thresholds: thresholds.to_vec(),
            probabilities,
        })
    }

    /// `E[log2(1 + SINR)] = int_0^inf P_c(2^t - 1) dt`, truncated at 40 bits or
    /// where coverage drops below 1e-6.
    pub fn mean_log_rate(&self, kind: RegionKind) -> Result<f64> {
        let mut t_max = SE_T_MAX;
        for step in 1..=SE_T_MAX as usize {
            let t = step as f64;
            if self.coverage(kind, t.exp2() - 1.0)? < SE_COVERAGE_FLOOR {
                t_max = t;
                break;
            }
        }
        let spec = QuadratureSpec::with_tolerances(1e-9, 1e-8);
        Ok(integrate_best_effort(
            |t: f64| self.coverage(kind, t.exp2() - 1.0).unwrap_or(f64::NAN),
            0.0,
            t_max,
            &spec,
        ))
    }

    /// Same expectation evaluated in the threshold domain,
    /// `int_0^inf P_c(T) / ((1 + T) ln 2) dT`.
    pub fn mean_log_rate_threshold_domain(&self, kind: RegionKind) -> Result<f64> {
        let spec = QuadratureSpec::with_tolerances(1e-10, 1e-9);
        let t_top = SE_T_MAX.exp2() - 1.0;
        // T = e^v - 1 spreads the log-scale decay evenly.
        Ok(integrate_best_effort(
            |v: f64| {
                let t = v.exp_m1();
                self.coverage(kind, t).unwrap_or(f64::NAN) * v.exp() / ((1.0 + t) * LN_2)
            },
            0.0,
            t_top.ln_1p(),
            &spec,
        ))
    }

    /// Average SE of a random user of the class (CE: given a CE region).
    pub fn avg_user_se(&self, kind: RegionKind) -> Result<f64> {
        let any = match kind {
            RegionKind::CC => self.assign_cc.0,
            RegionKind::CE => self.assign_ce.0,
        };
        if any == 0.0 {
            return Ok(0.0);
        }
        Ok(self.config.plan.data_fraction() * any * self.mean_log_rate(kind)?)
    }

    /// The two summands of the average cell SE.
    pub fn cell_se_terms(&self) -> Result<(f64, f64)> {
        let plan = &self.config.plan;
        let f = plan.data_fraction();
        let cc = if plan.b_c == 0 {
            0.0
        } else {
            f * plan.b_c as f64 * self.utilization_cc * self.mean_log_rate(RegionKind::CC)?
        };
        let ce = if plan.b_e == 0 {
            0.0
        } else {
            f * self.prob_has_ce()
                * plan.b_e as f64
                * self.utilization_ce
                * self.mean_log_rate(RegionKind::CE)?
        };
        Ok((cc, ce))
    }

    pub fn avg_cell_se(&self) -> Result<f64> {
        let (cc, ce) = self.cell_se_terms()?;
        Ok(cc + ce)
    }

    /// Coverage estimated by sampling the model itself: serving distance,
    /// dominant distance, and the conditional mean of the rest.
    /// Returns `(coverage, standard error)` per threshold.
    pub fn sampled_coverage(
        &self,
        kind: RegionKind,
        thresholds: &[f64],
        n: usize,
        stream: &mut RngStream,
    ) -> Result<Vec<(f64, f64)>> {
        ensure(n >= 1, "n", n as f64, "n >= 1")?;
        let serving = self.serving(kind);
        let density = self.density(kind);
        let law = dominant_distance(density);
        let res = self.residual(kind);
        let two_alpha = 2.0 * self.config.alpha;
        let mut hits = vec![0usize; thresholds.len()];
        for _ in 0..n {
            let d = serving.quantile(stream.uniform());
            let u = stream.uniform();
            let agg = if density.plateau() == 0.0 {
                0.0
            } else {
                res.aggregate(law.quantile(u)?)
            };
            let signal = d.powf(-two_alpha);
            for (h, &t) in hits.iter_mut().zip(thresholds) {
                if agg * t < signal {
                    *h += 1;
                }
            }
        }
        Ok(hits
            .into_iter()
            .map(|h| {
                let p = h as f64 / n as f64;
                (p, (p * (1.0 - p) / n as f64).sqrt())
            })
            .collect())
    }
}

/// `P[SINR >= t]` for one configuration.
pub fn coverage(kind: RegionKind, t: f64, config: &NetworkConfig) -> Result<f64> {
    AnalyticalModel::new(config)?.coverage(kind, t)
}

pub fn avg_user_se(kind: RegionKind, config: &NetworkConfig) -> Result<f64> {
    AnalyticalModel::new(config)?.avg_user_se(kind)
}

pub fn avg_cell_se(config: &NetworkConfig) -> Result<f64> {
    AnalyticalModel::new(config)?.avg_cell_se()
}

/// `10^(db / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn baseline() -> &'static AnalyticalModel {
        static MODEL: OnceLock<AnalyticalModel> = OnceLock::new();
        MODEL.get_or_init(|| AnalyticalModel::new(&NetworkConfig::default()).unwrap())
    }

    #[test]
    fn serving_support_ends() {
        let c = NetworkConfig::default();
        let cc = serving_distance(RegionKind::CC, &c);
        let ce = serving_distance(RegionKind::CE, &c);
        assert_eq!(cc.cdf(c.r_c), 1.0);
        assert_eq!(ce.cdf(c.r_c), 0.0);
        for p in [0.1, 0.5, 0.9] {
            assert_relative_eq!(cc.cdf(cc.quantile(p)), p, max_relative = 1e-12);
            assert_relative_eq!(ce.cdf(ce.quantile(p)), p, max_relative = 1e-12);
        }
    }

    #[test]
    fn cc_median_against_rejection_sampling() {
        let c = NetworkConfig {
            r_c: 250.0,
            ..NetworkConfig::default()
        };
        let law = serving_distance(RegionKind::CC, &c);
        let median = law.quantile(0.5);
        assert!((law.cdf(median) - 0.5).abs() < 1e-12);
        // Untruncated Rayleigh draws rejected beyond R_c.
        let k = PI * c.c2 * c.lambda0;
        let mut s = RngStream::new(5, 0);
        let n = 1_000_000;
        let mut draws = Vec::with_capacity(n);
        while draws.len() < n {
            let d = (-(1.0 - s.uniform()).ln() / k).sqrt();
            if d <= c.r_c {
                draws.push(d);
            }
        }
        draws.sort_by(f64::total_cmp);
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let f = law.cdf(d);
                (f - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.002, "ks = {ks}");
    }

    #[test]
    fn coverage_limits_and_monotonicity() {
        let m = baseline();
        for kind in [RegionKind::CC, RegionKind::CE] {
            assert_eq!(m.coverage(kind, 0.0).unwrap(), 1.0);
            assert!(m.coverage(kind, 1e-6).unwrap() > 0.999);
            let mut prev = 1.0;
            for db in (-20..=40).step_by(5) {
                let p = m.coverage(kind, db_to_linear(db as f64)).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p <= prev + 1e-9, "{kind:?} {db} dB: {p} > {prev}");
                prev = p;
            }
        }
    }

    #[test]
    fn quadrature_matches_model_sampling() {
        let m = baseline();
        let thresholds: Vec<f64> = (-2..=2).map(|i| db_to_linear(10.0 * i as f64)).collect();
        for kind in [RegionKind::CC, RegionKind::CE] {
            let sampled = m
                .sampled_coverage(
                    kind,
                    &thresholds,
                    40_000,
                    &mut RngStream::new(11, kind as u64),
                )
                .unwrap();
            for (&t, (p, se)) in thresholds.iter().zip(sampled) {
                let q = m.coverage(kind, t).unwrap();
                assert!(
                    (p - q).abs() <= 4.0 * se + 1e-4,
                    "{kind:?} T {t}: sampled {p} quadrature {q}"
                );
            }
        }
    }

    #[test]
    fn se_evaluation_orders_agree() {
        let m = baseline();
        for kind in [RegionKind::CC, RegionKind::CE] {
            let a = m.mean_log_rate(kind).unwrap();
            let b = m.mean_log_rate_threshold_domain(kind).unwrap();
            assert!((a - b).abs() <= 1e-6 * a.max(1.0), "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn prefactor_halves_se() {
        let m = baseline();
        let raw = m.assign_cc.0 * m.mean_log_rate(RegionKind::CC).unwrap();
        assert_relative_eq!(
            m.avg_user_se(RegionKind::CC).unwrap(),
            0.5 * raw,
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_plans() {
        let c = NetworkConfig {
            plan: PilotPlan::new(99, 0, 33, 3, 200).unwrap(),
            ..NetworkConfig::default()
        };
        let m = AnalyticalModel::new(&c).unwrap();
        assert_eq!(m.avg_user_se(RegionKind::CC).unwrap(), 0.0);

        let c = NetworkConfig {
            plan: PilotPlan::new(100, 100, 0, 1, 200).unwrap(),
            utilization_override: Some(1.0),
            ..NetworkConfig::default()
        };
        let m = AnalyticalModel::new(&c).unwrap();
        let cell = m.avg_cell_se().unwrap();
        let expected = 100.0 * 0.5 * m.mean_log_rate(RegionKind::CC).unwrap() * m.utilization_cc;
        assert_relative_eq!(cell, expected, max_relative = 1e-12);
    }

    #[test]
    fn cell_se_dominates_terms() {
        let m = baseline();
        let (cc, ce) = m.cell_se_terms().unwrap();
        let total = m.avg_cell_se().unwrap();
        assert!(cc >= 0.0 && ce >= 0.0 && total >= cc && total >= ce);
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::default().validate().is_ok());
        let bad = NetworkConfig {
            alpha: 1.0,
            ..NetworkConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_relative_eq!(NetworkConfig::default().kappa(), 0.6, max_relative = 1e-14);
    }
}
