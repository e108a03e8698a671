//! Pair correlation functions of the interfering-user processes, their
//! radial PPP approximations, dominant-interferer distance laws and the mean
//! residual interference.
//!
//! Both densities have the form `plateau * (1 - exp(-rate * (r^2 - r0^2)))`
//! for `r >= r0`, with `r0 = 0` for CC and `r0 = R_c` for CE, so the intensity
//! measure is available in closed form.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::area_models::{prob_e1, prob_e3, E3Method, MixedAreaDistribution};
use crate::error::{ensure, Error, Result};
use crate::geometry::RegionKind;
use crate::numerics::{find_root_monotone, integrate_1d, kronrod15, QuadratureSpec};

/// Default correction factor of the Rayleigh serving-distance approximation.
pub const DEFAULT_C2: f64 = 1.25;
/// Constant of the CE pair correlation function.
pub const CE_PCF_CONSTANT: f64 = 14.0 / 5.0;

/// `R_c` for a normalized radius `kappa`.
pub fn radius_from_kappa(kappa: f64, c2: f64, lambda0: f64) -> f64 {
    kappa / (PI * c2 * lambda0).sqrt()
}

/// Normalized radius `kappa = R_c sqrt(pi c2 lambda0)`.
pub fn kappa_from_radius(r_c: f64, c2: f64, lambda0: f64) -> f64 {
    r_c * (PI * c2 * lambda0).sqrt()
}

fn inverse_cache() -> &'static RwLock<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `E[X_C(1, kappa / sqrt(pi c2))^-1]`: inverse moment of the CC area at unit
/// density, atom included.
///
/// Where the truncated-beta fit is infeasible (very small radii, almost all
/// mass in the atom) the continuous part is replaced by its conditional mean.
pub fn cc_inverse_moment_unit(kappa: f64, c2: f64) -> Result<f64> {
    ensure(
        kappa > 0.0 && kappa.is_finite(),
        "kappa",
        kappa,
        "kappa > 0",
    )?;
    ensure(c2 > 0.0, "c2", c2, "c2 > 0")?;
    let key = (kappa.to_bits(), c2.to_bits());
    if let Some(&v) = inverse_cache()
        .read()
        .expect("inverse-moment cache poisoned")
        .get(&key)
    {
        return Ok(v);
    }
    let rho = radius_from_kappa(kappa, c2, 1.0);
    let value = match MixedAreaDistribution::fit(RegionKind::CC, 1.0, rho, E3Method::MonteCarlo) {
        Ok(dist) => {
            let inv = dist.inverse_moment(false)?;
            if inv.singular {
                log::warn!("CC inverse moment at kappa = {kappa} depends on the lower cutoff");
            }
            inv.value
        }
        Err(Error::FitRange { .. }) => {
            let (mean, _) = crate::area_models::conditional_moments(
                RegionKind::CC,
                1.0,
                rho,
                E3Method::MonteCarlo,
            )?;
            let p1 = prob_e1(1.0, rho);
            log::warn!("CC area fit infeasible at kappa = {kappa}; using the conditional mean for the continuous part");
            p1 / (PI * rho * rho) + (1.0 - p1) / mean
        }
        Err(e) => return Err(e),
    };
    inverse_cache()
        .write()
        .expect("inverse-moment cache poisoned")
        .insert(key, value);
    Ok(value)
}

/// PCF of the CC interferer process about the tagged BS, at scaled distance
/// `r sqrt(lambda0)`.
pub fn pcf_cc(r_scaled: f64, kappa: f64, c2: f64) -> Result<f64> {
    ensure(r_scaled >= 0.0, "r_scaled", r_scaled, "r_scaled >= 0")?;
    let inv = cc_inverse_moment_unit(kappa, c2)?;
    Ok(-(-2.0 * PI * r_scaled * r_scaled * inv).exp_m1())
}

/// `P[E3^c]` at unit density for normalized radius `kappa`.
pub fn prob_has_ce_unit(kappa: f64, c2: f64, e3: E3Method) -> Result<f64> {
    Ok(1.0 - prob_e3(1.0, radius_from_kappa(kappa, c2, 1.0), e3)?)
}

/// PCF of the CE interferer process about the tagged BS, at scaled distance
/// `r sqrt(lambda0)`; zero inside `R_c`.
pub fn pcf_ce(r_scaled: f64, kappa: f64, c2: f64) -> Result<f64> {
    ensure(r_scaled >= 0.0, "r_scaled", r_scaled, "r_scaled >= 0")?;
    let p = prob_has_ce_unit(kappa, c2, E3Method::MonteCarlo)?;
    let x = r_scaled * r_scaled - kappa * kappa / (PI * c2);
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(-(-PI * x * CE_PCF_CONSTANT * p * (kappa * kappa / c2).exp()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererKind {
    CcPilot,
    CePilot,
}

/// Radial density of the same-pilot interferers about the tagged BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDensityModel {
    pub kind: InterfererKind,
    pub lambda0: f64,
    pub kappa: f64,
    pub c2: f64,
    /// Pilot utilization (CE: conditioned on the cell having a CE region).
    pub utilization: f64,
    /// `P[E3^c]`; 1 for CC.
    pub p_e3c: f64,
    /// Unit-density CC inverse moment; unused for CE.
    pub inv_moment: f64,
    /// Probability that an interfering CE cell shares the tagged CE group.
    pub group_inclusion: f64,
}

impl RadialDensityModel {
    pub fn cc(lambda0: f64, kappa: f64, c2: f64, utilization: f64) -> Result<Self> {
        let inv_moment = cc_inverse_moment_unit(kappa, c2)?;
        Self::with_inverse_moment(lambda0, kappa, c2, utilization, inv_moment)
    }

    pub fn with_inverse_moment(
        lambda0: f64,
        kappa: f64,
        c2: f64,
        utilization: f64,
        inv_moment: f64,
    ) -> Result<Self> {
        let m = Self {
            kind: InterfererKind::CcPilot,
            lambda0,
            kappa,
            c2,
            utilization,
            p_e3c: 1.0,
            inv_moment,
            group_inclusion: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ce(
        lambda0: f64,
        kappa: f64,
        c2: f64,
        utilization: f64,
        p_e3c: f64,
        group_inclusion: f64,
    ) -> Result<Self> {
        let m = Self {
            kind: InterfererKind::CePilot,
            lambda0,
            kappa,
            c2,
            utilization,
            p_e3c,
            inv_moment: f64::NAN,
            group_inclusion,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        ensure(
            self.lambda0 > 0.0 && self.lambda0.is_finite(),
            "lambda0",
            self.lambda0,
            "lambda0 > 0",
        )?;
        ensure(self.kappa >= 0.0, "kappa", self.kappa, "kappa >= 0")?;
        ensure(self.c2 > 0.0, "c2", self.c2, "c2 > 0")?;
        for (name, v) in [
            ("utilization", self.utilization),
            ("p_e3c", self.p_e3c),
            ("group_inclusion", self.group_inclusion),
        ] {
            ensure((0.0..=1.0).contains(&v), name, v, "probability in [0, 1]")?;
        }
        if self.kind == InterfererKind::CcPilot {
            ensure(
                self.inv_moment > 0.0,
                "inv_moment",
                self.inv_moment,
                "inv_moment > 0",
            )?;
        }
        Ok(())
    }

    pub fn r_c(&self) -> f64 {
        radius_from_kappa(self.kappa, self.c2, self.lambda0)
    }

    /// Far-field density.
    pub fn plateau(&self) -> f64 {
        self.lambda0 * self.utilization * self.p_e3c * self.group_inclusion
    }

    /// Exponential rate in `r^2` of the density ramp.
    fn rate(&self) -> f64 {
        match self.kind {
            InterfererKind::CcPilot => 2.0 * PI * self.lambda0 * self.inv_moment,
            InterfererKind::CePilot => {
                PI * CE_PCF_CONSTANT
                    * (self.kappa * self.kappa / self.c2).exp()
                    * self.p_e3c
                    * self.lambda0
            }
        }
    }

    /// Squared radius below which the density vanishes.
    fn offset(&self) -> f64 {
        match self.kind {
            InterfererKind::CcPilot => 0.0,
            InterfererKind::CePilot => self.r_c().powi(2),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        let x = r * r - self.offset();
        if x <= 0.0 {
            return 0.0;
        }
        self.plateau() * -(-self.rate() * x).exp_m1()
    }

    /// `Lambda(r) = 2 pi int_0^r density(t) t dt`.
    pub fn intensity_measure(&self, r: f64) -> f64 {
        let x = r * r - self.offset();
        if x <= 0.0 {
            return 0.0;
        }
        let y = self.rate() * x;
        // 1 - (1 - e^-y) / y, with its series near zero.
        let shape = if y < 1e-4 {
            y / 2.0 - y * y / 6.0 + y * y * y / 24.0
        } else {
            1.0 + (-y).exp_m1() / y
        };
        PI * self.plateau() * x * shape
    }

    /// Radius at which the intensity measure reaches `target`.
    pub fn inverse_intensity(&self, target: f64) -> Result<f64> {
        ensure(target >= 0.0, "target", target, "target >= 0")?;
        if target == 0.0 {
            return Ok(self.offset().sqrt());
        }
        let plateau = self.plateau();
        if plateau <= 0.0 {
            return Ok(f64::INFINITY);
        }
        // Lambda >= pi * plateau * (x - 1 / rate) bounds the root.
        let x_hi = target / (PI * plateau) + 1.0 / self.rate() + 1.0 / self.lambda0;
        let off = self.offset();
        let x = find_root_monotone(
            |x: f64| self.intensity_measure((x + off).sqrt()) - target,
            0.0,
            x_hi,
            1e-13 * x_hi,
        )?;
        Ok((x + off).sqrt())
    }
}

/// Law of the distance to the nearest same-pilot interferer.
#[derive(Debug, Clone, Copy)]
pub struct DominantDistance<'a> {
    model: &'a RadialDensityModel,
}

impl DominantDistance<'_> {
    pub fn cdf(&self, d: f64) -> f64 {
        -(-self.model.intensity_measure(d)).exp_m1()
    }

    pub fn survival(&self, d: f64) -> f64 {
        (-self.model.intensity_measure(d)).exp()
    }

    pub fn pdf(&self, d: f64) -> f64 {
        2.0 * PI * d * self.model.density(d) * self.survival(d)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        ensure((0.0..1.0).contains(&p), "p", p, "0 <= p < 1")?;
        self.model.inverse_intensity(-(-p).ln_1p())
    }
}

pub fn dominant_distance(model: &RadialDensityModel) -> DominantDistance<'_> {
    DominantDistance { model }
}

fn residual_spec() -> QuadratureSpec {
    QuadratureSpec::with_tolerances(1e-300, 1e-11)
}

/// `2 pi int_{d_hat}^inf r^(-2 alpha) density(r) r dr`.
pub fn mean_residual_interference(
    model: &RadialDensityModel,
    d_hat: f64,
    alpha: f64,
) -> Result<f64> {
    if 2.0 * alpha <= 2.0 {
        return Err(Error::Divergence {
            two_alpha: 2.0 * alpha,
        });
    }
    ensure(d_hat > 0.0, "d_hat", d_hat, "d_hat > 0")?;
    if d_hat.is_infinite() {
        return Ok(0.0);
    }
    let plateau = model.plateau();
    if plateau == 0.0 {
        return Ok(0.0);
    }
    let (rate, off) = (model.rate(), model.offset());
    let s_lo = (d_hat * d_hat).max(off);
    // Beyond s_hi the ramp factor is 1 to within e^-40.
    let s_hi = s_lo.max(off + 40.0 / rate);
    let ramp = if s_hi > s_lo {
        // In u = ln s the integrand is s^(1 - alpha) (1 - e^{-rate (s - off)}).
        integrate_1d(
            |u: f64| {
                let s = u.exp();
                s.powf(1.0 - alpha) * -(-rate * (s - off)).exp_m1()
            },
            s_lo.ln(),
            s_hi.ln(),
            &residual_spec(),
        )?
    } else {
        0.0
    };
    let tail = s_hi.powf(1.0 - alpha) / (alpha - 1.0);
    Ok(PI * plateau * (ramp + tail))
}

/// Tabulated residual interference for repeated evaluation at one `alpha`.
///
/// Values at log-spaced nodes are accumulated from the top; a query adds the
/// short stretch to the next node with one Gauss–Kronrod rule.
#[derive(Debug, Clone)]
pub struct ResidualInterference {
    model: RadialDensityModel,
    alpha: f64,
    ln_nodes: Vec<f64>,
    values: Vec<f64>,
}

const RESIDUAL_NODES: usize = 1200;

impl ResidualInterference {
    pub fn new(model: RadialDensityModel, alpha: f64) -> Result<Self> {
        if 2.0 * alpha <= 2.0 {
            return Err(Error::Divergence {
                two_alpha: 2.0 * alpha,
            });
        }
        let scale = 1.0 / model.lambda0.sqrt();
        let lo = (1e-3 * scale).max(model.offset().sqrt());
        let hi = 10.0 * scale;
        let (ln_lo, ln_hi) = (lo.ln(), hi.max(lo * 2.0).ln());
        let ln_nodes: Vec<f64> = (0..=RESIDUAL_NODES)
            .map(|i| ln_lo + (ln_hi - ln_lo) * i as f64 / RESIDUAL_NODES as f64)
            .collect();
        let mut values = vec![0.0; ln_nodes.len()];
        let top = ln_nodes.len() - 1;
        values[top] = mean_residual_interference(&model, ln_nodes[top].exp(), alpha)?;
        let table = Self {
            model,
            alpha,
            ln_nodes,
            values: Vec::new(),
        };
        for i in (0..top).rev() {
            values[i] = values[i + 1] + table.stretch(table.ln_nodes[i], table.ln_nodes[i + 1]);
        }
        Ok(Self { values, ..table })
    }

    /// `2 pi int_{e^a}^{e^b} r^(2 - 2 alpha) density(r) d(ln r)`.
    fn stretch(&self, ln_a: f64, ln_b: f64) -> f64 {
        let (m, alpha) = (&self.model, self.alpha);
        2.0 * PI
            * kronrod15(
                |v: f64| {
                    let r = v.exp();
                    r.powf(2.0 - 2.0 * alpha) * m.density(r)
                },
                ln_a,
                ln_b,
            )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn model(&self) -> &RadialDensityModel {
        &self.model
    }

    /// `E[I_rem | D_hat = d_hat]`.
    pub fn eval(&self, d_hat: f64) -> f64 {
        let ln_d = d_hat.ln();
        let (first, last) = (self.ln_nodes[0], *self.ln_nodes.last().unwrap());
        if ln_d < first || ln_d >= last {
            if ln_d < first && self.model.offset() > 0.0 && d_hat * d_hat <= self.model.offset() {
                return self.values[0];
            }
            return mean_residual_interference(&self.model, d_hat, self.alpha).unwrap_or(f64::NAN);
        }
        let step = (last - first) / (self.ln_nodes.len() - 1) as f64;
        let i = (((ln_d - first) / step) as usize).min(self.ln_nodes.len() - 2);
        self.values[i + 1] + self.stretch(ln_d, self.ln_nodes[i + 1])
    }

    /// Aggregate interference proxy `d_hat^(-2 alpha) + E[I_rem | d_hat]`.
    pub fn aggregate(&self, d_hat: f64) -> f64 {
        d_hat.powf(-2.0 * self.alpha) + self.eval(d_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const L0: f64 = 4e-6;

    fn cc_model(kappa: f64) -> RadialDensityModel {
        RadialDensityModel::cc(L0, kappa, DEFAULT_C2, 0.9).unwrap()
    }

    fn ce_model(kappa: f64) -> RadialDensityModel {
        let p = prob_has_ce_unit(kappa, DEFAULT_C2, E3Method::MonteCarlo).unwrap();
        RadialDensityModel::ce(L0, kappa, DEFAULT_C2, 0.7, p, 1.0).unwrap()
    }

    #[test]
    fn kappa_radius_round_trip() {
        let r = radius_from_kappa(1.0, 1.25, 4e-6);
        assert!((r - 252.31).abs() < 0.01);
        assert_relative_eq!(kappa_from_radius(r, 1.25, 4e-6), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn pcf_limits() {
        for kappa in [0.4, 0.8, 1.2] {
            assert_eq!(pcf_cc(0.0, kappa, DEFAULT_C2).unwrap(), 0.0);
            assert!(pcf_cc(10.0, kappa, DEFAULT_C2).unwrap() > 1.0 - 1e-12);
            let rc = radius_from_kappa(kappa, DEFAULT_C2, 1.0);
            assert_eq!(pcf_ce(rc, kappa, DEFAULT_C2).unwrap(), 0.0);
            assert_eq!(pcf_ce(0.5 * rc, kappa, DEFAULT_C2).unwrap(), 0.0);
            assert!(pcf_ce(10.0, kappa, DEFAULT_C2).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn small_kappa_cc_inverse_moment_is_disc() {
        let kappa = 0.05;
        let rho = radius_from_kappa(kappa, DEFAULT_C2, 1.0);
        let inv = cc_inverse_moment_unit(kappa, DEFAULT_C2).unwrap();
        assert!((inv * PI * rho * rho - 1.0).abs() < 0.01, "{inv}");
        // With E[X^-1] = 1 / (pi R_c^2) the PCF at r = R_c equals 1 - e^-2
        // and exceeds 0.95 from r = 1.25 R_c on.
        let at_rc = pcf_cc(rho, kappa, DEFAULT_C2).unwrap();
        assert!((at_rc - (1.0 - (-2.0f64).exp())).abs() < 0.01);
        for k in 0..50 {
            let r = rho * (1.25 + 0.1 * k as f64);
            let g = pcf_cc(r, kappa, DEFAULT_C2).unwrap();
            assert!((0.95..=1.0).contains(&g), "r = {r}: {g}");
        }
    }

    #[test]
    fn densities_bounded_and_monotone() {
        for m in [cc_model(0.6), ce_model(0.6), ce_model(1.2)] {
            let mut prev = 0.0;
            for i in 0..400 {
                let r = i as f64 * 5.0;
                let d = m.density(r);
                assert!(d >= prev && d <= L0);
                prev = d;
            }
            assert_relative_eq!(m.density(1e5), m.plateau(), max_relative = 1e-12);
        }
        let ce = ce_model(0.6);
        assert_eq!(ce.density(ce.r_c()), 0.0);
        assert_eq!(ce.intensity_measure(0.5 * ce.r_c()), 0.0);
        assert_eq!(cc_model(0.6).density(0.0), 0.0);
    }

    #[test]
    fn intensity_measure_matches_quadrature_and_derivative() {
        for m in [cc_model(0.8), ce_model(0.8)] {
            let mut prev = 0.0;
            for i in 1..60 {
                let r = i as f64 * 25.0;
                let q = integrate_1d(
                    |t| 2.0 * PI * m.density(t) * t,
                    m.offset().sqrt().min(r),
                    r,
                    &QuadratureSpec::with_tolerances(1e-15, 1e-12),
                )
                .unwrap();
                let lam = m.intensity_measure(r);
                assert!((lam - q).abs() <= 1e-9 * q.max(1e-6), "r {r}: {lam} vs {q}");
                assert!(lam >= prev);
                prev = lam;
                let h = 1e-4 * r;
                let deriv = (m.intensity_measure(r + h) - m.intensity_measure(r - h)) / (2.0 * h);
                let dens = m.density(r);
                if dens > 1e-3 * m.plateau() {
                    assert!((deriv / (2.0 * PI * r) / dens - 1.0).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn dominant_quantile_inverts_cdf() {
        for m in [cc_model(0.6), ce_model(0.6)] {
            let law = dominant_distance(&m);
            assert_eq!(law.cdf(0.0), 0.0);
            assert!(law.cdf(1e5) > 1.0 - 1e-12);
            for p in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let d = law.quantile(p).unwrap();
                assert!((law.cdf(d) - p).abs() < 1e-9);
                assert_relative_eq!(law.quantile(law.cdf(d)).unwrap(), d, max_relative = 1e-6);
            }
            let total =
                integrate_1d(|d| law.pdf(d), 0.0, 5000.0, &QuadratureSpec::default()).unwrap();
            assert!((total - law.cdf(5000.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn residual_interference_properties() {
        let m = cc_model(0.6);
        assert!(matches!(
            mean_residual_interference(&m, 100.0, 1.0),
            Err(Error::Divergence { .. })
        ));
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let d = 20.0 * i as f64;
            let v = mean_residual_interference(&m, d, 3.7).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(mean_residual_interference(&m, 1e9, 3.7).unwrap() < 1e-50);
        // Direct quadrature in r.
        let d = 500.0;
        let direct = integrate_1d(
            |r| 2.0 * PI * r.powf(1.0 - 7.4) * m.density(r),
            d,
            f64::INFINITY,
            &QuadratureSpec::with_tolerances(1e-300, 1e-10),
        )
        .unwrap();
        assert_relative_eq!(
            mean_residual_interference(&m, d, 3.7).unwrap(),
            direct,
            max_relative = 1e-7
        );
    }

    #[test]
    fn residual_table_matches_direct() {
        for m in [cc_model(0.6), ce_model(1.0)] {
            let table = ResidualInterference::new(m, 3.7).unwrap();
            for d in [
                0.1,
                3.0,
                50.0,
                m.r_c() * 0.9,
                m.r_c() * 1.01,
                400.0,
                1234.5,
                4999.0,
                6000.0,
                1e5,
            ] {
                let direct = mean_residual_interference(&m, d, 3.7).unwrap();
                assert_relative_eq!(table.eval(d), direct, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn density_scale_invariance() {
        for c in [0.25, 4.0] {
            let a = cc_model(0.8);
            let b = RadialDensityModel::cc(c * L0, 0.8, DEFAULT_C2, 0.9).unwrap();
            let e = ce_model(0.8);
            let f = RadialDensityModel::ce(c * L0, 0.8, DEFAULT_C2, 0.7, e.p_e3c, 1.0).unwrap();
            for r in [10.0, 150.0, 400.0, 900.0] {
                assert_relative_eq!(
                    a.density(r) / L0,
                    b.density(r / c.sqrt()) / (c * L0),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    e.density(r) / L0,
                    f.density(r / c.sqrt()) / (c * L0),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    a.intensity_measure(r),
                    b.intensity_measure(r / c.sqrt()),
                    max_relative = 1e-12
                );
            }
        }
    }
}
