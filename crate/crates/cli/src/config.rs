//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pilotgeom::area_models::E3Method;
use pilotgeom::coverage_se::NetworkConfig;
use pilotgeom::interference::{kappa_from_radius, radius_from_kappa, DEFAULT_C2};
use pilotgeom::pilots::{GroupInclusion, PilotPlan};
use pilotgeom::simulate::{CeGroupMode, ReuseMode, SimulationConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Areas,
    Pcf,
    Coverage,
    Se,
    Simulate,
    Validate,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Areas => "areas",
            Command::Pcf => "pcf",
            Command::Coverage => "coverage",
            Command::Se => "se",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Normalized radius; `B_C / B` follows `1 - exp(-kappa^2)`.
    Kappa,
    /// CC share of the pilot budget at fixed kappa.
    BcOverB,
    /// User intensity in units of `lambda0`.
    LambdaURatio,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Kappa => "kappa",
            SweepAxis::BcOverB => "bc_over_b",
            SweepAxis::LambdaURatio => "lambda_u_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// File schema. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda0: Option<f64>,
    pub lambda_u: Option<f64>,
    pub lambda_u_ratio: Option<f64>,
    pub alpha: Option<f64>,
    pub c2: Option<f64>,
    pub kappa: Option<f64>,
    pub r_c: Option<f64>,
    pub b: Option<u32>,
    pub b_c: Option<u32>,
    pub b_e: Option<u32>,
    pub beta_f: Option<u32>,
    pub t_c: Option<u32>,
    pub group_inclusion: Option<GroupInclusion>,
    pub e3_method: Option<E3Method>,
    pub utilization_override: Option<f64>,
    pub mode: Option<ReuseMode>,
    pub ce_group_mode: Option<CeGroupMode>,
    pub window_scaled: Option<f64>,
    pub guard_scaled: Option<f64>,
    pub thresholds_db: Option<Vec<f64>>,
    pub pcf_edges_scaled: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub area_cells: Option<usize>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: NetworkConfig,
    pub simulation: SimulationConfig,
    pub sweep: Option<SweepSpec>,
    pub n_realizations: usize,
    pub seed: u64,
    pub area_cells: usize,
    pub output_dir: PathBuf,
}

pub const DEFAULT_REALIZATIONS: usize = 800;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_AREA_CELLS: usize = 100_000;

fn invalid(field: &str, constraint: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {constraint}"))
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        let d = NetworkConfig::default();
        let lambda0 = self.lambda0.unwrap_or(d.lambda0);
        let c2 = self.c2.unwrap_or(DEFAULT_C2);
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(invalid("lambda0", "must be positive and finite"));
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(invalid("c2", "must be positive"));
        }
        let r_c = match (self.kappa, self.r_c) {
            (Some(k), Some(r)) => {
                if !agree(r, radius_from_kappa(k, c2, lambda0)) {
                    return Err(invalid(
                        "kappa/r_c",
                        format!(
                            "disagree: kappa = {k} implies R_c = {}, got {r}",
                            radius_from_kappa(k, c2, lambda0)
                        ),
                    ));
                }
                r
            }
            (Some(k), None) => radius_from_kappa(k, c2, lambda0),
            (None, Some(r)) => r,
            (None, None) => radius_from_kappa(d.kappa(), c2, lambda0),
        };
        let lambda_u = match (self.lambda_u, self.lambda_u_ratio) {
            (Some(u), Some(q)) => {
                if !agree(u, q * lambda0) {
                    return Err(invalid("lambda_u/lambda_u_ratio", "disagree"));
                }
                u
            }
            (Some(u), None) => u,
            (None, Some(q)) => q * lambda0,
            (None, None) => d.lambda_u / d.lambda0 * lambda0,
        };
        let b = self.b.unwrap_or(d.plan.b);
        let beta_f = self.beta_f.unwrap_or(d.plan.beta_f);
        let t_c = self.t_c.unwrap_or(d.plan.t_c);
        if beta_f == 0 {
            return Err(invalid("beta_f", "must be at least 1"));
        }
        let (b_c, b_e) = match (self.b_c, self.b_e) {
            (Some(c), Some(e)) => (c, e),
            (Some(c), None) => {
                if c > b || !(b - c).is_multiple_of(beta_f) {
                    return Err(invalid(
                        "b_c",
                        format!("B - B_C = {b} - {c} is not a multiple of beta_f = {beta_f}"),
                    ));
                }
                (c, (b - c) / beta_f)
            }
            (None, Some(e)) => {
                let used = beta_f as u64 * e as u64;
                if used > b as u64 {
                    return Err(invalid(
                        "b_e",
                        format!("beta_f * B_E = {used} exceeds B = {b}"),
                    ));
                }
                (b - beta_f * e, e)
            }
            (None, None) if (b, beta_f) == (d.plan.b, d.plan.beta_f) => (d.plan.b_c, d.plan.b_e),
            (None, None) => {
                let p =
                    PilotPlan::from_fraction(b, d.plan.b_c as f64 / d.plan.b as f64, beta_f, t_c)
                        .map_err(|e| invalid("pilot plan", e))?;
                (p.b_c, p.b_e)
            }
        };
        let plan = PilotPlan::new(b, b_c, b_e, beta_f, t_c)
            .map_err(|e| invalid("b/b_c/b_e/beta_f/t_c", e))?;
        let net = NetworkConfig {
            lambda0,
            lambda_u,
            alpha: self.alpha.unwrap_or(d.alpha),
            c2,
            r_c,
            plan,
            group_inclusion: self.group_inclusion.unwrap_or(d.group_inclusion),
            e3_method: self.e3_method.unwrap_or(d.e3_method),
            utilization_override: self.utilization_override,
        };
        net.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(net)
    }

    pub fn simulation(&self, network: NetworkConfig) -> Result<SimulationConfig, CliError> {
        let d = SimulationConfig::default();
        let sim = SimulationConfig {
            network,
            mode: self.mode.unwrap_or(d.mode),
            ce_group_mode: self.ce_group_mode.unwrap_or(d.ce_group_mode),
            window_scaled: self.window_scaled.unwrap_or(d.window_scaled),
            guard_scaled: self.guard_scaled.unwrap_or(d.guard_scaled),
            thresholds_db: self.thresholds_db.clone().unwrap_or(d.thresholds_db),
            pcf_edges_scaled: self.pcf_edges_scaled.clone().unwrap_or(d.pcf_edges_scaled),
        };
        sim.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(sim)
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub mode: Option<ReuseMode>,
    pub output_dir: Option<PathBuf>,
}

pub fn build_spec(
    command: Command,
    file: &ConfigFile,
    over: &Overrides,
) -> Result<ExperimentSpec, CliError> {
    let config = file.network()?;
    let mut simulation = file.simulation(config.clone())?;
    if let Some(m) = over.mode {
        simulation.mode = m;
    }
    if let Some(s) = &file.sweep {
        if s.grid.is_empty() {
            return Err(invalid("sweep.grid", "must not be empty"));
        }
        if s.grid.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep.grid", "values must be finite"));
        }
    }
    let n_realizations = over
        .realizations
        .or(file.realizations)
        .unwrap_or(DEFAULT_REALIZATIONS);
    if n_realizations == 0 {
        return Err(invalid("realizations", "must be at least 1"));
    }
    Ok(ExperimentSpec {
        command,
        config,
        simulation,
        sweep: file.sweep.clone(),
        n_realizations,
        seed: over.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        area_cells: file.area_cells.unwrap_or(DEFAULT_AREA_CELLS),
        output_dir: over
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}

/// Reads and validates `path`; an empty file yields the defaults.
pub fn parse_config(
    command: Command,
    path: Option<&Path>,
    over: &Overrides,
) -> Result<ExperimentSpec, CliError> {
    let file = match path {
        Some(p) => {
            ConfigFile::from_json(&std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?)?
        }
        None => ConfigFile::default(),
    };
    build_spec(command, &file, over)
}

impl ExperimentSpec {
    pub fn kappa(&self) -> f64 {
        kappa_from_radius(self.config.r_c, self.config.c2, self.config.lambda0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> Result<ExperimentSpec, CliError> {
        build_spec(
            Command::Se,
            &ConfigFile::from_json(json)?,
            &Overrides::default(),
        )
    }

    #[test]
    fn empty_file_gives_baseline() {
        let s = spec("").unwrap();
        let c = &s.config;
        assert_eq!(c.lambda0, 4e-6);
        assert_eq!(c.alpha, 3.7);
        assert_eq!(c.c2, 1.25);
        assert_eq!(
            (c.plan.b, c.plan.b_c, c.plan.b_e, c.plan.beta_f, c.plan.t_c),
            (100, 58, 14, 3, 200)
        );
        assert_eq!(s.seed, DEFAULT_SEED);
        assert_eq!(spec("{}").unwrap(), s);
    }

    #[test]
    fn pilot_partition_is_checked() {
        assert!(spec(r#"{"b_c": 58, "b_e": 14, "beta_f": 3, "b": 100}"#).is_ok());
        let err = spec(r#"{"b_c": 60, "b_e": 14, "beta_f": 3, "b": 100}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("partition"), "{err}");
        assert_eq!(spec(r#"{"b_c": 64}"#).unwrap().config.plan.b_e, 12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = spec(r#"{"alpah": 3.7}"#).unwrap_err().to_string();
        assert!(err.contains("alpah"), "{err}");
    }

    #[test]
    fn kappa_and_radius_must_agree() {
        let s = spec(r#"{"kappa": 1.0}"#).unwrap();
        assert!((s.config.r_c - 252.313).abs() < 1e-3);
        let r = s.config.r_c;
        assert!(spec(&format!(r#"{{"kappa": 1.0, "r_c": {r}}}"#)).is_ok());
        assert!(spec(r#"{"kappa": 1.0, "r_c": 250.0}"#).is_err());
        assert!((spec(r#"{"r_c": 250.0}"#).unwrap().kappa() - 0.990_8).abs() < 1e-3);
    }

    #[test]
    fn violations_name_the_field() {
        let err = spec(r#"{"alpha": 0.5}"#).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        let err = spec(r#"{"sweep": {"axis": "kappa", "grid": []}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("sweep.grid"), "{err}");
    }
}
