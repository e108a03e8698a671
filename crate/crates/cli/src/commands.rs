//! One function per subcommand, each producing tables; `run` writes them.

use std::path::PathBuf;

use pilotgeom::area_models::MixedAreaDistribution;
use pilotgeom::coverage_se::{db_to_linear, AnalyticalModel, NetworkConfig};
use pilotgeom::geometry::RegionKind;
use pilotgeom::interference::{kappa_from_radius, pcf_cc, pcf_ce};
use pilotgeom::pilots::PilotPlan;
use pilotgeom::simulate::{
    fit_pcf_prototype, ks_kl, pcf_prototype, run_experiment, sample_cell_areas, ReuseMode,
    SimulationConfig, SimulationSummary, MIN_KS_SAMPLES,
};

use crate::checks::{self, CriterionReport, Scale, Table1Row};
use crate::config::{Command, ExperimentSpec, SweepAxis, SweepSpec};
use crate::output::{fmt_num, render, write_json, write_table, Field, Table};
use crate::CliError;

pub enum Body {
    Csv(Table),
    Json(serde_json::Value),
}

/// A named output; the file name adds kappa, seed and extension.
pub struct Artifact {
    pub name: String,
    pub body: Body,
}

fn csv(name: &str, table: Table) -> Artifact {
    Artifact {
        name: name.into(),
        body: Body::Csv(table),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// False when a check failed or part of the run could not be computed.
    pub all_passed: bool,
}

/// Computes the outputs of `spec` without writing them.
pub fn artifacts(spec: &ExperimentSpec) -> Result<(Vec<Artifact>, bool), CliError> {
    match spec.command {
        Command::Areas => areas(spec).map(|a| (a, true)),
        Command::Pcf => pcf(spec).map(|a| (a, true)),
        Command::Coverage => coverage(spec).map(|a| (a, true)),
        Command::Se => se(spec),
        Command::Simulate => simulate(spec).map(|a| (a, true)),
        Command::Validate => Ok(validate(spec)),
        Command::Sweep => sweep(spec),
    }
}

/// File names and contents, in output order.
pub fn render_all(spec: &ExperimentSpec) -> Result<Vec<(String, String)>, CliError> {
    let (arts, _) = artifacts(spec)?;
    Ok(arts
        .iter()
        .map(|a| match &a.body {
            Body::Csv(t) => (a.name.clone(), render(spec, t)),
            Body::Json(v) => (a.name.clone(), v.to_string()),
        })
        .collect())
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    std::fs::create_dir_all(&spec.output_dir).map_err(|e| CliError::Io {
        path: spec.output_dir.clone(),
        source: e,
    })?;
    let (arts, all_passed) = artifacts(spec)?;
    let mut files = Vec::with_capacity(arts.len());
    for a in &arts {
        files.push(match &a.body {
            Body::Csv(t) => write_table(spec, &a.name, t)?,
            Body::Json(v) => write_json(spec, &a.name, v)?,
        });
    }
    Ok(RunOutcome { files, all_passed })
}

fn kind_name(kind: RegionKind) -> &'static str {
    match kind {
        RegionKind::CC => "cc",
        RegionKind::CE => "ce",
    }
}

fn areas(spec: &ExperimentSpec) -> Result<Vec<Artifact>, CliError> {
    const GRID: usize = 200;
    let c = &spec.config;
    let samples = sample_cell_areas(c.lambda0, c.r_c, spec.area_cells, spec.seed)?;
    let mut out = Vec::new();
    for (kind, xs) in [(RegionKind::CC, &samples.cc), (RegionKind::CE, &samples.ce)] {
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut t = Table::new(&["area", "model_cdf", "empirical_cdf"]);
        t.note("cells", sorted.len().to_string());
        let model = MixedAreaDistribution::fit(kind, c.lambda0, c.r_c, c.e3_method);
        if let Err(e) = &model {
            t.note("model", format!("unavailable: {e}"));
        }
        if let Ok(m) = &model {
            if sorted.len() >= MIN_KS_SAMPLES {
                let s = ks_kl(&sorted, m)?;
                t.note("ks", fmt_num(s.ks));
                t.note("kl", fmt_num(s.kl));
            }
        }
        let top = sorted
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(model.as_ref().map(|m| m.support_top()).unwrap_or(0.0));
        for i in 0..=GRID {
            let x = top * i as f64 / GRID as f64;
            let emp = sorted.partition_point(|&v| v <= x) as f64 / sorted.len().max(1) as f64;
            let m = model.as_ref().map(|m| m.cdf(x)).unwrap_or(f64::NAN);
            t.push(vec![x.into(), m.into(), emp.into()]);
        }
        out.push(csv(&format!("areas_{}", kind_name(kind)), t));
    }
    Ok(out)
}

fn pcf(spec: &ExperimentSpec) -> Result<Vec<Artifact>, CliError> {
    let c = &spec.config;
    let kappa = c.kappa();
    let n = Scale::from_spec(spec).pcf_realizations;
    let (cc, ce) = checks::empirical_pcf(c, kappa, n, spec.seed)?;
    let rc = kappa / (std::f64::consts::PI * c.c2).sqrt();
    let mut t = Table::new(&[
        "r_scaled",
        "cc_empirical",
        "cc_stderr",
        "cc_model",
        "ce_empirical",
        "ce_stderr",
        "ce_model",
        "ce_prototype",
    ]);
    t.note("realizations", n.to_string());
    t.note("ce_intensity", fmt_num(ce.intensity));
    let fit = fit_pcf_prototype(&ce, rc);
    match &fit {
        Ok(f) => {
            t.note(
                "ce_prototype_fit",
                format!(
                    "a={} b={} c={} sigma=[{}, {}, {}] rms={} converged={}",
                    fmt_num(f.a),
                    fmt_num(f.b),
                    fmt_num(f.c),
                    fmt_num(f.sigma[0]),
                    fmt_num(f.sigma[1]),
                    fmt_num(f.sigma[2]),
                    fmt_num(f.rms_residual),
                    f.converged
                ),
            );
        }
        Err(e) => t.note("ce_prototype_fit", format!("unavailable: {e}")),
    }
    for (i, &r) in cc.centers.iter().enumerate() {
        let proto = fit
            .as_ref()
            .map(|f| pcf_prototype(r, rc, f.a, f.b, f.c))
            .unwrap_or(f64::NAN);
        t.push(vec![
            r.into(),
            cc.values[i].into(),
            cc.stderr[i].into(),
            pcf_cc(r, kappa, c.c2).unwrap_or(f64::NAN).into(),
            ce.values[i].into(),
            ce.stderr[i].into(),
            pcf_ce(r, kappa, c.c2).unwrap_or(f64::NAN).into(),
            proto.into(),
        ]);
    }
    Ok(vec![csv("pcf", t)])
}

fn coverage_tables(
    spec: &ExperimentSpec,
    sim: &SimulationSummary,
) -> Result<Vec<Artifact>, CliError> {
    let model = AnalyticalModel::new(&spec.config);
    let mut out = Vec::new();
    for tally in [&sim.coverage_cc, &sim.coverage_ce] {
        let mut t = Table::new(&["threshold_db", "analytical", "simulated", "sim_stderr"]);
        t.note("realizations", sim.counts.realizations.to_string());
        t.note("tagged_samples", tally.samples.to_string());
        t.note("mode", spec.simulation.mode.to_string());
        if let Err(e) = &model {
            t.note("analytical", format!("unavailable: {e}"));
        }
        for (i, &db) in tally.thresholds_db.iter().enumerate() {
            let a = match &model {
                Ok(m) => m.coverage(tally.kind, db_to_linear(db))?,
                Err(_) => f64::NAN,
            };
            t.push(vec![
                db.into(),
                a.into(),
                tally.probabilities[i].into(),
                tally.stderr[i].into(),
            ]);
        }
        out.push(csv(&format!("coverage_{}", kind_name(tally.kind)), t));
    }
    Ok(out)
}

fn coverage(spec: &ExperimentSpec) -> Result<Vec<Artifact>, CliError> {
    let sim = run_experiment(&spec.simulation, spec.n_realizations, spec.seed)?;
    coverage_tables(spec, &sim)
}

fn simulate(spec: &ExperimentSpec) -> Result<Vec<Artifact>, CliError> {
    let sim = run_experiment(&spec.simulation, spec.n_realizations, spec.seed)?;
    let json = serde_json::to_value(&sim).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = vec![Artifact {
        name: "simulate".into(),
        body: Body::Json(json),
    }];
    out.extend(coverage_tables(spec, &sim)?);
    Ok(out)
}

/// Network for one sweep point.
pub fn apply_axis(
    base: &NetworkConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<NetworkConfig, CliError> {
    let mut net = base.clone();
    match axis {
        SweepAxis::Kappa => {
            if value.is_nan() || value <= 0.0 {
                return Err(CliError::Config(format!(
                    "sweep.grid: kappa = {value} must be positive"
                )));
            }
            net = net.with_kappa(value);
            net.plan = checks::rule_plan(base, value)?;
        }
        SweepAxis::BcOverB => {
            let p = &base.plan;
            net.plan = PilotPlan::from_fraction(p.b, value, p.beta_f, p.t_c)
                .map_err(|e| CliError::Config(format!("sweep.grid: {e}")))?;
        }
        SweepAxis::LambdaURatio => net.lambda_u = value * net.lambda0,
    }
    net.validate()
        .map_err(|e| CliError::Config(format!("sweep.grid: {e}")))?;
    Ok(net)
}

/// Analytical `(cc, ce, cell)` SE; NaN where the model is undefined.
fn analytical_se(net: &NetworkConfig) -> ([f64; 3], Option<String>) {
    let eval = || -> Result<[f64; 3], CliError> {
        let m = AnalyticalModel::new(net)?;
        Ok([
            m.avg_user_se(RegionKind::CC)?,
            m.avg_user_se(RegionKind::CE)?,
            m.avg_cell_se()?,
        ])
    };
    match eval() {
        Ok(v) => (v, None),
        Err(e) => ([f64::NAN; 3], Some(e.to_string())),
    }
}

fn simulated_se(
    spec: &ExperimentSpec,
    net: &NetworkConfig,
    mode: ReuseMode,
) -> ([f64; 3], Option<String>) {
    let cfg = SimulationConfig {
        network: net.clone(),
        mode,
        ..spec.simulation.clone()
    };
    match run_experiment(&cfg, spec.n_realizations, spec.seed) {
        Ok(s) => ([s.cc_user_se.mean, s.ce_user_se.mean, s.cell_se.mean], None),
        Err(e) => ([f64::NAN; 3], Some(e.to_string())),
    }
}

fn default_kappa_grid() -> Vec<f64> {
    (0..=8).map(|i| 0.4 + 0.2 * i as f64).collect()
}

fn se(spec: &ExperimentSpec) -> Result<(Vec<Artifact>, bool), CliError> {
    let (axis, grid) = match &spec.sweep {
        Some(SweepSpec { axis, grid }) => (Some(*axis), grid.clone()),
        None => (
            None,
            vec![spec.config.plan.b_c as f64 / spec.config.plan.b as f64],
        ),
    };
    let mut t = Table::new(&[
        "knob",
        "cc_user_se",
        "ce_user_se",
        "cell_se",
        "sim_cc_user_se",
        "sim_ce_user_se",
        "sim_cell_se",
        "reuse1_cc_user_se",
        "reuse1_ce_user_se",
        "reuse1_cell_se",
    ]);
    t.note("knob", axis.map(|a| a.name()).unwrap_or("bc_over_b"));
    t.note("realizations", spec.n_realizations.to_string());
    let mut ok = true;
    for &v in &grid {
        let net = match axis {
            Some(a) => apply_axis(&spec.config, a, v)?,
            None => spec.config.clone(),
        };
        let mut row: Vec<Field> = vec![v.into()];
        for (vals, err) in [
            analytical_se(&net),
            simulated_se(spec, &net, ReuseMode::Fpr),
            simulated_se(spec, &net, ReuseMode::Reuse1),
        ] {
            if let Some(e) = err {
                ok = false;
                t.note(format!("error at {}", fmt_num(v)), e);
            }
            row.extend(vals.iter().map(|&x| Field::from(x)));
        }
        t.push(row);
    }
    Ok((vec![csv("se", t)], ok))
}

fn sweep(spec: &ExperimentSpec) -> Result<(Vec<Artifact>, bool), CliError> {
    let (axis, grid) = match &spec.sweep {
        Some(SweepSpec { axis, grid }) => (*axis, grid.clone()),
        None => (SweepAxis::Kappa, default_kappa_grid()),
    };
    let mut t = Table::new(&[
        "kappa",
        "bc_over_b",
        "cc_user_se",
        "ce_user_se",
        "cell_se",
        "bc_rule",
        "lambda_u_ratio",
        "sim_cc_user_se",
        "sim_ce_user_se",
        "sim_cell_se",
    ]);
    t.note("axis", axis.name());
    t.note("realizations", spec.n_realizations.to_string());
    let mut ok = true;
    for &v in &grid {
        let net = apply_axis(&spec.config, axis, v)?;
        let kappa = kappa_from_radius(net.r_c, net.c2, net.lambda0);
        let (a, ea) = analytical_se(&net);
        let (s, es) = simulated_se(spec, &net, spec.simulation.mode);
        for e in [ea, es].into_iter().flatten() {
            ok = false;
            t.note(format!("error at {}", fmt_num(v)), e);
        }
        let mut row: Vec<Field> = vec![
            kappa.into(),
            (net.plan.b_c as f64 / net.plan.b as f64).into(),
            a[0].into(),
            a[1].into(),
            a[2].into(),
            (1.0 - (-kappa * kappa).exp()).into(),
            (net.lambda_u / net.lambda0).into(),
        ];
        row.extend(s.iter().map(|&x| Field::from(x)));
        t.push(row);
    }
    Ok((vec![csv("sweep", t)], ok))
}

pub fn checks_table(reports: &[CriterionReport]) -> Table {
    let mut t = Table::new(&[
        "criterion",
        "check",
        "observed",
        "reference",
        "tolerance",
        "result",
    ]);
    for r in reports {
        t.note(format!("criterion {}", r.id), r.summary());
        if let Some(e) = &r.error {
            t.push(vec![
                (r.id as u64).into(),
                format!("{}: not evaluated", r.title).into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
            ]);
            log::error!("criterion {}: {e}", r.id);
        }
        for c in &r.checks {
            t.push(vec![
                (r.id as u64).into(),
                c.name.replace(',', ";").into(),
                c.observed.into(),
                c.reference.into(),
                c.tolerance.into(),
                c.passed.into(),
            ]);
        }
    }
    t
}

fn table1_table(spec: &ExperimentSpec, rows: &[Table1Row]) -> Table {
    let mut t = Table::new(&[
        "r_c",
        "kappa",
        "kind",
        "ks",
        "ks_reference",
        "kl",
        "kl_reference",
        "cells",
    ]);
    for r in rows {
        t.push(vec![
            r.r_c.into(),
            kappa_from_radius(r.r_c, spec.config.c2, spec.config.lambda0).into(),
            kind_name(r.kind).into(),
            r.ks.into(),
            r.ref_ks.into(),
            r.kl.into(),
            r.ref_kl.into(),
            (r.n as u64).into(),
        ]);
    }
    t
}

fn validate(spec: &ExperimentSpec) -> (Vec<Artifact>, bool) {
    let (rows, reports) = checks::run_all(spec);
    let ok = reports.iter().all(|r| r.passed());
    (
        vec![
            csv("table1", table1_table(spec, &rows)),
            csv("validate", checks_table(&reports)),
        ],
        ok,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_spec, ConfigFile, Overrides};

    fn spec(command: Command, json: &str) -> ExperimentSpec {
        build_spec(
            command,
            &ConfigFile::from_json(json).unwrap(),
            &Overrides::default(),
        )
        .unwrap()
    }

    #[test]
    fn kappa_axis_applies_the_partition_rule() {
        let net = apply_axis(&NetworkConfig::default(), SweepAxis::Kappa, 1.0).unwrap();
        assert_eq!(net.plan.b_c, 64);
        assert!((net.kappa() - 1.0).abs() < 1e-12);
        assert!(apply_axis(&NetworkConfig::default(), SweepAxis::BcOverB, 1.5).is_err());
    }

    #[test]
    fn default_sweep_grid() {
        let g = default_kappa_grid();
        assert_eq!(g.len(), 9);
        assert!((g[8] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_has_one_row_per_point() {
        let s = spec(
            Command::Sweep,
            r#"{"realizations": 2, "window_scaled": 7, "sweep": {"axis": "kappa", "grid": [0.6, 1.0, 1.4]}}"#,
        );
        let (arts, _) = artifacts(&s).unwrap();
        let Body::Csv(t) = &arts[0].body else {
            panic!()
        };
        assert_eq!(t.rows.len(), 3);
        assert_eq!(
            &t.columns[..5],
            &["kappa", "bc_over_b", "cc_user_se", "ce_user_se", "cell_se"]
        );
    }

    #[test]
    fn areas_emit_cdf_grids() {
        let s = spec(Command::Areas, r#"{"area_cells": 1500}"#);
        let (arts, _) = artifacts(&s).unwrap();
        assert_eq!(arts.len(), 2);
        let Body::Csv(t) = &arts[0].body else {
            panic!()
        };
        assert!(t.notes.iter().any(|(k, _)| k == "ks"));
        let Field::Num(last) = t.rows.last().unwrap()[2] else {
            panic!()
        };
        assert_eq!(last, 1.0);
    }
}
