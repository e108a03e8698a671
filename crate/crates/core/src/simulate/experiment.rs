//! Parallel driver aggregating tagged-cell statistics over realizations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pcf::{estimate_pcf, sample_interferer_distances, PcfEstimate, MIN_PCF_REALIZATIONS};
use super::{run_realization, tagged_sinr, SimulationConfig};
use crate::coverage_se::db_to_linear;
use crate::error::{ensure, Result};
use crate::geometry::RegionKind;
use crate::numerics::RngStream;

/// Mean over realizations with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Tally {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let stderr = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0) / nf).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, stderr, n }
    }
}

/// Tagged-user coverage per threshold. Standard errors treat realizations
/// as clusters of correlated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTally {
    pub kind: RegionKind,
    pub thresholds_db: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationCounts {
    pub realizations: usize,
    pub realizations_with_tagged_ce: usize,
    pub cells: u64,
    pub cells_with_ce: u64,
    pub users_cc: u64,
    pub users_ce: u64,
    pub unassigned_cc: u64,
    pub unassigned_ce: u64,
    /// Tagged users without any same-pilot interferer; counted as covered
    /// and left out of SE averages.
    pub infinite_sinr: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub seed: u64,
    pub coverage_cc: CoverageTally,
    pub coverage_ce: CoverageTally,
    /// Per-realization mean over the tagged cell's users of the class.
    pub cc_user_se: Tally,
    pub ce_user_se: Tally,
    pub cell_se: Tally,
    pub pcf_cc: Option<PcfEstimate>,
    pub pcf_ce: Option<PcfEstimate>,
    pub counts: SimulationCounts,
}

#[derive(Debug, Default)]
struct Partial {
    covered: [Vec<u64>; 2],
    samples: [u64; 2],
    user_se: [Option<f64>; 2],
    cell_se: f64,
    pcf: [Vec<f64>; 2],
    pcf_cells: usize,
    counts: SimulationCounts,
}

fn slot(kind: RegionKind) -> usize {
    match kind {
        RegionKind::CC => 0,
        RegionKind::CE => 1,
    }
}

fn realization_stats(
    config: &SimulationConfig,
    thresholds: &[f64],
    seed: u64,
    index: u64,
) -> Result<Partial> {
    let mut stream = RngStream::new(seed, index);
    let real = run_realization(config, &mut stream)?;
    let data = config.network.plan.data_fraction();
    let mut out = Partial {
        covered: [vec![0; thresholds.len()], vec![0; thresholds.len()]],
        ..Partial::default()
    };
    let c = &mut out.counts;
    c.realizations = 1;
    c.cells = real.cells.len() as u64;
    c.cells_with_ce = real.cells.iter().filter(|x| x.has_ce_region).count() as u64;
    for u in &real.users {
        let unassigned = u.pilot.is_none() as u64;
        match u.kind {
            RegionKind::CC => {
                c.users_cc += 1;
                c.unassigned_cc += unassigned;
            }
            RegionKind::CE => {
                c.users_ce += 1;
                c.unassigned_ce += unassigned;
            }
        }
    }

    let mut se_sum = [0.0; 2];
    let mut se_users = [0usize; 2];
    for u in real.tagged_users() {
        let k = slot(u.kind);
        let Some(p) = u.pilot else {
            se_users[k] += 1;
            continue;
        };
        let sinr = tagged_sinr(&real, u.kind, p).expect("tagged user holds the pilot");
        out.samples[k] += 1;
        for (hit, &t) in out.covered[k].iter_mut().zip(thresholds) {
            *hit += (sinr >= t) as u64;
        }
        if sinr.is_infinite() {
            out.counts.infinite_sinr += 1;
            continue;
        }
        let rate = data * sinr.ln_1p() / std::f64::consts::LN_2;
        se_sum[k] += rate;
        se_users[k] += 1;
        out.cell_se += rate;
    }
    for k in 0..2 {
        if se_users[k] > 0 {
            out.user_se[k] = Some(se_sum[k] / se_users[k] as f64);
        }
    }
    out.counts.realizations_with_tagged_ce = out.user_se[1].is_some() as usize;

    let mut pcf_stream = stream.derive(1);
    for kind in [RegionKind::CC, RegionKind::CE] {
        let s = sample_interferer_distances(&real, kind, config.network.lambda0, &mut pcf_stream)?;
        out.pcf_cells = s.n_cells;
        out.pcf[slot(kind)] = s.distances;
    }
    Ok(out)
}

fn coverage_tally(kind: RegionKind, thresholds_db: &[f64], parts: &[Partial]) -> CoverageTally {
    let k = slot(kind);
    let total: u64 = parts.iter().map(|p| p.samples[k]).sum();
    let r = parts.len() as f64;
    let mean_n = total as f64 / r;
    let mut probabilities = Vec::with_capacity(thresholds_db.len());
    let mut stderr = Vec::with_capacity(thresholds_db.len());
    for t in 0..thresholds_db.len() {
        let hits: u64 = parts.iter().map(|p| p.covered[k][t]).sum();
        if total == 0 {
            probabilities.push(f64::NAN);
            stderr.push(f64::NAN);
            continue;
        }
        let p = hits as f64 / total as f64;
        let ss: f64 = parts
            .iter()
            .map(|q| ((q.covered[k][t] as f64 - p * q.samples[k] as f64) / mean_n).powi(2))
            .sum();
        probabilities.push(p);
        stderr.push(if r > 1.0 {
            (ss / (r * (r - 1.0))).sqrt()
        } else {
            f64::NAN
        });
    }
    CoverageTally {
        kind,
        thresholds_db: thresholds_db.to_vec(),
        probabilities,
        stderr,
        samples: total,
    }
}

/// Runs `n_realizations` independent realizations (stream id = realization
/// index) and reduces them in index order, so results do not depend on the
/// number of worker threads.
pub fn run_experiment(
    config: &SimulationConfig,
    n_realizations: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    ensure(
        n_realizations >= 1,
        "n_realizations",
        n_realizations as f64,
        "n_realizations >= 1",
    )?;
    config.validate()?;
    let thresholds: Vec<f64> = config
        .thresholds_db
        .iter()
        .map(|&t| db_to_linear(t))
        .collect();
    let parts: Vec<Partial> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| realization_stats(config, &thresholds, seed, i))
        .collect::<Result<_>>()?;

    let mut counts = SimulationCounts::default();
    for p in &parts {
        let c = &p.counts;
        counts.realizations += c.realizations;
        counts.realizations_with_tagged_ce += c.realizations_with_tagged_ce;
        counts.cells += c.cells;
        counts.cells_with_ce += c.cells_with_ce;
        counts.users_cc += c.users_cc;
        counts.users_ce += c.users_ce;
        counts.unassigned_cc += c.unassigned_cc;
        counts.unassigned_ce += c.unassigned_ce;
        counts.infinite_sinr += c.infinite_sinr;
    }
    let per_class = |k: usize| {
        Tally::from_samples(
            &parts
                .iter()
                .filter_map(|p| p.user_se[k])
                .collect::<Vec<_>>(),
        )
    };
    let cell_se = Tally::from_samples(&parts.iter().map(|p| p.cell_se).collect::<Vec<_>>());

    let (pcf_cc, pcf_ce) = if n_realizations >= MIN_PCF_REALIZATIONS {
        let cells: usize = parts.iter().map(|p| p.pcf_cells).sum();
        let ce_points: usize = parts.iter().map(|p| p.pcf[1].len()).sum();
        let cc: Vec<Vec<f64>> = parts.iter().map(|p| p.pcf[0].clone()).collect();
        let ce: Vec<Vec<f64>> = parts.iter().map(|p| p.pcf[1].clone()).collect();
        (
            Some(estimate_pcf(&cc, &config.pcf_edges_scaled, 1.0)?),
            Some(estimate_pcf(
                &ce,
                &config.pcf_edges_scaled,
                ce_points as f64 / cells.max(1) as f64,
            )?),
        )
    } else {
        (None, None)
    };

    Ok(SimulationSummary {
        config: config.clone(),
        seed,
        coverage_cc: coverage_tally(RegionKind::CC, &config.thresholds_db, &parts),
        coverage_ce: coverage_tally(RegionKind::CE, &config.thresholds_db, &parts),
        cc_user_se: per_class(0),
        ce_user_se: per_class(1),
        cell_se,
        pcf_cc,
        pcf_ce,
        counts,
    })
}
