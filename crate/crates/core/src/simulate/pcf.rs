//! Empirical pair correlation of same-pilot interferers about the tagged
//! station and the prototype curve fit.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{Realization, SimulationConfig};
use crate::error::{ensure, Error, Result};
use crate::geometry::{sample_ppp, CellBuilder, CellGeometry, Point, RegionKind, RegionSampler};
use crate::numerics::RngStream;

pub const MIN_PCF_REALIZATIONS: usize = 50;

/// One uniform point per non-tagged cell region, as distances to the tagged
/// station in units of `1/sqrt(lambda0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererSample {
    pub distances: Vec<f64>,
    /// Non-tagged cells, with or without the region.
    pub n_cells: usize,
}

pub fn sample_interferer_distances(
    real: &Realization,
    kind: RegionKind,
    lambda0: f64,
    stream: &mut RngStream,
) -> Result<InterfererSample> {
    let bs = real.tagged_cell().center;
    let scale = lambda0.sqrt();
    let mut distances = Vec::with_capacity(real.cells.len());
    for (i, cell) in real.cells.iter().enumerate() {
        if i == real.tagged || (kind == RegionKind::CE && !cell.has_ce_region) {
            continue;
        }
        match RegionSampler::new(cell).sample(kind, stream) {
            Ok(p) => distances.push(p.dist(bs) * scale),
            Err(Error::EmptyRegion { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(InterfererSample {
        distances,
        n_cells: real.cells.len() - 1,
    })
}

/// Interferer distance patterns about a station at the window center, one
/// list per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcfPatterns {
    pub cc: Vec<Vec<f64>>,
    pub ce: Vec<Vec<f64>>,
    /// CE points per CC point: the empirical share of cells with a CE region.
    pub ce_fraction: f64,
}

/// Lightweight realizations for PCF estimation: only the cells of interior
/// stations within `r_max + 2.5` (scaled) of the center get a uniform CC and
/// CE point; no users or pilots are drawn.
pub fn sample_pcf_patterns(
    config: &SimulationConfig,
    n: usize,
    seed: u64,
    r_max: f64,
) -> Result<PcfPatterns> {
    config.validate()?;
    let lambda0 = config.network.lambda0;
    let scale = lambda0.sqrt();
    let window = config.window()?;
    let reach = (r_max + 2.5) / scale;
    let per: Vec<(Vec<f64>, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, i);
            let mut pattern = sample_ppp(lambda0, window, &mut stream)?;
            pattern.points.insert(0, Point::ORIGIN);
            let builder = CellBuilder::new(&pattern);
            let (mut cc, mut ce) = (Vec::new(), Vec::new());
            for j in pattern.interior_indices() {
                let p = pattern.points[j];
                if j == 0 || p.norm() > reach {
                    continue;
                }
                let cell = CellGeometry::new(&builder.voronoi(j)?, config.network.r_c);
                let sampler = RegionSampler::new(&cell);
                cc.push(sampler.sample(RegionKind::CC, &mut stream)?.norm() * scale);
                if cell.has_ce_region {
                    match sampler.sample(RegionKind::CE, &mut stream) {
                        Ok(q) => ce.push(q.norm() * scale),
                        Err(Error::EmptyRegion { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok((cc, ce))
        })
        .collect::<Result<_>>()?;
    let n_cc: usize = per.iter().map(|p| p.0.len()).sum();
    let n_ce: usize = per.iter().map(|p| p.1.len()).sum();
    let (cc, ce) = per.into_iter().unzip();
    Ok(PcfPatterns {
        cc,
        ce,
        ce_fraction: n_ce as f64 / n_cc.max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcfEstimate {
    /// Bin edges in units of `1/sqrt(lambda0)`.
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    /// NaN where the expected count is zero.
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_realizations: usize,
    /// Normalizing intensity in points per scaled unit area.
    pub intensity: f64,
}

/// Ring estimate of the PCF: the increment of the mean count within radius
/// `r` over each bin, divided by the expected increment `intensity * pi (r2^2 - r1^2)`.
pub fn estimate_pcf(patterns: &[Vec<f64>], edges: &[f64], intensity: f64) -> Result<PcfEstimate> {
    let n = patterns.len();
    ensure(
        n >= MIN_PCF_REALIZATIONS,
        "realizations",
        n as f64,
        "at least 50 realizations",
    )?;
    ensure(
        edges.len() >= 2,
        "edges",
        edges.len() as f64,
        "at least two edges",
    )?;
    ensure(
        edges.windows(2).all(|w| w[0] < w[1]) && edges[0] >= 0.0,
        "edges",
        edges[0],
        "nonnegative increasing edges",
    )?;
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    let mut per = vec![0u64; bins];
    for pattern in patterns {
        per.iter_mut().for_each(|c| *c = 0);
        for &d in pattern {
            let k = edges.partition_point(|&e| e <= d);
            if k >= 1 && k <= bins {
                per[k - 1] += 1;
            }
        }
        for k in 0..bins {
            counts[k] += per[k];
            let expected =
                intensity * std::f64::consts::PI * (edges[k + 1].powi(2) - edges[k].powi(2));
            let g = per[k] as f64 / expected;
            sum[k] += g;
            sum_sq[k] += g * g;
        }
    }
    let nf = n as f64;
    let mut values = Vec::with_capacity(bins);
    let mut stderr = Vec::with_capacity(bins);
    for k in 0..bins {
        let expected = intensity * std::f64::consts::PI * (edges[k + 1].powi(2) - edges[k].powi(2));
        if !(expected > 0.0 && expected.is_finite()) {
            values.push(f64::NAN);
            stderr.push(f64::NAN);
            continue;
        }
        let mean = sum[k] / nf;
        let var = ((sum_sq[k] - nf * mean * mean) / (nf - 1.0)).max(0.0);
        values.push(mean);
        stderr.push((var / nf).sqrt());
    }
    Ok(PcfEstimate {
        centers: edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        edges: edges.to_vec(),
        values,
        stderr,
        counts,
        n_realizations: n,
        intensity,
    })
}

/// `1 - e^{-a x} + b x e^{-c x}` with `x = r^2 - R_c^2`; zero inside `R_c`.
pub fn pcf_prototype(r: f64, r_c: f64, a: f64, b: f64, c: f64) -> f64 {
    let x = r * r - r_c * r_c;
    if x <= 0.0 {
        return 0.0;
    }
    -(-a * x).exp_m1() + b * x * (-c * x).exp()
}

/// Root-mean-square deviation of `model` from the finite estimates with bin
/// centers in `(r_lo, r_hi]`.
pub fn pcf_residual<F: Fn(f64) -> f64>(est: &PcfEstimate, model: F, r_lo: f64, r_hi: f64) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (&r, &v) in est.centers.iter().zip(&est.values) {
        if r > r_lo && r <= r_hi && v.is_finite() {
            s += (model(r) - v).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        (s / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcfFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Asymptotic standard errors of `(a, b, c)`.
    pub sigma: [f64; 3],
    pub rms_residual: f64,
    pub n_points: usize,
    pub converged: bool,
}

type Mat3 = [[f64; 3]; 3];

fn solve3(m: &Mat3, v: [f64; 3]) -> Option<[f64; 3]> {
    let inv = invert3(m)?;
    Some([0, 1, 2].map(|i| (0..3).map(|j| inv[i][j] * v[j]).sum()))
}

fn invert3(m: &Mat3) -> Option<Mat3> {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if !det.is_finite() || det.abs() < 1e-300 {
        return None;
    }
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c(j, i) / det;
        }
    }
    Some(out)
}

struct Fitter<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl Fitter<'_> {
    fn sse(&self, p: [f64; 3]) -> f64 {
        self.xs
            .iter()
            .zip(self.ys)
            .map(|(&x, &y)| (y - model(x, p)).powi(2))
            .sum()
    }

    /// `(J^T J, J^T r)` at `p`.
    fn normal_equations(&self, p: [f64; 3]) -> (Mat3, [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let g = gradient(x, p);
            let r = y - model(x, p);
            for i in 0..3 {
                jtr[i] += g[i] * r;
                for j in 0..3 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        (jtj, jtr)
    }

    fn levenberg_marquardt(&self, start: [f64; 3]) -> ([f64; 3], f64, bool) {
        let mut p = start;
        let mut cost = self.sse(p);
        let mut mu = 1e-3;
        for _ in 0..500 {
            let (jtj, jtr) = self.normal_equations(p);
            let mut improved = false;
            while mu < 1e12 {
                let mut damped = jtj;
                for (i, row) in damped.iter_mut().enumerate() {
                    row[i] += mu * jtj[i][i].max(1e-12);
                }
                let Some(step) = solve3(&damped, jtr) else {
                    mu *= 10.0;
                    continue;
                };
                let q = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
                let c = if q[0] > 0.0 && q[2] > 0.0 {
                    self.sse(q)
                } else {
                    f64::INFINITY
                };
                if c < cost {
                    let small = (cost - c) <= 1e-14 * cost.max(1e-300)
                        || step
                            .iter()
                            .zip(&q)
                            .all(|(s, v)| s.abs() <= 1e-10 * (1.0 + v.abs()));
                    p = q;
                    cost = c;
                    mu = (mu / 10.0).max(1e-12);
                    improved = true;
                    if small {
                        return (p, cost, true);
                    }
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                // No descent direction left: a local minimum within precision.
                return (p, cost, true);
            }
        }
        (p, cost, false)
    }
}

fn model(x: f64, [a, b, c]: [f64; 3]) -> f64 {
    -(-a * x).exp_m1() + b * x * (-c * x).exp()
}

fn gradient(x: f64, [a, b, c]: [f64; 3]) -> [f64; 3] {
    let ec = (-c * x).exp();
    [x * (-a * x).exp(), x * ec, -b * x * x * ec]
}

/// Least-squares fit of the prototype `1 - e^{-a x} + b x e^{-c x}`,
/// `x = r^2 - R_c^2`, to the finite estimates beyond `r_c` (scaled units).
/// Several starts are tried; the lowest residual wins.
pub fn fit_pcf_prototype(est: &PcfEstimate, r_c: f64) -> Result<PcfFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = est
        .centers
        .iter()
        .zip(&est.values)
        .filter(|(&r, v)| r > r_c && v.is_finite())
        .map(|(&r, &v)| (r * r - r_c * r_c, v))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::FitRange {
            what: "pcf prototype",
            lo: r_c,
            hi: est.edges.last().copied().unwrap_or(r_c),
        });
    }
    let fitter = Fitter { xs: &xs, ys: &ys };
    let mut best: Option<([f64; 3], f64, bool)> = None;
    for a in [0.5, 1.0, 2.0, 5.0] {
        for c in [0.5, 1.0, 2.0, 5.0] {
            for b in [0.0, 0.5] {
                let r = fitter.levenberg_marquardt([a, b, c]);
                if best.is_none_or(|(_, cost, _)| r.1 < cost) {
                    best = Some(r);
                }
            }
        }
    }
    let (p, cost, converged) = best.expect("at least one start");
    if !converged {
        log::warn!("pcf prototype fit did not converge; reporting best effort");
    }
    let n = xs.len();
    let s2 = cost / (n as f64 - 3.0).max(1.0);
    let (jtj, _) = fitter.normal_equations(p);
    let sigma = invert3(&jtj).map_or([f64::NAN; 3], |inv| {
        [0, 1, 2].map(|i| (s2 * inv[i][i]).max(0.0).sqrt())
    });
    Ok(PcfFit {
        a: p[0],
        b: p[1],
        c: p[2],
        sigma,
        rms_residual: (cost / n as f64).sqrt(),
        n_points: n,
        converged,
    })
}
