//! Empirical cell-area samples and goodness-of-fit statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::area_models::MixedAreaDistribution;
use crate::error::{ensure, Result};
use crate::geometry::{sample_ppp, CellBuilder, CellGeometry, Window};
use crate::numerics::RngStream;

pub const MIN_KS_SAMPLES: usize = 1000;
const KL_BINS: usize = 100;
const KL_FLOOR: f64 = 1e-12;

/// CC and CE areas of interior cells of independent PPP patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSamples {
    pub lambda0: f64,
    pub r_c: f64,
    pub cc: Vec<f64>,
    pub ce: Vec<f64>,
    pub n_patterns: usize,
}

fn pattern_areas(lambda0: f64, r_c: f64, seed: u64, index: u64) -> Result<Vec<(f64, f64)>> {
    let mut stream = RngStream::new(seed, index);
    let pattern = sample_ppp(lambda0, Window::for_density(lambda0), &mut stream)?;
    let builder = CellBuilder::new(&pattern);
    pattern
        .interior_indices()
        .into_iter()
        .map(|i| {
            let cell = CellGeometry::new(&builder.voronoi(i)?, r_c);
            Ok((cell.cc_area, cell.ce_area))
        })
        .collect()
}

/// Areas of the first `n_cells` interior cells over patterns `0, 1, ...`
/// drawn with stream ids equal to the pattern index.
pub fn sample_cell_areas(lambda0: f64, r_c: f64, n_cells: usize, seed: u64) -> Result<AreaSamples> {
    ensure(lambda0 > 0.0, "lambda0", lambda0, "lambda0 > 0")?;
    ensure(r_c > 0.0, "r_c", r_c, "R_c > 0")?;
    let per_pattern = {
        let w = Window::for_density(lambda0);
        let inner = 2.0 * (w.half_width - w.guard_band);
        (lambda0 * inner * inner).max(1.0)
    };
    let mut cc = Vec::with_capacity(n_cells);
    let mut ce = Vec::with_capacity(n_cells);
    let mut next = 0u64;
    while cc.len() < n_cells {
        let missing = (n_cells - cc.len()) as f64;
        let batch = ((missing / per_pattern) * 1.1).ceil().max(1.0) as u64;
        let results: Vec<_> = (next..next + batch)
            .into_par_iter()
            .map(|i| pattern_areas(lambda0, r_c, seed, i))
            .collect::<Result<_>>()?;
        next += batch;
        for (a, b) in results.into_iter().flatten() {
            if cc.len() == n_cells {
                break;
            }
            cc.push(a);
            ce.push(b);
        }
    }
    Ok(AreaSamples {
        lambda0,
        r_c,
        cc,
        ce,
        n_patterns: next as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsKl {
    pub ks: f64,
    /// Natural-log Kullback-Leibler divergence of the binned sample from the model.
    pub kl: f64,
    pub n: usize,
}

/// `sum p log(p / max(q, 1e-12))` over bins with `p > 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(KL_FLOOR)).ln())
        .sum()
}

/// Kolmogorov-Smirnov distance and binned KL divergence between `samples`
/// and `model`. The atom is its own bin; the continuous range
/// `[0, max(support_top, max sample)]` is split into 100 equal bins.
pub fn ks_kl(samples: &[f64], model: &MixedAreaDistribution) -> Result<KsKl> {
    let n = samples.len();
    ensure(
        n >= MIN_KS_SAMPLES,
        "samples",
        n as f64,
        "at least 1000 samples",
    )?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;

    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let v = xs[i];
        let mut j = i + 1;
        while j < n && xs[j] == v {
            j += 1;
        }
        ks = ks
            .max((j as f64 / nf - model.cdf(v)).abs())
            .max((i as f64 / nf - model.cdf_left(v)).abs());
        i = j;
    }

    let atom = model.atom_location;
    let has_atom = model.atom_mass > 0.0;
    let top = model.support_top().max(xs[n - 1]);
    let width = top / KL_BINS as f64;
    let mut p = vec![0.0; KL_BINS + 1];
    for &x in &xs {
        let slot = if has_atom && x == atom {
            KL_BINS
        } else {
            ((x / width).floor() as usize).min(KL_BINS - 1)
        };
        p[slot] += 1.0 / nf;
    }
    let mut q: Vec<f64> = (0..KL_BINS)
        .map(|k| {
            let lo = k as f64 * width;
            let hi = if k + 1 == KL_BINS { top } else { lo + width };
            let mut mass = model.cdf_left(hi) - model.cdf(lo);
            if has_atom && lo < atom && atom < hi {
                mass -= model.atom_mass;
            }
            if k + 1 == KL_BINS {
                // Mass beyond `top`, if any, belongs to the last bin.
                mass += 1.0 - model.cdf(top) - if atom > top { model.atom_mass } else { 0.0 };
            }
            mass.max(0.0)
        })
        .collect();
    q.push(if has_atom { model.atom_mass } else { 0.0 });
    Ok(KsKl {
        ks,
        kl: kl_divergence(&p, &q),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::area_models::E3Method;
    use crate::geometry::RegionKind;

    #[test]
    fn identical_histograms_have_zero_kl() {
        let p = [0.1, 0.2, 0.0, 0.7];
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert!(kl_divergence(&p, &[0.25; 4]) > 0.0);
    }

    #[test]
    fn self_samples_pass() {
        let lambda0 = 4e-6;
        for (kind, r_c) in [(RegionKind::CC, 200.0), (RegionKind::CE, 250.0)] {
            let model =
                MixedAreaDistribution::fit(kind, lambda0, r_c, E3Method::MonteCarlo).unwrap();
            let mut s = RngStream::new(77, 0);
            let xs: Vec<f64> = (0..100_000).map(|_| model.sample(&mut s)).collect();
            let r = ks_kl(&xs, &model).unwrap();
            assert!(r.ks <= 0.01, "{kind:?} ks {}", r.ks);
            assert!(r.kl <= 0.005, "{kind:?} kl {}", r.kl);
        }
    }

    #[test]
    fn ks_detects_shift() {
        let model =
            MixedAreaDistribution::fit(RegionKind::CE, 4e-6, 250.0, E3Method::MonteCarlo).unwrap();
        let mut s = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..5000).map(|_| 1.3 * model.sample(&mut s)).collect();
        assert!(ks_kl(&xs, &model).unwrap().ks > 0.03);
    }

    #[test]
    fn too_few_samples_rejected() {
        let model =
            MixedAreaDistribution::fit(RegionKind::CC, 4e-6, 200.0, E3Method::MonteCarlo).unwrap();
        assert!(ks_kl(&[1.0; 10], &model).is_err());
    }

    #[test]
    fn area_samples_are_deterministic_and_sized() {
        let a = sample_cell_areas(1.0, 0.5, 500, 3).unwrap();
        let b = sample_cell_areas(1.0, 0.5, 500, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cc.len(), 500);
        for (c, e) in a.cc.iter().zip(&a.ce) {
            assert!(*c > 0.0 && *c <= std::f64::consts::PI * 0.25 + 1e-12 && *e >= 0.0);
        }
    }
}
