//! Cell-center / cell-edge regions of a Voronoi cell and uniform sampling
//! within them.
//!
//! Each polygon edge is split at the circle of radius `R_c`; every piece
//! spans an angular wedge about the station. Inside pieces contribute a
//! triangle to the CC region. Outside pieces contribute a disc sector to the
//! CC region and a `R_c <= r <= rho(phi)` band to the CE region, which is
//! sampled in polar coordinates with an envelope taken at the wedge ends.

use serde::{Deserialize, Serialize};

use super::disc::{polygon_disc_area, split_segment};
use super::{Point, VoronoiCell};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    CC,
    CE,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub bs_index: usize,
    pub center: Point,
    /// Counterclockwise vertices relative to `center`.
    pub polygon: Vec<Point>,
    pub cell_area: f64,
    pub cc_area: f64,
    pub ce_area: f64,
    pub r_m: f64,
    pub r_max: f64,
    pub r_c: f64,
    pub has_ce_region: bool,
}

impl CellGeometry {
    pub fn new(cell: &VoronoiCell, r_c: f64) -> Self {
        let has_ce_region = cell.r_max > r_c;
        let (cc_area, ce_area) = if cell.r_m >= r_c {
            let disc = std::f64::consts::PI * r_c * r_c;
            (disc, cell.area - disc)
        } else if has_ce_region {
            let cc = polygon_disc_area(&cell.polygon, r_c).min(cell.area);
            (cc, (cell.area - cc).max(0.0))
        } else {
            (cell.area, 0.0)
        };
        Self {
            bs_index: cell.bs_index,
            center: cell.center,
            polygon: cell.polygon.clone(),
            cell_area: cell.area,
            cc_area,
            ce_area,
            r_m: cell.r_m,
            r_max: cell.r_max,
            r_c,
            has_ce_region,
        }
    }

    /// Whether `p` (absolute coordinates) lies inside the polygon.
    pub fn contains(&self, p: Point) -> bool {
        let q = p - self.center;
        let n = self.polygon.len();
        (0..n).all(|i| {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            (b - a).cross(q - a) >= -1e-9 * (b - a).norm() * (1.0 + q.norm())
        })
    }

    pub fn region_of(&self, p: Point) -> RegionKind {
        if (p - self.center).norm() <= self.r_c {
            RegionKind::CC
        } else {
            RegionKind::CE
        }
    }

    pub fn area(&self, kind: RegionKind) -> f64 {
        match kind {
            RegionKind::CC => self.cc_area,
            RegionKind::CE => self.ce_area,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: Point,
    b: Point,
    inside: bool,
    theta_a: f64,
    sweep: f64,
}

/// Precomputed piece decomposition for repeated sampling in one cell.
#[derive(Debug, Clone)]
pub struct RegionSampler {
    center: Point,
    r_c: f64,
    pieces: Vec<Piece>,
    cc_cumulative: Vec<f64>,
    ce_cumulative: Vec<f64>,
    bs_index: usize,
}

impl RegionSampler {
    pub fn new(cell: &CellGeometry) -> Self {
        let r = cell.r_c;
        let n = cell.polygon.len();
        let mut pieces = Vec::with_capacity(2 * n);
        for i in 0..n {
            let p = cell.polygon[i];
            let q = cell.polygon[(i + 1) % n];
            for s in split_segment(p, q, r).into_iter().flatten() {
                let sweep = s.start.cross(s.end).atan2(s.start.dot(s.end));
                if sweep > 0.0 {
                    pieces.push(Piece {
                        a: s.start,
                        b: s.end,
                        inside: s.inside,
                        theta_a: s.start.angle(),
                        sweep,
                    });
                }
            }
        }
        let mut cc_cumulative = Vec::with_capacity(pieces.len());
        let mut ce_cumulative = Vec::with_capacity(pieces.len());
        let (mut cc, mut ce) = (0.0, 0.0);
        for pc in &pieces {
            let tri = 0.5 * pc.a.cross(pc.b);
            if pc.inside {
                cc += tri;
            } else {
                let sector = 0.5 * r * r * pc.sweep;
                cc += sector;
                ce += (tri - sector).max(0.0);
            }
            cc_cumulative.push(cc);
            ce_cumulative.push(ce);
        }
        Self {
            center: cell.center,
            r_c: r,
            pieces,
            cc_cumulative,
            ce_cumulative,
            bs_index: cell.bs_index,
        }
    }

    fn pick(cumulative: &[f64], u: f64) -> usize {
        let total = *cumulative.last().unwrap_or(&0.0);
        let target = u * total;
        cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1)
    }

    /// Uniform point (absolute coordinates) in the requested region.
    pub fn sample(&self, kind: RegionKind, stream: &mut RngStream) -> Result<Point> {
        let cumulative = match kind {
            RegionKind::CC => &self.cc_cumulative,
            RegionKind::CE => &self.ce_cumulative,
        };
        if cumulative.last().is_none_or(|&t| t <= 0.0) {
            return Err(Error::EmptyRegion {
                bs_index: self.bs_index,
            });
        }
        // Pieces with zero weight are never selected: partition_point skips them.
        let pc = self.pieces[Self::pick(cumulative, stream.uniform())];
        let rel = match (kind, pc.inside) {
            (RegionKind::CC, true) => sample_triangle(pc.a, pc.b, stream),
            (RegionKind::CC, false) => {
                let phi = pc.theta_a + stream.uniform() * pc.sweep;
                Point::polar(self.r_c * stream.uniform().sqrt(), phi)
            }
            (RegionKind::CE, _) => self.sample_band(pc, stream),
        };
        Ok(self.center + rel)
    }

    fn sample_band(&self, pc: Piece, stream: &mut RngStream) -> Point {
        let r2 = self.r_c * self.r_c;
        let d = pc.b - pc.a;
        let k = pc.a.cross(pc.b);
        let envelope = (pc.a.norm_sq().max(pc.b.norm_sq()) - r2).max(f64::MIN_POSITIVE);
        loop {
            let phi = pc.theta_a + stream.uniform() * pc.sweep;
            let e = Point::polar(1.0, phi);
            let denom = e.cross(d);
            if denom <= 0.0 {
                continue;
            }
            let rho2 = (k / denom).powi(2);
            let excess = rho2 - r2;
            if excess <= 0.0 || stream.uniform() * envelope > excess {
                continue;
            }
            let rad = (r2 + stream.uniform() * excess).sqrt();
            return e * rad;
        }
    }
}

fn sample_triangle(a: Point, b: Point, stream: &mut RngStream) -> Point {
    let (mut s, mut t) = (stream.uniform(), stream.uniform());
    if s + t > 1.0 {
        s = 1.0 - s;
        t = 1.0 - t;
    }
    a * s + b * t
}

/// Uniform point in the CC or CE region of `cell`.
pub fn sample_in_region(
    cell: &CellGeometry,
    kind: RegionKind,
    stream: &mut RngStream,
) -> Result<Point> {
    if kind == RegionKind::CE && !cell.has_ce_region {
        return Err(Error::EmptyRegion {
            bs_index: cell.bs_index,
        });
    }
    RegionSampler::new(cell).sample(kind, stream)
}

#[cfg(test)]
mod tests {
    use super::super::{PointPattern, Window};
    use super::*;
    use crate::geometry::build_cell;
    use std::f64::consts::PI;

    fn square_pattern() -> PointPattern {
        PointPattern {
            points: vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(-2.0, 0.0),
                Point::new(0.0, 2.0),
                Point::new(0.0, -2.0),
            ],
            window: Window::new(10.0, 3.0).unwrap(),
            density: 1.0,
        }
    }

    #[test]
    fn inscribed_disc_areas() {
        let c = build_cell(0, &square_pattern(), 1.0).unwrap();
        assert!((c.cc_area - PI).abs() < 1e-12);
        assert!((c.ce_area - (4.0 - PI)).abs() < 1e-12);
        assert!(c.has_ce_region);
    }

    #[test]
    fn corner_slivers_match_hit_count() {
        let mut s = RngStream::new(77, 0);
        let n = 10_000_000u64;
        for r in [1.2, 2f64.sqrt()] {
            let c = build_cell(0, &square_pattern(), r).unwrap();
            let mut hits = 0u64;
            for _ in 0..n {
                let x = 2.0 * s.uniform() - 1.0;
                let y = 2.0 * s.uniform() - 1.0;
                if x * x + y * y > r * r {
                    hits += 1;
                }
            }
            let frac = hits as f64 / n as f64;
            let mc = 4.0 * frac;
            let sigma = 4.0 * (frac * (1.0 - frac) / n as f64).sqrt();
            let tol = (1e-3 * c.ce_area).max(3.0 * sigma).max(1e-12);
            assert!(
                (c.ce_area - mc).abs() <= tol,
                "r={r}: {} vs {mc}",
                c.ce_area
            );
            // Four circular segments cut off by the unit-distance edges.
            let seg = if r > 1.0 {
                r * r * (1.0 / r).acos() - (r * r - 1.0).sqrt()
            } else {
                0.0
            };
            let exact = (4.0 - (PI * r * r - 4.0 * seg)).max(0.0);
            assert!((c.ce_area - exact).abs() < 1e-12);
            assert!((c.cc_area + c.ce_area - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cc_samples_stay_in_region() {
        let c = build_cell(0, &square_pattern(), 1.0).unwrap();
        let sampler = RegionSampler::new(&c);
        let mut s = RngStream::new(3, 1);
        for _ in 0..10_000 {
            let p = sampler.sample(RegionKind::CC, &mut s).unwrap();
            assert!(p.norm() <= 1.0 + 1e-12);
            assert!(c.contains(p));
            let q = sampler.sample(RegionKind::CE, &mut s).unwrap();
            assert!(q.norm() >= 1.0 - 1e-12);
            assert!(c.contains(q));
        }
    }

    #[test]
    fn ce_on_cell_without_edge_region() {
        let c = build_cell(0, &square_pattern(), 2.0).unwrap();
        assert!(!c.has_ce_region);
        assert_eq!(c.ce_area, 0.0);
        assert!(matches!(
            sample_in_region(&c, RegionKind::CE, &mut RngStream::new(1, 1)),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn cc_centroid_is_origin() {
        let c = build_cell(0, &square_pattern(), 1.2).unwrap();
        let sampler = RegionSampler::new(&c);
        let mut s = RngStream::new(8, 2);
        let n = 1_000_000;
        let (mut sx, mut sy, mut sxx) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = sampler.sample(RegionKind::CC, &mut s).unwrap();
            sx += p.x;
            sy += p.y;
            sxx += p.x * p.x;
        }
        let nf = n as f64;
        let sigma = (sxx / nf).sqrt() / nf.sqrt();
        assert!((sx / nf).abs() < 3.0 * sigma);
        assert!((sy / nf).abs() < 3.0 * sigma);
    }

    #[test]
    fn ce_samples_are_uniform() {
        // Fraction of CE samples beyond radius 1.3 against the exact area ratio.
        let c = build_cell(0, &square_pattern(), 1.1).unwrap();
        let outer = build_cell(0, &square_pattern(), 1.3).unwrap();
        let sampler = RegionSampler::new(&c);
        let mut s = RngStream::new(21, 0);
        let n = 400_000;
        let beyond = (0..n)
            .filter(|_| sampler.sample(RegionKind::CE, &mut s).unwrap().norm() > 1.3)
            .count();
        let p = outer.ce_area / c.ce_area;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((beyond as f64 / n as f64 - p).abs() < 4.0 * sd);
    }
}
