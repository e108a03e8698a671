//! Per-cell Voronoi construction by half-plane clipping.

use super::{Point, PointPattern};
use crate::error::{Error, Result};

/// Uniform bucket grid over the window, roughly one point per bucket.
#[derive(Debug, Clone)]
struct Grid {
    origin: f64,
    size: f64,
    dim: usize,
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    fn new(pattern: &PointPattern) -> Self {
        let h = pattern.window.half_width;
        let target = (pattern.len().max(1) as f64).sqrt().ceil() as usize;
        let dim = target.clamp(1, 2048);
        let size = 2.0 * h / dim as f64;
        let mut buckets = vec![Vec::new(); dim * dim];
        let mut grid = Self {
            origin: -h,
            size,
            dim,
            buckets: Vec::new(),
        };
        for (i, &p) in pattern.points.iter().enumerate() {
            let (cx, cy) = grid.bucket_of(p);
            buckets[cy * dim + cx].push(i as u32);
        }
        grid.buckets = buckets;
        grid
    }

    fn bucket_of(&self, p: Point) -> (usize, usize) {
        let f =
            |v: f64| (((v - self.origin) / self.size).floor().max(0.0) as usize).min(self.dim - 1);
        (f(p.x), f(p.y))
    }

    /// Calls `visit` for every point in the square ring of buckets at
    /// Chebyshev distance `ring` from `(cx, cy)`. Returns false once the ring
    /// lies entirely outside the grid.
    fn visit_ring(&self, cx: usize, cy: usize, ring: usize, mut visit: impl FnMut(u32)) -> bool {
        let (cx, cy, r, d) = (cx as isize, cy as isize, ring as isize, self.dim as isize);
        if cx - r < 0 && cy - r < 0 && cx + r >= d && cy + r >= d {
            return false;
        }
        let mut emit = |x: isize, y: isize| {
            if x >= 0 && y >= 0 && x < d && y < d {
                for &i in &self.buckets[(y * d + x) as usize] {
                    visit(i);
                }
            }
        };
        if r == 0 {
            emit(cx, cy);
            return true;
        }
        for x in (cx - r)..=(cx + r) {
            emit(x, cy - r);
            emit(x, cy + r);
        }
        for y in (cy - r + 1)..=(cy + r - 1) {
            emit(cx - r, y);
            emit(cx + r, y);
        }
        true
    }
}

/// Voronoi polygon of one station, in absolute coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub bs_index: usize,
    pub center: Point,
    /// Counterclockwise vertices relative to `center`.
    pub polygon: Vec<Point>,
    pub area: f64,
    /// Half the nearest-neighbor distance (inscribed radius about the station).
    pub r_m: f64,
    /// Largest station-to-vertex distance (circumscribed radius about the station).
    pub r_max: f64,
}

/// Builds cells for many stations of one pattern, sharing a spatial index.
#[derive(Debug, Clone)]
pub struct CellBuilder<'a> {
    pattern: &'a PointPattern,
    grid: Grid,
}

impl<'a> CellBuilder<'a> {
    pub fn new(pattern: &'a PointPattern) -> Self {
        Self {
            grid: Grid::new(pattern),
            pattern,
        }
    }

    pub fn pattern(&self) -> &PointPattern {
        self.pattern
    }

    /// Voronoi cell of station `bs_index`.
    ///
    /// Neighbors are clipped ring by ring outward; once every unvisited
    /// station is farther than twice the current circumradius it cannot
    /// contribute a face and the polygon is exact.
    pub fn voronoi(&self, bs_index: usize) -> Result<VoronoiCell> {
        let pts = &self.pattern.points;
        let window = self.pattern.window;
        let center = *pts
            .get(bs_index)
            .ok_or_else(|| Error::Invalid(format!("station index {bs_index} out of range")))?;
        if !window.is_interior(center) {
            return Err(Error::UnboundedCell { bs_index });
        }
        let mut poly: Vec<Point> = window.corners().iter().map(|&c| c - center).collect();
        let mut scratch = Vec::with_capacity(16);
        let mut nearest_sq = f64::INFINITY;
        let (cx, cy) = self.grid.bucket_of(center);
        let mut ring = 0;
        loop {
            let more = self.grid.visit_ring(cx, cy, ring, |j| {
                let j = j as usize;
                if j == bs_index {
                    return;
                }
                let n = pts[j] - center;
                let d2 = n.norm_sq();
                if d2 == 0.0 {
                    return;
                }
                nearest_sq = nearest_sq.min(d2);
                clip_half_plane(&poly, n, &mut scratch);
                std::mem::swap(&mut poly, &mut scratch);
            });
            let r_max_sq = poly.iter().map(|p| p.norm_sq()).fold(0.0, f64::max);
            // Unvisited stations are at least `ring * size` away.
            let reach = ring as f64 * self.grid.size;
            if !more || reach * reach > 4.0 * r_max_sq {
                break;
            }
            ring += 1;
        }
        let lim = window.half_width * (1.0 - 1e-12);
        if poly
            .iter()
            .any(|&p| (p.x + center.x).abs() >= lim || (p.y + center.y).abs() >= lim)
        {
            return Err(Error::UnboundedCell { bs_index });
        }
        let area = shoelace(&poly);
        let r_max = poly.iter().map(|p| p.norm()).fold(0.0, f64::max);
        Ok(VoronoiCell {
            bs_index,
            center,
            polygon: poly,
            area,
            r_m: 0.5 * nearest_sq.sqrt(),
            r_max,
        })
    }
}

/// Keeps the part of `poly` on the station's side of the bisector between the
/// origin and `n`: `{p : p·n <= |n|^2 / 2}`.
fn clip_half_plane(poly: &[Point], n: Point, out: &mut Vec<Point>) {
    out.clear();
    let c = 0.5 * n.norm_sq();
    let k = poly.len();
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        let da = a.dot(n) - c;
        let db = b.dot(n) - c;
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
}

pub(crate) fn shoelace(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
}

/// One-off cell construction; see [`CellBuilder`] for bulk use.
pub fn build_cell(
    bs_index: usize,
    pattern: &PointPattern,
    r_c: f64,
) -> Result<super::CellGeometry> {
    if pattern.is_empty() {
        return Err(Error::Invalid("pattern is empty".into()));
    }
    let cell = CellBuilder::new(pattern).voronoi(bs_index)?;
    Ok(super::CellGeometry::new(&cell, r_c))
}
