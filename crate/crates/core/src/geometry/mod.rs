//! Planar point patterns and per-cell geometry.
//!
//! Base stations live in a square [`Window`]. Each base station's cell is the
//! Voronoi polygon of the pattern; the cell-center (CC) region is the part of
//! the polygon within `R_c` of the station and the cell-edge (CE) region is
//! the remainder.

mod disc;
mod region;
mod voronoi;

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::numerics::RngStream;

pub use disc::{polygon_disc_area, union_two_circles_area};
pub use region::{sample_in_region, CellGeometry, RegionKind, RegionSampler};
pub use voronoi::{build_cell, CellBuilder, VoronoiCell};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Square observation window `[-half_width, half_width]^2` centered at the
/// origin. Statistics are only collected for stations farther than
/// `guard_band` from its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub half_width: f64,
    pub guard_band: f64,
}

impl Window {
    pub fn new(half_width: f64, guard_band: f64) -> Result<Self> {
        ensure(
            guard_band >= 0.0,
            "guard_band",
            guard_band,
            "guard_band >= 0",
        )?;
        ensure(
            half_width > guard_band,
            "half_width",
            half_width,
            "half_width > guard_band",
        )?;
        Ok(Self {
            half_width,
            guard_band,
        })
    }

    /// Default window for density `lambda`: half-width `8/sqrt(lambda)`,
    /// guard band `3/sqrt(lambda)`.
    pub fn for_density(lambda: f64) -> Self {
        let s = 1.0 / lambda.sqrt();
        Self {
            half_width: 8.0 * s,
            guard_band: 3.0 * s,
        }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }

    pub fn is_interior(&self, p: Point) -> bool {
        let lim = self.half_width - self.guard_band;
        p.x.abs() < lim && p.y.abs() < lim
    }

    pub fn corners(&self) -> [Point; 4] {
        let h = self.half_width;
        [
            Point::new(-h, -h),
            Point::new(h, -h),
            Point::new(h, h),
            Point::new(-h, h),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    pub points: Vec<Point>,
    pub window: Window,
    pub density: f64,
}

impl PointPattern {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of points outside the guard band.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.window.is_interior(self.points[i]))
            .collect()
    }

    /// Interior point closest to the window center.
    pub fn most_central(&self) -> Option<usize> {
        self.interior_indices().into_iter().min_by(|&a, &b| {
            self.points[a]
                .norm_sq()
                .total_cmp(&self.points[b].norm_sq())
        })
    }
}

/// Homogeneous Poisson pattern of the given density in `window`.
pub fn sample_ppp(density: f64, window: Window, stream: &mut RngStream) -> Result<PointPattern> {
    ensure(density >= 0.0, "density", density, "density >= 0")?;
    let mean = density * window.area();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| crate::Error::Invalid(format!("poisson mean {mean}: {e}")))?
            .sample(stream) as usize
    } else {
        0
    };
    let h = window.half_width;
    let points = (0..count)
        .map(|_| {
            let x = (2.0 * stream.uniform() - 1.0) * h;
            let y = (2.0 * stream.uniform() - 1.0) * h;
            Point::new(x, y)
        })
        .collect();
    Ok(PointPattern {
        points,
        window,
        density,
    })
}

/// Writes `bs_x,bs_y,cell_area,cc_area,ce_area,r_m,r_M` rows.
pub fn write_cells_csv<W: Write>(mut out: W, cells: &[CellGeometry]) -> std::io::Result<()> {
    writeln!(out, "bs_x,bs_y,cell_area,cc_area,ce_area,r_m,r_M")?;
    for c in cells {
        writeln!(
            out,
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            c.center.x, c.center.y, c.cell_area, c.cc_area, c.ce_area, c.r_m, c.r_max
        )?;
    }
    Ok(())
}
