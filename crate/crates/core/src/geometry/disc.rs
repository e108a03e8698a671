//! Circle/polygon area primitives.

use std::f64::consts::PI;

use super::Point;

/// Signed area of `triangle(origin, p, q) ∩ disc(origin, r)`.
pub(crate) fn triangle_disc_area(p: Point, q: Point, r: f64) -> f64 {
    let pieces = split_segment(p, q, r);
    let mut area = 0.0;
    for piece in pieces.iter().flatten() {
        let (u, v) = (piece.start, piece.end);
        if piece.inside {
            area += 0.5 * u.cross(v);
        } else {
            area += 0.5 * r * r * u.cross(v).atan2(u.dot(v));
        }
    }
    area
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentPiece {
    pub start: Point,
    pub end: Point,
    pub inside: bool,
}

/// Splits segment `pq` at its intersections with the circle of radius `r`
/// about the origin. At most three pieces.
pub(crate) fn split_segment(p: Point, q: Point, r: f64) -> [Option<SegmentPiece>; 3] {
    let d = q - p;
    let a = d.dot(d);
    let mut out = [None, None, None];
    if a == 0.0 {
        return out;
    }
    let b = p.dot(d);
    let c = p.dot(p) - r * r;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        out[0] = Some(SegmentPiece {
            start: p,
            end: q,
            inside: false,
        });
        return out;
    }
    let sq = disc.sqrt();
    let t1 = ((-b - sq) / a).clamp(0.0, 1.0);
    let t2 = ((-b + sq) / a).clamp(0.0, 1.0);
    let at = |t: f64| p + d * t;
    let mut k = 0;
    if t1 > 0.0 {
        out[k] = Some(SegmentPiece {
            start: p,
            end: at(t1),
            inside: false,
        });
        k += 1;
    }
    if t2 > t1 {
        out[k] = Some(SegmentPiece {
            start: at(t1),
            end: at(t2),
            inside: true,
        });
        k += 1;
    }
    if t2 < 1.0 {
        out[k] = Some(SegmentPiece {
            start: at(t2),
            end: q,
            inside: false,
        });
    }
    out
}

/// Area of `polygon ∩ disc(origin, r)` for a counterclockwise polygon given in
/// coordinates relative to the disc center.
pub fn polygon_disc_area(polygon: &[Point], r: f64) -> f64 {
    if r <= 0.0 || polygon.len() < 3 {
        return 0.0;
    }
    let n = polygon.len();
    (0..n)
        .map(|i| triangle_disc_area(polygon[i], polygon[(i + 1) % n], r))
        .sum::<f64>()
        .max(0.0)
}

/// Area of the union of two discs that both pass through the origin, with
/// centers at distances `r1` and `r2` from the origin separated by angle `u`.
pub fn union_two_circles_area(r1: f64, r2: f64, u: f64) -> f64 {
    let big = r1.max(r2);
    if big <= 0.0 {
        return 0.0;
    }
    let cos_u = u.cos();
    let dist_sq = (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * cos_u).max(0.0);
    let dist = dist_sq.sqrt();
    if dist < 1e-12 * big {
        return PI * big * big;
    }
    let v = ((r1 - r2 * cos_u) / dist).clamp(-1.0, 1.0).acos();
    let w = ((r2 - r1 * cos_u) / dist).clamp(-1.0, 1.0).acos();
    r1 * r1 * (PI - v + (2.0 * v).sin() / 2.0) + r2 * r2 * (PI - w + (2.0 * w).sin() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square(h: f64) -> Vec<Point> {
        vec![
            Point::new(-h, -h),
            Point::new(h, -h),
            Point::new(h, h),
            Point::new(-h, h),
        ]
    }

    // Classical lens formula for two discs at center distance d.
    fn lens_oracle(r1: f64, r2: f64, d: f64) -> f64 {
        if d >= r1 + r2 {
            return 0.0;
        }
        if d <= (r1 - r2).abs() {
            let s = r1.min(r2);
            return PI * s * s;
        }
        let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).acos();
        let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).acos();
        r1 * r1 * a1 + r2 * r2 * a2
            - 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).sqrt()
    }

    #[test]
    fn disc_inside_square() {
        assert_relative_eq!(
            polygon_disc_area(&square(1.0), 1.0),
            PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            polygon_disc_area(&square(1.0), 0.5),
            PI * 0.25,
            max_relative = 1e-12
        );
    }

    #[test]
    fn square_inside_disc() {
        assert_relative_eq!(
            polygon_disc_area(&square(1.0), 2.0),
            4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn corners_of_square_poke_out() {
        // Disc of radius sqrt(2)*0.9 clips the corners; closed form via
        // inclusion-exclusion of four circular segments.
        let r: f64 = 1.2;
        let seg = |h: f64| r * r * (h / r).acos() - h * (r * r - h * h).sqrt();
        let expected = PI * r * r - 4.0 * seg(1.0);
        assert_relative_eq!(
            polygon_disc_area(&square(1.0), r),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn tangent_circles() {
        assert_relative_eq!(
            union_two_circles_area(1.0, 1.0, PI),
            2.0 * PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            union_two_circles_area(3.0, 3.0, PI),
            18.0 * PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_second_circle() {
        assert_relative_eq!(
            union_two_circles_area(2.0, 0.0, 1.3),
            4.0 * PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            union_two_circles_area(1.5, 1.5, 0.0),
            PI * 2.25,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            union_two_circles_area(2.0, 1.0, 0.0),
            4.0 * PI,
            max_relative = 1e-12
        );
    }

    proptest::proptest! {
        #[test]
        fn union_matches_lens_formula(r1 in 0.01..5.0f64, r2 in 0.01..5.0f64, u in 0.0..(2.0 * PI)) {
            let d = (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * u.cos()).max(0.0).sqrt();
            let expected = PI * (r1 * r1 + r2 * r2) - lens_oracle(r1, r2, d);
            let got = union_two_circles_area(r1, r2, u);
            proptest::prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
        }

        #[test]
        fn union_symmetric_and_monotone(r1 in 0.01..5.0f64, r2 in 0.01..5.0f64, u in 0.0..PI, du in 0.0..0.5f64) {
            let a = union_two_circles_area(r1, r2, u);
            proptest::prop_assert!((a - union_two_circles_area(r2, r1, u)).abs() <= 1e-9 * a);
            let b = union_two_circles_area(r1, r2, (u + du).min(PI));
            proptest::prop_assert!(b >= a - 1e-9 * a);
        }
    }
}
