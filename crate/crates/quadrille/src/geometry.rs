//! Small planar-geometry toolkit shared across the crate.
//!
//! Everything here is elementary and allocation-light: convex hulls,
//! point/segment distances, stable triangle areas, ellipse membership, and
//! the Frobenius distance from a 2×2 matrix to the rotation group. The
//! heavier geometric logic (charts, embeddings) lives in [`crate::chart`]
//! and [`crate::graph`] and calls into these primitives.

use nalgebra::Matrix2;

/// Planar vector / point type used throughout the crate.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Cross product `u × v` of two planar vectors (the scalar `z`-component).
#[inline]
pub fn cross(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Convex hull of a point set, counter-clockwise, via the monotone chain.
///
/// Collinear boundary points are dropped. Returns fewer than three points
/// when the input is degenerate (empty, a single point, or all collinear);
/// callers that need an actual polygon should check the length.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });
    pts.dedup_by(|p, q| (*p - *q).norm() == 0.0);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(lower[lower.len() - 1] - lower[lower.len() - 2], p - lower[lower.len() - 2])
                <= 0.0
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 1] - upper[upper.len() - 2], p - upper[upper.len() - 2])
                <= 0.0
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies inside (or within `tol` of) a counter-clockwise convex
/// polygon. Degenerate hulls (fewer than 3 vertices) contain only points
/// within `tol` of the hull itself.
pub fn convex_polygon_contains(hull: &[Vec2], p: Vec2, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (p - hull[0]).norm() <= tol,
        2 => point_segment_distance(p, hull[0], hull[1]) <= tol,
        n => (0..n).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            cross(b - a, p - a) >= -tol * (b - a).norm()
        }),
    }
}

/// Euclidean distance from point `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

/// Distance between the point pair `{p, q}` and the segment `[a, b]`:
/// the smaller of the two point-to-segment distances.
pub fn pair_segment_distance(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> f64 {
    point_segment_distance(p, a, b).min(point_segment_distance(q, a, b))
}

/// Triangle area from side lengths via Kahan's stable form of Heron's
/// formula. Returns `None` when the lengths violate the triangle
/// inequality beyond roundoff.
pub fn heron_area(a: f64, b: f64, c: f64) -> Option<f64> {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let [a, b, c] = s; // a ≥ b ≥ c
    if c < 0.0 || c - (a - b) < 0.0 {
        return None;
    }
    let t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    Some(0.25 * t.max(0.0).sqrt())
}

/// Signed area of a simple polygon (positive when counter-clockwise).
pub fn polygon_signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * acc
}

/// Frobenius distance from a 2×2 matrix to the rotation group `SO(2)`.
///
/// With `Q = ‖((a+d)/2, (c−b)/2)‖` and `R = ‖((a−d)/2, (c+b)/2)‖` the
/// singular values are `Q + R` and `|Q − R|`, the smaller signed by the
/// determinant, and `dist(M, SO(2)) = ‖(Q+R−1, Q−R−1)‖`. This form stays
/// accurate near rotations (`Q ≈ 1`, `R ≈ 0`), where expanding the square of
/// the distance would cancel catastrophically.
pub fn distance_to_rotations(m: &Matrix2<f64>) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let q = (0.5 * (a + d)).hypot(0.5 * (c - b));
    let r = (0.5 * (a - d)).hypot(0.5 * (c + b));
    (q + r - 1.0).hypot(q - r - 1.0)
}

/// The closed elliptical neighbourhood of the pair `{a, b}`: all points `x`
/// with `|x − a| + |x − b| ≤ ((1+α)/(1−α))·|a − b|` (foci at `a` and `b`).
pub fn ellipse_contains(a: Vec2, b: Vec2, alpha: f64, x: Vec2) -> bool {
    let bound = (1.0 + alpha) / (1.0 - alpha) * (a - b).norm();
    (x - a).norm() + (x - b).norm() <= bound
}

/// `n` points on the boundary of the elliptical neighbourhood of `{a, b}`
/// (see [`ellipse_contains`]), in parameter order. Used to certify that the
/// whole ellipse lies inside a convex region by sampling its boundary.
pub fn ellipse_boundary(a: Vec2, b: Vec2, alpha: f64, n: usize) -> Vec<Vec2> {
    let center = 0.5 * (a + b);
    let d = b - a;
    let dist = d.norm();
    let major = 0.5 * (1.0 + alpha) / (1.0 - alpha) * dist;
    let minor = (major * major - 0.25 * dist * dist).max(0.0).sqrt();
    let u = if dist > 0.0 { d / dist } else { Vec2::new(1.0, 0.0) };
    let v = Vec2::new(-u.y, u.x);
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            center + major * t.cos() * u + minor * t.sin() * v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.5, 0.0), // collinear boundary point, must be dropped
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(polygon_signed_area(&hull) > 0.0); // counter-clockwise
        assert_relative_eq!(polygon_signed_area(&hull), 1.0);
        assert!(convex_polygon_contains(&hull, Vec2::new(0.5, 0.5), 1e-12));
        assert!(convex_polygon_contains(&hull, Vec2::new(1.0, 1.0), 1e-12));
        assert!(!convex_polygon_contains(&hull, Vec2::new(1.1, 0.5), 1e-12));
    }

    #[test]
    fn segment_distance_cases() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(2.0, 0.0);
        assert_relative_eq!(point_segment_distance(Vec2::new(1.0, 1.5), a, b), 1.5);
        assert_relative_eq!(point_segment_distance(Vec2::new(-3.0, 4.0), a, b), 5.0);
        assert_relative_eq!(point_segment_distance(Vec2::new(5.0, 4.0), a, b), 5.0);
        assert_relative_eq!(point_segment_distance(a, a, a), 0.0);
    }

    #[test]
    fn heron_matches_shoelace() {
        // Triangle (0,0), (4,0), (1,3): shoelace area = 6.
        let a = 4.0;
        let b = (1.0f64 * 1.0 + 9.0).sqrt();
        let c = (9.0f64 + 9.0).sqrt();
        assert_relative_eq!(heron_area(a, b, c).unwrap(), 6.0, max_relative = 1e-14);
        assert!(heron_area(1.0, 1.0, 3.0).is_none());
        assert_relative_eq!(heron_area(1.0, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rotation_distance_closed_form() {
        let id = Matrix2::identity();
        assert_relative_eq!(distance_to_rotations(&id), 0.0);
        // A rotation by any angle is at distance zero.
        let th = 0.7f64;
        let rot = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        assert_relative_eq!(distance_to_rotations(&rot), 0.0, epsilon = 1e-12);
        // A reflection has singular values (1,1) but negative determinant:
        // nearest rotation error is 2 (flip one singular value).
        let refl = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        assert_relative_eq!(distance_to_rotations(&refl), 2.0);
        // Pure scaling by 1+e: distance √2·e.
        let e = 1e-3;
        let scale = Matrix2::new(1.0 + e, 0.0, 0.0, 1.0 + e);
        assert_relative_eq!(
            distance_to_rotations(&scale),
            std::f64::consts::SQRT_2 * e,
            max_relative = 1e-9
        );
    }

    #[test]
    fn ellipse_membership_and_boundary() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(1.0, 0.0);
        let alpha = 0.05;
        let ratio = 1.05 / 0.95;
        assert!(ellipse_contains(a, b, alpha, Vec2::new(0.5, 0.0)));
        assert!(ellipse_contains(a, b, alpha, a));
        // Beyond the major semi-axis: |x−a|+|x−b| > ratio.
        let outside = Vec2::new(0.5 + 0.5 * ratio + 1e-9, 0.0);
        assert!(!ellipse_contains(a, b, alpha, outside));
        // Every sampled boundary point satisfies the defining equation.
        for p in ellipse_boundary(a, b, alpha, 64) {
            let sum = (p - a).norm() + (p - b).norm();
            assert_relative_eq!(sum, ratio, max_relative = 1e-12);
        }
    }
}
