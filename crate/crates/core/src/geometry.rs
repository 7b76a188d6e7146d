//! Planar geometry: points and the reference-trajectory polyline.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math;

/// A point (or displacement) in the floor plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians counter-clockwise from +x.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(math::cos(angle), math::sin(angle))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Angle of the vector, radians in (-pi, pi].
    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    /// Unsigned angle between two non-zero vectors, radians in [0, pi].
    pub fn angle_to(self, other: Point2) -> f64 {
        math::atan2(self.cross(other).abs(), self.dot(other))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn distance_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// An open chain of straight segments with at least two distinct
/// consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPolyline("fewer than 2 vertices"));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolyline("non-finite vertex"));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPolyline("repeated consecutive vertex"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Total arc length in meters.
    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    /// Point at arc length `s` from the first vertex, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        let mut remaining = s.max(0.0);
        for (a, b) in self.segments() {
            let len = a.distance(b);
            if remaining <= len {
                return a + (b - a) * (remaining / len);
            }
            remaining -= len;
        }
        self.vertices[self.vertices.len() - 1]
    }

    /// Applies `f` to every vertex.
    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Self> {
        Self::new(self.vertices.iter().copied().map(f).collect())
    }
}

/// Minimum Euclidean distance from `p` to any segment of `line`.
pub fn distance_to_polyline(p: Point2, line: &Polyline) -> f64 {
    line.segments()
        .map(|(a, b)| distance_to_segment(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn x_axis() -> Polyline {
        Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]).unwrap()
    }

    #[test]
    fn point_on_segment() {
        assert_eq!(distance_to_polyline(Point2::new(1.0, 0.0), &x_axis()), 0.0);
    }

    #[test]
    fn perpendicular_foot_inside() {
        assert_eq!(distance_to_polyline(Point2::new(1.0, 1.0), &x_axis()), 1.0);
    }

    #[test]
    fn beyond_endpoint() {
        // Dense sampling of the segment at 1e-4 m steps gives 1.4142135623730951.
        let d = distance_to_polyline(Point2::new(3.0, 1.0), &x_axis());
        assert!((d - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_degenerate() {
        assert!(matches!(
            Polyline::new(vec![Point2::ORIGIN]),
            Err(Error::InvalidPolyline(_))
        ));
        assert!(Polyline::new(vec![Point2::ORIGIN, Point2::ORIGIN]).is_err());
        assert!(Polyline::new(vec![Point2::ORIGIN, Point2::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn arc_length_walk() {
        let line = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 4.0),
        ])
        .unwrap();
        assert_eq!(line.length(), 7.0);
        assert_eq!(line.point_at(5.0), Point2::new(3.0, 2.0));
        assert_eq!(line.point_at(100.0), Point2::new(3.0, 4.0));
        assert_eq!(line.point_at(-1.0), Point2::ORIGIN);
    }

    #[test]
    fn angle_between_vectors() {
        let a = Point2::new(1.0, 0.0);
        assert!((a.angle_to(Point2::new(0.0, -2.0)) - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(a.angle_to(Point2::new(5.0, 0.0)), 0.0);
    }
}
