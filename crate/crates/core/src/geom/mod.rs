//! Fracture network geometry and the subdomain/interface graph.

pub mod graph;
pub mod network;
pub mod process;

use network::Point;

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Counter-clockwise rotation by 90 degrees.
#[inline]
pub fn rot90(a: Point) -> Point {
    [-a[1], a[0]]
}

/// Distance from `p` to the segment `a`-`b`, and the clamped parameter of the
/// closest point.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let d = sub(b, a);
    let l2 = dot(d, d);
    let t = if l2 == 0.0 { 0.0 } else { (dot(sub(p, a), d) / l2).clamp(0.0, 1.0) };
    (dist(p, add(a, scale(d, t))), t)
}
