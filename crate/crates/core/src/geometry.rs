//! Planar geometry helpers: points, polylines, offsets, projection.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Mean Earth radius in meters (IUGG).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A point in the local planar frame, in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Add for Point {
    type Output = Point;
    fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Unit vector in the same direction; the zero vector maps to itself.
    pub fn unit(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Unit normal pointing to the right of the direction `self`.
    pub fn right_normal(self) -> Point {
        Point::new(self.y, -self.x).unit()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Heading of a direction vector in degrees clockwise from north (+y), in `[0, 360)`.
pub fn heading_deg(dir: Point) -> f64 {
    let deg = libm::atan2(dir.x, dir.y).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else if deg >= 360.0 {
        deg - 360.0
    } else {
        deg
    }
}

/// Signed turn angle from direction `from` to direction `to`, in degrees,
/// positive for clockwise (right) turns, in `(-180, 180]`.
pub fn turn_angle_deg(from: Point, to: Point) -> f64 {
    let ccw = libm::atan2(from.cross(to), from.dot(to)).to_degrees();
    let cw = -ccw;
    if cw <= -180.0 {
        cw + 360.0
    } else {
        cw
    }
}

/// Direction of the first segment of a polyline.
pub fn start_direction(points: &[Point]) -> Point {
    (points[1] - points[0]).unit()
}

/// Direction of the last segment of a polyline.
pub fn end_direction(points: &[Point]) -> Point {
    let n = points.len();
    (points[n - 1] - points[n - 2]).unit()
}

/// Parallel offset of a polyline. Positive `d` offsets to the right of the
/// direction of travel. Interior vertices use miter joins, with the miter
/// length capped at four times `|d|` for very sharp corners.
pub fn offset_polyline(points: &[Point], d: f64) -> Vec<Point> {
    let n = points.len();
    if d == 0.0 {
        return points.to_vec();
    }
    let normals: Vec<Point> = points
        .windows(2)
        .map(|w| (w[1] - w[0]).right_normal())
        .collect();
    let mut out = Vec::with_capacity(n);
    out.push(points[0] + normals[0].scale(d));
    for i in 1..n - 1 {
        let (n1, n2) = (normals[i - 1], normals[i]);
        let bisector = n1 + n2;
        if bisector.norm() < 1e-12 {
            // reversal: fall back to the incoming normal
            out.push(points[i] + n1.scale(d));
            continue;
        }
        let miter = bisector.unit();
        let cos_half = miter.dot(n1).max(0.25);
        out.push(points[i] + miter.scale(d / cos_half));
    }
    out.push(points[n - 1] + normals[n - 2].scale(d));
    out
}

/// Removes `from_start` meters from the beginning and `from_end` meters from
/// the end of a polyline. The caller guarantees the sum is below the length.
pub fn trim_polyline(points: &[Point], from_start: f64, from_end: f64) -> Vec<Point> {
    let total = polyline_length(points);
    let end_s = total - from_end;
    let mut out = vec![point_at(points, from_start)];
    let mut acc = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        let next = acc + seg;
        if next > from_start && next < end_s {
            out.push(w[1]);
        }
        acc = next;
    }
    out.push(point_at(points, end_s));
    out.dedup_by(|a, b| a.distance(*b) < 1e-9);
    out
}

/// Point at arc length `s` along a polyline (clamped to its ends).
pub fn point_at(points: &[Point], s: f64) -> Point {
    let mut acc = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        if acc + seg >= s && seg > 0.0 {
            let t = ((s - acc) / seg).clamp(0.0, 1.0);
            return w[0] + (w[1] - w[0]).scale(t);
        }
        acc += seg;
    }
    points[points.len() - 1]
}

/// Direction of the polyline segment containing arc length `s`.
pub fn direction_at(points: &[Point], s: f64) -> Point {
    let mut acc = 0.0;
    let last = points.len() - 2;
    for (i, w) in points.windows(2).enumerate() {
        let seg = w[0].distance(w[1]);
        if acc + seg >= s || i == last {
            return (w[1] - w[0]).unit();
        }
        acc += seg;
    }
    end_direction(points)
}

/// Spherical azimuthal-equidistant projection centered on `(lon0, lat0)`
/// (degrees). Returns meters east/north of the center.
pub fn project_aeqd(lon: f64, lat: f64, lon0: f64, lat0: f64) -> Point {
    let (phi, lam) = (lat.to_radians(), lon.to_radians());
    let (phi0, lam0) = (lat0.to_radians(), lon0.to_radians());
    let dlam = lam - lam0;
    let cos_c = libm::sin(phi0) * libm::sin(phi) + libm::cos(phi0) * libm::cos(phi) * libm::cos(dlam);
    let c = libm::acos(cos_c.clamp(-1.0, 1.0));
    let k = if c.abs() < 1e-12 { 1.0 } else { c / libm::sin(c) };
    let x = EARTH_RADIUS_M * k * libm::cos(phi) * libm::sin(dlam);
    let y = EARTH_RADIUS_M
        * k
        * (libm::cos(phi0) * libm::sin(phi) - libm::sin(phi0) * libm::cos(phi) * libm::cos(dlam));
    Point::new(x, y)
}
