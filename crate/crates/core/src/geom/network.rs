//! Raw fracture networks: segments inside an axis-aligned rectangle.

use super::{dist, sub};
use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Rect> {
        if !(xmax > xmin && ymax > ymin) || ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry(format!("degenerate domain rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}]")));
        }
        Ok(Rect { xmin, ymin, xmax, ymax })
    }

    pub fn unit() -> Rect {
        Rect { xmin: 0.0, ymin: 0.0, xmax: 1.0, ymax: 1.0 }
    }

    pub fn diagonal(&self) -> f64 {
        (self.xmax - self.xmin).hypot(self.ymax - self.ymin)
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn corners(&self) -> [Point; 4] {
        [[self.xmin, self.ymin], [self.xmax, self.ymin], [self.xmax, self.ymax], [self.xmin, self.ymax]]
    }

    /// Distance from `p` to the rectangle boundary (for points inside).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        (p[0] - self.xmin).min(self.xmax - p[0]).min(p[1] - self.ymin).min(self.ymax - p[1])
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.contains(p, tol) && self.boundary_distance(p).abs() <= tol
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.xmin - tol && p[0] <= self.xmax + tol && p[1] >= self.ymin - tol && p[1] <= self.ymax + tol
    }

    /// Liang-Barsky clipping of the segment `a`-`b`.
    pub fn clip(&self, a: Point, b: Point) -> Option<(Point, Point)> {
        let d = sub(b, a);
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        let checks = [(-d[0], a[0] - self.xmin), (d[0], self.xmax - a[0]), (-d[1], a[1] - self.ymin), (d[1], self.ymax - a[1])];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if t0 > t1 {
            return None;
        }
        let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
        Some((if t0 > 0.0 { self.snap(at(t0)) } else { a }, if t1 < 1.0 { self.snap(at(t1)) } else { b }))
    }

    // Clipped points land on the boundary up to rounding; put them exactly there.
    fn snap(&self, p: Point) -> Point {
        let eps = 1e-12 * self.diagonal();
        let mut q = p;
        for (v, lo, hi) in [(0, self.xmin, self.xmax), (1, self.ymin, self.ymax)] {
            if (q[v] - lo).abs() <= eps {
                q[v] = lo;
            }
            if (q[v] - hi).abs() <= eps {
                q[v] = hi;
            }
        }
        q
    }
}

/// A set of straight fractures inside a rectangular domain.
#[derive(Debug, Clone)]
pub struct FractureNetwork2 {
    pub fractures: Vec<[Point; 2]>,
    pub domain: Rect,
    pub tol: f64,
}

impl FractureNetwork2 {
    /// Clip fractures to the domain and validate. `tol` defaults to
    /// `1e-8` times the domain diagonal.
    pub fn new(fractures: Vec<[Point; 2]>, domain: Rect, tol: Option<f64>) -> Result<Self> {
        let tol = tol.unwrap_or(1e-8 * domain.diagonal());
        if !(tol > 0.0) {
            return Err(Error::Geometry(format!("snapping tolerance must be positive, got {tol}")));
        }
        let mut clipped = Vec::with_capacity(fractures.len());
        for (i, [a, b]) in fractures.into_iter().enumerate() {
            if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
                return Err(Error::Geometry(format!("fracture {i} has non-finite coordinates")));
            }
            let Some((a, b)) = domain.clip(a, b) else {
                return Err(Error::Geometry(format!("fracture {i} lies outside the domain")));
            };
            if dist(a, b) <= tol {
                return Err(Error::Geometry(format!("fracture {i} has length {} after clipping, not above tolerance {tol}", dist(a, b))));
            }
            clipped.push([a, b]);
        }
        Ok(FractureNetwork2 { fractures: clipped, domain, tol })
    }

    pub fn num_fractures(&self) -> usize {
        self.fractures.len()
    }

    /// Parse the text format: a header line `xmin ymin xmax ymax`, then one
    /// `x0 y0 x1 y1` line per fracture. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut domain = None;
        let mut fractures = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: lineno + 1, msg: format!("invalid number '{t}'") }))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != 4 {
                return Err(Error::Parse { line: lineno + 1, msg: format!("expected 4 numbers, found {}", vals.len()) });
            }
            if domain.is_none() {
                domain =
                    Some(Rect::new(vals[0], vals[1], vals[2], vals[3]).map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?);
            } else {
                fractures.push([[vals[0], vals[1]], [vals[2], vals[3]]]);
            }
        }
        let domain = domain.ok_or(Error::Parse { line: 0, msg: "missing domain header line".into() })?;
        Self::new(fractures, domain, None)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(Error::Io).map_err(|e| e.context(format!("reading network file {}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(format!("network file {}", path.display())))
    }

    pub fn to_text(&self) -> String {
        let d = &self.domain;
        let mut s = format!("{} {} {} {}\n", d.xmin, d.ymin, d.xmax, d.ymax);
        for [a, b] in &self.fractures {
            s += &format!("{} {} {} {}\n", a[0], a[1], b[0], b[1]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_trims_to_the_rectangle() {
        let net = FractureNetwork2::new(vec![[[-1.0, 0.5], [2.0, 0.5]]], Rect::unit(), None).unwrap();
        assert_eq!(net.fractures[0], [[0.0, 0.5], [1.0, 0.5]]);
    }

    #[test]
    fn fracture_outside_is_rejected() {
        assert!(FractureNetwork2::new(vec![[[2.0, 0.5], [3.0, 0.5]]], Rect::unit(), None).is_err());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = FractureNetwork2::parse("0 0 1 1\n# c\n0.1 0.1 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let net = FractureNetwork2::parse("0 0 1 1\n0.2 0.5 0.8 0.5\n").unwrap();
        assert_eq!(net.num_fractures(), 1);
    }
}
