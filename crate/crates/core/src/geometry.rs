//! Flat model phase spaces and the small amount of linear algebra the
//! estimators need. Every computation happens in one global Euclidean chart;
//! the torus is handled by wrapping displacements to their shortest
//! representative.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Translate by `v` without any wrapping.
    pub fn offset(self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.dx, self.y + v.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub dx: f64,
    pub dy: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.dx * other.dy - self.dy * other.dx
    }

    pub fn norm(self) -> f64 {
        norm(self)
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    /// Unsigned angle between the lines spanned by `self` and `other`, in [0, pi/2].
    pub fn line_angle(self, other: Vec2) -> f64 {
        let c = self.cross(other).abs();
        let d = self.dot(other).abs();
        c.atan2(d)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.dx, -self.dy)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.dx * s, self.dy * s)
    }
}

/// Euclidean norm.
pub fn norm(v: Vec2) -> f64 {
    v.dx.hypot(v.dy)
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn inverse(&self) -> Option<Matrix2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Matrix2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.dx + self.a12 * v.dy,
            self.a21 * v.dx + self.a22 * v.dy,
        )
    }

    pub fn scale(&self, s: f64) -> Matrix2 {
        Matrix2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22)
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Largest singular value, from the closed form for 2x2 matrices.
    pub fn spectral_norm(&self) -> f64 {
        let sum = (self.a11 + self.a22).hypot(self.a21 - self.a12);
        let diff = (self.a11 - self.a22).hypot(self.a21 + self.a12);
        (sum + diff) / 2.0
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, r: Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 * r.a11 + self.a12 * r.a21,
            self.a11 * r.a12 + self.a12 * r.a22,
            self.a21 * r.a11 + self.a22 * r.a21,
            self.a21 * r.a12 + self.a22 * r.a22,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Plane,
    FlatTorus { period: f64 },
    ClosedDisc { center: Point2, radius: f64 },
}

/// Relative slack allowed on the disc boundary before a point counts as outside.
const DISC_SLACK: f64 = 1e-12;

impl Domain {
    pub fn unit_torus() -> Self {
        Domain::FlatTorus { period: 1.0 }
    }

    pub fn unit_disc() -> Self {
        Domain::ClosedDisc { center: Point2::ORIGIN, radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Plane => Ok(()),
            Domain::FlatTorus { period } if period > 0.0 && period.is_finite() => Ok(()),
            Domain::FlatTorus { period } => {
                Err(Error::InvalidArgument(format!("torus period must be positive, got {period}")))
            }
            Domain::ClosedDisc { center, radius } if radius > 0.0 && radius.is_finite() && center.is_finite() => {
                Ok(())
            }
            Domain::ClosedDisc { radius, .. } => {
                Err(Error::InvalidArgument(format!("disc radius must be positive, got {radius}")))
            }
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            Domain::Plane | Domain::FlatTorus { .. } => true,
            Domain::ClosedDisc { center, radius } => {
                (p.x - center.x).hypot(p.y - center.y) <= radius * (1.0 + DISC_SLACK)
            }
        }
    }

    /// Reduce a point to its canonical representative. On the torus that is
    /// the representative in `[0, period)^2`.
    pub fn canonicalize(&self, p: Point2) -> Point2 {
        match *self {
            Domain::FlatTorus { period } => Point2::new(wrap_coord(p.x, period), wrap_coord(p.y, period)),
            _ => p,
        }
    }

    pub(crate) fn check(&self, p: Point2, label: &str) -> Result<Point2> {
        if self.contains(p) {
            Ok(self.canonicalize(p))
        } else {
            Err(Error::DomainViolation { label: label.to_string(), point: p })
        }
    }

    /// Total area, or `None` for the unbounded plane.
    pub fn area(&self) -> Option<f64> {
        match *self {
            Domain::Plane => None,
            Domain::FlatTorus { period } => Some(period * period),
            Domain::ClosedDisc { radius, .. } => Some(PI * radius * radius),
        }
    }

    /// Area-preserving parameterization of the domain by the unit square
    /// (up to the constant factor `area`). Used to turn uniform, grid and
    /// stratified designs on `[0,1)^2` into quadrature points.
    pub fn from_unit_square(&self, u: f64, v: f64) -> Option<Point2> {
        match *self {
            Domain::Plane => None,
            Domain::FlatTorus { period } => Some(Point2::new(u * period, v * period)),
            Domain::ClosedDisc { center, radius } => {
                let r = radius * u.sqrt();
                let (s, c) = (2.0 * PI * v).sin_cos();
                Some(Point2::new(center.x + r * c, center.y + r * s))
            }
        }
    }
}

fn wrap_coord(c: f64, period: f64) -> f64 {
    let w = c.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs
    if w >= period {
        0.0
    } else {
        w
    }
}

fn wrap_component(d: f64, period: f64) -> f64 {
    d - period * (d / period + 0.5).floor()
}

/// Shortest displacement from `p` to `q` (i.e. `q - p`, wrapped on the torus).
pub fn displacement(d: &Domain, p: Point2, q: Point2) -> Result<Vec2> {
    if let Domain::ClosedDisc { .. } = d {
        d.check(p, "domain")?;
        d.check(q, "domain")?;
    } else if !p.is_finite() || !q.is_finite() {
        let bad = if p.is_finite() { q } else { p };
        return Err(Error::DomainViolation { label: "domain".into(), point: bad });
    }
    Ok(raw_displacement(d, p, q))
}

/// Same as [`displacement`] without the membership checks; callers have
/// already validated both points.
pub(crate) fn raw_displacement(d: &Domain, p: Point2, q: Point2) -> Vec2 {
    let v = Vec2::new(q.x - p.x, q.y - p.y);
    match *d {
        Domain::FlatTorus { period } => Vec2::new(wrap_component(v.dx, period), wrap_component(v.dy, period)),
        _ => v,
    }
}

pub fn distance(d: &Domain, p: Point2, q: Point2) -> Result<f64> {
    displacement(d, p, q).map(norm)
}

pub(crate) fn raw_distance(d: &Domain, p: Point2, q: Point2) -> f64 {
    norm(raw_displacement(d, p, q))
}
