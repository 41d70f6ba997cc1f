//! The map zoo: every dynamical system the estimators run on, plus the two
//! combinators used to build small-support perturbations of the identity
//! (homothety conjugation and the disc family).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw_displacement, Domain, Matrix2, Point2, Vec2};

pub type PointFn = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;
/// Returns `None` at points where the map has no derivative.
pub type JacobianFn = Arc<dyn Fn(Point2) -> Option<Matrix2> + Send + Sync>;

/// A continuous self-map of a model domain with optional derivative and inverse.
///
/// The closures always receive canonical in-domain points; [`MapObject::evaluate`]
/// validates inputs and canonicalizes outputs.
#[derive(Clone)]
pub struct MapObject {
    label: String,
    domain: Domain,
    forward: PointFn,
    derivative: Option<JacobianFn>,
    inverse: Option<PointFn>,
    area_preserving: bool,
}

impl fmt::Debug for MapObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapObject")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("derivative", &self.derivative.is_some())
            .field("inverse", &self.inverse.is_some())
            .field("area_preserving", &self.area_preserving)
            .finish()
    }
}

impl MapObject {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        forward: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            forward: Arc::new(forward),
            derivative: None,
            inverse: None,
            area_preserving: false,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(Point2) -> Option<Matrix2> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn with_inverse(mut self, inv: impl Fn(Point2) -> Point2 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn area_preserving(mut self, yes: bool) -> Self {
        self.area_preserving = yes;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn is_area_preserving(&self) -> bool {
        self.area_preserving
    }

    pub fn evaluate(&self, p: Point2) -> Result<Point2> {
        let p = self.domain.check(p, &self.label)?;
        let q = (self.forward)(p);
        self.domain.check(q, &self.label)
    }

    /// Apply the inverse map, if one was supplied.
    pub fn evaluate_inverse(&self, p: Point2) -> Result<Point2> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("map `{}` has no inverse", self.label)))?;
        let p = self.domain.check(p, &self.label)?;
        self.domain.check(inv(p), &self.label)
    }

    /// Orbit `p, f(p), ..., f^n(p)`.
    pub fn iterate(&self, p: Point2, n: usize) -> Result<Vec<Point2>> {
        let mut orbit = Vec::with_capacity(n + 1);
        let mut cur = self.domain.check(p, &self.label)?;
        orbit.push(cur);
        for _ in 0..n {
            cur = self.evaluate(cur)?;
            orbit.push(cur);
        }
        Ok(orbit)
    }

    pub fn jacobian(&self, p: Point2) -> Result<Matrix2> {
        let p = self.domain.check(p, &self.label)?;
        self.derivative
            .as_ref()
            .and_then(|df| df(p))
            .ok_or_else(|| Error::NotDifferentiable { label: self.label.clone(), point: p })
    }

    /// Jacobian of the inverse at `p`, i.e. `(Df at f^{-1}(p))^{-1}`.
    pub fn inverse_jacobian(&self, p: Point2) -> Result<Matrix2> {
        let pre = self.evaluate_inverse(p)?;
        let j = self.jacobian(pre)?;
        j.inverse()
            .ok_or_else(|| Error::NotDifferentiable { label: self.label.clone(), point: pre })
    }

    fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

pub fn identity(domain: Domain) -> MapObject {
    MapObject::new("identity", domain, |p| p)
        .with_derivative(|_| Some(Matrix2::IDENTITY))
        .with_inverse(|p| p)
        .area_preserving(true)
}

/// Rigid rotation of the unit disc about its center.
pub fn rotation(theta: f64) -> MapObject {
    let fwd = Matrix2::rotation(theta);
    let back = Matrix2::rotation(-theta);
    MapObject::new("rotation", Domain::unit_disc(), move |p| apply_linear(&fwd, p))
        .with_derivative(move |_| Some(fwd))
        .with_inverse(move |p| apply_linear(&back, p))
        .area_preserving(true)
}

/// Translation of the unit torus by `(alpha, beta)`.
pub fn translation(alpha: f64, beta: f64) -> MapObject {
    MapObject::new("translation", Domain::unit_torus(), move |p| Point2::new(p.x + alpha, p.y + beta))
        .with_derivative(|_| Some(Matrix2::IDENTITY))
        .with_inverse(move |p| Point2::new(p.x - alpha, p.y - beta))
        .area_preserving(true)
}

/// Arnold's cat map `[[2,1],[1,1]]` modulo 1.
pub fn cat_map() -> MapObject {
    let a = Matrix2::new(2.0, 1.0, 1.0, 1.0);
    let inv = Matrix2::new(1.0, -1.0, -1.0, 2.0);
    MapObject::new("cat", Domain::unit_torus(), move |p| apply_linear(&a, p))
        .with_derivative(move |_| Some(a))
        .with_inverse(move |p| apply_linear(&inv, p))
        .area_preserving(true)
}

/// Chirikov standard map on the unit torus:
/// `y' = y + K/(2 pi) sin(2 pi x)`, `x' = x + y'`.
pub fn standard_map(k: f64) -> MapObject {
    let kick = move |x: f64| k / TAU * (TAU * x).sin();
    MapObject::new("standard", Domain::unit_torus(), move |p| {
        let y = p.y + kick(p.x);
        Point2::new(p.x + y, y)
    })
    .with_derivative(move |p| {
        let c = k * (TAU * p.x).cos();
        Some(Matrix2::new(1.0 + c, 1.0, c, 1.0))
    })
    .with_inverse(move |p| {
        let x = p.x - p.y;
        Point2::new(x, p.y - kick(x))
    })
    .area_preserving(true)
}

/// Diagonal linear map of the plane.
pub fn diagonal(a: f64, b: f64) -> MapObject {
    let m = Matrix2::new(a, 0.0, 0.0, b);
    let mut map = MapObject::new(format!("diag({a}, {b})"), Domain::Plane, move |p| Point2::new(a * p.x, b * p.y))
        .with_derivative(move |_| Some(m))
        .area_preserving((a * b).abs() == 1.0);
    if a != 0.0 && b != 0.0 {
        map = map.with_inverse(move |p| Point2::new(p.x / a, p.y / b));
    }
    map
}

/// The four-branch piecewise-linear plane map with three distinct growth
/// rates at the origin. Branches are tested in order; the first match wins.
pub fn example_map() -> MapObject {
    MapObject::new("example", Domain::Plane, example_forward)
}

fn example_forward(p: Point2) -> Point2 {
    let Point2 { x, y } = p;
    let s = x * (y - x);
    if s > 0.0 {
        Point2::new(2.0 * x, 1.5 * x + 0.5 * y)
    } else if s < 0.0 {
        Point2::new(3.0 * x - y, 2.0 * y)
    } else if x * y <= 0.0 {
        Point2::new(3.0 * x, 0.5 * y)
    } else {
        Point2::new(2.0 * x, 2.0 * y)
    }
}

fn apply_linear(m: &Matrix2, p: Point2) -> Point2 {
    Point2::new(m.a11 * p.x + m.a12 * p.y, m.a21 * p.x + m.a22 * p.y)
}

/// An area-preserving twist supported on the annulus `inner <= |p - center| <= outer`:
/// each circle about `center` is rotated by an angle that grows smoothly from
/// 0 to `turns` full turns across the annulus. Identity off the annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Twist {
    center: Point2,
    inner: f64,
    outer: f64,
    turns: i32,
}

impl Twist {
    /// Profile s(t) = t - sin(2 pi t)/(2 pi): s(0)=0, s(1)=1, s'(0)=s'(1)=0.
    fn angle(&self, rho: f64) -> f64 {
        let t = (rho - self.inner) / (self.outer - self.inner);
        TAU * self.turns as f64 * (t - (TAU * t).sin() / TAU)
    }

    fn angle_slope(&self, rho: f64) -> f64 {
        let w = self.outer - self.inner;
        let t = (rho - self.inner) / w;
        TAU * self.turns as f64 * (1.0 - (TAU * t).cos()) / w
    }

    fn inside(&self, rho: f64) -> bool {
        rho > self.inner && rho < self.outer
    }

    fn apply(&self, p: Point2, sign: f64) -> Point2 {
        let q = Vec2::new(p.x - self.center.x, p.y - self.center.y);
        let rho = q.norm();
        if !self.inside(rho) {
            return p;
        }
        let r = Matrix2::rotation(sign * self.angle(rho)).apply(q);
        Point2::new(self.center.x + r.dx, self.center.y + r.dy)
    }

    fn jacobian(&self, p: Point2) -> Matrix2 {
        let q = Vec2::new(p.x - self.center.x, p.y - self.center.y);
        let rho = q.norm();
        if !self.inside(rho) {
            return Matrix2::IDENTITY;
        }
        let c = self.angle_slope(rho) / rho;
        // I + c (Jq) q^T with J the quarter-turn
        let shear = Matrix2::new(
            1.0 - c * q.dy * q.dx,
            -c * q.dy * q.dy,
            c * q.dx * q.dx,
            1.0 + c * q.dx * q.dy,
        );
        Matrix2::rotation(self.angle(rho)) * shear
    }
}

/// Parameters of the chaotic disc stand-in: two transversal twists on
/// overlapping annuli centred at `(-separation, 0)` and `(separation, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandinParams {
    #[serde(default = "StandinParams::default_separation")]
    pub separation: f64,
    #[serde(default = "StandinParams::default_inner")]
    pub inner: f64,
    #[serde(default = "StandinParams::default_outer")]
    pub outer: f64,
    #[serde(default = "StandinParams::default_turns")]
    pub turns_left: i32,
    #[serde(default = "StandinParams::default_turns")]
    pub turns_right: i32,
}

impl StandinParams {
    fn default_separation() -> f64 {
        0.25
    }
    fn default_inner() -> f64 {
        0.15
    }
    fn default_outer() -> f64 {
        0.73
    }
    fn default_turns() -> i32 {
        1
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.separation >= 0.0
            && self.inner > 0.0
            && self.inner < self.outer
            && self.separation + self.outer < 1.0
            && self.turns_left != 0
            && self.turns_right != 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "stand-in annuli must be nested inside the unit disc with non-zero twists: {self:?}"
            )))
        }
    }
}

impl Default for StandinParams {
    fn default() -> Self {
        Self {
            separation: Self::default_separation(),
            inner: Self::default_inner(),
            outer: Self::default_outer(),
            turns_left: Self::default_turns(),
            turns_right: Self::default_turns(),
        }
    }
}

/// Linked-twist map on the unit disc: identity near the boundary circle,
/// area preserving, smooth, with positive exponents on the overlap region's
/// orbit. Used as the base map of the disc family.
pub fn disc_standin(params: StandinParams) -> Result<MapObject> {
    params.validate()?;
    let left = Twist {
        center: Point2::new(-params.separation, 0.0),
        inner: params.inner,
        outer: params.outer,
        turns: params.turns_left,
    };
    let right = Twist { center: Point2::new(params.separation, 0.0), turns: params.turns_right, ..left };
    Ok(MapObject::new("disc_standin", Domain::unit_disc(), move |p| right.apply(left.apply(p, 1.0), 1.0))
        .with_derivative(move |p| {
            let mid = left.apply(p, 1.0);
            Some(right.jacobian(mid) * left.jacobian(p))
        })
        .with_inverse(move |p| left.apply(right.apply(p, -1.0), -1.0))
        .area_preserving(true))
}

/// Conjugate a disc map by the homothety `l(p) = center + ratio * p`,
/// returning `l o m o l^{-1}` on the image disc.
pub fn conjugate_by_homothety(m: &MapObject, center: Point2, ratio: f64) -> Result<MapObject> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!("homothety ratio must be positive, got {ratio}")));
    }
    let Domain::ClosedDisc { center: c0, radius } = *m.domain() else {
        return Err(Error::InvalidArgument(format!("`{}` is not a disc map", m.label())));
    };
    let domain = Domain::ClosedDisc {
        center: Point2::new(center.x + ratio * c0.x, center.y + ratio * c0.y),
        radius: ratio * radius,
    };
    let to_local = move |p: Point2| Point2::new((p.x - center.x) / ratio, (p.y - center.y) / ratio);
    let to_global = move |p: Point2| Point2::new(center.x + ratio * p.x, center.y + ratio * p.y);

    let fwd = m.forward.clone();
    let mut out = MapObject::new(format!("conj({})", m.label()), domain, move |p| to_global(fwd(to_local(p))))
        .area_preserving(m.area_preserving);
    if let Some(df) = m.derivative.clone() {
        out = out.with_derivative(move |p| df(to_local(p)));
    }
    if let Some(inv) = m.inverse.clone() {
        out = out.with_inverse(move |p| to_global(inv(to_local(p))));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DiscFamilySpec {
    /// Grid parameter; the family has `n * n` discs.
    pub n: usize,
    /// Radius constant; each disc has radius `k / (10 n)`.
    pub k: f64,
    pub base_map: MapObject,
    pub ambient: Domain,
    /// Minimum center spacing, in multiples of the disc radius.
    pub min_spacing: f64,
}

impl DiscFamilySpec {
    pub const DEFAULT_MIN_SPACING: f64 = 2.5;

    pub fn new(n: usize, k: f64, base_map: MapObject, ambient: Domain) -> Self {
        Self { n, k, base_map, ambient, min_spacing: Self::DEFAULT_MIN_SPACING }
    }

    pub fn radius(&self) -> f64 {
        self.k / (10.0 * self.n as f64)
    }
}

/// A built disc family: the map plus its placement, for bookkeeping.
#[derive(Debug, Clone)]
pub struct DiscFamily {
    pub map: MapObject,
    pub centers: Vec<Point2>,
    pub radius: f64,
}

impl DiscFamily {
    pub fn total_disc_area(&self) -> f64 {
        // summed disc by disc, as the construction does
        self.centers.iter().map(|_| PI * self.radius * self.radius).sum()
    }
}

/// Largest displacement of the unit circle under the base map.
fn boundary_error(base: &MapObject) -> Result<f64> {
    let samples = 720;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let p = Point2::new((TAU * i as f64 / samples as f64).cos(), (TAU * i as f64 / samples as f64).sin());
        let q = base.evaluate(p)?;
        worst = worst.max((q.x - p.x).hypot(q.y - p.y));
    }
    Ok(worst)
}

/// Identity outside `n^2` disjoint discs of radius `k/(10n)`, and a
/// homothety-conjugated copy of the base map inside each one.
pub fn build_disc_family(spec: &DiscFamilySpec) -> Result<DiscFamily> {
    if spec.n == 0 || spec.k.is_nan() || spec.k <= 0.0 {
        return Err(Error::InvalidArgument("disc family needs n >= 1 and k > 0".into()));
    }
    if *spec.base_map.domain() != Domain::unit_disc() {
        return Err(Error::InvalidArgument("base map must act on the unit disc".into()));
    }
    let max_error = boundary_error(&spec.base_map)?;
    if max_error > 1e-9 {
        return Err(Error::BoundaryMismatch { max_error });
    }

    let n = spec.n;
    let r = spec.radius();
    // grid cell: origin corner and side length
    let (corner, side) = match spec.ambient {
        Domain::FlatTorus { period } => (Point2::ORIGIN, period),
        Domain::Plane => (Point2::ORIGIN, 1.0),
        Domain::ClosedDisc { center, radius } => {
            let side = radius * std::f64::consts::SQRT_2;
            (Point2::new(center.x - side / 2.0, center.y - side / 2.0), side)
        }
    };
    let spacing = side / n as f64;
    if spacing < spec.min_spacing * r {
        return Err(Error::DiscOverlap(format!(
            "center spacing {spacing} is below {} radii (radius {r})",
            spec.min_spacing
        )));
    }
    let centers: Vec<Point2> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| {
            Point2::new(corner.x + (i as f64 + 0.5) * spacing, corner.y + (j as f64 + 0.5) * spacing)
        })
        .collect();
    if let Domain::ClosedDisc { center, radius } = spec.ambient {
        if centers.iter().any(|c| (c.x - center.x).hypot(c.y - center.y) + r > radius) {
            return Err(Error::DiscOverlap("discs do not fit inside the ambient disc".into()));
        }
    }

    let base = spec.base_map.clone();
    let ambient = spec.ambient;
    let locate = move |p: Point2| -> Option<(Point2, Vec2)> {
        let i = (((p.x - corner.x) / spacing).floor().max(0.0) as usize).min(n - 1);
        let j = (((p.y - corner.y) / spacing).floor().max(0.0) as usize).min(n - 1);
        let c = Point2::new(corner.x + (i as f64 + 0.5) * spacing, corner.y + (j as f64 + 0.5) * spacing);
        let q = raw_displacement(&ambient, c, p);
        (q.norm() < r).then_some((c, q))
    };

    let fwd = base.forward.clone();
    let mut map = MapObject::new(format!("disc_family(n={n})"), ambient, move |p| match locate(p) {
        Some((c, q)) => {
            let local = fwd(Point2::new(q.dx / r, q.dy / r));
            Point2::new(c.x + r * local.x, c.y + r * local.y)
        }
        None => p,
    })
    .area_preserving(base.area_preserving);
    if let Some(df) = base.derivative.clone() {
        map = map.with_derivative(move |p| match locate(p) {
            Some((_, q)) => df(Point2::new(q.dx / r, q.dy / r)),
            None => Some(Matrix2::IDENTITY),
        });
    }
    if let Some(inv) = base.inverse.clone() {
        map = map.with_inverse(move |p| match locate(p) {
            Some((c, q)) => {
                let local = inv(Point2::new(q.dx / r, q.dy / r));
                Point2::new(c.x + r * local.x, c.y + r * local.y)
            }
            None => p,
        });
    }
    Ok(DiscFamily { map, centers, radius: r })
}

/// Serializable map selection, used by the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity {},
    Rotation {
        #[serde(default = "MapSpec::default_theta")]
        theta: f64,
    },
    Translation {
        #[serde(default = "MapSpec::default_alpha")]
        alpha: f64,
        #[serde(default = "MapSpec::default_beta")]
        beta: f64,
    },
    Cat {},
    Standard {
        #[serde(default = "MapSpec::default_k")]
        k: f64,
    },
    Example {},
    Diag {
        #[serde(default = "MapSpec::default_a")]
        a: f64,
        #[serde(default = "MapSpec::default_b")]
        b: f64,
    },
    DiscStandin {
        #[serde(default)]
        params: StandinParams,
    },
}

impl MapSpec {
    fn default_theta() -> f64 {
        1.0
    }
    fn default_alpha() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }
    fn default_beta() -> f64 {
        2f64.sqrt() - 1.0
    }
    fn default_k() -> f64 {
        1.5
    }
    fn default_a() -> f64 {
        2.0
    }
    fn default_b() -> f64 {
        0.5
    }

    /// The zoo entry with default parameters, by name.
    pub fn by_name(name: &str) -> Result<MapSpec> {
        Ok(match name {
            "identity" => MapSpec::Identity {},
            "rotation" => MapSpec::Rotation { theta: Self::default_theta() },
            "translation" => MapSpec::Translation { alpha: Self::default_alpha(), beta: Self::default_beta() },
            "cat" => MapSpec::Cat {},
            "standard" => MapSpec::Standard { k: Self::default_k() },
            "example" => MapSpec::Example {},
            "diag" => MapSpec::Diag { a: Self::default_a(), b: Self::default_b() },
            "disc_standin" => MapSpec::DiscStandin { params: StandinParams::default() },
            other => return Err(Error::UnknownMap(other.to_string())),
        })
    }

    pub fn build(&self) -> Result<MapObject> {
        Ok(match *self {
            MapSpec::Identity {} => identity(Domain::unit_torus()),
            MapSpec::Rotation { theta } => rotation(theta),
            MapSpec::Translation { alpha, beta } => translation(alpha, beta),
            MapSpec::Cat {} => cat_map(),
            MapSpec::Standard { k } => standard_map(k).relabel(format!("standard(K={k})")),
            MapSpec::Example {} => example_map(),
            MapSpec::Diag { a, b } => diagonal(a, b),
            MapSpec::DiscStandin { params } => disc_standin(params)?,
        })
    }
}

pub const ZOO_NAMES: [&str; 8] =
    ["identity", "rotation", "translation", "cat", "standard", "example", "disc_standin", "diag"];

/// Every zoo map with default parameters.
pub fn zoo() -> Vec<(&'static str, MapObject)> {
    ZOO_NAMES
        .iter()
        .map(|&name| (name, MapSpec::by_name(name).and_then(|s| s.build()).expect("zoo defaults are valid")))
        .collect()
}

pub fn lookup(name: &str) -> Result<MapObject> {
    MapSpec::by_name(name)?.build()
}
