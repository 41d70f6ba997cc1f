//! Named scenario runners. Each one evaluates a set of claims about the
//! estimators and returns a report of pass/fail rows plus plot-ready tables.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynball::{sample_ball_candidates, sup_log_delta, BallCandidate, Fan, Ladder};
use crate::error::{Error, Result};
use crate::exponents::{
    classical_directional_exponent, classical_top_exponent, classical_top_tail, estimate_oseledets_directions,
    lambda_functional, new_directional_exponent, new_top_exponent, ExponentEstimate, LambdaEstimate, Quadrature,
    Schedule,
};
use crate::geometry::{raw_distance, Domain, Matrix2, Point2, Vec2};
use crate::maps::{build_disc_family, disc_standin, identity, DiscFamilySpec, MapObject, MapSpec, StandinParams};
use crate::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - expected| <= tolerance`
    Within,
    /// `measured <= expected + tolerance`
    AtMost,
    /// `measured >= expected - tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub description: String,
    /// `None` when the operation behind the row returned an error.
    pub measured: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    /// Operation and inputs that produced `measured`.
    pub source: String,
}

impl Check {
    pub fn new(
        description: impl Into<String>,
        measured: Option<f64>,
        expected: f64,
        tolerance: f64,
        relation: Relation,
        source: impl Into<String>,
    ) -> Self {
        let pass = measured.is_some_and(|m| match relation {
            Relation::Within => (m - expected).abs() <= tolerance,
            Relation::AtMost => m <= expected + tolerance,
            Relation::AtLeast => m >= expected - tolerance,
        });
        Self { description: description.into(), measured, expected, tolerance, relation, pass, source: source.into() }
    }

    fn within(d: impl Into<String>, m: Option<f64>, e: f64, tol: f64, src: impl Into<String>) -> Self {
        Self::new(d, m, e, tol, Relation::Within, src)
    }

    fn at_most(d: impl Into<String>, m: Option<f64>, e: f64, tol: f64, src: impl Into<String>) -> Self {
        Self::new(d, m, e, tol, Relation::AtMost, src)
    }

    fn at_least(d: impl Into<String>, m: Option<f64>, e: f64, tol: f64, src: impl Into<String>) -> Self {
        Self::new(d, m, e, tol, Relation::AtLeast, src)
    }

    /// A row for an operation that failed outright.
    fn failed(d: impl Into<String>, err: &Error, src: impl Into<String>) -> Self {
        Self::new(format!("{} [error: {err}]", d.into()), None, 0.0, 0.0, Relation::Within, src)
    }
}

/// Plot-ready numeric table; `None` cells are missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub const GRID_COLUMNS: [&'static str; 5] = ["n", "delta", "sup_log_delta", "candidates", "s_n_over_n"];

    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// The per-(n, delta) grid behind an exponent estimate.
    pub fn from_grid(name: impl Into<String>, e: &ExponentEstimate) -> Self {
        let mut t = Table::new(name, &Self::GRID_COLUMNS);
        for g in &e.grid {
            t.push(vec![
                Some(g.n as f64),
                Some(g.delta),
                g.sup_log_delta,
                Some(g.candidates as f64),
                g.s_n_over_n,
            ]);
        }
        t
    }

    pub fn is_grid(&self) -> bool {
        self.columns.iter().map(String::as_str).eq(Self::GRID_COLUMNS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Table>,
    pub seed: u64,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time: f64,
}

impl ExperimentReport {
    fn new(name: &str, seed: u64) -> Self {
        Self { name: name.into(), checks: Vec::new(), artifacts: Vec::new(), seed, wall_time: 0.0 }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    fn finish(mut self, started: Instant) -> Self {
        self.wall_time = started.elapsed().as_secs_f64();
        self
    }
}

fn fmt_point(p: Point2) -> String {
    format!("({:.6}, {:.6})", p.x, p.y)
}

fn fmt_vec(v: Vec2) -> String {
    format!("({:.6}, {:.6})", v.dx, v.dy)
}

/// Seeded sample points for one map; `stream` separates maps within a run.
/// The plane has no area measure, so its points come from the unit square.
pub fn sample_points(domain: &Domain, count: usize, seed: u64, stream: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            domain.from_unit_square(u, v).unwrap_or(Point2::new(u, v))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// piecewise-linear example

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExampleParams {
    pub tolerance: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self { tolerance: 0.02 }
    }
}

/// Directional and top exponents of the piecewise-linear example map at the
/// origin, where it has no derivative.
pub fn run_example_experiment(s: &Schedule, p: &ExampleParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    let m = MapSpec::Example {}.build()?;
    let x = Point2::ORIGIN;
    let ln2 = 2f64.ln();
    let ln3 = 3f64.ln();
    let cases = [("(1,1)", Vec2::new(1.0, 1.0), ln2), ("(0,1)", Vec2::new(0.0, 1.0), -ln2), ("(1,0)", Vec2::new(1.0, 0.0), ln3)];

    let mut r = ExperimentReport::new("example", 0);
    let estimates: Vec<Result<ExponentEstimate>> =
        par_map(cases.len() + 1, |i| match cases.get(i) {
            Some(&(_, v, _)) => new_directional_exponent(&m, x, v, s),
            None => new_top_exponent(&m, x, s),
        });
    let top = estimates[cases.len()].as_ref().ok().map(|e| e.value);

    for (&(label, v, expected), est) in cases.iter().zip(&estimates) {
        let src = format!("new_directional_exponent(example, x=(0,0), v={label})");
        match est {
            Ok(e) => {
                r.checks.push(Check::within(format!("directional exponent along {label}"), Some(e.value), expected, p.tolerance, &src));
                r.checks.push(Check::at_least(
                    format!("top estimate dominates the {label} estimate"),
                    top,
                    e.value,
                    0.0,
                    format!("{src}; new_top_exponent(example, x=(0,0))"),
                ));
                r.artifacts.push(Table::from_grid(format!("grid/example/directional{}", fmt_vec(v)), e));
            }
            Err(err) => r.checks.push(Check::failed(format!("directional exponent along {label}"), err, src)),
        }
    }
    let src = "new_top_exponent(example, x=(0,0))";
    match &estimates[cases.len()] {
        Ok(e) => {
            r.checks.push(Check::within("top exponent", Some(e.value), ln3, p.tolerance, src));
            let max_dir = estimates[..cases.len()].iter().flatten().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
            r.checks.push(Check::within("top equals the largest directional value", Some(e.value), max_dir, p.tolerance, src));
            r.artifacts.push(Table::from_grid("grid/example/top", e));
        }
        Err(err) => r.checks.push(Check::failed("top exponent", err, src)),
    }
    Ok(r.finish(started))
}

// ---------------------------------------------------------------------------
// new vs classical

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreementParams {
    pub maps: Vec<MapSpec>,
    pub points_per_map: usize,
    pub abs_tolerance: f64,
    pub rel_tolerance: f64,
    /// Horizon for the eigenvalue check on linear hyperbolic maps.
    pub oracle_horizon: usize,
    pub oracle_tolerance: f64,
    /// Directions for the directional comparison rows.
    pub directions: Vec<Vec2>,
}

impl Default for AgreementParams {
    fn default() -> Self {
        Self {
            maps: vec![
                MapSpec::Cat {},
                MapSpec::Standard { k: 0.5 },
                MapSpec::Standard { k: 1.5 },
                MapSpec::Diag { a: 2.0, b: 0.5 },
                MapSpec::by_name("rotation").expect("zoo map"),
                MapSpec::by_name("translation").expect("zoo map"),
                MapSpec::Identity {},
            ],
            points_per_map: 20,
            abs_tolerance: 0.05,
            rel_tolerance: 0.05,
            oracle_horizon: 50,
            oracle_tolerance: 1e-9,
            directions: vec![Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)],
        }
    }
}

/// Real eigen-directions `(unstable, stable)` and the log of the larger
/// eigenvalue modulus, from the characteristic polynomial.
pub fn hyperbolic_eigen(a: &Matrix2) -> Option<(Vec2, Vec2, f64)> {
    let t = a.a11 + a.a22;
    let d = a.det();
    let disc = t * t - 4.0 * d;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // stable root pairing avoids cancellation
    let big = (t + t.signum() * root) / 2.0;
    let small = d / big;
    if (big.abs() - 1.0).abs() < 1e-12 || (small.abs() - 1.0).abs() < 1e-12 {
        return None;
    }
    let eigvec = |l: f64| -> Option<Vec2> {
        let v1 = Vec2::new(a.a12, l - a.a11);
        let v2 = Vec2::new(l - a.a22, a.a21);
        let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        v.normalized()
    };
    let (lu, ls) = if big.abs() > small.abs() { (big, small) } else { (small, big) };
    Some((eigvec(lu)?, eigvec(ls)?, lu.abs().ln()))
}

/// The constant Jacobian of a map that is linear on the sampled points.
fn constant_jacobian(m: &MapObject, points: &[Point2]) -> Option<Matrix2> {
    let first = m.jacobian(*points.first()?).ok()?;
    points.iter().all(|&p| m.jacobian(p).ok() == Some(first)).then_some(first)
}

/// The classical directional exponent with the same tail surrogate as the
/// new estimators.
fn classical_directional_tail(m: &MapObject, x: Point2, v: Vec2, s: &Schedule) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &n in s.tail() {
        best = best.max(classical_directional_exponent(m, x, v, n)?);
    }
    Ok(best)
}

struct PointComparison {
    top_new: Result<ExponentEstimate>,
    top_classical: Result<f64>,
    directional: Vec<(Vec2, Result<f64>, Result<f64>)>,
}

/// `|new - classical|` at seeded points, for the top exponent and for a few
/// fixed directions.
pub fn run_agreement_experiment(s: &Schedule, p: &AgreementParams, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    let mut r = ExperimentReport::new("agreement", seed);
    let mut summary = Table::new("agreement/per_point", &["map", "point", "x", "y", "new_top", "classical_top"]);

    for (mi, spec) in p.maps.iter().enumerate() {
        let m = spec.build()?;
        let label = m.label().to_string();
        let points = sample_points(m.domain(), p.points_per_map, seed, mi as u64);
        let results: Vec<PointComparison> = par_map(points.len(), |i| {
            let x = points[i];
            PointComparison {
                top_new: new_top_exponent(&m, x, s),
                top_classical: classical_top_tail(&m, x, s),
                directional: p
                    .directions
                    .iter()
                    .map(|&v| (v, new_directional_exponent(&m, x, v, s).map(|e| e.value), classical_directional_tail(&m, x, v, s)))
                    .collect(),
            }
        });

        for (i, (x, c)) in points.iter().zip(&results).enumerate() {
            let src = format!("new_top_exponent / classical_top_tail({label}, x={})", fmt_point(*x));
            match (&c.top_new, &c.top_classical) {
                (Ok(e), Ok(cl)) => {
                    let tol = p.abs_tolerance.max(p.rel_tolerance * cl.abs());
                    r.checks.push(Check::within(format!("{label}: top exponent, new vs classical"), Some(e.value), *cl, tol, &src));
                    summary.push(vec![Some(mi as f64), Some(i as f64), Some(x.x), Some(x.y), Some(e.value), Some(*cl)]);
                    if i == 0 {
                        r.artifacts.push(Table::from_grid(format!("grid/agreement/{label}/top/point0"), e));
                    }
                }
                (Err(err), _) | (_, Err(err)) => r.checks.push(Check::failed(format!("{label}: top exponent"), err, &src)),
            }
            for (v, new, cl) in &c.directional {
                let src = format!("new_directional_exponent / classical_directional({label}, x={}, v={})", fmt_point(*x), fmt_vec(*v));
                match (new, cl) {
                    (Ok(n), Ok(cl)) => {
                        let tol = p.abs_tolerance.max(p.rel_tolerance * cl.abs());
                        r.checks.push(Check::within(
                            format!("{label}: directional exponent along {}, new vs classical", fmt_vec(*v)),
                            Some(*n),
                            *cl,
                            tol,
                            src,
                        ));
                    }
                    (Err(err), _) | (_, Err(err)) => r.checks.push(Check::failed(format!("{label}: directional exponent"), err, src)),
                }
            }
        }

        // eigenvalue oracle for linear hyperbolic maps
        if let Some((_, _, log_lambda)) = constant_jacobian(&m, &points).and_then(|j| hyperbolic_eigen(&j)) {
            if m.is_area_preserving() {
                for x in points.iter().take(3) {
                    let v = classical_top_exponent(&m, *x, p.oracle_horizon);
                    let src = format!("classical_top_exponent({label}, x={}, n={})", fmt_point(*x), p.oracle_horizon);
                    r.checks.push(match v {
                        Ok(v) => Check::within(format!("{label}: classical exponent equals log of the eigenvalue"), Some(v), log_lambda, p.oracle_tolerance, src),
                        Err(err) => Check::failed(format!("{label}: classical exponent"), &err, src),
                    });
                }
            }
        }
    }
    r.artifacts.push(summary);
    Ok(r.finish(started))
}

// ---------------------------------------------------------------------------
// zero-exponent maps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroParams {
    pub maps: Vec<MapSpec>,
    pub points_per_map: usize,
    pub exponent_tolerance: f64,
    pub lambda_tolerance: f64,
}

impl Default for ZeroParams {
    fn default() -> Self {
        Self {
            maps: vec![MapSpec::Identity {}, MapSpec::by_name("rotation").expect("zoo map"), MapSpec::by_name("translation").expect("zoo map")],
            points_per_map: 10,
            exponent_tolerance: 0.01,
            lambda_tolerance: 1e-6,
        }
    }
}

/// Top exponents and the area integral for isometries.
pub fn run_zero_experiment(s: &Schedule, q: &Quadrature, p: &ZeroParams, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    let mut r = ExperimentReport::new("zero", seed);
    let mut table = Table::new("zero/lambda", &["map", "lambda", "standard_error", "negative_clamps", "excluded"]);
    for (mi, spec) in p.maps.iter().enumerate() {
        let m = spec.build()?;
        let label = m.label().to_string();
        let points = sample_points(m.domain(), p.points_per_map, seed, mi as u64);
        let tops: Vec<Result<ExponentEstimate>> = par_map(points.len(), |i| new_top_exponent(&m, points[i], s));
        for (x, e) in points.iter().zip(&tops) {
            let src = format!("new_top_exponent({label}, x={})", fmt_point(*x));
            r.checks.push(match e {
                Ok(e) => Check::within(format!("{label}: top exponent vanishes"), Some(e.value), 0.0, p.exponent_tolerance, src),
                Err(err) => Check::failed(format!("{label}: top exponent"), err, src),
            });
        }
        let src = format!("lambda_functional({label}, {} points, seed {})", q.sample_count, q.seed);
        match lambda_functional(&m, s, q) {
            Ok(l) => {
                r.checks.push(Check::within(format!("{label}: area integral vanishes"), Some(l.value), 0.0, p.lambda_tolerance, src));
                table.push(vec![
                    Some(mi as f64),
                    Some(l.value),
                    Some(l.standard_error),
                    Some(l.negative_clamp_count as f64),
                    Some(l.excluded_points as f64),
                ]);
            }
            Err(err) => r.checks.push(Check::failed(format!("{label}: area integral"), &err, src)),
        }
    }
    r.artifacts.push(table);
    Ok(r.finish(started))
}

// ---------------------------------------------------------------------------
// orbit invariance and subadditivity

/// One subadditivity spot-check at `(x, n, k)` for a fixed radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityRow {
    pub x: Point2,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    /// `sup log Delta_{n+k}(x, .)` over the sampled ball.
    pub lhs: f64,
    /// `max log Delta_n(x, y) + max log Delta_k(f^n x, f^n y)` over the same
    /// candidates; never below `lhs`.
    pub rhs_shared: f64,
    /// `sup log Delta_n(x, .) + sup log Delta_k(f^n x, .)` with each ball
    /// sampled on its own.
    pub rhs_independent: f64,
}

impl SubadditivityRow {
    /// How far `lhs` exceeds the independently sampled bound.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs_independent
    }
}

/// The split `n + k` of the ball supremum at `x`, evaluated both with shared
/// and with independent candidates.
pub fn subadditivity_check(
    m: &MapObject,
    x: Point2,
    n: usize,
    k: usize,
    delta: f64,
    fan: &Fan,
    ladder: &Ladder,
) -> Result<SubadditivityRow> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("subadditivity split needs n, k >= 1".into()));
    }
    let d = *m.domain();
    let orbit = m.iterate(x, n + k)?;
    let (x, xn) = (orbit[0], orbit[n]);

    let joint: Vec<BallCandidate> =
        sample_ball_candidates(m, x, delta, n + k, fan, ladder)?.into_iter().filter(|c| c.escape_index.is_none()).collect();
    let lhs = sup_log_delta(m, x, n + k, delta, &joint)?.value;

    let mut head = f64::NEG_INFINITY;
    let mut tail = f64::NEG_INFINITY;
    for c in &joint {
        let ys = m.iterate(c.y, n + k)?;
        let d0 = c.initial_offset.norm();
        let dn = raw_distance(&d, xn, ys[n]);
        let dk = raw_distance(&d, orbit[n + k], ys[n + k]);
        head = head.max((dn / d0).ln());
        tail = tail.max((dk / dn).ln());
    }

    let first = sample_ball_candidates(m, x, delta, n, fan, ladder)?;
    let second = sample_ball_candidates(m, xn, delta, k, fan, ladder)?;
    let rhs_independent = sup_log_delta(m, x, n, delta, &first)?.value
        + sup_log_delta(m, xn, k, delta, &second)?.value;
    Ok(SubadditivityRow { x, n, k, delta, lhs, rhs_shared: head + tail, rhs_independent })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceParams {
    pub points: usize,
    pub m_max: usize,
    pub tolerance: f64,
    /// `(n, k)` splits for the subadditivity rows.
    pub splits: Vec<(usize, usize)>,
    pub subadditivity_slack: f64,
}

impl Default for InvarianceParams {
    fn default() -> Self {
        Self { points: 10, m_max: 5, tolerance: 0.05, splits: vec![(2, 3), (4, 4), (3, 6)], subadditivity_slack: 0.1 }
    }
}

/// Top-exponent estimates along forward orbits, plus subadditivity rows.
pub fn run_invariance_experiment(
    spec: &MapSpec,
    s: &Schedule,
    p: &InvarianceParams,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    let m = spec.build()?;
    let label = m.label().to_string();
    let mut r = ExperimentReport::new("invariance", seed);
    let points = sample_points(m.domain(), p.points, seed, 0);
    let reports = par_map(points.len(), |i| crate::exponents::check_orbit_invariance(&m, points[i], s, p.m_max));

    let mut table = Table::new(format!("invariance/{label}"), &["point", "m", "estimate", "deviation"]);
    for (i, (x, rep)) in points.iter().zip(&reports).enumerate() {
        let src = format!("check_orbit_invariance({label}, x={}, m_max={})", fmt_point(*x), p.m_max);
        match rep {
            Ok(rep) => {
                table.push(vec![Some(i as f64), Some(0.0), Some(rep.base), Some(0.0)]);
                for (j, (v, dev)) in rep.values.iter().zip(&rep.deviations).enumerate() {
                    table.push(vec![Some(i as f64), Some((j + 1) as f64), Some(*v), Some(*dev)]);
                    r.checks.push(Check::at_most(
                        format!("{label}: estimate at f^{}(x) matches x", j + 1),
                        Some(*dev),
                        0.0,
                        p.tolerance,
                        &src,
                    ));
                }
            }
            Err(err) => r.checks.push(Check::failed(format!("{label}: orbit invariance"), err, src)),
        }
    }
    r.artifacts.push(table);

    let delta = s.delta_values[0];
    let cases: Vec<(Point2, (usize, usize))> =
        points.iter().flat_map(|&x| p.splits.iter().map(move |&nk| (x, nk))).collect();
    let rows = par_map(cases.len(), |i| {
        let (x, (n, k)) = cases[i];
        subadditivity_check(&m, x, n, k, delta, &s.fan, &s.ladder)
    });
    let mut sub = Table::new(format!("subadditivity/{label}"), &["x", "y", "n", "k", "lhs", "rhs_shared", "rhs_independent"]);
    for ((x, (n, k)), row) in cases.iter().zip(&rows) {
        let src = format!("subadditivity_check({label}, x={}, n={n}, k={k}, delta={delta:e})", fmt_point(*x));
        match row {
            Ok(row) => {
                sub.push(vec![Some(x.x), Some(x.y), Some(*n as f64), Some(*k as f64), Some(row.lhs), Some(row.rhs_shared), Some(row.rhs_independent)]);
                r.checks.push(Check::at_most(
                    format!("{label}: shared-candidate split bounds the joint supremum"),
                    Some(row.lhs - row.rhs_shared),
                    0.0,
                    1e-12,
                    &src,
                ));
                r.checks.push(Check::at_most(
                    format!("{label}: independent split bounds the joint supremum up to slack"),
                    Some(row.slack()),
                    0.0,
                    p.subadditivity_slack,
                    &src,
                ));
            }
            Err(err) => r.checks.push(Check::failed(format!("{label}: subadditivity"), err, src)),
        }
    }
    r.artifacts.push(sub);
    Ok(r.finish(started))
}

// ---------------------------------------------------------------------------
// area-integral jump at the identity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaJumpParams {
    pub n_list: Vec<usize>,
    pub k: f64,
    pub base: StandinParams,
    pub min_spacing: f64,
    /// Samples for the sup-distance estimate.
    pub distance_samples: usize,
    pub relative_tolerance: f64,
    /// Required ratio of the first estimate to its standard error.
    pub min_signal_to_error: f64,
    pub identity_tolerance: f64,
    /// Smallest acceptable integral of the base map.
    pub base_threshold: f64,
}

impl Default for LambdaJumpParams {
    fn default() -> Self {
        Self {
            n_list: vec![1, 2, 3, 4],
            k: 4.0,
            base: StandinParams::default(),
            min_spacing: DiscFamilySpec::DEFAULT_MIN_SPACING,
            distance_samples: 100_000,
            relative_tolerance: 0.10,
            min_signal_to_error: 10.0,
            identity_tolerance: 1e-6,
            base_threshold: 0.01,
        }
    }
}

/// Sampled C0 distance to the identity, forward and inverse. Half the
/// samples are uniform, half are drawn inside the discs.
fn sampled_distance_to_identity(m: &MapObject, centers: &[Point2], radius: f64, samples: usize, seed: u64) -> Result<f64> {
    let d = *m.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(99);
    let pts: Vec<Point2> = (0..samples)
        .map(|i| {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            if i % 2 == 0 || centers.is_empty() {
                d.from_unit_square(u, v).unwrap_or(Point2::new(u, v))
            } else {
                let c = centers[rng.gen_range(0..centers.len())];
                let (rr, phi) = (radius * u.sqrt(), 2.0 * PI * v);
                d.canonicalize(Point2::new(c.x + rr * phi.cos(), c.y + rr * phi.sin()))
            }
        })
        .collect();
    let mut worst: f64 = 0.0;
    for p in pts {
        worst = worst.max(raw_distance(&d, p, m.evaluate(p)?));
        if m.has_inverse() {
            worst = worst.max(raw_distance(&d, p, m.evaluate_inverse(p)?));
        }
    }
    Ok(worst)
}

fn lambda_row(t: &mut Table, n: f64, l: &LambdaEstimate) {
    t.push(vec![
        Some(n),
        Some(l.value),
        Some(l.standard_error),
        Some(l.sample_points as f64),
        Some(l.negative_clamp_count as f64),
        Some(l.excluded_points as f64),
    ]);
}

/// Disc families `g_n` that converge to the identity while their area
/// integral stays put, next to the integral of the identity itself.
pub fn run_lambda_jump_experiment(s: &Schedule, q: &Quadrature, p: &LambdaJumpParams, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    if p.n_list.is_empty() {
        return Err(Error::InvalidArgument("n_list must not be empty".into()));
    }
    let base = disc_standin(p.base)?;
    let ambient = Domain::unit_torus();
    let mut r = ExperimentReport::new("lambda_jump", seed);
    let mut lt = Table::new("lambda_jump/lambda", &["n", "lambda", "standard_error", "samples", "negative_clamps", "excluded"]);

    let base_lambda = lambda_functional(&base, s, q)?;
    lambda_row(&mut lt, 0.0, &base_lambda);
    if base_lambda.value <= p.base_threshold {
        return Err(Error::BaseMapNotChaotic { lambda: base_lambda.value });
    }
    r.checks.push(Check::at_least(
        "base map has a positive area integral",
        Some(base_lambda.value),
        p.base_threshold,
        0.0,
        format!("lambda_functional(disc_standin, {} points)", q.sample_count),
    ));

    let mut dist_table = Table::new("lambda_jump/distance", &["n", "radius", "sup_distance", "bound", "total_disc_area"]);
    let mut lambdas = Vec::new();
    let mut dists = Vec::new();
    for &n in &p.n_list {
        let spec = DiscFamilySpec { min_spacing: p.min_spacing, ..DiscFamilySpec::new(n, p.k, base.clone(), ambient) };
        let fam = build_disc_family(&spec)?;
        let bound = 2.0 * p.k / (10.0 * n as f64);
        let dist = sampled_distance_to_identity(&fam.map, &fam.centers, fam.radius, p.distance_samples, seed)?;
        let area = fam.total_disc_area();
        dist_table.push(vec![Some(n as f64), Some(fam.radius), Some(dist), Some(bound), Some(area)]);
        r.checks.push(Check::at_most(
            format!("g_{n}: sampled distance to the identity within 2k/(10n)"),
            Some(dist),
            bound,
            0.0,
            format!("sampled_distance_to_identity(g_{n}, {} samples)", p.distance_samples),
        ));
        r.checks.push(Check::within(
            format!("g_{n}: total disc area equals pi k^2 / 100"),
            Some(area),
            PI * p.k * p.k / 100.0,
            1e-12,
            format!("build_disc_family(n={n}, k={})", p.k),
        ));
        let l = lambda_functional(&fam.map, s, q)?;
        lambda_row(&mut lt, n as f64, &l);
        lambdas.push((n, l));
        dists.push((n, dist));
    }

    for w in dists.windows(2) {
        r.checks.push(Check::new(
            format!("sampled distance decreases from g_{} to g_{}", w[0].0, w[1].0),
            Some(w[1].1 - w[0].1),
            0.0,
            0.0,
            Relation::AtMost,
            "sampled_distance_to_identity",
        ));
        // strict decrease
        if let Some(c) = r.checks.last_mut() {
            c.pass = w[1].1 < w[0].1;
        }
    }

    let (n0, first) = &lambdas[0];
    r.checks.push(Check::at_least(
        format!("g_{n0}: estimate is at least {} standard errors", p.min_signal_to_error),
        Some(first.value / first.standard_error),
        p.min_signal_to_error,
        0.0,
        format!("lambda_functional(g_{n0})"),
    ));
    for (n, l) in &lambdas {
        r.checks.push(Check::at_least(format!("g_{n}: estimate is positive"), Some(l.value), 0.0, 0.0, format!("lambda_functional(g_{n})")));
        if n != n0 {
            r.checks.push(Check::within(
                format!("g_{n}: estimate relative to g_{n0}"),
                Some(l.value / first.value),
                1.0,
                p.relative_tolerance,
                format!("lambda_functional(g_{n}) / lambda_functional(g_{n0})"),
            ));
        }
    }

    let id = lambda_functional(&identity(ambient), s, q)?;
    lambda_row(&mut lt, -1.0, &id);
    r.checks.push(Check::within("identity: area integral vanishes", Some(id.value), 0.0, p.identity_tolerance, "lambda_functional(identity)"));

    let mut field = Table::new(format!("lambda_jump/integrand/g_{n0}"), &["x", "y", "top_exponent"]);
    for (pt, v) in &first.integrand {
        field.push(vec![Some(pt.x), Some(pt.y), Some(*v)]);
    }
    r.artifacts.extend([lt, dist_table, field]);
    Ok(r.finish(started))
}

// ---------------------------------------------------------------------------
// unstable and stable directions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OseledetsParams {
    pub points: usize,
    /// Horizon used to build the directions.
    pub horizon: usize,
    /// Horizon for the stable-direction growth check; contraction is lost
    /// to rounding over long horizons.
    pub stable_horizon: usize,
    pub angle_tolerance: f64,
    pub unstable_tolerance: f64,
    pub generic_tolerance: f64,
    pub stable_tolerance: f64,
    pub generic_direction: Vec2,
    /// When false, every point is expected to fail the hyperbolicity gate.
    pub expect_hyperbolic: bool,
}

impl Default for OseledetsParams {
    fn default() -> Self {
        Self {
            points: 10,
            horizon: 30,
            stable_horizon: 10,
            angle_tolerance: 1e-6,
            unstable_tolerance: 1e-6,
            generic_tolerance: 0.02,
            stable_tolerance: 0.05,
            generic_direction: Vec2::new(1.0, 1.0),
            expect_hyperbolic: true,
        }
    }
}

/// Unstable and stable directions, and the growth along them.
pub fn run_oseledets_experiment(spec: &MapSpec, s: &Schedule, p: &OseledetsParams, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    s.validate()?;
    let m = spec.build()?;
    let label = m.label().to_string();
    let mut r = ExperimentReport::new("oseledets", seed);
    let points = sample_points(m.domain(), p.points, seed, 0);
    let reference = constant_jacobian(&m, &points).and_then(|j| hyperbolic_eigen(&j));
    let frames = par_map(points.len(), |i| estimate_oseledets_directions(&m, points[i], p.horizon));
    let mut table = Table::new(
        format!("oseledets/{label}"),
        &["x", "y", "chi_plus", "e_u_x", "e_u_y", "e_s_x", "e_s_y", "new_along_e_u", "new_along_generic"],
    );

    for (x, frame) in points.iter().zip(&frames) {
        let src = format!("estimate_oseledets_directions({label}, x={}, n={})", fmt_point(*x), p.horizon);
        let f = match (frame, p.expect_hyperbolic) {
            (Ok(f), true) => *f,
            (Ok(f), false) => {
                r.checks.push(Check::at_most(format!("{label}: hyperbolicity gate rejects the point"), Some(f.chi_plus), 0.05, 0.0, src));
                if let Some(c) = r.checks.last_mut() {
                    c.pass = false;
                }
                continue;
            }
            (Err(Error::NoHyperbolicity { chi, .. }), false) => {
                r.checks.push(Check::at_most(format!("{label}: hyperbolicity gate rejects the point"), Some(*chi), 0.05, 0.0, src));
                continue;
            }
            (Err(err), _) => {
                r.checks.push(Check::failed(format!("{label}: directions"), err, src));
                continue;
            }
        };

        if let Some((ref_u, ref_s, _)) = reference {
            r.checks.push(Check::at_most(format!("{label}: unstable direction matches the eigenvector (rad)"), Some(f.e_u.line_angle(ref_u)), 0.0, p.angle_tolerance, &src));
            r.checks.push(Check::at_most(format!("{label}: stable direction matches the eigenvector (rad)"), Some(f.e_s.line_angle(ref_s)), 0.0, p.angle_tolerance, &src));
        }
        let along = |v: Vec2, n: usize| classical_directional_exponent(&m, *x, v, n);
        let push = |r: &mut ExperimentReport, what: &str, v: Result<f64>, expected: f64, tol: f64, src: String| {
            r.checks.push(match v {
                Ok(v) => Check::within(format!("{label}: {what}"), Some(v), expected, tol, src),
                Err(err) => Check::failed(format!("{label}: {what}"), &err, src),
            })
        };
        push(&mut r, "classical growth along e_u equals the top exponent", along(f.e_u, p.horizon), f.chi_plus, p.unstable_tolerance, format!("classical_directional_exponent({label}, x={}, e_u, n={})", fmt_point(*x), p.horizon));
        push(&mut r, "classical growth along a generic vector equals the top exponent", along(p.generic_direction, p.horizon), f.chi_plus, p.generic_tolerance, format!("classical_directional_exponent({label}, x={}, v={}, n={})", fmt_point(*x), fmt_vec(p.generic_direction), p.horizon));
        push(&mut r, "classical growth along e_s is the negative top exponent", along(f.e_s, p.stable_horizon), -f.chi_plus, p.stable_tolerance, format!("classical_directional_exponent({label}, x={}, e_s, n={})", fmt_point(*x), p.stable_horizon));

        let new_u = new_directional_exponent(&m, *x, f.e_u, s).map(|e| e.value);
        let new_g = new_directional_exponent(&m, *x, p.generic_direction, s).map(|e| e.value);
        table.push(vec![
            Some(x.x),
            Some(x.y),
            Some(f.chi_plus),
            Some(f.e_u.dx),
            Some(f.e_u.dy),
            Some(f.e_s.dx),
            Some(f.e_s.dy),
            new_u.as_ref().ok().copied(),
            new_g.as_ref().ok().copied(),
        ]);
        push(&mut r, "derivative-free growth along e_u equals the top exponent", new_u, f.chi_plus, p.generic_tolerance, format!("new_directional_exponent({label}, x={}, e_u)", fmt_point(*x)));
        push(&mut r, "derivative-free growth along a generic vector equals the top exponent", new_g, f.chi_plus, p.generic_tolerance, format!("new_directional_exponent({label}, x={}, v={})", fmt_point(*x), fmt_vec(p.generic_direction)));
    }
    r.artifacts.push(table);
    Ok(r.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::within("", Some(1.0), 1.04, 0.05, "").pass);
        assert!(!Check::within("", Some(1.0), 1.06, 0.05, "").pass);
        assert!(Check::at_most("", Some(1.0), 1.0, 0.0, "").pass);
        assert!(!Check::at_least("", Some(0.9), 1.0, 0.05, "").pass);
        assert!(!Check::within("", None, 0.0, 1.0, "").pass);
        assert!(!Check::within("", Some(f64::NAN), 0.0, 1.0, "").pass);
    }

    #[test]
    fn cat_eigen_oracle() {
        let (u, s, l) = hyperbolic_eigen(&Matrix2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((l - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
        assert!(u.dot(s).abs() < 1e-15);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(u.line_angle(Vec2::new(phi, 1.0)) < 1e-15);
        assert!(hyperbolic_eigen(&Matrix2::rotation(0.3)).is_none());
        assert!(hyperbolic_eigen(&Matrix2::IDENTITY).is_none());
    }

    #[test]
    fn sample_points_are_seeded_and_in_domain() {
        let d = Domain::unit_disc();
        let a = sample_points(&d, 50, 3, 1);
        assert_eq!(a, sample_points(&d, 50, 3, 1));
        assert_ne!(a, sample_points(&d, 50, 3, 2));
        assert!(a.iter().all(|&p| d.contains(p)));
    }

    #[test]
    fn example_report_passes() {
        let r = run_example_experiment(&Schedule::conic(), &ExampleParams::default()).unwrap();
        assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.checks.iter().filter(|c| c.description.starts_with("directional")).count(), 3);
    }

    #[test]
    fn linear_subadditivity_is_exact() {
        let m = crate::maps::diagonal(2.0, 0.5);
        let row = subadditivity_check(&m, Point2::new(0.3, 0.1), 3, 4, 1e-2, &Fan::default(), &Ladder::default()).unwrap();
        assert!(row.lhs <= row.rhs_shared + 1e-12);
        assert!(row.slack() <= 1e-12, "{row:?}");
        assert!((row.lhs - 7.0 * 2f64.ln()).abs() < 1e-12);
    }
}
