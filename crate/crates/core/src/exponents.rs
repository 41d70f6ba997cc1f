//! Exponent estimators: the classical derivative-cocycle exponents, the
//! derivative-free dynamical-ball exponents, Oseledets directions, and the
//! area integral of the top exponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynball::{CandidateGrid, Fan, Ladder};
use crate::error::{Error, Result};
use crate::geometry::{Matrix2, Point2, Vec2};
use crate::maps::MapObject;
use crate::par_map;

/// Finite realization of the double limit: horizons `n_values`, shrinking
/// radii `delta_values`, and the probe geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub n_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub fan: Fan,
    pub ladder: Ladder,
    /// How many of the largest horizons enter the limsup surrogate.
    pub tail_window: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            n_values: vec![4, 6, 8, 10, 12, 14],
            delta_values: vec![1e-2, 1e-3, 1e-4],
            fan: Fan::default(),
            ladder: Ladder::default(),
            tail_window: 3,
        }
    }
}

impl Schedule {
    pub const MIN_DELTA: f64 = 1e-6;

    /// Schedule for maps that are linear on cones through the point of
    /// interest: long horizons with a deep ladder, since the ratio does not
    /// depend on the scale there.
    pub fn conic() -> Self {
        Self {
            n_values: vec![6, 12, 18, 19, 20],
            delta_values: vec![1e-2, 1e-3],
            ladder: Ladder { floor: 1e-12, ..Ladder::default() },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule("n_values must be non-empty, positive and increasing".into()));
        }
        if self.delta_values.is_empty() || self.delta_values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidSchedule("delta_values must be non-empty and decreasing".into()));
        }
        if self.delta_values.iter().any(|&d| !(d > Self::MIN_DELTA && d.is_finite())) {
            return Err(Error::InvalidSchedule(format!("every delta must exceed {:e}", Self::MIN_DELTA)));
        }
        if self.tail_window == 0 || self.tail_window > self.n_values.len() {
            return Err(Error::InvalidSchedule(format!(
                "tail_window {} must be in 1..={}",
                self.tail_window,
                self.n_values.len()
            )));
        }
        self.fan.validate()?;
        self.ladder.validate()
    }

    pub fn n_max(&self) -> usize {
        *self.n_values.last().expect("validated")
    }

    pub fn tail(&self) -> &[usize] {
        &self.n_values[self.n_values.len() - self.tail_window..]
    }

    /// Same schedule measured in a frame scaled by `ratio`.
    pub fn scaled(&self, ratio: f64) -> Schedule {
        Schedule {
            delta_values: self.delta_values.iter().map(|d| d * ratio).collect(),
            ladder: self.ladder.scaled(ratio),
            ..self.clone()
        }
    }
}

/// One `(n, delta)` cell of the estimate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub n: usize,
    pub delta: f64,
    pub sup_log_delta: Option<f64>,
    pub candidates: usize,
    pub resolved: bool,
    pub s_n_over_n: Option<f64>,
}

/// The delta-to-zero surrogate at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonValue {
    pub n: usize,
    pub s_n: Option<f64>,
    pub delta_used: Option<f64>,
    pub resolved: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Cells where no candidate stayed in the ball.
    pub empty_cells: usize,
    /// Cells where some ray lost even its innermost probe.
    pub unresolved_cells: usize,
    /// Horizons whose surrogate had to come from an unresolved cell.
    pub unresolved_horizons: Vec<usize>,
    /// Cells whose value rose as delta shrank (must stay 0 for nested ladders).
    pub monotonicity_violations: usize,
    /// max - min of s(n)/n over the tail window.
    pub tail_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// Nats per iterate.
    pub value: f64,
    pub grid: Vec<GridEntry>,
    pub per_n: Vec<HorizonValue>,
    pub diagnostics: Diagnostics,
}

fn estimate_from_rays(m: &MapObject, x: Point2, rays: Vec<Vec2>, s: &Schedule) -> Result<ExponentEstimate> {
    s.validate()?;
    let grid = CandidateGrid::build(m, x, rays, &s.ladder, s.n_max(), s.delta_values[0])?;
    let mut entries = Vec::with_capacity(s.n_values.len() * s.delta_values.len());
    let mut per_n = Vec::with_capacity(s.n_values.len());
    let mut diag = Diagnostics::default();

    for &n in &s.n_values {
        let cells: Vec<_> = s.delta_values.iter().map(|&delta| (delta, grid.cell(n, delta))).collect();
        for (&(delta, cell), prev) in cells.iter().zip(std::iter::once(None).chain(cells.iter().map(Some))) {
            if cell.value.is_none() {
                diag.empty_cells += 1;
            }
            if !cell.resolved {
                diag.unresolved_cells += 1;
            }
            if let (Some(v), Some((_, p))) = (cell.value, prev) {
                if p.value.is_none_or(|pv| v > pv) {
                    diag.monotonicity_violations += 1;
                }
            }
            entries.push(GridEntry {
                n,
                delta,
                sup_log_delta: cell.value,
                candidates: cell.count,
                resolved: cell.resolved,
                s_n_over_n: cell.value.map(|v| v / n as f64),
            });
        }
        // smallest fully resolved radius; otherwise the largest radius with
        // any candidates (smaller radii only lose rays once the ladder runs out)
        let chosen = cells
            .iter()
            .rev()
            .find(|(_, c)| c.resolved && c.value.is_some())
            .map(|&(d, c)| (d, c, true))
            .or_else(|| cells.iter().find(|(_, c)| c.value.is_some()).map(|&(d, c)| (d, c, false)));
        match chosen {
            Some((delta, cell, resolved)) => {
                if !resolved {
                    diag.unresolved_horizons.push(n);
                }
                per_n.push(HorizonValue { n, s_n: cell.value, delta_used: Some(delta), resolved });
            }
            None => per_n.push(HorizonValue { n, s_n: None, delta_used: None, resolved: false }),
        }
    }

    let tail = s.tail();
    let mut rates = Vec::with_capacity(tail.len());
    for h in per_n.iter().filter(|h| tail.contains(&h.n)) {
        match h.s_n {
            Some(v) => rates.push(v / h.n as f64),
            None => return Err(Error::EmptyCandidateSet { n: h.n, delta: *s.delta_values.last().unwrap() }),
        }
    }
    let value = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    diag.tail_spread = value - min;
    Ok(ExponentEstimate { value, grid: entries, per_n, diagnostics: diag })
}

/// Derivative-free exponent along the line through `x` in direction `v`.
pub fn new_directional_exponent(m: &MapObject, x: Point2, v: Vec2, s: &Schedule) -> Result<ExponentEstimate> {
    let u = v
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("direction must be non-zero".into()))?;
    estimate_from_rays(m, x, vec![u, -u], s)
}

/// Derivative-free top exponent: sup over the whole dynamical ball.
pub fn new_top_exponent(m: &MapObject, x: Point2, s: &Schedule) -> Result<ExponentEstimate> {
    s.fan.validate()?;
    estimate_from_rays(m, x, s.fan.rays(), s)
}

/// Running product of Jacobians along an orbit, kept as a normalized matrix
/// plus an accumulated log scale.
#[derive(Debug, Clone, Copy)]
struct Cocycle {
    m: Matrix2,
    log_scale: f64,
}

impl Cocycle {
    fn new() -> Self {
        Self { m: Matrix2::IDENTITY, log_scale: 0.0 }
    }

    fn push(&mut self, j: Matrix2) {
        self.m = j * self.m;
        let s = self.m.max_abs();
        if s > 0.0 && s.is_finite() {
            self.m = self.m.scale(1.0 / s);
            self.log_scale += s.ln();
        }
    }

    fn log_norm(&self) -> f64 {
        self.log_scale + self.m.spectral_norm().ln()
    }
}

fn check_horizon(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("horizon must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `(1/n) log |Df^n_x|` for each requested horizon, in one pass.
pub fn classical_top_profile(m: &MapObject, x: Point2, horizons: &[usize]) -> Result<Vec<f64>> {
    let n_max = horizons.iter().copied().max().unwrap_or(0);
    let mut c = Cocycle::new();
    let mut p = m.domain().check(x, m.label())?;
    let mut by_n = Vec::with_capacity(n_max + 1);
    by_n.push(0.0);
    for k in 1..=n_max {
        c.push(m.jacobian(p)?);
        p = m.evaluate(p)?;
        by_n.push(c.log_norm() / k as f64);
    }
    horizons
        .iter()
        .map(|&n| {
            check_horizon(n)?;
            Ok(by_n[n])
        })
        .collect()
}

pub fn classical_top_exponent(m: &MapObject, x: Point2, n: usize) -> Result<f64> {
    check_horizon(n)?;
    Ok(classical_top_profile(m, x, &[n])?[0])
}

/// Classical top exponent with the same limsup surrogate as the new
/// estimators: max of `(1/n) log |Df^n_x|` over the schedule's tail.
pub fn classical_top_tail(m: &MapObject, x: Point2, s: &Schedule) -> Result<f64> {
    Ok(classical_top_profile(m, x, s.tail())?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

pub fn classical_directional_exponent(m: &MapObject, x: Point2, v: Vec2, n: usize) -> Result<f64> {
    check_horizon(n)?;
    let mut w = v
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("direction must be non-zero".into()))?;
    let mut p = m.domain().check(x, m.label())?;
    let mut log_growth = 0.0;
    for _ in 0..n {
        w = m.jacobian(p)?.apply(w);
        let len = w.norm();
        log_growth += len.ln();
        w = w * (1.0 / len);
        p = m.evaluate(p)?;
    }
    Ok(log_growth / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseledetsFrame {
    pub e_u: Vec2,
    pub e_s: Vec2,
    pub chi_plus: f64,
}

/// Generic starting vector for power iteration: not aligned with any axis or
/// diagonal.
const GENERIC: Vec2 = Vec2 { dx: 0.764_842_187_284_488_9, dy: 0.644_217_687_237_691 };

/// Unstable and stable directions at `x`: the unstable one by pushing a
/// generic vector forward from `f^{-n}(x)` to `x`, the stable one by pulling
/// it back from `f^n(x)` with inverse Jacobians.
pub fn estimate_oseledets_directions(m: &MapObject, x: Point2, n: usize) -> Result<OseledetsFrame> {
    let chi_plus = classical_top_exponent(m, x, n)?;
    if chi_plus.is_nan() || chi_plus <= 0.05 {
        return Err(Error::NoHyperbolicity { point: x, chi: chi_plus });
    }
    let x = m.domain().check(x, m.label())?;

    let mut back = Vec::with_capacity(n + 1);
    back.push(x);
    for j in 0..n {
        back.push(m.evaluate_inverse(back[j])?);
    }
    let mut e_u = GENERIC;
    for j in (1..=n).rev() {
        e_u = m.jacobian(back[j])?.apply(e_u).normalized().ok_or(Error::NoHyperbolicity { point: x, chi: chi_plus })?;
    }

    let forward = m.iterate(x, n)?;
    let mut e_s = GENERIC;
    for j in (1..=n).rev() {
        let inv = m
            .jacobian(forward[j - 1])?
            .inverse()
            .ok_or_else(|| Error::NotDifferentiable { label: m.label().to_string(), point: forward[j - 1] })?;
        e_s = inv.apply(e_s).normalized().ok_or(Error::NoHyperbolicity { point: x, chi: chi_plus })?;
    }

    if e_u.line_angle(e_s) < 1e-6 {
        return Err(Error::NoHyperbolicity { point: x, chi: chi_plus });
    }
    Ok(OseledetsFrame { e_u, e_s, chi_plus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSource {
    UniformRandom,
    RegularGrid,
    /// One uniform point in each cell of a regular grid.
    Stratified,
    /// Rank-1 lattice `(k/N, {k g / N})` with `g` near `N / golden ratio`.
    /// For `n` coprime to `N` the map `p -> n p mod 1` permutes the lattice,
    /// so every cell of an `n x n` subdivision sees the same local points.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    pub sample_count: usize,
    pub seed: u64,
    pub point_source: PointSource,
}

/// A unit-square point and, for stratified designs, its cell.
type DesignPoint = ((f64, f64), Option<(usize, usize)>);

impl Quadrature {
    pub const MIN_SAMPLES: usize = 100;

    pub fn new(sample_count: usize, seed: u64, point_source: PointSource) -> Self {
        Self { sample_count, seed, point_source }
    }

    fn validate(&self) -> Result<()> {
        if self.sample_count < Self::MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                self.sample_count
            )));
        }
        Ok(())
    }

    fn grid_side(&self) -> usize {
        (self.sample_count as f64).sqrt().ceil() as usize
    }

    /// Unit-square design: one `(u, v)` and the cell it belongs to per point.
    fn design(&self) -> Vec<DesignPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.point_source {
            PointSource::UniformRandom => {
                (0..self.sample_count).map(|_| ((rng.gen(), rng.gen()), None)).collect()
            }
            PointSource::Lattice => {
                let n = self.sample_count;
                let g = lattice_generator(n);
                (0..n)
                    .map(|k| ((k as f64 / n as f64, ((k * g) % n) as f64 / n as f64), None))
                    .collect()
            }
            PointSource::RegularGrid | PointSource::Stratified => {
                let side = self.grid_side();
                let h = 1.0 / side as f64;
                let mut out = Vec::with_capacity(side * side);
                for j in 0..side {
                    for i in 0..side {
                        let (a, b) = match self.point_source {
                            PointSource::Stratified => (rng.gen::<f64>(), rng.gen::<f64>()),
                            _ => (0.5, 0.5),
                        };
                        out.push((((i as f64 + a) * h, (j as f64 + b) * h), Some((i, j))));
                    }
                }
                out
            }
        }
    }

    /// Replacement point for a failed evaluation: same stratum when there is one.
    fn resample(&self, index: usize, attempt: usize, cell: Option<(usize, usize)>) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 + (index as u64) * 4 + attempt as u64);
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        match cell {
            Some((i, j)) => {
                let h = 1.0 / self.grid_side() as f64;
                ((i as f64 + a) * h, (j as f64 + b) * h)
            }
            None => (a, b),
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Fibonacci-style generator: the integer closest to `n / phi` that is
/// coprime to `n`.
fn lattice_generator(n: usize) -> usize {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let g0 = (n as f64 / phi).round() as usize;
    (0..n)
        .flat_map(|d| [g0 + d, g0.saturating_sub(d)])
        .find(|&g| g > 0 && g < n && gcd(g, n) == 1)
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub sample_points: usize,
    pub standard_error: f64,
    pub negative_clamp_count: usize,
    pub excluded_points: usize,
    /// Per-point integrand before clamping, in design order.
    pub integrand: Vec<(Point2, f64)>,
}

/// Area integral of the (clamped) top exponent.
pub fn lambda_functional(m: &MapObject, s: &Schedule, q: &Quadrature) -> Result<LambdaEstimate> {
    const RETRIES: usize = 3;
    q.validate()?;
    s.validate()?;
    let domain = *m.domain();
    let area = domain.area().ok_or(Error::UnboundedDomain)?;
    let design = q.design();

    let evaluated: Vec<Option<(Point2, f64)>> = par_map(design.len(), |i| {
        let ((u, v), cell) = design[i];
        for attempt in 0..=RETRIES {
            let (u, v) = if attempt == 0 { (u, v) } else { q.resample(i, attempt, cell) };
            let p = domain.from_unit_square(u, v).expect("bounded domain");
            if let Ok(e) = new_top_exponent(m, p, s) {
                return Some((p, e.value));
            }
        }
        None
    });

    let excluded = evaluated.iter().filter(|e| e.is_none()).count();
    let integrand: Vec<(Point2, f64)> = evaluated.iter().flatten().copied().collect();
    if integrand.is_empty() {
        return Err(Error::EmptyCandidateSet { n: s.n_max(), delta: s.delta_values[0] });
    }
    let clamped: Vec<f64> = integrand.iter().map(|&(_, v)| v.max(0.0)).collect();
    let negative_clamp_count = integrand.iter().filter(|(_, v)| *v < 0.0).count();
    let count = clamped.len() as f64;
    let mean = clamped.iter().sum::<f64>() / count;

    let se_mean = match q.point_source {
        PointSource::Stratified if excluded == 0 && clamped.len() >= 2 => {
            // collapsed strata: neighbouring cells paired
            let ss: f64 = clamped.chunks_exact(2).map(|p| (p[0] - p[1]).powi(2)).sum();
            ss.sqrt() / count
        }
        _ if clamped.len() >= 2 => {
            let var = clamped.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
            (var / count).sqrt()
        }
        _ => 0.0,
    };

    Ok(LambdaEstimate {
        value: area * mean,
        sample_points: clamped.len(),
        standard_error: area * se_mean,
        negative_clamp_count,
        excluded_points: excluded,
        integrand,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub base: f64,
    /// Top-exponent estimates at `f^m(x)` for `m = 1..=m_max`.
    pub values: Vec<f64>,
    pub deviations: Vec<f64>,
}

/// Top-exponent estimates along the forward orbit of `x`, compared with the
/// estimate at `x`.
pub fn check_orbit_invariance(m: &MapObject, x: Point2, s: &Schedule, m_max: usize) -> Result<InvarianceReport> {
    let orbit = m.iterate(x, m_max)?;
    let base = new_top_exponent(m, orbit[0], s)?.value;
    let mut values = Vec::with_capacity(m_max);
    for &p in &orbit[1..] {
        values.push(new_top_exponent(m, p, s)?.value);
    }
    let deviations = values.iter().map(|v| (v - base).abs()).collect();
    Ok(InvarianceReport { base, values, deviations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::maps::{cat_map, diagonal, example_map, identity, rotation, standard_map};

    fn log_golden() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }

    /// Eigenvectors of [[2,1],[1,1]] straight from the characteristic polynomial.
    fn cat_eigenvectors() -> (Vec2, Vec2) {
        let l1 = (3.0 + 5f64.sqrt()) / 2.0;
        let l2 = (3.0 - 5f64.sqrt()) / 2.0;
        // (A - l I) v = 0 with first row (2 - l, 1): v = (1, l - 2)
        (Vec2::new(1.0, l1 - 2.0).normalized().unwrap(), Vec2::new(1.0, l2 - 2.0).normalized().unwrap())
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::default().validate().is_ok());
        assert!(Schedule::conic().validate().is_ok());
        let bad = Schedule { delta_values: vec![1e-3, 1e-2], ..Schedule::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidSchedule(_))));
        let bad = Schedule { tail_window: 9, ..Schedule::default() };
        assert!(bad.validate().is_err());
        let bad = Schedule { delta_values: vec![1e-7], ..Schedule::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn classical_cat_matches_eigenvalue() {
        for x in [Point2::new(0.1, 0.7), Point2::new(0.5, 0.5)] {
            let v = classical_top_exponent(&cat_map(), x, 50).unwrap();
            assert!((v - log_golden()).abs() < 1e-9);
        }
    }

    #[test]
    fn classical_zero_exponent_maps() {
        let p = Point2::new(0.3, 0.2);
        for n in [1, 7, 40] {
            assert_eq!(classical_top_exponent(&identity(Domain::unit_torus()), p, n).unwrap(), 0.0);
            assert!(classical_top_exponent(&rotation(1.1), p, n).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn classical_directional_examples() {
        let (e_u, e_s) = cat_eigenvectors();
        let cat = cat_map();
        let x = Point2::new(0.2, 0.3);
        assert!((classical_directional_exponent(&cat, x, e_u, 50).unwrap() - log_golden()).abs() < 1e-9);
        assert!((classical_directional_exponent(&cat, x, e_s, 10).unwrap() + log_golden()).abs() < 1e-6);
        let diag = diagonal(2.0, 0.5);
        for n in 1..30 {
            let v = classical_directional_exponent(&diag, Point2::ORIGIN, Vec2::new(1.0, 1.0), n).unwrap();
            assert!((v - 2f64.ln()).abs() <= 2f64.ln() / n as f64);
        }
    }

    #[test]
    fn classical_needs_a_derivative() {
        let err = classical_top_exponent(&example_map(), Point2::new(1.0, 2.0), 3).unwrap_err();
        assert!(matches!(err, Error::NotDifferentiable { .. }));
    }

    #[test]
    fn renormalized_product_matches_direct_product() {
        let cat = cat_map();
        let x = Point2::new(0.61, 0.28);
        let a = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        let mut direct = Matrix2::IDENTITY;
        for n in 1..=30 {
            direct = a * direct;
            let renorm = classical_top_exponent(&cat, x, n).unwrap() * n as f64;
            assert!((renorm - direct.spectral_norm().ln()).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn example_map_directional_values() {
        let f = example_map();
        let s = Schedule::conic();
        let cases = [
            (Vec2::new(1.0, 1.0), 2f64.ln()),
            (Vec2::new(0.0, 1.0), -(2f64.ln())),
            (Vec2::new(1.0, 0.0), 3f64.ln()),
        ];
        for (v, want) in cases {
            let e = new_directional_exponent(&f, Point2::ORIGIN, v, &s).unwrap();
            assert!((e.value - want).abs() < 0.02, "{v:?}: {} vs {want}", e.value);
        }
    }

    #[test]
    fn example_map_top_value() {
        let e = new_top_exponent(&example_map(), Point2::ORIGIN, &Schedule::conic()).unwrap();
        assert!((e.value - 3f64.ln()).abs() < 0.02, "{}", e.value);
        assert_eq!(e.diagnostics.monotonicity_violations, 0);
    }

    #[test]
    fn identity_top_is_zero() {
        let e = new_top_exponent(&identity(Domain::unit_torus()), Point2::new(0.4, 0.1), &Schedule::default()).unwrap();
        assert!(e.value.abs() < 1e-9);
    }

    #[test]
    fn cat_top_matches_eigenvalue() {
        for x in [Point2::new(0.13, 0.71), Point2::new(0.52, 0.05), Point2::new(0.9, 0.33)] {
            let e = new_top_exponent(&cat_map(), x, &Schedule::default()).unwrap();
            assert!((e.value - log_golden()).abs() <= 0.05 * log_golden(), "{}", e.value);
            assert!(e.diagnostics.unresolved_horizons.is_empty());
        }
    }

    #[test]
    fn grid_is_complete() {
        let s = Schedule::default();
        let e = new_top_exponent(&standard_map(1.5), Point2::new(0.3, 0.4), &s).unwrap();
        assert_eq!(e.grid.len(), s.n_values.len() * s.delta_values.len());
        assert_eq!(e.per_n.len(), s.n_values.len());
    }

    #[test]
    fn oseledets_cat_directions() {
        let (e_u, e_s) = cat_eigenvectors();
        let f = estimate_oseledets_directions(&cat_map(), Point2::new(0.27, 0.64), 20).unwrap();
        assert!(f.e_u.line_angle(e_u) < 1e-6);
        assert!(f.e_s.line_angle(e_s) < 1e-6);
        assert!((f.chi_plus - log_golden()).abs() < 1e-9);
    }

    #[test]
    fn oseledets_diagonal_and_identity() {
        let f = estimate_oseledets_directions(&diagonal(2.0, 0.5), Point2::ORIGIN, 30).unwrap();
        assert!(f.e_u.line_angle(Vec2::new(1.0, 0.0)) < 1e-12);
        assert!(f.e_s.line_angle(Vec2::new(0.0, 1.0)) < 1e-12);
        let err = estimate_oseledets_directions(&identity(Domain::unit_torus()), Point2::new(0.5, 0.5), 20);
        assert!(matches!(err, Err(Error::NoHyperbolicity { .. })));
    }

    #[test]
    fn lambda_of_identity_is_exactly_zero() {
        let q = Quadrature::new(100, 1, PointSource::UniformRandom);
        let l = lambda_functional(&identity(Domain::unit_torus()), &Schedule::default(), &q).unwrap();
        assert_eq!(l.value, 0.0);
        assert!(l.integrand.iter().all(|&(_, v)| v.abs() <= 1e-9));
    }

    #[test]
    fn lambda_rejects_small_designs_and_unbounded_domains() {
        let q = Quadrature::new(10, 1, PointSource::UniformRandom);
        assert!(lambda_functional(&cat_map(), &Schedule::default(), &q).is_err());
        let q = Quadrature::new(100, 1, PointSource::UniformRandom);
        assert!(matches!(
            lambda_functional(&diagonal(2.0, 0.5), &Schedule::default(), &q),
            Err(Error::UnboundedDomain)
        ));
    }

    #[test]
    fn quadrature_designs_cover_the_square() {
        for src in [PointSource::UniformRandom, PointSource::RegularGrid, PointSource::Stratified, PointSource::Lattice] {
            let q = Quadrature::new(400, 9, src);
            let d = q.design();
            assert_eq!(d.len(), 400);
            assert!(d.iter().all(|&((u, v), _)| (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn orbit_invariance_on_isometries() {
        let r = check_orbit_invariance(&identity(Domain::unit_torus()), Point2::new(0.2, 0.2), &Schedule::default(), 3)
            .unwrap();
        assert!(r.deviations.iter().all(|&d| d == 0.0));
    }
}
