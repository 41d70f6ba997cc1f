//! Dynamical balls and the divergence ratio.
//!
//! `B_x(delta, n)` is the set of points whose first `n` iterates stay within
//! `delta` of the corresponding iterates of `x`. The supremum of the
//! divergence ratio over the ball (or over its intersection with a line
//! through `x`) is approximated by probing a geometric ladder of offsets
//! along a fan of rays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw_displacement, raw_distance, Point2, Vec2};
use crate::maps::MapObject;

/// Initial separations below this carry no usable signal in double precision.
pub const UNDERFLOW_GUARD: f64 = 1e-12;

/// Candidates whose initial offsets differ by less than this are the same point.
pub const DEDUP_TOLERANCE: f64 = 1e-14;

/// Geometric ladder of probe offsets `floor * step^i`, truncated at
/// `top_factor * delta`. Anchoring at the floor keeps ladders for different
/// radii nested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub top_factor: f64,
    pub floor: f64,
    pub step: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Self { top_factor: 1e-2, floor: 1e-8, step: 10f64.sqrt() }
    }
}

impl Ladder {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor >= UNDERFLOW_GUARD && self.floor.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "ladder floor {} is below the underflow guard {UNDERFLOW_GUARD:e}",
                self.floor
            )));
        }
        if !(self.step > 1.0 && self.step.is_finite()) {
            return Err(Error::InvalidSchedule(format!("ladder step must exceed 1, got {}", self.step)));
        }
        if !(self.top_factor > 0.0 && self.top_factor < 1.0) {
            return Err(Error::InvalidSchedule(format!("ladder top factor must be in (0, 1), got {}", self.top_factor)));
        }
        Ok(())
    }

    /// Offsets usable at radius `delta`, largest first.
    pub fn offsets(&self, delta: f64) -> Vec<f64> {
        let top = self.top_factor * delta;
        let mut out = Vec::new();
        let mut i = 0i32;
        loop {
            let eps = self.floor * self.step.powi(i);
            if eps > top || eps >= delta {
                break;
            }
            out.push(eps);
            i += 1;
        }
        out.reverse();
        out
    }

    /// Same ladder with every offset multiplied by `ratio`.
    pub fn scaled(&self, ratio: f64) -> Ladder {
        Ladder { floor: self.floor * ratio, ..*self }
    }
}

/// Directions to probe around `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fan {
    /// `count` evenly spaced unit vectors around the full circle.
    Even(usize),
    Custom(Vec<Vec2>),
}

impl Default for Fan {
    fn default() -> Self {
        Fan::Even(64)
    }
}

impl Fan {
    pub const MIN_EVEN: usize = 8;

    pub fn validate(&self) -> Result<()> {
        match self {
            Fan::Even(c) if *c < Self::MIN_EVEN => {
                Err(Error::InvalidSchedule(format!("need at least {} directions, got {c}", Self::MIN_EVEN)))
            }
            Fan::Custom(v) if v.is_empty() || v.iter().any(|d| d.normalized().is_none()) => {
                Err(Error::InvalidSchedule("custom fan needs non-zero directions".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn directions(&self) -> Vec<Vec2> {
        match self {
            Fan::Even(c) => (0..*c)
                .map(|k| Vec2::from_angle(std::f64::consts::TAU * k as f64 / *c as f64))
                .collect(),
            Fan::Custom(v) => v.clone(),
        }
    }

    /// Unit rays `+d` and `-d` for every fan direction, duplicates removed.
    pub fn rays(&self) -> Vec<Vec2> {
        let mut rays: Vec<Vec2> = Vec::new();
        for d in self.directions() {
            let Some(u) = d.normalized() else { continue };
            for r in [u, -u] {
                if !rays.iter().any(|w| (*w - r).norm() < DEDUP_TOLERANCE) {
                    rays.push(r);
                }
            }
        }
        rays
    }
}

/// A probe point `y` near `x` together with its escape record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCandidate {
    pub y: Point2,
    /// `y - x`, wrapped on the torus.
    pub initial_offset: Vec2,
    /// First `j` with `d(f^j x, f^j y) >= delta`; `None` means `y` is in the ball.
    pub escape_index: Option<usize>,
    /// Direction of the line the candidate was generated on.
    pub on_line: Option<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    /// Finite-sample estimate of `sup log Delta(f, n, x, y)` over the ball.
    pub value: f64,
    pub n: usize,
    pub delta: f64,
    pub candidate_count: usize,
    pub argmax_candidate: BallCandidate,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("ball radius must be positive, got {delta}")))
    }
}

/// Whether `y` stays within `delta` of `x` for iterates `0..=n`; on failure
/// also returns the first violating index.
pub fn in_dynamical_ball(
    m: &MapObject,
    x: Point2,
    y: Point2,
    delta: f64,
    n: usize,
) -> Result<(bool, Option<usize>)> {
    check_delta(delta)?;
    let d = m.domain();
    let mut a = d.check(x, m.label())?;
    let mut b = d.check(y, m.label())?;
    for j in 0..=n {
        if j > 0 {
            a = m.evaluate(a)?;
            b = m.evaluate(b)?;
        }
        if raw_distance(d, a, b) >= delta {
            return Ok((false, Some(j)));
        }
    }
    Ok((true, None))
}

/// `|f^n(x) - f^n(y)| / |x - y|`, both distances in the domain metric.
pub fn delta_ratio(m: &MapObject, n: usize, x: Point2, y: Point2) -> Result<f64> {
    let d = m.domain();
    let xs = m.iterate(x, n)?;
    let ys = m.iterate(y, n)?;
    let initial = raw_distance(d, xs[0], ys[0]);
    if initial < UNDERFLOW_GUARD {
        return Err(Error::DegenerateSeparation { separation: initial });
    }
    Ok(raw_distance(d, xs[n], ys[n]) / initial)
}

/// Escape index of `y` relative to a precomputed orbit of `x`.
fn escape_against(m: &MapObject, orbit: &[Point2], y: Point2, delta: f64) -> Result<Option<usize>> {
    let d = m.domain();
    let mut b = y;
    for (j, &a) in orbit.iter().enumerate() {
        if j > 0 {
            b = m.evaluate(b)?;
        }
        if raw_distance(d, a, b) >= delta {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

/// Probe point `x + eps * ray`, or `None` when it leaves the domain or is
/// closer to `x` than the underflow guard.
fn probe(m: &MapObject, x: Point2, ray: Vec2, eps: f64) -> Option<(Point2, Vec2)> {
    let d = m.domain();
    let raw = x.offset(ray * eps);
    if !d.contains(raw) {
        return None;
    }
    let y = d.canonicalize(raw);
    let off = raw_displacement(d, x, y);
    (off.norm() >= UNDERFLOW_GUARD).then_some((y, off))
}

fn line_candidates_on(
    m: &MapObject,
    x: Point2,
    orbit: &[Point2],
    rays: &[Vec2],
    line: Option<Vec2>,
    delta: f64,
    ladder: &Ladder,
) -> Result<Vec<BallCandidate>> {
    let mut out = Vec::new();
    for &ray in rays {
        for eps in ladder.offsets(delta) {
            let Some((y, initial_offset)) = probe(m, x, ray, eps) else { continue };
            let escape_index = escape_against(m, orbit, y, delta)?;
            out.push(BallCandidate { y, initial_offset, escape_index, on_line: line.or(Some(ray)) });
        }
    }
    Ok(out)
}

/// Candidates `x +- eps_j v/|v|` on the line through `x` along `v`, each
/// tagged with its escape index at horizon `n`.
pub fn sample_line_candidates(
    m: &MapObject,
    x: Point2,
    v: Vec2,
    delta: f64,
    n: usize,
    ladder: &Ladder,
) -> Result<Vec<BallCandidate>> {
    check_delta(delta)?;
    let u = v
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("line direction must be non-zero".into()))?;
    let orbit = m.iterate(x, n)?;
    let out = line_candidates_on(m, orbit[0], &orbit, &[u, -u], Some(u), delta, ladder)?;
    if out.iter().all(|c| c.escape_index.is_some()) {
        return Err(Error::EmptyCandidateSet { n, delta });
    }
    Ok(out)
}

/// Union of line candidates over every fan direction, deduplicated by
/// initial offset.
pub fn sample_ball_candidates(
    m: &MapObject,
    x: Point2,
    delta: f64,
    n: usize,
    fan: &Fan,
    ladder: &Ladder,
) -> Result<Vec<BallCandidate>> {
    check_delta(delta)?;
    fan.validate()?;
    let orbit = m.iterate(x, n)?;
    let x = orbit[0];
    let mut all = Vec::new();
    for dir in fan.directions() {
        let Some(u) = dir.normalized() else { continue };
        all.extend(line_candidates_on(m, x, &orbit, &[u, -u], Some(u), delta, ladder)?);
    }
    let out = dedup(all);
    if out.iter().all(|c| c.escape_index.is_some()) {
        return Err(Error::EmptyCandidateSet { n, delta });
    }
    Ok(out)
}

fn dedup(mut all: Vec<BallCandidate>) -> Vec<BallCandidate> {
    // stable sort keeps the first occurrence of each point
    all.sort_by(|a, b| a.initial_offset.dx.total_cmp(&b.initial_offset.dx));
    let mut kept: Vec<BallCandidate> = Vec::with_capacity(all.len());
    for c in all {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| c.initial_offset.dx - k.initial_offset.dx < DEDUP_TOLERANCE)
            .any(|k| (k.initial_offset - c.initial_offset).norm() < DEDUP_TOLERANCE);
        if !dup {
            kept.push(c);
        }
    }
    kept
}

/// Largest `log Delta(f, n, x, y)` over the candidates that stayed in the ball.
pub fn sup_log_delta(
    m: &MapObject,
    x: Point2,
    n: usize,
    delta: f64,
    candidates: &[BallCandidate],
) -> Result<SupEstimate> {
    check_delta(delta)?;
    let d = m.domain();
    let orbit = m.iterate(x, n)?;
    let end = orbit[n];
    let mut best: Option<(f64, BallCandidate)> = None;
    let mut count = 0;
    for c in candidates.iter().filter(|c| c.escape_index.is_none()) {
        let initial = c.initial_offset.norm();
        if initial < UNDERFLOW_GUARD {
            continue;
        }
        let yn = *m.iterate(c.y, n)?.last().expect("orbit is non-empty");
        let value = (raw_distance(d, end, yn) / initial).ln();
        count += 1;
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, *c));
        }
    }
    let (value, argmax_candidate) = best.ok_or(Error::EmptyCandidateSet { n, delta })?;
    Ok(SupEstimate { value, n, delta, candidate_count: count, argmax_candidate })
}

/// One probe tracked once out to the largest horizon; membership and
/// divergence at every `(n, delta)` are read off its distance record.
#[derive(Debug, Clone)]
pub(crate) struct Track {
    pub ray: usize,
    pub offset: f64,
    /// `d(f^j x, f^j y)` for `j = 0..len`; stops once the distance reaches
    /// the largest radius of interest.
    dist: Vec<f64>,
    prefix_max: Vec<f64>,
}

impl Track {
    pub fn inside(&self, n: usize, delta: f64) -> bool {
        n < self.prefix_max.len() && self.prefix_max[n] < delta
    }

    pub fn log_ratio(&self, n: usize) -> f64 {
        (self.dist[n] / self.dist[0]).ln()
    }
}

/// Probes for a whole schedule: every ray of the fan against the ladder of
/// the largest radius (which contains the ladders of all smaller radii).
#[derive(Debug, Clone)]
pub(crate) struct CandidateGrid {
    pub tracks: Vec<Track>,
    pub rays: Vec<Vec2>,
    ladder: Ladder,
}

/// Per-cell summary read from a [`CandidateGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CellSup {
    pub value: Option<f64>,
    pub count: usize,
    /// Every ray still has its innermost probe inside the ball, so the
    /// ladder reaches below the scale where that ray escapes.
    pub resolved: bool,
}

impl CandidateGrid {
    pub fn build(
        m: &MapObject,
        x: Point2,
        rays: Vec<Vec2>,
        ladder: &Ladder,
        n_max: usize,
        delta_max: f64,
    ) -> Result<Self> {
        let d = *m.domain();
        let orbit = m.iterate(x, n_max)?;
        let x = orbit[0];
        let offsets = ladder.offsets(delta_max);
        let mut tracks = Vec::with_capacity(rays.len() * offsets.len());
        for (ri, &ray) in rays.iter().enumerate() {
            for &eps in &offsets {
                let Some((y, _)) = probe(m, x, ray, eps) else { continue };
                let mut dist = Vec::with_capacity(n_max + 1);
                let mut prefix_max = Vec::with_capacity(n_max + 1);
                let mut b = y;
                let mut running: f64 = 0.0;
                for (j, &a) in orbit.iter().enumerate() {
                    if j > 0 {
                        b = m.evaluate(b)?;
                    }
                    let dj = raw_distance(&d, a, b);
                    running = running.max(dj);
                    dist.push(dj);
                    prefix_max.push(running);
                    if dj >= delta_max {
                        break;
                    }
                }
                tracks.push(Track {
                    ray: ri,
                    offset: eps,
                    dist,
                    prefix_max,
                });
            }
        }
        Ok(Self { tracks, rays, ladder: *ladder })
    }

    pub fn cell(&self, n: usize, delta: f64) -> CellSup {
        let top = self.ladder.top_factor * delta;
        let mut best: Option<f64> = None;
        let mut count = 0;
        // innermost probe per ray, and whether it is inside
        let mut innermost: Vec<Option<(f64, bool)>> = vec![None; self.rays.len()];
        for t in &self.tracks {
            if t.offset > top {
                continue;
            }
            let inside = t.inside(n, delta);
            let slot = &mut innermost[t.ray];
            if slot.is_none_or(|(eps, _)| t.offset < eps) {
                *slot = Some((t.offset, inside));
            }
            if inside {
                count += 1;
                let v = t.log_ratio(n);
                if best.is_none_or(|b| v > b) {
                    best = Some(v);
                }
            }
        }
        let resolved = innermost.iter().flatten().all(|&(_, inside)| inside);
        CellSup { value: best, count, resolved }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::maps::{cat_map, diagonal, example_map, identity, rotation};

    fn ln3() -> f64 {
        3f64.ln()
    }

    fn golden() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    /// Unstable eigenvector of the cat matrix.
    fn cat_unstable() -> Vec2 {
        Vec2::new(1.0, (5f64.sqrt() - 1.0) / 2.0).normalized().unwrap()
    }

    #[test]
    fn ladder_is_nested_across_radii() {
        let l = Ladder::default();
        let big = l.offsets(1e-2);
        let small = l.offsets(1e-4);
        assert!(small.iter().all(|e| big.contains(e)));
        assert!(big.iter().all(|&e| e >= l.floor && e <= 1e-4 * (1.0 + 1e-12)));
        assert_eq!(*big.last().unwrap(), l.floor);
    }

    #[test]
    fn rays_dedup_opposite_directions() {
        assert_eq!(Fan::Even(64).rays().len(), 64);
        let custom = Fan::Custom(vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)]);
        assert_eq!(custom.rays().len(), 6);
        assert!(Fan::Even(4).validate().is_err());
    }

    #[test]
    fn rotation_keeps_half_delta_points_inside() {
        let m = rotation(0.9);
        let x = Point2::new(0.2, 0.1);
        let delta = 0.01;
        let y = x.offset(Vec2::new(0.6, 0.8) * (delta / 2.0));
        for n in [0, 1, 10, 100] {
            assert_eq!(in_dynamical_ball(&m, x, y, delta, n).unwrap(), (true, None));
        }
    }

    #[test]
    fn a_point_is_in_its_own_ball() {
        for m in [cat_map(), example_map(), identity(Domain::Plane)] {
            let x = Point2::new(0.3, 0.2);
            assert_eq!(in_dynamical_ball(&m, x, x, 1e-6, 50).unwrap(), (true, None));
        }
    }

    #[test]
    fn cat_unstable_escape_index_matches_brute_force() {
        let m = cat_map();
        let x = Point2::ORIGIN;
        let eps = 1e-9;
        let delta = 1e-3;
        let y = Domain::unit_torus().canonicalize(x.offset(cat_unstable() * eps));
        // brute force: first j where eps * lambda^j >= delta
        let mut j_star = 0;
        while eps * golden().powi(j_star) < delta {
            j_star += 1;
        }
        let (inside, esc) = in_dynamical_ball(&m, x, y, delta, 40).unwrap();
        assert!(!inside);
        assert_eq!(esc, Some(j_star as usize));
        // and the closed form with c = 1
        let closed = ((delta / eps).ln() / golden().ln()).ceil() as usize;
        assert_eq!(esc, Some(closed));
    }

    #[test]
    fn delta_ratio_examples() {
        let id = identity(Domain::Plane);
        assert_eq!(delta_ratio(&id, 7, Point2::new(0.1, 0.2), Point2::new(0.4, -0.3)).unwrap(), 1.0);

        let f = example_map();
        let h = 1e-4;
        let r = delta_ratio(&f, 5, Point2::ORIGIN, Point2::new(h, h)).unwrap();
        assert!((r - 32.0).abs() < 1e-12);

        let double = diagonal(2.0, 2.0);
        for n in 0..12 {
            let r = delta_ratio(&double, n, Point2::new(0.3, -0.1), Point2::new(-0.2, 0.5)).unwrap();
            assert_eq!(r, 2f64.powi(n as i32));
        }

        let err = delta_ratio(&id, 3, Point2::ORIGIN, Point2::new(1e-13, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSeparation { .. }));
    }

    #[test]
    fn line_candidates_on_isometries_are_all_retained() {
        let ladder = Ladder { floor: 1e-8, top_factor: 0.1, ..Ladder::default() };
        for m in [identity(Domain::unit_torus()), rotation(0.4)] {
            let c = sample_line_candidates(&m, Point2::new(0.3, 0.2), Vec2::new(1.0, 2.0), 0.1, 10, &ladder).unwrap();
            assert_eq!(c.len(), 2 * ladder.offsets(0.1).len());
            assert!(c.iter().all(|c| c.escape_index.is_none()));
        }
    }

    #[test]
    fn cat_line_candidates_keep_only_small_offsets() {
        let m = cat_map();
        let delta = 1e-3;
        let n = 20;
        let ladder = Ladder { floor: 1e-12, ..Ladder::default() };
        let c = sample_line_candidates(&m, Point2::ORIGIN, cat_unstable(), delta, n, &ladder).unwrap();
        for cand in &c {
            let eps = cand.initial_offset.norm();
            // brute-force oracle: iterate the probe by hand
            let brute = in_dynamical_ball(&m, Point2::ORIGIN, cand.y, delta, n).unwrap();
            assert_eq!(cand.escape_index.is_none(), brute.0);
            // along the unstable line the separation is eps * lambda^j
            assert_eq!(brute.0, eps * golden().powi(n as i32) < delta);
        }
        assert!(c.iter().any(|c| c.escape_index.is_none()));
        assert!(c.iter().any(|c| c.escape_index.is_some()));
    }

    #[test]
    fn empty_line_is_an_error() {
        let m = cat_map();
        let err = sample_line_candidates(&m, Point2::ORIGIN, cat_unstable(), 1e-4, 40, &Ladder::default());
        assert!(matches!(err, Err(Error::EmptyCandidateSet { .. })));
    }

    #[test]
    fn ball_candidates_on_identity_are_directions_times_ladder() {
        let m = identity(Domain::unit_torus());
        let ladder = Ladder::default();
        let c = sample_ball_candidates(&m, Point2::new(0.5, 0.5), 1e-2, 5, &Fan::Even(16), &ladder).unwrap();
        assert_eq!(c.len(), 16 * ladder.offsets(1e-2).len());
    }

    #[test]
    fn line_candidates_are_a_subset_of_ball_candidates() {
        let m = cat_map();
        let x = Point2::new(0.31, 0.77);
        let fan = Fan::Even(16);
        let ladder = Ladder::default();
        let ball = sample_ball_candidates(&m, x, 1e-2, 4, &fan, &ladder).unwrap();
        let v = fan.directions()[3];
        let line = sample_line_candidates(&m, x, v, 1e-2, 4, &ladder).unwrap();
        for c in line {
            assert!(ball.iter().any(|b| (b.initial_offset - c.initial_offset).norm() < DEDUP_TOLERANCE));
        }
    }

    #[test]
    fn example_map_argmax_is_on_the_horizontal_line() {
        let fan = Fan::Custom(vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)]);
        let ladder = Ladder { floor: 1e-12, ..Ladder::default() };
        let f = example_map();
        let c = sample_ball_candidates(&f, Point2::ORIGIN, 1e-2, 10, &fan, &ladder).unwrap();
        let sup = sup_log_delta(&f, Point2::ORIGIN, 10, 1e-2, &c).unwrap();
        let line = sup.argmax_candidate.on_line.unwrap();
        assert!(line.dy.abs() < 1e-15 && line.dx.abs() == 1.0);
        assert!((sup.value - 10.0 * ln3()).abs() < 1e-6);
    }

    #[test]
    fn sup_examples() {
        let ladder = Ladder::default();
        let id = identity(Domain::unit_torus());
        let x = Point2::new(0.4, 0.6);
        let c = sample_ball_candidates(&id, x, 1e-2, 6, &Fan::Even(16), &ladder).unwrap();
        assert_eq!(sup_log_delta(&id, x, 6, 1e-2, &c).unwrap().value, 0.0);

        // closed form for diag(2, 1/2): attained on the expanding axis
        let m = diagonal(2.0, 0.5);
        let n = 8;
        let c = sample_ball_candidates(&m, Point2::ORIGIN, 1e-2, n, &Fan::Even(8), &ladder).unwrap();
        let sup = sup_log_delta(&m, Point2::ORIGIN, n, 1e-2, &c).unwrap();
        assert!((sup.value - n as f64 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn grid_cells_agree_with_the_reference_path() {
        let m = cat_map();
        let x = Point2::new(0.137, 0.552);
        let fan = Fan::Even(16);
        let ladder = Ladder::default();
        let grid = CandidateGrid::build(&m, x, fan.rays(), &ladder, 12, 1e-2).unwrap();
        for n in [4, 8, 12] {
            for delta in [1e-2, 1e-3] {
                let cell = grid.cell(n, delta);
                let reference = sample_ball_candidates(&m, x, delta, n, &fan, &ladder)
                    .and_then(|c| sup_log_delta(&m, x, n, delta, &c));
                match (cell.value, reference) {
                    (Some(v), Ok(r)) => {
                        assert!((v - r.value).abs() < 1e-12);
                        assert_eq!(cell.count, r.candidate_count);
                    }
                    (None, Err(Error::EmptyCandidateSet { .. })) => {}
                    other => panic!("grid and reference disagree: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn resolution_flags_ladder_exhaustion() {
        // along the unstable line at n = 20 the floor 1e-8 escapes any 1e-2 ball
        let m = cat_map();
        let fan = Fan::Custom(vec![cat_unstable()]);
        let grid = CandidateGrid::build(&m, Point2::ORIGIN, fan.rays(), &Ladder::default(), 20, 1e-2).unwrap();
        assert!(grid.cell(5, 1e-2).resolved);
        assert!(!grid.cell(20, 1e-2).resolved);
        let linear = diagonal(2.0, 0.5);
        let g = CandidateGrid::build(&linear, Point2::ORIGIN, Fan::Even(8).rays(), &Ladder::default(), 10, 1e-2)
            .unwrap();
        assert!(g.cell(10, 1e-2).resolved);
    }
}
