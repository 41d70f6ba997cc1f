//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use newlyap::cli::{self, ExperimentKind, RunConfig, SchedulePreset};
use newlyap::dynball::{delta_ratio, sample_ball_candidates, sup_log_delta, Fan, Ladder};
use newlyap::experiments::{
    hyperbolic_eigen, run_example_experiment, run_invariance_experiment, run_oseledets_experiment,
    sample_points, subadditivity_check, ExampleParams, ExperimentReport, InvarianceParams, OseledetsParams,
};
use newlyap::exponents::{new_top_exponent, Schedule};
use newlyap::geometry::{Domain, Matrix2, Point2, Vec2};
use newlyap::maps::{
    cat_map, conjugate_by_homothety, diagonal, disc_standin, identity, rotation, standard_map, MapObject, MapSpec, StandinParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn failures(r: &ExperimentReport) -> String {
    let f: Vec<String> = r
        .failures()
        .take(3)
        .map(|c| format!("{} measured {:?} expected {} tol {}", c.description, c.measured, c.expected, c.tolerance))
        .collect();
    if f.is_empty() {
        String::new()
    } else {
        format!("; first failures: {}", f.join(" | "))
    }
}

fn run_cfg(cfg: &RunConfig, threads: Option<usize>) -> ExperimentReport {
    cli::with_threads(threads, || cli::execute(cfg)).unwrap().unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let r = cli::with_threads(Some(1), || run_example_experiment(&Schedule::conic(), &ExampleParams::default()))
        .unwrap()
        .unwrap();
    let elapsed = started.elapsed();
    let values: Vec<String> = r
        .checks
        .iter()
        .filter(|c| c.description.starts_with("directional") || c.description == "top exponent")
        .map(|c| format!("{:.4}", c.measured.unwrap_or(f64::NAN)))
        .collect();
    let pass = r.passed() && elapsed <= Duration::from_secs(10);
    outcome(pass, format!("directional/top = [{}], {:.2}s single-threaded{}", values.join(", "), elapsed.as_secs_f64(), failures(&r)))
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let r = run_cfg(&RunConfig::with_defaults(ExperimentKind::Agreement, 2), None);
    let elapsed = started.elapsed();
    let worst = r
        .checks
        .iter()
        .filter(|c| c.description.contains("top exponent, new vs classical"))
        .filter_map(|c| c.measured.map(|m| (m - c.expected).abs()))
        .fold(0.0, f64::max);
    let oracle = r.checks.iter().filter(|c| c.description.contains("eigenvalue")).count();
    let pass = r.passed() && oracle > 0 && elapsed <= Duration::from_secs(300);
    outcome(
        pass,
        format!("{} rows, worst top gap {worst:.4}, {oracle} eigenvalue rows, {:.1}s{}", r.checks.len(), elapsed.as_secs_f64(), failures(&r)),
    )
}

fn criterion_3() -> Outcome {
    let r = run_cfg(&RunConfig::with_defaults(ExperimentKind::Zero, 3), None);
    let worst_top = r.checks.iter().filter(|c| c.description.contains("top exponent")).filter_map(|c| c.measured).fold(0.0, |a: f64, m| a.max(m.abs()));
    let worst_lambda = r.checks.iter().filter(|c| c.description.contains("area integral")).filter_map(|c| c.measured).fold(0.0, |a: f64, m| a.max(m.abs()));
    outcome(r.passed(), format!("max |top| {worst_top:.2e}, max |Lambda| {worst_lambda:.2e}{}", failures(&r)))
}

fn criterion_4() -> Outcome {
    let cat = run_invariance_experiment(&MapSpec::Cat {}, &Schedule::default(), &InvarianceParams::default(), 4).unwrap();
    let rot = run_invariance_experiment(
        &MapSpec::by_name("rotation").unwrap(),
        &SchedulePreset::Coarse.schedule(),
        &InvarianceParams { tolerance: 1e-9, ..Default::default() },
        4,
    )
    .unwrap();
    let worst = |r: &ExperimentReport| {
        r.checks.iter().filter(|c| c.description.contains("matches x")).filter_map(|c| c.measured).fold(0.0, f64::max)
    };
    outcome(
        cat.passed() && rot.passed(),
        format!("cat max deviation {:.4}, rotation max deviation {:.2e}{}{}", worst(&cat), worst(&rot), failures(&cat), failures(&rot)),
    )
}

fn random_case(rng: &mut ChaCha8Rng, maps: &[MapObject]) -> (usize, Point2) {
    let i = rng.gen_range(0..maps.len());
    let p = sample_points(maps[i].domain(), 1, rng.gen(), 0)[0];
    (i, p)
}

fn criterion_5() -> Outcome {
    let maps = [cat_map(), standard_map(1.5), standard_map(0.5), rotation(0.7), disc_standin(StandinParams::default()).unwrap(), diagonal(2.0, 0.5)];
    let deltas = [3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let (fan, ladder) = (Fan::default(), Ladder::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut compared = 0;
    for _ in 0..100 {
        let (i, x) = random_case(&mut rng, &maps);
        let n = rng.gen_range(1..=12);
        let mut prev = f64::INFINITY;
        for &delta in &deltas {
            let value = sample_ball_candidates(&maps[i], x, delta, n, &fan, &ladder)
                .and_then(|c| sup_log_delta(&maps[i], x, n, delta, &c))
                .map(|s| s.value)
                .unwrap_or(f64::NEG_INFINITY);
            if value > prev {
                violations += 1;
            }
            compared += 1;
            prev = value;
        }
    }
    outcome(violations == 0, format!("100 cases, {compared} radii, {violations} violations"))
}

fn criterion_6() -> Outcome {
    let (fan, ladder) = (Fan::default(), Ladder::default());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let linear = [diagonal(2.0, 0.5), diagonal(4.0, 0.25), identity(Domain::unit_torus())];
    let mut linear_worst = f64::NEG_INFINITY;
    let mut linear_cases = 0;
    for _ in 0..30 {
        let (i, x) = random_case(&mut rng, &linear);
        let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        if let Ok(row) = subadditivity_check(&linear[i], x, n, k, 1e-2, &fan, &ladder) {
            linear_worst = linear_worst.max(row.slack()).max(row.lhs - row.rhs_shared);
            linear_cases += 1;
        }
    }
    let nonlinear = [cat_map(), standard_map(0.5), standard_map(1.5), disc_standin(StandinParams::default()).unwrap()];
    let mut worst = f64::NEG_INFINITY;
    let mut shared_worst = f64::NEG_INFINITY;
    let mut errors = 0;
    for _ in 0..50 {
        let (i, x) = random_case(&mut rng, &nonlinear);
        let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        match subadditivity_check(&nonlinear[i], x, n, k, 1e-2, &fan, &ladder) {
            Ok(row) => {
                worst = worst.max(row.slack());
                shared_worst = shared_worst.max(row.lhs - row.rhs_shared);
            }
            Err(_) => errors += 1,
        }
    }
    let pass = linear_cases == 30 && linear_worst <= 1e-12 && errors == 0 && worst <= 0.1 && shared_worst <= 1e-12;
    outcome(
        pass,
        format!(
            "linear: {linear_cases} cases, max excess {linear_worst:.1e}; nonlinear: 50 cases, max slack {worst:.4}, shared-candidate excess {shared_worst:.1e}, {errors} errors"
        ),
    )
}

fn criterion_7() -> Outcome {
    let maps = [rotation(1.0), disc_standin(StandinParams::default()).unwrap(), identity(Domain::unit_disc())];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // exact homotheties: center 0, power-of-two ratio
    let mut worst_ratio: f64 = 0.0;
    let mut generic_worst: f64 = 0.0;
    for case in 0..100 {
        let i = case % maps.len();
        let m = &maps[i];
        let ratio = 2f64.powi(rng.gen_range(-4..=4));
        let lm = conjugate_by_homothety(m, Point2::ORIGIN, ratio).unwrap();
        // resample until the partner point is inside the disc
        let (x, y) = loop {
            let x = sample_points(m.domain(), 1, rng.gen(), 0)[0];
            let (eps, a) = (10f64.powf(rng.gen_range(-4.0..-1.0)), rng.gen_range(0.0..std::f64::consts::TAU));
            let y = Point2::new(x.x + eps * a.cos(), x.y + eps * a.sin());
            if m.domain().contains(y) {
                break (x, y);
            }
        };
        let n = rng.gen_range(1..=8);
        let l = |p: Point2, c: Point2, r: f64| Point2::new(c.x + r * p.x, c.y + r * p.y);
        let d0 = delta_ratio(m, n, x, y).unwrap();
        let d1 = delta_ratio(&lm, n, l(x, Point2::ORIGIN, ratio), l(y, Point2::ORIGIN, ratio)).unwrap();
        worst_ratio = worst_ratio.max((d0 - d1).abs() / d0);
        // informational: generic center and ratio
        let c = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let r = rng.gen_range(0.2..3.0);
        let gm = conjugate_by_homothety(m, c, r).unwrap();
        let d2 = delta_ratio(&gm, n, l(x, c, r), l(y, c, r)).unwrap();
        generic_worst = generic_worst.max((d0 - d2).abs() / d0);
    }
    let mut worst_exp: f64 = 0.0;
    let mut exp_cases = 0;
    let mut mismatched_errors = 0;
    for (i, m) in maps.iter().enumerate() {
        for ratio in [0.125, 0.25, 2.0, 4.0] {
            let lm = conjugate_by_homothety(m, Point2::ORIGIN, ratio).unwrap();
            let s = Schedule::default();
            for x in sample_points(m.domain(), 5, 70 + i as u64, 0) {
                let e0 = new_top_exponent(m, x, &s).map(|e| e.value);
                let e1 = new_top_exponent(&lm, Point2::new(ratio * x.x, ratio * x.y), &s.scaled(ratio)).map(|e| e.value);
                match (e0, e1) {
                    (Ok(a), Ok(b)) => {
                        worst_exp = worst_exp.max((a - b).abs());
                        exp_cases += 1;
                    }
                    (Err(_), Err(_)) => {}
                    _ => mismatched_errors += 1,
                }
            }
        }
    }
    outcome(
        worst_ratio <= 1e-12 && worst_exp <= 1e-9 && mismatched_errors == 0 && exp_cases > 0,
        format!(
            "exact homotheties: 100 ratio cases, max relative error {worst_ratio:.1e}; {exp_cases} exponent cases, max difference {worst_exp:.1e}, {mismatched_errors} one-sided errors (generic center, informational: {generic_worst:.1e})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = RunConfig::with_defaults(ExperimentKind::LambdaJump, 8);
    let started = Instant::now();
    let r = run_cfg(&cfg, None);
    let elapsed = started.elapsed();
    let lambda = r.artifacts.iter().find(|t| t.name == "lambda_jump/lambda").unwrap();
    let values: Vec<String> = lambda
        .rows
        .iter()
        .map(|row| {
            let n = row[0].unwrap();
            let label = if n == 0.0 { "base".to_string() } else if n < 0.0 { "id".to_string() } else { format!("g{n}") };
            format!("{label}={:.4}", row[1].unwrap())
        })
        .collect();
    let q = cfg.quadrature();
    outcome(
        r.passed() && elapsed <= Duration::from_secs(900),
        format!("{} ({} {:?} points), {:.1}s{}", values.join(" "), q.sample_count, q.point_source, elapsed.as_secs_f64(), failures(&r)),
    )
}

fn criterion_9() -> Outcome {
    let r = run_oseledets_experiment(&MapSpec::Cat {}, &Schedule::default(), &OseledetsParams::default(), 9).unwrap();
    let worst_angle = r.checks.iter().filter(|c| c.description.contains("(rad)")).filter_map(|c| c.measured).fold(0.0, f64::max);
    let (u, s, log_l) = hyperbolic_eigen(&Matrix2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
    let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let oracle_ok = (log_l - golden).abs() < 1e-15 && u.line_angle(Vec2::new((1.0 + 5f64.sqrt()) / 2.0, 1.0)) < 1e-12 && u.dot(s).abs() < 1e-12;
    let growth = r.checks.iter().filter(|c| c.description.contains("derivative-free")).count();
    outcome(
        r.passed() && oracle_ok && worst_angle <= 1e-6 && growth > 0,
        format!("max angle {worst_angle:.1e} rad, {growth} derivative-free growth rows{}", failures(&r)),
    )
}

fn canonical(cfg: &RunConfig, mut r: ExperimentReport) -> String {
    r.wall_time = 0.0;
    cli::report_json(cfg, &r)
}

fn criterion_10() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let mut small_jump = RunConfig::with_defaults(ExperimentKind::LambdaJump, 10);
    small_jump.quadrature.as_mut().unwrap().sample_count = Some(211);
    small_jump.lambda_jump.as_mut().unwrap().distance_samples = 2000;
    let mut agreement = RunConfig::with_defaults(ExperimentKind::Agreement, 10);
    agreement.agreement.as_mut().unwrap().points_per_map = 6;
    for cfg in [agreement, RunConfig::with_defaults(ExperimentKind::Zero, 10), small_jump, RunConfig::with_defaults(ExperimentKind::Invariance, 10)] {
        let one = canonical(&cfg, run_cfg(&cfg, Some(1)));
        let many = canonical(&cfg, run_cfg(&cfg, Some(4)));
        let again = canonical(&cfg, run_cfg(&cfg, Some(4)));
        let same = one == many && many == again;
        pass &= same;
        details.push(format!("{}: {}", cfg.experiment, if same { "identical" } else { "DIFFERENT" }));
    }
    outcome(pass, format!("1 vs 4 threads: {}", details.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // `cargo test -- --list` and similar harness probes
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 10] = [
        ("example map values", criterion_1),
        ("new vs classical agreement", criterion_2),
        ("zero-exponent maps", criterion_3),
        ("orbit invariance", criterion_4),
        ("monotonicity in delta", criterion_5),
        ("subadditivity", criterion_6),
        ("homothety conjugation", criterion_7),
        ("area-integral jump at the identity", criterion_8),
        ("unstable and stable directions", criterion_9),
        ("determinism across thread counts", criterion_10),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        all &= o.pass;
        let line = format!("criterion {:>2} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        println!("{line}");
    }
    if !all {
        std::process::exit(1);
    }
}
