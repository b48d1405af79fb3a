//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`); the process exits
//! non-zero when any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use orbifold_geodesics::curves::{ClosedPair, DiscreteCurve, Partition};
use orbifold_geodesics::isogroup::{fixed_point_test, translation_length, IsometryGroup, LengthMode, Word};
use orbifold_geodesics::modelspace::{dist, exp, log, sample_point, sample_tangent, uniqueness_radius, SpaceId};
use orbifold_geodesics::scenario::{self, Problem};
use orbifold_geodesics::shortening::{
    axis_via_displacement_min, double_shorten, folded_wall_contacts, iterate, max_node_displacement, recenter,
    verify_with_tolerance, ConfigOptions, GeodesicResult, GeodesicStatus, ShorteningConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::Family;

const SEED: u64 = 0x5eed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&mut Suite) -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(group: &IsometryGroup, pair: &ClosedPair) -> GeodesicResult {
    let cfg = ShorteningConfig::for_pair(pair, &ConfigOptions::default()).unwrap();
    iterate(pair, group, &cfg).unwrap()
}

fn orbifold(name: &str) -> (IsometryGroup, ClosedPair) {
    match common::prepared(name).problem {
        Problem::Orbifold { group, pair } => (group, pair),
        Problem::Foliation { .. } => panic!("{name} is a foliation scenario"),
    }
}

/// Shared state: every curve generated along the way is checked against the
/// energy-length inequality in the last criterion.
struct Suite {
    families: Vec<Family>,
    curves_checked: usize,
    worst_energy_gap: f64,
}

impl Suite {
    fn record(&mut self, curve: &DiscreteCurve) {
        let gap = curve.energy() - curve.length().powi(2) / 2.0;
        self.curves_checked += 1;
        self.worst_energy_gap = self.worst_energy_gap.min(gap);
    }
}

fn monotonicity(s: &mut Suite) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pairs = 1000;
    let mut worst_rise = f64::NEG_INFINITY;
    let fams = s.families.clone();
    for i in 0..pairs {
        let fam = &fams[i % fams.len()];
        let jitter = rng.random_range(0.0..0.4);
        let pair = common::random_pair(&fam.w0, &mut rng, jitter);
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let next = double_shorten(&pair, &cfg).unwrap();
        s.record(pair.curve());
        s.record(next.curve());
        worst_rise = worst_rise.max(next.energy() - pair.energy());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_rise <= 1e-12 && secs < 30.0,
        format!("{pairs} pairs over {} families, largest energy change {worst_rise:.2e}, {secs:.2} s", fams.len()),
    )
}

fn exact_geodesics_fixed(s: &mut Suite) -> Outcome {
    let mut worst_move: f64 = 0.0;
    let mut worst_de: f64 = 0.0;
    let mut count = 0;
    let fams = s.families.clone();
    for fam in &fams {
        if !fixed_point_test(&fam.w0).is_free() {
            continue;
        }
        let exact = axis_via_displacement_min(&fam.w0, &fam.group).unwrap().pair;
        let cfg = ShorteningConfig::for_pair(&exact, &ConfigOptions::default()).unwrap();
        let next = double_shorten(&exact, &cfg).unwrap();
        let mut at: Vec<f64> = next.curve().partition().values().to_vec();
        at.extend(exact.curve().partition().values());
        at.sort_by(f64::total_cmp);
        at.dedup();
        let at = Partition::new(at).unwrap();
        let moved = max_node_displacement(exact.curve(), next.curve(), &at).unwrap();
        s.record(next.curve());
        worst_move = worst_move.max(moved);
        worst_de = worst_de.max((next.energy() - exact.energy()).abs());
        count += 1;
    }
    check(
        worst_move < 1e-10 && worst_de < 1e-12 && count > 0,
        format!("{count} catalog geodesics, node movement {worst_move:.2e}, energy change {worst_de:.2e}"),
    )
}

fn torus_zigzag(s: &mut Suite) -> Outcome {
    let (group, pair) = orbifold("torus-translation");
    let start = Instant::now();
    let r = run(&group, &pair);
    let secs = start.elapsed().as_secs_f64();
    s.record(r.pair.curve());
    let err = (r.length - 1.0).abs();
    check(
        r.status == GeodesicStatus::NontrivialGeodesic && err <= 1e-8 && r.iterations <= 500 && secs < 1.0,
        format!("length error {err:.2e}, {} iterations, {secs:.3} s", r.iterations),
    )
}

fn sphere_antipodal(s: &mut Suite) -> Outcome {
    let (group, pair) = orbifold("sphere-antipodal");
    let r = run(&group, &pair);
    s.record(r.pair.curve());
    let err = (r.length - PI).abs();
    let report = verify_with_tolerance(&r.pair, 1e-6);
    check(
        r.status == GeodesicStatus::NontrivialGeodesic && err <= 1e-6 && report.passed,
        format!("length error {err:.2e}, worst angle {:.2e}", report.worst_angle),
    )
}

fn interval_billiard(s: &mut Suite) -> Outcome {
    let (group, pair) = orbifold("affine-weyl-a1");
    let expected = group.element(&Word::parse("1 0").unwrap()).unwrap();
    if pair.closure().distance(&expected) > 1e-12 {
        return Err("closure is not r1 r0".into());
    }
    let r = run(&group, &pair);
    s.record(r.pair.curve());
    let err = (r.length - 2.0).abs();
    let contacts = folded_wall_contacts(r.pair.curve(), &group, 400).unwrap();
    let alternating = contacts.len() >= 2 && contacts.windows(2).all(|w| w[0] != w[1]);
    check(
        r.status == GeodesicStatus::NontrivialGeodesic && err <= 1e-8 && alternating,
        format!("length error {err:.2e}, wall contacts {contacts:?}"),
    )
}

fn screw_motion(s: &mut Suite) -> Outcome {
    let (group, pair) = orbifold("screw");
    let grid = common::grid_translation_length(pair.closure(), 3.0, 0.05);
    let r = run(&group, &pair);
    let axis = axis_via_displacement_min(pair.closure(), &group).unwrap();
    s.record(r.pair.curve());
    let off_axis = r
        .pair
        .curve()
        .nodes()
        .iter()
        .chain(axis.pair.curve().nodes())
        .map(|p| p.coords()[0].hypot(p.coords()[1]))
        .fold(0.0, f64::max);
    let (e1, e2, e3) = ((r.length - grid).abs(), (axis.length - grid).abs(), (grid - 2.0).abs());
    check(
        e1 <= 1e-6 && e2 <= 1e-6 && e3 <= 1e-6 && off_axis <= 1e-6,
        format!("grid {grid:.12}, iterate error {e1:.2e}, axis error {e2:.2e}, distance from z-axis {off_axis:.2e}"),
    )
}

fn nontriviality(s: &mut Suite) -> Outcome {
    let mut kinds = [false; 3];
    let mut count = 0;
    let mut failures = Vec::new();
    let fams = s.families.clone();
    for fam in &fams {
        if !fixed_point_test(&fam.w0).is_free() {
            continue;
        }
        let r = run(&fam.group, &fam.pair);
        s.record(r.pair.curve());
        let tl = translation_length(&fam.w0, LengthMode::Analytic).value;
        if r.status != GeodesicStatus::NontrivialGeodesic || r.length < tl - 1e-6 {
            failures.push(format!("{} ({}, {} < {tl})", fam.name, r.status, r.length));
        }
        count += 1;
        match fam.w0.space() {
            SpaceId::Euclidean { .. } => kinds[0] = true,
            SpaceId::Sphere { .. } => kinds[1] = true,
            SpaceId::Hyperbolic2 => kinds[2] = true,
        }
    }
    check(
        failures.is_empty() && count >= 6 && kinds.iter().all(|&k| k),
        if failures.is_empty() {
            format!("{count} fixed-point-free scenarios across Euclidean, spherical and hyperbolic groups")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn foliation_reduction(s: &mut Suite) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, expected, tol) in [
        ("foliation-torus-11", 0.5f64.sqrt(), 1e-8),
        ("foliation-torus-21", 0.2f64.sqrt(), 1e-8),
        ("foliation-suspension-antipodal", PI, 1e-6),
    ] {
        let prepared = common::prepared(name);
        let output = scenario::execute(&prepared).unwrap();
        let oracle = scenario::oracle(&prepared).unwrap().shortest_horizontal_length.unwrap();
        let report = output.report;
        let err = (report.length - expected).abs();
        let horizontal = report.horizontal.as_ref().is_some_and(|h| h.passed);
        ok &= err <= tol && (oracle - expected).abs() <= tol && horizontal;
        lines.push(format!("{name} error {err:.2e}"));
        let _ = &s;
    }
    check(ok, lines.join(", "))
}

fn equivariance(s: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let weyl: Vec<Family> = s.families.iter().filter(|f| f.name.starts_with("affine-weyl")).cloned().collect();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let fam = &weyl[i % weyl.len()];
        let jitter = rng.random_range(0.0..0.4);
        let pair = common::random_pair(&fam.w0, &mut rng, jitter);
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let (moved, k) = recenter(&pair, &fam.group).unwrap();
        let a = double_shorten(&moved, &cfg).unwrap();
        let b = double_shorten(&pair, &cfg).unwrap().curve().mapped(&k).unwrap();
        s.record(a.curve());
        for (x, y) in a.curve().nodes().iter().zip(b.nodes()) {
            worst = worst.max(dist(x, y).unwrap());
        }
    }
    let mut worst_conj: f64 = 0.0;
    for fam in &s.families {
        let g = fam.group.generators().len();
        for _ in 0..20 {
            let mut word = Word::empty();
            for _ in 0..rng.random_range(1..=4) {
                word = word.concat(&Word::power(rng.random_range(0..g), if rng.random_bool(0.5) { 1 } else { -1 }));
            }
            let k = fam.group.element(&word).unwrap();
            let a = translation_length(&fam.w0, LengthMode::Analytic).value;
            let b = translation_length(&fam.w0.conjugate_by(&k).unwrap(), LengthMode::Analytic).value;
            worst_conj = worst_conj.max((a - b).abs());
        }
    }
    check(
        worst <= 1e-9 && worst_conj <= 1e-8,
        format!("100 affine Weyl pairs, node difference {worst:.2e}, conjugation length change {worst_conj:.2e}"),
    )
}

fn kernels(s: &mut Suite, suite_start: Instant) -> Outcome {
    let spaces = [
        SpaceId::euclidean(1),
        SpaceId::euclidean(2),
        SpaceId::euclidean(3),
        SpaceId::sphere(1),
        SpaceId::sphere(2),
        SpaceId::sphere(3),
        SpaceId::hyperbolic2(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut worst: f64 = 0.0;
    for space in spaces {
        let max = 0.9 * uniqueness_radius(space).min(5.0);
        for _ in 0..1000 {
            let p = sample_point(space, &mut rng, 2.0);
            let v = sample_tangent(&p, &mut rng, max);
            let back = log(&p, &exp(&p, &v).unwrap()).unwrap();
            let err = space.tangent_norm(&(back.vec() - v.vec())) / v.norm().max(1.0);
            worst = worst.max(err);
        }
    }
    let elapsed = suite_start.elapsed();
    check(
        worst <= 1e-9 && s.worst_energy_gap >= -1e-12 && elapsed < Duration::from_secs(120),
        format!(
            "round trip {worst:.2e} over {} samples, energy - length²/2 >= {:.2e} on {} curves, suite {:.2} s",
            1000 * spaces.len(),
            s.worst_energy_gap,
            s.curves_checked,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let mut suite = Suite {
        families: common::families(),
        curves_checked: 0,
        worst_energy_gap: f64::INFINITY,
    };
    let criteria: [Criterion; 9] = [
        ("energy monotonicity", monotonicity),
        ("exact geodesics are fixed", exact_geodesics_fixed),
        ("flat torus zigzag", torus_zigzag),
        ("sphere antipodal", sphere_antipodal),
        ("interval billiard", interval_billiard),
        ("screw motion", screw_motion),
        ("nontriviality", nontriviality),
        ("foliation reduction", foliation_reduction),
        ("equivariance and conjugation", equivariance),
    ];
    let mut failed = 0;
    let mut report = |i: usize, name: &str, outcome: Outcome, secs: f64| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {i:>2} {name}: {detail} ({secs:.2} s)");
    };
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut suite)))
            .unwrap_or_else(|_| Err("panicked".into()));
        report(i + 1, name, outcome, t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    let outcome = kernels(&mut suite, suite_start);
    report(10, "kernel checks", outcome, t.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
