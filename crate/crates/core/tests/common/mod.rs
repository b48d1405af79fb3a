#![allow(dead_code)]

use std::path::{Path, PathBuf};

use orbifold_geodesics::curves::{ClosedPair, DiscreteCurve};
use orbifold_geodesics::foliation;
use orbifold_geodesics::isogroup::{IsometryGroup, Isometry};
use orbifold_geodesics::modelspace::{exp, sample_point, sample_tangent, SpaceId};
use orbifold_geodesics::scenario::{self, Prepared, Problem};
use orbifold_geodesics::shortening::{auto_pair, ConfigOptions};
use rand::Rng;

/// A group and closure element taken from one catalog scenario. Foliation
/// scenarios contribute their transverse model.
#[derive(Debug, Clone)]
pub struct Family {
    pub name: String,
    pub group: IsometryGroup,
    pub w0: Isometry,
    pub pair: ClosedPair,
}

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn scenario_path(name: &str) -> PathBuf {
    scenario_dir().join(format!("{name}.json"))
}

pub fn prepared(name: &str) -> Prepared {
    scenario::prepare(scenario::load_scenario(&scenario_path(name)).unwrap()).unwrap()
}

pub fn catalog_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn families() -> Vec<Family> {
    catalog_names()
        .into_iter()
        .map(|name| {
            let p = prepared(&name);
            match p.problem {
                Problem::Orbifold { group, pair } => Family {
                    name,
                    group,
                    w0: pair.closure().clone(),
                    pair,
                },
                Problem::Foliation { model, hint } => {
                    let found =
                        foliation::find_horizontal_periodic_geodesic(&model, &hint, &ConfigOptions::default()).unwrap();
                    Family {
                        name,
                        group: found.model.group.clone(),
                        w0: found.closure.clone(),
                        pair: found.initial.clone(),
                    }
                }
            }
        })
        .collect()
}

fn base_radius(space: SpaceId) -> f64 {
    match space {
        SpaceId::Hyperbolic2 => 0.6,
        _ => 1.0,
    }
}

/// Random closed pair for `w0`: a broken geodesic from a random point to its
/// translate with interior nodes pushed off by up to `jitter`.
pub fn random_pair<R: Rng>(w0: &Isometry, rng: &mut R, jitter: f64) -> ClosedPair {
    let space = w0.space();
    loop {
        let p = sample_point(space, rng, base_radius(space));
        let segments = rng.random_range(4..=10);
        let Ok(pair) = auto_pair(&p, w0, segments) else { continue };
        let (curve, w) = pair.into_parts();
        let mut nodes = curve.nodes().to_vec();
        let last = nodes.len() - 1;
        for q in &mut nodes[1..last] {
            let v = sample_tangent(q, rng, jitter);
            *q = exp(q, &v).unwrap();
        }
        let curve = DiscreteCurve::new(curve.partition().clone(), nodes).unwrap();
        if let Ok(pair) = ClosedPair::new(curve, w) {
            return pair;
        }
    }
}

/// |w·x − x| minimized over a grid on [−half, half]ⁿ, then refined by a
/// shrinking compass search around the best grid point.
pub fn grid_translation_length(w: &Isometry, half: f64, step: f64) -> f64 {
    let n = w.linear().nrows();
    let disp = |x: &[f64]| {
        let v = nalgebra::DVector::from_column_slice(x);
        (w.linear() * &v + w.translation_part() - v).norm()
    };
    let ticks = (2.0 * half / step).round() as usize;
    let mut idx = vec![0usize; n];
    let mut best = (f64::INFINITY, vec![0.0; n]);
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| -half + i as f64 * step).collect();
        let d = disp(&x);
        if d < best.0 {
            best = (d, x);
        }
        let mut i = 0;
        while i < n && idx[i] == ticks {
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        idx[i] += 1;
    }
    let (mut value, mut x) = best;
    let mut h = step;
    while h > 1e-13 {
        let mut improved = false;
        for i in 0..n {
            for s in [-1.0, 1.0] {
                let mut y = x.clone();
                y[i] += s * h;
                let d = disp(&y);
                if d < value {
                    (value, x, improved) = (d, y, true);
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    value
}
