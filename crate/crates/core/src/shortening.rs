//! Double curve shortening for closed pairs (α, w⁰).
//!
//! One step P₀ resamples the curve at the t-partition tᵢ = i/k, extends it
//! backwards to [τ₀, 0] by pulling the tail back with (w⁰)⁻¹, resamples at the
//! interleaved τ-partition τᵢ = (2i − 1)/(2k), and pushes the head forward by
//! w⁰ to close the curve on [0, 1]. Energy never increases, and a pair is a
//! fixed point exactly when it is a closed geodesic of Σ/W.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curves::{ClosedPair, DiscreteCurve, Partition};
use crate::error::{Error, Result};
use crate::isogroup::{self, fixed_point_test, Isometry, IsometryGroup, LengthMode};
use crate::modelspace::{self, uniqueness_radius, Point, SpaceId};

/// Safety factor applied to the analytic uniqueness radius.
pub const RHO0_SAFETY: f64 = 0.9;
pub const DEFAULT_RHO0_CAP: f64 = 1.0;
pub const MIN_NODE_COUNT: usize = 8;
/// Consecutive quiet iterations required to declare convergence.
pub const PLATEAU_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub node_disp: f64,
    pub energy_decrement: f64,
    pub geodesic_angle: f64,
    pub trivial_length: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            node_disp: 1e-10,
            energy_decrement: 1e-12,
            geodesic_angle: 1e-6,
            trivial_length: 1e-6,
        }
    }
}

impl Tolerances {
    /// Sets a tolerance by name (`node_disp_tol`, `energy_decrement_tol`,
    /// `geodesic_angle_tol`, `trivial_length_tol`; the `_tol` suffix is optional).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance {name} must be positive")));
        }
        let slot = match name.trim_end_matches("_tol") {
            "node_disp" => &mut self.node_disp,
            "energy_decrement" => &mut self.energy_decrement,
            "geodesic_angle" => &mut self.geodesic_angle,
            "trivial_length" => &mut self.trivial_length,
            _ => return Err(Error::InvalidConfig(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecenterCadence {
    /// Every iteration when the group has a fold strategy, otherwise never.
    Auto,
    Every(usize),
    Never,
}

/// User-facing knobs from which a [`ShorteningConfig`] is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigOptions {
    pub node_count: Option<usize>,
    pub rho0_cap: f64,
    pub max_iter: usize,
    pub tolerances: Tolerances,
    pub recenter: RecenterCadence,
}

impl Default for ConfigOptions {
    fn default() -> Self {
        ConfigOptions {
            node_count: None,
            rho0_cap: DEFAULT_RHO0_CAP,
            max_iter: 100_000,
            tolerances: Tolerances::default(),
            recenter: RecenterCadence::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShorteningConfig {
    node_count: usize,
    rho0: f64,
    energy_bound: f64,
    pub tolerances: Tolerances,
    pub max_iter: usize,
    pub recenter: RecenterCadence,
}

impl ShorteningConfig {
    pub fn new(node_count: usize, rho0: f64, energy_bound: f64) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidConfig("node count must be positive".into()));
        }
        if !(rho0 > 0.0) || rho0.is_nan() {
            return Err(Error::InvalidConfig("rho0 must be positive".into()));
        }
        if !(energy_bound > 0.0) || !energy_bound.is_finite() {
            return Err(Error::InvalidConfig("energy bound must be positive and finite".into()));
        }
        let cfg = ShorteningConfig {
            node_count,
            rho0,
            energy_bound,
            tolerances: Tolerances::default(),
            max_iter: 100_000,
            recenter: RecenterCadence::Auto,
        };
        if cfg.mesh() >= cfg.mesh_bound() {
            return Err(Error::InvalidConfig(format!(
                "mesh 1/{node_count} violates the bound rho0^2/K = {:e}",
                cfg.mesh_bound()
            )));
        }
        Ok(cfg)
    }

    /// ρ₀ = min(0.9·radius, cap), K = E(α), and
    /// k = max(8, ⌈2K/ρ₀²⌉ + 1) unless overridden.
    pub fn for_pair(pair: &ClosedPair, options: &ConfigOptions) -> Result<Self> {
        let space = pair.curve().space();
        let rho0 = (RHO0_SAFETY * uniqueness_radius(space)).min(options.rho0_cap);
        let energy_bound = pair.energy().max(f64::MIN_POSITIVE);
        let node_count = match options.node_count {
            Some(k) => k,
            None => {
                let need = (2.0 * energy_bound / (rho0 * rho0)).ceil();
                if need > 1e7 {
                    return Err(Error::InvalidConfig(format!(
                        "initial energy {energy_bound:e} needs too many nodes for rho0 = {rho0}"
                    )));
                }
                MIN_NODE_COUNT.max(need as usize + 1)
            }
        };
        let mut cfg = ShorteningConfig::new(node_count, rho0, energy_bound)?;
        cfg.tolerances = options.tolerances;
        cfg.max_iter = options.max_iter;
        cfg.recenter = options.recenter;
        Ok(cfg)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn energy_bound(&self) -> f64 {
        self.energy_bound
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.node_count as f64
    }

    pub fn mesh_bound(&self) -> f64 {
        self.rho0 * self.rho0 / self.energy_bound
    }

    /// tᵢ = i/k, i = 0..=k.
    pub fn t_partition(&self) -> Partition {
        Partition::uniform(0.0, 1.0, self.node_count).expect("k >= 1")
    }

    /// τᵢ = (2i − 1)/(2k), i = 0..=k, so τ₀ = τ_k − 1 = −1/(2k).
    pub fn tau_partition(&self) -> Partition {
        let k = self.node_count as f64;
        Partition::new((0..=self.node_count).map(|i| (2.0 * i as f64 - 1.0) / (2.0 * k)).collect())
            .expect("increasing")
    }
}

/// Replaces the curve by the piecewise minimizing geodesic through its samples
/// at `partition`, which must span the same parameter interval.
pub fn p_hat(pair: &ClosedPair, partition: &Partition, rho0: f64) -> Result<ClosedPair> {
    let own = pair.curve().partition();
    let span = (own.end() - own.start()).abs().max(1.0);
    if (own.start() - partition.start()).abs() > 1e-15 * span || (own.end() - partition.end()).abs() > 1e-15 * span {
        return Err(Error::InvalidPartition(format!(
            "partition spans [{}, {}] but the curve is defined on [{}, {}]",
            partition.start(),
            partition.end(),
            own.start(),
            own.end()
        )));
    }
    let nodes = resample(pair.curve(), partition.values(), rho0)?;
    let curve = DiscreteCurve::new(partition.clone(), nodes)?;
    ClosedPair::new_unchecked(curve, pair.closure().clone())
}

fn resample(curve: &DiscreteCurve, at: &[f64], rho0: f64) -> Result<Vec<Point>> {
    let nodes = at.iter().map(|&s| curve.eval(s)).collect::<Result<Vec<_>>>()?;
    for (i, w) in nodes.windows(2).enumerate() {
        let d = modelspace::dist(&w[0], &w[1])?;
        if d >= rho0 {
            return Err(Error::NonUniqueGeodesic {
                segment: Some(i),
                distance: d,
                radius: rho0,
            });
        }
    }
    Ok(nodes)
}

/// Intermediate curves of one P₀ step.
#[derive(Debug, Clone)]
pub struct DoubleShortenSteps {
    /// P̂ at the t-partition, on [0, 1].
    pub first: ClosedPair,
    /// `first` extended to [τ₀, 0] by (w⁰)⁻¹ and restricted to [τ₀, τ_k].
    pub extended: ClosedPair,
    /// P̂ at the τ-partition, on [τ₀, τ_k].
    pub second: ClosedPair,
    /// `second` extended to [τ_k, 1] by w⁰ and restricted to [0, 1].
    pub result: ClosedPair,
}

pub fn double_shorten_steps(pair: &ClosedPair, cfg: &ShorteningConfig) -> Result<DoubleShortenSteps> {
    let w = pair.closure();
    let w_inv = w.inverse();
    let t = cfg.t_partition();
    let tau = cfg.tau_partition();
    let tv = tau.values();
    let k = cfg.node_count;

    let first = p_hat(pair, &t, cfg.rho0)?;
    let gamma_hat = first.curve();

    // γ̂(t) := (w⁰)⁻¹ γ̂(t + 1) on [τ₀, 0].
    let tail = gamma_hat.eval(tv[k])?;
    let mut ext_values = Vec::with_capacity(k + 2);
    let mut ext_nodes = Vec::with_capacity(k + 2);
    ext_values.push(tv[0]);
    ext_nodes.push(w_inv.apply(&tail)?);
    for i in 0..k {
        ext_values.push(t.values()[i]);
        ext_nodes.push(gamma_hat.nodes()[i].clone());
    }
    ext_values.push(tv[k]);
    ext_nodes.push(tail);
    let extended = ClosedPair::new_unchecked(
        DiscreteCurve::new(Partition::new(ext_values)?, ext_nodes)?,
        w.clone(),
    )?;

    let second = p_hat(&extended, &tau, cfg.rho0)?;

    // γ₀(t) := w⁰ γ₀(t − 1) on [τ_k, 1].
    let head = second.curve().eval(0.0)?;
    let mut values = Vec::with_capacity(k + 2);
    let mut nodes = Vec::with_capacity(k + 2);
    values.push(0.0);
    values.extend_from_slice(&tv[1..]);
    values.push(1.0);
    nodes.push(head.clone());
    nodes.extend(second.curve().nodes()[1..].iter().cloned());
    nodes.push(w.apply(&head)?);
    let result = ClosedPair::new_unchecked(DiscreteCurve::new(Partition::new(values)?, nodes)?, w.clone())?;

    Ok(DoubleShortenSteps {
        first,
        extended,
        second,
        result,
    })
}

/// One step of the double shortening map P₀.
pub fn double_shorten(pair: &ClosedPair, cfg: &ShorteningConfig) -> Result<ClosedPair> {
    Ok(double_shorten_steps(pair, cfg)?.result)
}

/// Closed pair along the minimizing geodesic from `p` to w⁰p, subdivided into
/// `segments` pieces. Nearly antipodal ends on a sphere are joined through a
/// midpoint instead.
pub fn auto_pair(p: &Point, w0: &Isometry, segments: usize) -> Result<ClosedPair> {
    let space = p.space();
    let q = w0.apply(p)?;
    let k = segments.max(2);
    let d = modelspace::dist(p, &q)?;
    let mut nodes: Vec<Point> = if d < 0.9 * uniqueness_radius(space) {
        (0..=k)
            .map(|i| modelspace::geodesic_point(p, &q, i as f64 / k as f64))
            .collect::<Result<_>>()?
    } else {
        let sum = p.coords() + q.coords();
        let mid = if sum.norm() > 1e-6 {
            Point::projected(space, sum)
        } else {
            Point::projected(space, modelspace::tangent_frame(p)[0].clone())
        };
        let h = k / 2;
        let mut nodes = Vec::with_capacity(k + 1);
        for i in 0..h {
            nodes.push(modelspace::geodesic_point(p, &mid, i as f64 / h as f64)?);
        }
        for i in 0..=(k - h) {
            nodes.push(modelspace::geodesic_point(&mid, &q, i as f64 / (k - h) as f64)?);
        }
        nodes
    };
    nodes[k] = q;
    ClosedPair::new(DiscreteCurve::uniform(nodes)?, w0.clone())
}

/// Folds node 0 into the fundamental domain, maps the whole curve by the fold
/// element k and conjugates the closure element to k·w⁰·k⁻¹.
pub fn recenter(pair: &ClosedPair, group: &IsometryGroup) -> Result<(ClosedPair, Isometry)> {
    let (k, _) = isogroup::fold(group, pair.curve().first())?;
    let curve = pair.curve().mapped(&k)?;
    let closure = pair.closure().conjugate_by(&k)?;
    Ok((ClosedPair::new_unchecked(curve, closure)?, k))
}

/// sup over `at` of the distance between two curves evaluated there.
pub fn max_node_displacement(a: &DiscreteCurve, b: &DiscreteCurve, at: &Partition) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &s in at.values() {
        worst = worst.max(modelspace::dist(&a.eval(s)?, &b.eval(s)?)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicStatus {
    NontrivialGeodesic,
    TrivialPoint,
    MaxIterReached,
}

impl std::fmt::Display for GeodesicStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GeodesicStatus::NontrivialGeodesic => "nontrivial_geodesic",
            GeodesicStatus::TrivialPoint => "trivial_point",
            GeodesicStatus::MaxIterReached => "max_iter_reached",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub length: f64,
    pub max_node_disp: f64,
    pub recenter_word_len: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub passed: bool,
    pub worst_angle: f64,
    /// Node with the worst angle; the closing junction is reported as the
    /// last node.
    pub worst_node: usize,
    /// Largest |speedᵢ − mean speed|.
    pub speed_spread: f64,
    pub closure_residual: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub pair: ClosedPair,
    /// Product k_m ⋯ k_1 of all fold elements applied.
    pub conjugator: Isometry,
    pub length: f64,
    pub energy: f64,
    pub iterations: usize,
    pub status: GeodesicStatus,
    pub energy_trace: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub verification: Option<GeodesicReport>,
    /// Nontrivial results: the closed-geodesic verification passed.
    pub certified: bool,
}

/// Checks that a pair is a closed geodesic of Σ/W: interior angles and the
/// closing angle between dw⁰·γ'(0) and γ'(1) within `cfg`'s angle tolerance,
/// and equal node speeds.
pub fn verify_closed_geodesic(pair: &ClosedPair, cfg: &ShorteningConfig) -> GeodesicReport {
    verify_with_tolerance(pair, cfg.tolerances.geodesic_angle)
}

pub fn verify_with_tolerance(pair: &ClosedPair, angle_tol: f64) -> GeodesicReport {
    let curve = pair.curve();
    let space = curve.space();
    let nodes = curve.nodes();
    let m = nodes.len() - 1;
    let closure_residual = pair.closure_residual();
    let mut report = GeodesicReport {
        passed: false,
        worst_angle: 0.0,
        worst_node: 0,
        speed_spread: 0.0,
        closure_residual,
        failure: None,
    };

    let mut outgoing = Vec::with_capacity(m);
    let mut incoming = Vec::with_capacity(m);
    for i in 0..m {
        let fwd = modelspace::log(&nodes[i], &nodes[i + 1]);
        let back = modelspace::log(&nodes[i + 1], &nodes[i]);
        match (fwd, back) {
            (Ok(f), Ok(b)) if f.norm() > 0.0 => {
                outgoing.push(f);
                incoming.push(-b.vec());
            }
            _ => {
                report.failure = Some(format!("segment {i} is degenerate"));
                return report;
            }
        }
    }

    let consider = |angle: Option<f64>, node: usize, report: &mut GeodesicReport| {
        let a = angle.unwrap_or(std::f64::consts::PI);
        if a > report.worst_angle {
            report.worst_angle = a;
            report.worst_node = node;
        }
    };
    for i in 1..m {
        consider(modelspace::tangent_angle(space, &incoming[i - 1], outgoing[i].vec()), i, &mut report);
    }
    let pushed = pair.closure().linear() * outgoing[0].vec();
    consider(modelspace::tangent_angle(space, &pushed, &incoming[m - 1]), m, &mut report);

    let speeds = curve.speeds();
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    report.speed_spread = speeds.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);

    report.failure = if closure_residual > crate::curves::CLOSURE_TOL {
        Some(format!("closure residual {closure_residual:e}"))
    } else if report.worst_angle > angle_tol {
        Some(format!("angle {:e} at node {}", report.worst_angle, report.worst_node))
    } else if report.speed_spread > 1e-8 * mean.max(1.0) {
        Some(format!("node speeds differ by {:e}", report.speed_spread))
    } else {
        None
    };
    report.passed = report.failure.is_none();
    report
}

fn cadence(group: &IsometryGroup, cfg: &ShorteningConfig) -> Result<Option<usize>> {
    match cfg.recenter {
        RecenterCadence::Auto => Ok(group.has_fold().then_some(1)),
        RecenterCadence::Never => Ok(None),
        RecenterCadence::Every(0) => Err(Error::InvalidConfig("recenter cadence must be positive".into())),
        RecenterCadence::Every(n) if group.has_fold() => Ok(Some(n)),
        RecenterCadence::Every(_) => Err(Error::NoFoldStrategy),
    }
}

/// Iterates P₀ (with recentering) until node displacement and energy
/// decrement stay below tolerance for [`PLATEAU_WINDOW`] consecutive steps,
/// or `max_iter` is reached.
pub fn iterate(pair: &ClosedPair, group: &IsometryGroup, cfg: &ShorteningConfig) -> Result<GeodesicResult> {
    iterate_with(pair, group, cfg, |_| {})
}

/// [`iterate`] with a callback invoked on every trace row as it is produced.
pub fn iterate_with<F: FnMut(&TraceRow)>(
    pair: &ClosedPair,
    group: &IsometryGroup,
    cfg: &ShorteningConfig,
    mut on_row: F,
) -> Result<GeodesicResult> {
    if pair.curve().space() != group.space() {
        return Err(Error::SpaceMismatch {
            expected: group.space(),
            found: pair.curve().space(),
        });
    }
    let every = cadence(group, cfg)?;
    let t = cfg.t_partition();
    let tol = cfg.tolerances;

    let mut current = pair.clone();
    let mut conjugator = Isometry::identity(group.space());
    let row0 = TraceRow {
        iteration: 0,
        energy: current.energy(),
        length: current.length(),
        max_node_disp: 0.0,
        recenter_word_len: 0,
    };
    on_row(&row0);
    let mut trace = vec![row0];
    let mut quiet = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut next = double_shorten(&current, cfg)?;
        let disp = max_node_displacement(current.curve(), next.curve(), &t)?;
        let decrement = current.energy() - next.energy();
        let mut word_len = 0;
        if let Some(n) = every {
            if iterations.is_multiple_of(n) {
                let (moved, k) = recenter(&next, group)?;
                word_len = k.label().map_or(0, |w| w.len());
                conjugator = k.compose(&conjugator)?;
                next = moved;
            }
        }
        let row = TraceRow {
            iteration: iterations,
            energy: next.energy(),
            length: next.length(),
            max_node_disp: disp,
            recenter_word_len: word_len,
        };
        on_row(&row);
        trace.push(row);
        current = next;
        if disp < tol.node_disp && decrement < tol.energy_decrement {
            quiet += 1;
            if quiet >= PLATEAU_WINDOW {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let length = current.length();
    let energy = current.energy();
    let (status, verification, certified) = if !converged {
        (GeodesicStatus::MaxIterReached, None, false)
    } else if length > tol.trivial_length {
        let report = verify_closed_geodesic(&current, cfg);
        let ok = report.passed;
        (GeodesicStatus::NontrivialGeodesic, Some(report), ok)
    } else {
        (GeodesicStatus::TrivialPoint, None, true)
    };
    Ok(GeodesicResult {
        energy_trace: trace.iter().map(|r| r.energy).collect(),
        trace,
        pair: current,
        conjugator,
        length,
        energy,
        iterations,
        status,
        verification,
        certified,
    })
}

/// Closed geodesic through a minimizer x of y ↦ d(y, w⁰y): the minimizing
/// segment from x to w⁰x, whose concatenation with its w⁰-image is smooth.
pub fn axis_via_displacement_min(w0: &Isometry, group: &IsometryGroup) -> Result<GeodesicResult> {
    axis_with_nodes(w0, group, MIN_NODE_COUNT)
}

pub fn axis_with_nodes(w0: &Isometry, group: &IsometryGroup, node_count: usize) -> Result<GeodesicResult> {
    if w0.space() != group.space() {
        return Err(Error::SpaceMismatch {
            expected: group.space(),
            found: w0.space(),
        });
    }
    if !fixed_point_test(w0).is_free() {
        return Err(Error::InvalidConfig("closure element fixes a point".into()));
    }
    let space = w0.space();
    // The closed-form minimizer is exact to rounding; the search is the fallback.
    let analytic = isogroup::translation_length(w0, LengthMode::Analytic);
    let exact = match &analytic.argmin {
        Some(x) => (modelspace::dist(x, &w0.apply(x)?)? - analytic.value).abs() <= 1e-12,
        None => false,
    };
    let tl = if exact {
        analytic
    } else {
        isogroup::translation_length(w0, LengthMode::Numeric)
    };
    let x = tl.argmin.clone().expect("numeric mode returns a point");
    let y = w0.apply(&x)?;
    let d = modelspace::dist(&x, &y)?;
    let k = node_count.max(1);

    let nodes: Vec<Point> = if d < uniqueness_radius(space) - 1e-9 {
        (0..=k)
            .map(|i| modelspace::geodesic_point(&x, &y, i as f64 / k as f64))
            .collect::<Result<_>>()?
    } else {
        // Antipodal displacement on the sphere: pick a direction u ⊥ x with
        // L u = −u so that the closing junction is smooth.
        let u = antipodal_direction(w0, &x);
        (0..=k)
            .map(|i| modelspace::exp_raw(&x, &(&u * (d * i as f64 / k as f64))))
            .collect()
    };
    let mut nodes = nodes;
    nodes[k] = y;
    let curve = DiscreteCurve::uniform(nodes)?;
    let pair = ClosedPair::new(curve, w0.clone())?;
    let report = verify_with_tolerance(&pair, crate::shortening::Tolerances::default().geodesic_angle);
    let certified = report.passed && tl.certified;
    let length = pair.length();
    let energy = pair.energy();
    let status = if length > Tolerances::default().trivial_length {
        GeodesicStatus::NontrivialGeodesic
    } else {
        GeodesicStatus::TrivialPoint
    };
    Ok(GeodesicResult {
        conjugator: Isometry::identity(space),
        length,
        energy,
        iterations: 0,
        status,
        energy_trace: vec![energy],
        trace: Vec::new(),
        pair,
        verification: Some(report),
        certified,
    })
}

fn antipodal_direction(w0: &Isometry, x: &Point) -> DVector<f64> {
    let n = x.coords().len();
    let m = w0.linear() + DMatrix::identity(n, n);
    let mut candidates = isogroup::null_basis(&m, 1e-6);
    candidates.extend(modelspace::tangent_frame(x));
    for c in candidates {
        let v = &c - x.coords() * x.coords().dot(&c);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
    unreachable!("tangent frame of a sphere point is nonempty")
}

/// Walls of the chamber touched, in order, by the folded image of the curve
/// sampled at `samples` evenly spaced parameters.
pub fn folded_wall_contacts(curve: &DiscreteCurve, group: &IsometryGroup, samples: usize) -> Result<Vec<usize>> {
    let walls = group.walls();
    if walls.is_empty() {
        return Err(Error::NoFoldStrategy);
    }
    let space: SpaceId = group.space();
    let (a, b) = (curve.partition().start(), curve.partition().end());
    let (mut k, _) = isogroup::fold(group, &curve.eval(a)?)?;
    let mut contacts = Vec::new();
    for i in 1..=samples {
        let s = a + (b - a) * i as f64 / samples as f64;
        let q = k.apply(&curve.eval(s)?)?;
        for w in walls {
            if w.side_value(space, &q) < -1e-12 {
                contacts.push(w.generator);
            }
        }
        let (step, _) = isogroup::fold(group, &q)?;
        k = step.compose(&k)?;
    }
    Ok(contacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isogroup::{make_group, GroupSpec, SphericalKind, WallSpec};
    use std::f64::consts::PI;

    fn e2(pts: &[[f64; 2]]) -> Vec<Point> {
        pts.iter().map(|p| Point::euclidean(p)).collect()
    }

    fn torus() -> IsometryGroup {
        make_group(&GroupSpec::Lattice { basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]] }).unwrap()
    }

    fn a1() -> IsometryGroup {
        make_group(&GroupSpec::AffineWeyl {
            walls: vec![
                WallSpec { normal: vec![1.0], offset: 0.0 },
                WallSpec { normal: vec![-1.0], offset: -1.0 },
            ],
        })
        .unwrap()
    }

    fn v_pair() -> ClosedPair {
        ClosedPair::new(
            DiscreteCurve::uniform(e2(&[[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]])).unwrap(),
            Isometry::translation(&[1.0, 0.0]),
        )
        .unwrap()
    }

    fn torus_line(k: usize) -> ClosedPair {
        let nodes = (0..=k).map(|i| Point::euclidean(&[i as f64 / k as f64, 0.0])).collect();
        ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), Isometry::translation(&[1.0, 0.0])).unwrap()
    }

    #[test]
    fn partitions_interleave() {
        let cfg = ShorteningConfig::new(8, 1.0, 0.5).unwrap();
        let t = cfg.t_partition();
        let tau = cfg.tau_partition();
        assert!((tau.values()[0] - (tau.values()[8] - 1.0)).abs() < 1e-15);
        assert!(tau.values()[0] < 0.0);
        for i in 1..=8 {
            assert!(t.values()[i - 1] < tau.values()[i] && tau.values()[i] < t.values()[i]);
        }
    }

    #[test]
    fn config_rejects_coarse_mesh() {
        assert!(ShorteningConfig::new(2, 1.0, 4.0).is_err());
        assert!(ShorteningConfig::new(0, 1.0, 1.0).is_err());
        assert!(ShorteningConfig::new(8, 0.0, 1.0).is_err());
    }

    #[test]
    fn node_count_rule() {
        let line = torus_line(8);
        let cfg = ShorteningConfig::for_pair(&line, &ConfigOptions::default()).unwrap();
        assert_eq!(cfg.node_count(), 8);
        assert_eq!(cfg.rho0(), 1.0);
        assert_eq!(cfg.energy_bound(), 0.5);
        let opts = ConfigOptions { rho0_cap: 0.25, ..Default::default() };
        let cfg = ShorteningConfig::for_pair(&line, &opts).unwrap();
        assert_eq!(cfg.node_count(), 17);
        assert!(cfg.mesh() < cfg.mesh_bound());
        let s2 = ShorteningConfig::for_pair(&line, &ConfigOptions { rho0_cap: 10.0, ..Default::default() }).unwrap();
        assert_eq!(s2.rho0(), 10.0);
    }

    #[test]
    fn p_hat_fixes_piecewise_geodesics() {
        let pair = v_pair();
        let out = p_hat(&pair, pair.curve().partition(), 1.0).unwrap();
        for (a, b) in out.curve().nodes().iter().zip(pair.curve().nodes()) {
            assert!((a.coords() - b.coords()).amax() <= 1e-15);
        }
    }

    #[test]
    fn p_hat_refinement_keeps_geometry() {
        let pair = v_pair();
        let fine = Partition::uniform(0.0, 1.0, 4).unwrap();
        let out = p_hat(&pair, &fine, 1.0).unwrap();
        let want = [[0.0, 0.0], [0.25, 0.25], [0.5, 0.5], [0.75, 0.25], [1.0, 0.0]];
        for (p, w) in out.curve().nodes().iter().zip(want) {
            assert!((p.coords()[0] - w[0]).abs() < 1e-15 && (p.coords()[1] - w[1]).abs() < 1e-15);
        }
        assert!((out.energy() - pair.energy()).abs() < 1e-12);
        assert_eq!(out.closure(), pair.closure());
    }

    #[test]
    fn p_hat_rejects_antipodal_segment() {
        let s2 = SpaceId::sphere(2);
        let curve = DiscreteCurve::uniform(vec![
            Point::from_slice(s2, &[1.0, 0.0, 0.0]).unwrap(),
            Point::from_slice(s2, &[-1.0, 0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let anti = Isometry::from_linear(s2, -DMatrix::identity(3, 3)).unwrap();
        let pair = ClosedPair::new(curve, anti).unwrap();
        let err = p_hat(&pair, &Partition::uniform(0.0, 1.0, 4).unwrap(), 0.9 * PI).unwrap_err();
        assert!(matches!(err, Error::NonUniqueGeodesic { segment: Some(0), .. }), "{err:?}");
    }

    #[test]
    fn p_hat_rejects_long_samples() {
        let pair = torus_line(1);
        let err = p_hat(&pair, &Partition::uniform(0.0, 1.0, 2).unwrap(), 0.4).unwrap_err();
        assert!(matches!(err, Error::NonUniqueGeodesic { segment: Some(0), .. }));
    }

    #[test]
    fn exact_line_is_fixed() {
        let pair = torus_line(8);
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let out = double_shorten(&pair, &cfg).unwrap();
        let disp = max_node_displacement(pair.curve(), out.curve(), &cfg.t_partition()).unwrap();
        assert!(disp < 1e-12);
        assert!((out.energy() - pair.energy()).abs() < 1e-12);
    }

    /// Hand-computed P₀ step of the V-curve with k = 2: the tail midpoint
    /// (0.75, 0.25) pulls back to (−0.25, 0.25), the τ-samples are
    /// (−0.25, 0.25), (0.25, 0.25), (0.75, 0.25), and the restriction to
    /// [0, 1] starts at (0, 0.25). Energy 0.125 + 0.25 + 0.125 = 0.5.
    #[test]
    fn v_curve_step_matches_hand_computation() {
        let pair = v_pair();
        let cfg = ShorteningConfig::new(2, 1.0, 1.0).unwrap();
        let out = double_shorten(&pair, &cfg).unwrap();
        assert_eq!(out.curve().partition().values(), &[0.0, 0.25, 0.75, 1.0]);
        let want = [[0.0, 0.25], [0.25, 0.25], [0.75, 0.25], [1.0, 0.25]];
        for (p, w) in out.curve().nodes().iter().zip(want) {
            assert!((p.coords()[0] - w[0]).abs() < 1e-15 && (p.coords()[1] - w[1]).abs() < 1e-15);
        }
        assert!((pair.energy() - 1.0).abs() < 1e-15);
        assert!((out.energy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn extension_identity() {
        let pair = v_pair();
        let cfg = ShorteningConfig::new(4, 1.0, 1.0).unwrap();
        let steps = double_shorten_steps(&pair, &cfg).unwrap();
        let tau0 = cfg.tau_partition().values()[0];
        for t in [tau0, tau0 / 2.0, 0.0] {
            let lhs = pair.closure().apply(&steps.extended.curve().eval(t).unwrap()).unwrap();
            let rhs = steps.first.curve().eval(t + 1.0).unwrap();
            assert!(modelspace::dist(&lhs, &rhs).unwrap() < 1e-10);
        }
        assert!(steps.result.closure_residual() < 1e-12);
    }

    #[test]
    fn recenter_examples() {
        let g = torus();
        let nodes = (0..=4).map(|i| Point::euclidean(&[5.2 + i as f64 / 4.0, 0.0])).collect();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), Isometry::translation(&[1.0, 0.0])).unwrap();
        let (moved, k) = recenter(&pair, &g).unwrap();
        assert!((k.translation_part() - DVector::from_column_slice(&[-5.0, 0.0])).amax() < 1e-15);
        assert!((moved.curve().first().coords()[0] - 0.2).abs() < 1e-12);
        assert!(moved.closure().distance(pair.closure()) < 1e-15);
        assert!((moved.energy() - pair.energy()).abs() < 1e-10);

        let g = a1();
        let nodes = (0..=4).map(|i| Point::euclidean(&[2.5 + 0.5 * i as f64])).collect();
        let w0 = g.element(&isogroup::Word::parse("1 0").unwrap()).unwrap();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), w0).unwrap();
        let (moved, _) = recenter(&pair, &g).unwrap();
        assert!((moved.curve().first().coords()[0] - 0.5).abs() < 1e-15);
        let tl = isogroup::translation_length(moved.closure(), LengthMode::Numeric);
        assert!((tl.value - 2.0).abs() < 1e-9);
        assert!(moved.closure_residual() < 1e-12);

        let inside = v_pair();
        let (same, k) = recenter(&inside, &torus()).unwrap();
        assert!(k.is_identity(0.0));
        assert_eq!(same.curve().nodes(), inside.curve().nodes());
    }

    #[test]
    fn verification_examples() {
        let cfg = ShorteningConfig::new(8, 1.0, 1.0).unwrap();
        let r = verify_closed_geodesic(&torus_line(8), &cfg);
        assert!(r.passed && r.worst_angle < 1e-12, "{r:?}");

        let r = verify_closed_geodesic(&v_pair(), &cfg);
        assert!(!r.passed);
        assert_eq!(r.worst_node, 1);
        assert!((r.worst_angle - PI / 2.0).abs() < 1e-12);

        let g = a1();
        let w0 = g.element(&isogroup::Word::parse("1 0").unwrap()).unwrap();
        let nodes = (0..=4).map(|i| Point::euclidean(&[0.5 * i as f64])).collect();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), w0).unwrap();
        assert!(verify_closed_geodesic(&pair, &cfg).passed);
    }

    #[test]
    fn torus_iterate_converges_to_unit_line() {
        let nodes = e2(&[[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]]);
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), Isometry::translation(&[1.0, 0.0])).unwrap();
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let res = iterate(&pair, &torus(), &cfg).unwrap();
        assert_eq!(res.status, GeodesicStatus::NontrivialGeodesic);
        assert!(res.certified);
        assert!((res.length - 1.0).abs() < 1e-8, "{}", res.length);
        assert_eq!(res.trace.len(), res.iterations + 1);
        for w in res.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let expect = res.conjugator.compose(pair.closure()).unwrap().compose(&res.conjugator.inverse()).unwrap();
        assert!(res.pair.closure().distance(&expect) < 1e-8);
    }

    #[test]
    fn affine_weyl_iterate_has_length_two() {
        let g = a1();
        let w0 = g.element(&isogroup::Word::parse("1 0").unwrap()).unwrap();
        let nodes = [0.0, 0.7, 0.4, 1.3, 0.9, 1.6, 2.0].iter().map(|&x| Point::euclidean(&[x])).collect();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), w0).unwrap();
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let res = iterate(&pair, &g, &cfg).unwrap();
        assert_eq!(res.status, GeodesicStatus::NontrivialGeodesic);
        assert!((res.length - 2.0).abs() < 1e-8);
        let contacts = folded_wall_contacts(res.pair.curve(), &g, 4000).unwrap();
        assert!(contacts.len() >= 2);
        assert!(contacts.windows(2).all(|w| w[0] != w[1]), "{contacts:?}");
    }

    #[test]
    fn rotation_with_fixed_point_shrinks_to_a_point() {
        let space = SpaceId::euclidean(2);
        let rot = Isometry::from_linear(space, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let group = make_group(&GroupSpec::Explicit {
            space,
            generators: vec![isogroup::IsometrySpec {
                linear: vec![vec![0.0, -1.0], vec![1.0, 0.0]],
                translation: None,
            }],
        })
        .unwrap();
        let p = Point::euclidean(&[0.1, 0.0]);
        let q = rot.apply(&p).unwrap();
        let nodes = (0..=4).map(|i| modelspace::geodesic_point(&p, &q, i as f64 / 4.0).unwrap()).collect();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), rot).unwrap();
        let cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        let res = iterate(&pair, &group, &cfg).unwrap();
        assert_eq!(res.status, GeodesicStatus::TrivialPoint);
        assert!(res.energy < 1e-12);
    }

    #[test]
    fn max_iter_is_a_status() {
        let pair = v_pair();
        let mut cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        cfg.max_iter = 1;
        let res = iterate(&pair, &torus(), &cfg).unwrap();
        assert_eq!(res.status, GeodesicStatus::MaxIterReached);
        assert_eq!(res.iterations, 1);
        assert!(!res.certified);
    }

    #[test]
    fn recenter_requires_fold() {
        let g = make_group(&GroupSpec::Spherical { dim: 2, kind: SphericalKind::Antipodal }).unwrap();
        let s2 = SpaceId::sphere(2);
        let nodes: Vec<Point> = (0..=8)
            .map(|i| {
                let a = PI * i as f64 / 8.0;
                Point::from_slice(s2, &[a.cos(), a.sin(), 0.0]).unwrap()
            })
            .collect();
        let pair = ClosedPair::new(DiscreteCurve::uniform(nodes).unwrap(), g.generators()[0].clone()).unwrap();
        let mut cfg = ShorteningConfig::for_pair(&pair, &ConfigOptions::default()).unwrap();
        cfg.recenter = RecenterCadence::Every(1);
        assert_eq!(iterate(&pair, &g, &cfg).unwrap_err(), Error::NoFoldStrategy);
        assert!(recenter(&pair, &g).is_err());
    }

    #[test]
    fn axis_examples() {
        let g = torus();
        let res = axis_via_displacement_min(&Isometry::translation(&[1.0, 0.0]), &g).unwrap();
        assert!((res.length - 1.0).abs() < 1e-12);
        assert!(res.certified);

        let anti = make_group(&GroupSpec::Spherical { dim: 2, kind: SphericalKind::Antipodal }).unwrap();
        let res = axis_via_displacement_min(&anti.generators()[0], &anti).unwrap();
        assert!((res.length - PI).abs() < 1e-12);
        assert!(res.certified, "{:?}", res.verification);

        assert!(axis_via_displacement_min(&a1().generators()[0], &a1()).is_err());
    }
}
