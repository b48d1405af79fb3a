//! Scenario files, runs and oracle reports for the `orbigeo` front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{ClosedPair, DiscreteCurve, Partition};
use crate::error::Error;
use crate::foliation::{self, ClassHint, FoliationModel, FoliationSpec, HorizontalReport};
use crate::isogroup::{
    self, fixed_point_test, make_group, FixedPointVerdict, GroupSpec, Isometry, IsometryGroup, IsometrySpec,
    LengthMode, Word,
};
use crate::modelspace::{self, Point, SpaceId};
use crate::shortening::{
    self, ConfigOptions, GeodesicReport, GeodesicResult, GeodesicStatus, RecenterCadence, ShorteningConfig,
    Tolerances, TraceRow,
};

pub const RESULT_FILE: &str = "result.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRACE_HEADER: &str = "iteration,energy,length,max_node_disp,recenter_word_len";
/// Analytic and numeric oracle values must agree this closely.
pub const ORACLE_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliation: Option<FoliationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassHint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    #[serde(default)]
    pub config: ConfigSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ClosureSpec {
    /// Word in the group generators, e.g. `"1 0"` or `"0^-1 2"`.
    Word(String),
    Matrix(IsometrySpec),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// Explicit nodes in ambient coordinates; the partition defaults to a
    /// uniform one on [0, 1].
    Nodes {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        partition: Option<Vec<f64>>,
    },
    /// Minimizing geodesic from `base` to w⁰·base split into `segments`
    /// pieces, with interior nodes moved by up to `jitter` (seeded).
    Auto {
        base: Vec<f64>,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default)]
        jitter: f64,
    },
}

fn default_segments() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigSpec {
    pub node_count: Option<usize>,
    pub rho0_cap: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub recenter: RecenterCadence,
}

impl Default for ConfigSpec {
    fn default() -> Self {
        let o = ConfigOptions::default();
        ConfigSpec {
            node_count: o.node_count,
            rho0_cap: o.rho0_cap,
            max_iter: o.max_iter,
            seed: isogroup::DEFAULT_SEED,
            tolerances: o.tolerances,
            recenter: o.recenter,
        }
    }
}

impl ConfigSpec {
    pub fn options(&self) -> ConfigOptions {
        ConfigOptions {
            node_count: self.node_count,
            rho0_cap: self.rho0_cap,
            max_iter: self.max_iter,
            tolerances: self.tolerances,
            recenter: self.recenter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid scenario at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path == "." { "(root)".to_string() } else { path }, e.into_inner())
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

#[derive(Debug, Clone)]
pub enum Problem {
    Orbifold { group: IsometryGroup, pair: ClosedPair },
    Foliation { model: FoliationModel, hint: ClassHint },
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub problem: Problem,
    pub options: ConfigOptions,
}

fn point_from(space: SpaceId, coords: &[f64], path: &str) -> Result<Point, ScenarioError> {
    if coords.len() != space.ambient_dim() {
        return Err(invalid(path, format!("{space} points need {} coordinates", space.ambient_dim())));
    }
    match Point::from_slice(space, coords) {
        Ok(p) => Ok(p),
        Err(_) if !matches!(space, SpaceId::Euclidean { .. }) => {
            // Accept hand-typed points off the model by rounding error only.
            let p = Point::projected(space, nalgebra::DVector::from_column_slice(coords));
            let off = (p.coords() - nalgebra::DVector::from_column_slice(coords)).amax();
            if off <= 1e-6 && p.coords().iter().all(|x| x.is_finite()) {
                Ok(p)
            } else {
                Err(invalid(path, format!("point is not on {space}")))
            }
        }
        Err(e) => Err(invalid(path, e)),
    }
}

/// Validates a scenario and builds the group, curve or foliation it describes.
pub fn prepare(scenario: Scenario) -> Result<Prepared, ScenarioError> {
    let name_ok = !scenario.name.is_empty()
        && scenario.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        && !scenario.name.starts_with('.');
    if !name_ok {
        return Err(invalid("name", "must be non-empty and use only letters, digits, '-', '_' and '.'"));
    }
    let cfg = &scenario.config;
    if cfg.max_iter == 0 {
        return Err(invalid("config.max_iter", "must be at least 1"));
    }
    if !(cfg.rho0_cap > 0.0) {
        return Err(invalid("config.rho0_cap", "must be positive"));
    }
    if cfg.node_count == Some(0) {
        return Err(invalid("config.node_count", "must be positive"));
    }
    if cfg.recenter == RecenterCadence::Every(0) {
        return Err(invalid("config.recenter", "cadence must be positive"));
    }
    let options = cfg.options();

    let problem = match (&scenario.group, &scenario.foliation) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(invalid("group", "exactly one of `group` or `foliation` is required"))
        }
        (Some(spec), None) => prepare_orbifold(&scenario, spec)?,
        (None, Some(spec)) => {
            for (field, present) in [
                ("space", scenario.space.is_some()),
                ("closure", scenario.closure.is_some()),
                ("curve", scenario.curve.is_some()),
            ] {
                if present {
                    return Err(invalid(field, "not used with a foliation; select the class with `class`"));
                }
            }
            let model = spec.build().map_err(|e| invalid("foliation", e))?;
            let hint = scenario.class.clone().ok_or_else(|| invalid("class", "a foliation scenario needs a class"))?;
            match (&model, &hint) {
                (FoliationModel::LinearTorus { n, .. }, ClassHint::Lattice(z)) if z.len() != *n => {
                    return Err(invalid("class.lattice", format!("needs {n} integers")))
                }
                (FoliationModel::LinearTorus { .. }, ClassHint::Winding(_)) => {
                    return Err(invalid("class", "torus foliations take a `lattice` class"))
                }
                (FoliationModel::Suspension { .. }, ClassHint::Lattice(_)) => {
                    return Err(invalid("class", "suspensions take a `winding` class"))
                }
                _ => {}
            }
            Problem::Foliation { model, hint }
        }
    };
    Ok(Prepared {
        scenario,
        problem,
        options,
    })
}

fn prepare_orbifold(scenario: &Scenario, spec: &GroupSpec) -> Result<Problem, ScenarioError> {
    if scenario.class.is_some() {
        return Err(invalid("class", "only used with a foliation"));
    }
    let group = make_group(spec).map_err(|e| invalid("group", e))?;
    let space = group.space();
    if let Some(s) = scenario.space {
        if s != space {
            return Err(invalid("space", format!("group acts on {space}, not {s}")));
        }
    }
    let w0 = match &scenario.closure {
        None => return Err(invalid("closure", "a closure element is required")),
        Some(ClosureSpec::Word(text)) => {
            let word = Word::parse(text).map_err(|e| invalid("closure.word", e))?;
            group.element(&word).map_err(|e| invalid("closure.word", e))?
        }
        Some(ClosureSpec::Matrix(m)) => m.build(space).map_err(|e| invalid("closure.matrix", e))?,
    };
    let pair = match &scenario.curve {
        None => return Err(invalid("curve", "an initial curve is required")),
        Some(CurveSpec::Nodes { points, partition }) => {
            if points.len() < 2 {
                return Err(invalid("curve.points", "at least two nodes are required"));
            }
            let nodes = points
                .iter()
                .enumerate()
                .map(|(i, p)| point_from(space, p, &format!("curve.points[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let partition = match partition {
                Some(v) => Partition::new(v.clone()).map_err(|e| invalid("curve.partition", e))?,
                None => Partition::uniform(0.0, 1.0, nodes.len() - 1).map_err(|e| invalid("curve.points", e))?,
            };
            let curve = DiscreteCurve::new(partition, nodes).map_err(|e| invalid("curve.partition", e))?;
            ClosedPair::new(curve, w0).map_err(|e| invalid("curve.points", e))?
        }
        Some(CurveSpec::Auto { base, segments, jitter }) => {
            if *segments < 2 {
                return Err(invalid("curve.segments", "must be at least 2"));
            }
            if !(*jitter >= 0.0 && jitter.is_finite()) {
                return Err(invalid("curve.jitter", "must be a finite non-negative number"));
            }
            let p = point_from(space, base, "curve.base")?;
            let pair = shortening::auto_pair(&p, &w0, *segments).map_err(|e| invalid("curve", e))?;
            if *jitter > 0.0 {
                jittered(&pair, *jitter, scenario.config.seed).map_err(|e| invalid("curve.jitter", e))?
            } else {
                pair
            }
        }
    };
    Ok(Problem::Orbifold { group, pair })
}

fn jittered(pair: &ClosedPair, amount: f64, seed: u64) -> crate::Result<ClosedPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = pair.curve();
    let last = curve.nodes().len() - 1;
    let nodes = curve
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i == 0 || i == last {
                Ok(p.clone())
            } else {
                modelspace::exp(p, &modelspace::sample_tangent(p, &mut rng, amount))
            }
        })
        .collect::<crate::Result<Vec<_>>>()?;
    ClosedPair::new(DiscreteCurve::new(curve.partition().clone(), nodes)?, pair.closure().clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub source: String,
    pub value: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryForm {
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl IsometryForm {
    pub fn of(w: &Isometry) -> Self {
        let l = w.linear();
        IsometryForm {
            linear: (0..l.nrows()).map(|r| l.row(r).iter().copied().collect()).collect(),
            translation: w.translation_part().iter().copied().collect(),
        }
    }

    pub fn build(&self, space: SpaceId) -> crate::Result<Isometry> {
        IsometrySpec {
            linear: self.linear.clone(),
            translation: Some(self.translation.clone()),
        }
        .build(space)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub trace: String,
    pub figure: Option<String>,
}

/// Result document written by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub status: GeodesicStatus,
    pub certified: bool,
    /// The closure element fixes a point, so a trivial limit is expected.
    pub expected_trivial: bool,
    pub length: f64,
    pub energy: f64,
    pub iterations: usize,
    pub node_count: usize,
    pub rho0: f64,
    pub conjugator_word: Option<String>,
    pub oracle: Option<OracleComparison>,
    pub verification: Option<GeodesicReport>,
    pub horizontal: Option<HorizontalReport>,
    /// Space of the curve below (the transverse model for foliations).
    pub space: SpaceId,
    /// Final (conjugated) closure element.
    pub closure: IsometryForm,
    pub initial_partition: Vec<f64>,
    pub initial_nodes: Vec<Vec<f64>>,
    pub final_partition: Vec<f64>,
    pub final_nodes: Vec<Vec<f64>>,
    pub lifted_nodes: Option<Vec<Vec<f64>>>,
    pub artifacts: Artifacts,
    pub input: Scenario,
}

impl RunReport {
    /// 0 for a certified nontrivial geodesic or an expected trivial point,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            GeodesicStatus::NontrivialGeodesic if self.certified => 0,
            GeodesicStatus::TrivialPoint if self.expected_trivial => 0,
            _ => 1,
        }
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub trace: Vec<TraceRow>,
}

fn coords(nodes: &[Point]) -> Vec<Vec<f64>> {
    nodes.iter().map(|p| p.coords().iter().copied().collect()).collect()
}

/// Runs the shortening for a prepared scenario without touching the disk.
pub fn execute(prepared: &Prepared) -> crate::Result<RunOutput> {
    let (initial, result, horizontal, lifted, expected_trivial) = match &prepared.problem {
        Problem::Orbifold { group, pair } => {
            let cfg = ShorteningConfig::for_pair(pair, &prepared.options)?;
            let result = shortening::iterate(pair, group, &cfg)?;
            let trivial = !fixed_point_test(pair.closure()).is_free();
            (pair.clone(), result, None, None, trivial)
        }
        Problem::Foliation { model, hint } => {
            let found = foliation::find_horizontal_periodic_geodesic(model, hint, &prepared.options)?;
            let initial = found.initial.clone();
            let trivial = !fixed_point_test(&found.closure).is_free();
            let lifted = coords(found.lifted.nodes());
            (initial, found.result, found.report, Some(lifted), trivial)
        }
    };
    let w0 = initial.closure();
    let tl = isogroup::translation_length(w0, LengthMode::Analytic);
    let oracle = Some(OracleComparison {
        source: "analytic translation length".into(),
        value: tl.value,
        abs_diff: (result.length - tl.value).abs(),
    });
    let certified = result.certified && horizontal.as_ref().is_none_or(|h: &HorizontalReport| h.passed);
    let cfg = ShorteningConfig::for_pair(&initial, &prepared.options)?;
    let report = RunReport {
        scenario: prepared.scenario.name.clone(),
        status: result.status,
        certified,
        expected_trivial,
        length: result.length,
        energy: result.energy,
        iterations: result.iterations,
        node_count: cfg.node_count(),
        rho0: cfg.rho0(),
        conjugator_word: result.conjugator.label().map(|w| w.to_string()),
        oracle,
        verification: result.verification.clone(),
        horizontal,
        space: result.pair.curve().space(),
        closure: IsometryForm::of(result.pair.closure()),
        initial_partition: initial.curve().partition().values().to_vec(),
        initial_nodes: coords(initial.curve().nodes()),
        final_partition: result.pair.curve().partition().values().to_vec(),
        final_nodes: coords(result.pair.curve().nodes()),
        lifted_nodes: lifted,
        artifacts: Artifacts {
            trace: TRACE_FILE.into(),
            figure: None,
        },
        input: prepared.scenario.clone(),
    };
    Ok(RunOutput {
        report,
        trace: result.trace,
    })
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.iteration, r.energy, r.length, r.max_node_disp, r.recenter_word_len
        )
        .expect("writing to a string");
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err("missing trace header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| format!("row {}: bad {what}", i + 1);
            if f.len() != 5 {
                return Err(bad("column count"));
            }
            Ok(TraceRow {
                iteration: f[0].parse().map_err(|_| bad("iteration"))?,
                energy: f[1].parse().map_err(|_| bad("energy"))?,
                length: f[2].parse().map_err(|_| bad("length"))?,
                max_node_disp: f[3].parse().map_err(|_| bad("max_node_disp"))?,
                recenter_word_len: f[4].parse().map_err(|_| bad("recenter_word_len"))?,
            })
        })
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes `result.json` and `trace.csv` into `dir`.
pub fn write_run(dir: &Path, output: &RunOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(RESULT_FILE), to_json(&output.report))?;
    fs::write(dir.join(TRACE_FILE), trace_csv(&output.trace))
}

pub fn read_report(dir: &Path) -> Result<RunReport, String> {
    let path = dir.join(RESULT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn default_run_dir(name: &str) -> PathBuf {
    Path::new("runs").join(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointReport {
    FixedPointFree,
    FixedPoint(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationLengthReport {
    pub analytic: f64,
    pub numeric: f64,
    pub numeric_certified: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub scenario: String,
    pub fixed_point: FixedPointReport,
    pub translation_length: TranslationLengthReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortest_horizontal_length: Option<f64>,
}

/// Reference values for a scenario: fixed-point verdict and translation
/// length of the closure element (analytic and seeded numeric), plus the
/// brute-force shortest horizontal length for foliations.
pub fn oracle(prepared: &Prepared) -> crate::Result<OracleReport> {
    let seed = prepared.scenario.config.seed;
    let (w0, horizontal) = match &prepared.problem {
        Problem::Orbifold { pair, .. } => (pair.closure().clone(), None),
        Problem::Foliation { model, hint } => {
            let transverse = foliation::transverse_model(model)?;
            let w0 = match hint {
                ClassHint::Lattice(z) => {
                    let x = Point::euclidean(&z.iter().map(|&v| v as f64).collect::<Vec<_>>());
                    Isometry::translation(transverse.project(&x).coords().as_slice())
                }
                ClassHint::Winding(j) => transverse.group.generators()[0].power(*j),
            };
            (w0, Some(foliation::shortest_horizontal_length_oracle(model)?))
        }
    };
    let analytic = isogroup::translation_length(&w0, LengthMode::Analytic);
    let numeric = isogroup::numeric_translation_length(&w0, seed);
    let agree = (analytic.value - numeric.value).abs() <= ORACLE_AGREEMENT;
    if !agree {
        return Err(Error::NoOracle(format!(
            "analytic ({}) and numeric ({}) translation lengths disagree",
            analytic.value, numeric.value
        )));
    }
    let fixed_point = match fixed_point_test(&w0) {
        FixedPointVerdict::FixedPointFree => FixedPointReport::FixedPointFree,
        FixedPointVerdict::FixedPoint(p) => FixedPointReport::FixedPoint(p.coords().iter().copied().collect()),
    };
    Ok(OracleReport {
        scenario: prepared.scenario.name.clone(),
        fixed_point,
        translation_length: TranslationLengthReport {
            analytic: analytic.value,
            numeric: numeric.value,
            numeric_certified: numeric.certified,
            agree,
        },
        shortest_horizontal_length: horizontal,
    })
}

/// Applies command-line overrides to a parsed scenario.
pub fn apply_overrides(
    scenario: &mut Scenario,
    seed: Option<u64>,
    max_iter: Option<usize>,
    tolerances: &[(String, f64)],
) -> Result<(), ScenarioError> {
    if let Some(s) = seed {
        scenario.config.seed = s;
    }
    if let Some(m) = max_iter {
        scenario.config.max_iter = m;
    }
    for (name, value) in tolerances {
        scenario
            .config
            .tolerances
            .set(name, *value)
            .map_err(|e| invalid(format!("--tol {name}"), e))?;
    }
    Ok(())
}

/// Convenience for callers that only need the final result.
pub fn run_result(prepared: &Prepared) -> crate::Result<GeodesicResult> {
    match &prepared.problem {
        Problem::Orbifold { group, pair } => {
            let cfg = ShorteningConfig::for_pair(pair, &prepared.options)?;
            shortening::iterate(pair, group, &cfg)
        }
        Problem::Foliation { model, hint } => {
            Ok(foliation::find_horizontal_periodic_geodesic(model, hint, &prepared.options)?.result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = r#"{
        "name": "torus",
        "group": {"family": "lattice", "basis": [[1, 0], [0, 1]]},
        "closure": {"word": "0"},
        "curve": {"kind": "nodes", "points": [[0, 0], [0.5, 0.5], [1, 0]]}
    }"#;

    fn err_path(text: &str) -> String {
        match parse_scenario(text).and_then(prepare) {
            Err(ScenarioError::Invalid { path, .. }) => path,
            other => panic!("expected an invalid scenario, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_prepares() {
        let p = prepare(parse_scenario(TORUS).unwrap()).unwrap();
        let Problem::Orbifold { pair, .. } = &p.problem else { panic!() };
        assert!((pair.energy() - 1.0).abs() < 1e-12);
        assert_eq!(p.options.max_iter, 100_000);
    }

    #[test]
    fn reports_field_paths() {
        assert_eq!(err_path(&TORUS.replace("\"0\"", "\"5\"")), "closure.word");
        assert_eq!(err_path(&TORUS.replace("\"0\"", "\"0^x\"")), "closure.word");
        assert_eq!(err_path(&TORUS.replace("[1, 0]]}", "[1, 0]], \"colour\": 1}")), "curve");
        assert_eq!(err_path(&TORUS.replace("\"name\": \"torus\",", "\"name\": \"torus\", \"colour\": 1,")), "colour");
        assert_eq!(err_path(&TORUS.replace("[0.5, 0.5]", "[0.5]")), "curve.points[1]");
        assert_eq!(err_path(&TORUS.replace("[1, 0]]}", "[1, 0.5]]}")), "curve.points");
        assert_eq!(err_path(&TORUS.replace("\"basis\"", "\"bases\"")), "group");
        let with_cfg = TORUS.replace("[1, 0]]}", "[1, 0]]}, \"config\": {\"max_iter\": \"ten\"}");
        assert_eq!(err_path(&with_cfg), "config.max_iter");
        let tol = TORUS.replace("[1, 0]]}", "[1, 0]]}, \"config\": {\"tolerances\": {\"node\": 1}}");
        assert_eq!(err_path(&tol), "config.tolerances.node");
    }

    #[test]
    fn overrides_apply() {
        let mut s = parse_scenario(TORUS).unwrap();
        apply_overrides(&mut s, Some(7), Some(3), &[("node_disp_tol".into(), 1e-9)]).unwrap();
        assert_eq!(s.config.seed, 7);
        assert_eq!(s.config.max_iter, 3);
        assert_eq!(s.config.tolerances.node_disp, 1e-9);
        assert!(apply_overrides(&mut s, None, None, &[("bogus".into(), 1.0)]).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let rows = vec![
            TraceRow { iteration: 0, energy: 1.0, length: 1.2, max_node_disp: 0.0, recenter_word_len: 0 },
            TraceRow { iteration: 1, energy: 0.1 + 0.2, length: 1.0 / 3.0, max_node_disp: 1e-11, recenter_word_len: 2 },
        ];
        let text = trace_csv(&rows);
        assert!(text.starts_with(TRACE_HEADER));
        assert_eq!(parse_trace_csv(&text).unwrap(), rows);
    }

    #[test]
    fn torus_run_matches_oracle() {
        let p = prepare(parse_scenario(TORUS).unwrap()).unwrap();
        let out = execute(&p).unwrap();
        assert_eq!(out.report.exit_code(), 0);
        let oracle = out.report.oracle.as_ref().unwrap();
        assert!(oracle.abs_diff < 1e-8);
        assert_eq!(out.trace.len(), out.report.iterations + 1);
        let o = super::oracle(&p).unwrap();
        assert_eq!(o.fixed_point, FixedPointReport::FixedPointFree);
        assert!((o.translation_length.analytic - 1.0).abs() < 1e-12);
    }
}
