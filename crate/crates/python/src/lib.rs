//! Python bindings: model-space kernels, isometry groups, the shortening
//! iteration, foliation oracles and whole scenario runs.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use orbifold_geodesics::curves::{ClosedPair, DiscreteCurve};
use orbifold_geodesics::foliation::{self, FoliationModel};
use orbifold_geodesics::isogroup::{self, GroupSpec, IsometryGroup, LengthMode, Word};
use orbifold_geodesics::modelspace::{self, Point, SpaceId, TangentVector};
use orbifold_geodesics::scenario;
use orbifold_geodesics::shortening::{self, ConfigOptions, ShorteningConfig};

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// "E2", "S3", "H2" and the like.
fn parse_space(name: &str) -> PyResult<SpaceId> {
    let (kind, dim) = name.split_at(1.min(name.len()));
    let dim: usize = dim.trim_start_matches('^').parse().map_err(|_| err(format!("unknown space `{name}`")))?;
    let space = match kind {
        "E" | "e" => SpaceId::euclidean(dim),
        "S" | "s" => SpaceId::sphere(dim),
        "H" | "h" if dim == 2 => SpaceId::hyperbolic2(),
        _ => return Err(err(format!("unknown space `{name}`"))),
    };
    space.validate().map_err(err)?;
    Ok(space)
}

fn point(space: SpaceId, coords: Vec<f64>) -> PyResult<Point> {
    Point::from_slice(space, &coords).map_err(err)
}

fn coords(p: &Point) -> Vec<f64> {
    p.coords().iter().copied().collect()
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn dist(space: &str, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let s = parse_space(space)?;
    modelspace::dist(&point(s, p)?, &point(s, q)?).map_err(err)
}

#[pyfunction]
fn exp(space: &str, p: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = parse_space(space)?;
    let p = point(s, p)?;
    let v = TangentVector::new(p.clone(), DVector::from_vec(v)).map_err(err)?;
    Ok(coords(&modelspace::exp(&p, &v).map_err(err)?))
}

#[pyfunction]
fn log(space: &str, p: Vec<f64>, q: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = parse_space(space)?;
    let v = modelspace::log(&point(s, p)?, &point(s, q)?).map_err(err)?;
    Ok(v.vec().iter().copied().collect())
}

/// An isometry x ↦ Lx + t of a model space.
#[pyclass(module = "orbigeo", frozen)]
#[derive(Clone)]
struct Isometry {
    inner: isogroup::Isometry,
}

#[pymethods]
impl Isometry {
    #[new]
    #[pyo3(signature = (space, linear, translation=None))]
    fn new(space: &str, linear: Vec<Vec<f64>>, translation: Option<Vec<f64>>) -> PyResult<Self> {
        let s = parse_space(space)?;
        let n = linear.len();
        if linear.iter().any(|row| row.len() != n) {
            return Err(err("linear part must be square"));
        }
        let l = DMatrix::from_fn(n, n, |r, c| linear[r][c]);
        let t = DVector::from_vec(translation.unwrap_or_else(|| vec![0.0; n]));
        let inner = isogroup::Isometry::new(s, l, t).map_err(err)?;
        Ok(Isometry { inner })
    }

    #[getter]
    fn space(&self) -> String {
        self.inner.space().to_string()
    }

    #[getter]
    fn linear(&self) -> Vec<Vec<f64>> {
        self.inner.linear().row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    #[getter]
    fn translation(&self) -> Vec<f64> {
        self.inner.translation_part().iter().copied().collect()
    }

    #[getter]
    fn word(&self) -> Option<String> {
        self.inner.label().map(Word::to_string)
    }

    fn apply(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = point(self.inner.space(), p)?;
        Ok(coords(&self.inner.apply(&p).map_err(err)?))
    }

    fn compose(&self, other: &Isometry) -> PyResult<Isometry> {
        Ok(Isometry {
            inner: self.inner.compose(&other.inner).map_err(err)?,
        })
    }

    fn inverse(&self) -> Isometry {
        Isometry {
            inner: self.inner.inverse(),
        }
    }

    /// k·self·k⁻¹.
    fn conjugate_by(&self, k: &Isometry) -> PyResult<Isometry> {
        Ok(Isometry {
            inner: self.inner.conjugate_by(&k.inner).map_err(err)?,
        })
    }

    /// A fixed point, or None when the isometry moves every point.
    fn fixed_point(&self) -> Option<Vec<f64>> {
        match isogroup::fixed_point_test(&self.inner) {
            isogroup::FixedPointVerdict::FixedPoint(p) => Some(coords(&p)),
            isogroup::FixedPointVerdict::FixedPointFree => None,
        }
    }

    #[pyo3(signature = (mode="analytic"))]
    fn translation_length(&self, mode: &str) -> PyResult<f64> {
        let mode = match mode {
            "analytic" => LengthMode::Analytic,
            "numeric" => LengthMode::Numeric,
            other => return Err(err(format!("unknown mode `{other}`"))),
        };
        Ok(isogroup::translation_length(&self.inner, mode).value)
    }

    fn __repr__(&self) -> String {
        format!("Isometry({}, word={:?})", self.inner.space(), self.word())
    }
}

/// A discrete isometry group built from a JSON group description.
#[pyclass(module = "orbigeo", frozen)]
struct Group {
    inner: IsometryGroup,
}

#[pymethods]
impl Group {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: GroupSpec = serde_json::from_str(text).map_err(err)?;
        Ok(Group {
            inner: isogroup::make_group(&spec).map_err(err)?,
        })
    }

    /// Group generated by the given isometries, without a fold.
    #[staticmethod]
    fn from_generators(generators: Vec<Isometry>) -> PyResult<Self> {
        let first = generators.first().ok_or_else(|| err("need at least one generator"))?;
        let space = first.inner.space();
        let inner = IsometryGroup::from_generators(space, generators.into_iter().map(|g| g.inner).collect())
            .map_err(err)?;
        Ok(Group { inner })
    }

    #[getter]
    fn space(&self) -> String {
        self.inner.space().to_string()
    }

    #[getter]
    fn generator_count(&self) -> usize {
        self.inner.generators().len()
    }

    fn element(&self, word: &str) -> PyResult<Isometry> {
        let w = Word::parse(word).map_err(err)?;
        Ok(Isometry {
            inner: self.inner.element(&w).map_err(err)?,
        })
    }

    /// Folds a point into the fundamental domain; returns (k, k·p).
    fn fold(&self, p: Vec<f64>) -> PyResult<(Isometry, Vec<f64>)> {
        let p = point(self.inner.space(), p)?;
        let (k, q) = isogroup::fold(&self.inner, &p).map_err(err)?;
        Ok((Isometry { inner: k }, coords(&q)))
    }
}

/// Outcome of the shortening iteration.
#[pyclass(module = "orbigeo", frozen, get_all)]
struct Geodesic {
    status: String,
    certified: bool,
    length: f64,
    energy: f64,
    iterations: usize,
    partition: Vec<f64>,
    nodes: Vec<Vec<f64>>,
    conjugator: Option<String>,
    energy_trace: Vec<f64>,
}

#[pymethods]
impl Geodesic {
    fn __repr__(&self) -> String {
        format!(
            "Geodesic(status={:?}, length={}, iterations={})",
            self.status, self.length, self.iterations
        )
    }
}

/// Runs the shortening from a closed polyline `nodes` with closure `w0`.
#[pyfunction]
#[pyo3(signature = (group, w0, nodes, max_iter=None, node_count=None))]
fn shorten(
    group: &Group,
    w0: &Isometry,
    nodes: Vec<Vec<f64>>,
    max_iter: Option<usize>,
    node_count: Option<usize>,
) -> PyResult<Geodesic> {
    let space = group.inner.space();
    let pts = nodes.into_iter().map(|c| point(space, c)).collect::<PyResult<Vec<_>>>()?;
    let curve = DiscreteCurve::uniform(pts).map_err(err)?;
    let pair = ClosedPair::new(curve, w0.inner.clone()).map_err(err)?;
    let mut options = ConfigOptions {
        node_count,
        ..ConfigOptions::default()
    };
    if let Some(m) = max_iter {
        options.max_iter = m;
    }
    let cfg = ShorteningConfig::for_pair(&pair, &options).map_err(err)?;
    let r = shortening::iterate(&pair, &group.inner, &cfg).map_err(err)?;
    Ok(Geodesic {
        status: r.status.to_string(),
        certified: r.certified,
        length: r.length,
        energy: r.energy,
        iterations: r.iterations,
        partition: r.pair.curve().partition().values().to_vec(),
        nodes: r.pair.curve().nodes().iter().map(coords).collect(),
        conjugator: r.conjugator.label().map(Word::to_string),
        energy_trace: r.energy_trace,
    })
}

/// Length of the shortest horizontal periodic geodesic of the linear
/// foliation of the n-torus spanned by the integer columns `leaf_basis`.
#[pyfunction]
fn torus_horizontal_length(n: usize, leaf_basis: Vec<Vec<i64>>) -> PyResult<f64> {
    let f = FoliationModel::linear_torus(n, leaf_basis).map_err(err)?;
    foliation::shortest_horizontal_length_oracle(&f).map_err(err)
}

/// Runs a scenario given as JSON text; returns the result document as a dict.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let s = scenario::parse_scenario(text).map_err(err)?;
    let prepared = scenario::prepare(s).map_err(err)?;
    let output = scenario::execute(&prepared).map_err(err)?;
    json_loads(py, &scenario::to_json(&output.report))
}

/// Reference values for a scenario given as JSON text.
#[pyfunction]
fn oracle<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let s = scenario::parse_scenario(text).map_err(err)?;
    let prepared = scenario::prepare(s).map_err(err)?;
    let report = scenario::oracle(&prepared).map_err(err)?;
    json_loads(py, &scenario::to_json(&report))
}

#[pymodule]
fn orbigeo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Isometry>()?;
    m.add_class::<Group>()?;
    m.add_class::<Geodesic>()?;
    m.add_function(wrap_pyfunction!(dist, m)?)?;
    m.add_function(wrap_pyfunction!(exp, m)?)?;
    m.add_function(wrap_pyfunction!(log, m)?)?;
    m.add_function(wrap_pyfunction!(shorten, m)?)?;
    m.add_function(wrap_pyfunction!(torus_horizontal_length, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    Ok(())
}
