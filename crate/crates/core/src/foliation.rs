//! Horizontal periodic geodesics of two computable foliation families.
//!
//! A linear foliation of the flat torus ℝⁿ/Zⁿ by cosets of a rational
//! subspace V has leaf space V^⊥/Λ', where Λ' is the orthogonal projection of
//! Zⁿ. A suspension of a finite-order fiber isometry h has horizontal
//! directions along the fibers and leaf space F/⟨h⟩. Both reduce the search
//! for horizontal periodic geodesics to closed geodesics of a transverse
//! orbifold Σ/W, which [`crate::shortening`] handles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curves::{ClosedPair, DiscreteCurve, Partition};
use crate::error::{Error, Result};
use crate::isogroup::{
    self, fixed_point_test, make_group, GroupSpec, Isometry, IsometryGroup, IsometrySpec, LengthMode, Word,
};
use crate::modelspace::{self, Point, SpaceId};
use crate::shortening::{self, ConfigOptions, GeodesicResult, ShorteningConfig};

/// Largest torus dimension handled by the brute-force oracle.
pub const ORACLE_MAX_DIM: usize = 5;
pub const ORACLE_BOX: i64 = 10;

#[derive(Debug, Clone)]
pub enum FoliationModel {
    /// Leaves are cosets of span(leaf_basis) in ℝⁿ/Zⁿ; each inner vector is
    /// one column of the basis.
    LinearTorus { n: usize, leaf_basis: Vec<Vec<i64>> },
    Suspension { fiber: SpaceId, holonomy: Isometry, order: u32 },
}

/// Scenario-file form of a [`FoliationModel`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FoliationSpec {
    LinearTorus { leaf_basis: Vec<Vec<i64>> },
    Suspension {
        fiber: SpaceId,
        holonomy: IsometrySpec,
        order: u32,
    },
}

impl FoliationSpec {
    pub fn build(&self) -> Result<FoliationModel> {
        match self {
            FoliationSpec::LinearTorus { leaf_basis } => {
                let n = leaf_basis.first().map_or(0, |c| c.len());
                FoliationModel::linear_torus(n, leaf_basis.clone())
            }
            FoliationSpec::Suspension { fiber, holonomy, order } => {
                fiber.validate()?;
                FoliationModel::suspension(*fiber, holonomy.build(*fiber)?, *order)
            }
        }
    }
}

impl FoliationModel {
    pub fn linear_torus(n: usize, leaf_basis: Vec<Vec<i64>>) -> Result<Self> {
        let model = FoliationModel::LinearTorus { n, leaf_basis };
        model.validate()?;
        Ok(model)
    }

    pub fn suspension(fiber: SpaceId, holonomy: Isometry, order: u32) -> Result<Self> {
        let model = FoliationModel::Suspension { fiber, holonomy, order };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FoliationModel::LinearTorus { n, leaf_basis } => {
                if *n == 0 || leaf_basis.is_empty() {
                    return Err(Error::InvalidFoliation("need n >= 1 and at least one leaf direction".into()));
                }
                if leaf_basis.iter().any(|c| c.len() != *n) {
                    return Err(Error::InvalidFoliation(format!("leaf directions must have {n} entries")));
                }
                if leaf_basis.len() > *n || gram_determinant(leaf_basis) == 0 {
                    return Err(Error::InvalidFoliation("leaf basis is rank-deficient".into()));
                }
                Ok(())
            }
            FoliationModel::Suspension { fiber, holonomy, order } => {
                if holonomy.space() != *fiber {
                    return Err(Error::SpaceMismatch {
                        expected: *fiber,
                        found: holonomy.space(),
                    });
                }
                if *order == 0 {
                    return Err(Error::InvalidFoliation("holonomy order must be positive".into()));
                }
                let full = holonomy.power(*order as i64);
                if !full.is_identity(1e-10) {
                    return Err(Error::InvalidFoliation(format!(
                        "holonomy^{order} differs from the identity by {:e}",
                        full.distance(&Isometry::identity(*fiber))
                    )));
                }
                Ok(())
            }
        }
    }

    /// Space in which horizontal curves are represented: ℝⁿ for the torus,
    /// the fiber for a suspension.
    pub fn ambient_space(&self) -> SpaceId {
        match self {
            FoliationModel::LinearTorus { n, .. } => SpaceId::euclidean(*n),
            FoliationModel::Suspension { fiber, .. } => *fiber,
        }
    }

    fn leaf_matrix(&self) -> Option<DMatrix<f64>> {
        match self {
            FoliationModel::LinearTorus { n, leaf_basis } => {
                Some(DMatrix::from_fn(*n, leaf_basis.len(), |r, c| leaf_basis[c][r] as f64))
            }
            FoliationModel::Suspension { .. } => None,
        }
    }
}

/// Holonomy of a leaf loop: trivial on the torus, a power hʲ (j mod m) for a
/// suspension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyClass {
    Trivial,
    Winding(i64),
}

impl HolonomyClass {
    pub fn winding(j: i64, order: u32) -> Self {
        HolonomyClass::Winding(j.rem_euclid(order as i64))
    }
}

/// Class selector for [`find_horizontal_periodic_geodesic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassHint {
    /// Integer vector z; the closure element is translation by proj(z).
    Lattice(Vec<i64>),
    Winding(i64),
}

#[derive(Debug, Clone)]
pub enum Embedding {
    /// x = Q·y (+ leaf offset), with Q an orthonormal basis of V^⊥.
    Orthonormal { q: DMatrix<f64> },
    /// The transverse model is the fiber over the base point.
    FiberSlice,
}

#[derive(Debug, Clone)]
pub struct TransverseModel {
    pub space: SpaceId,
    pub group: IsometryGroup,
    pub embed: Embedding,
    /// Columns generate the projected lattice Λ' (torus only).
    pub lattice: Option<DMatrix<f64>>,
}

impl TransverseModel {
    pub fn embed_point(&self, y: &Point) -> DVector<f64> {
        match &self.embed {
            Embedding::Orthonormal { q } => q * y.coords(),
            Embedding::FiberSlice => y.coords().clone(),
        }
    }

    /// Transverse coordinates of an ambient point.
    pub fn project(&self, x: &Point) -> Point {
        match &self.embed {
            Embedding::Orthonormal { q } => Point::euclidean((q.transpose() * x.coords()).as_slice()),
            Embedding::FiberSlice => x.clone(),
        }
    }

    fn lift(&self, y: &Point, offset: &DVector<f64>) -> Point {
        match &self.embed {
            Embedding::Orthonormal { .. } => Point::euclidean((self.embed_point(y) + offset).as_slice()),
            Embedding::FiberSlice => y.clone(),
        }
    }

    fn leaf_offset(&self, x: &Point) -> DVector<f64> {
        match &self.embed {
            Embedding::Orthonormal { q } => x.coords() - q * (q.transpose() * x.coords()),
            Embedding::FiberSlice => DVector::zeros(x.coords().len()),
        }
    }
}

fn gram_determinant(cols: &[Vec<i64>]) -> i128 {
    let k = cols.len();
    let gram: Vec<Vec<i128>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| *a as i128 * *b as i128).sum())
                .collect()
        })
        .collect();
    bareiss_determinant(gram)
}

/// Fraction-free determinant of an integer matrix.
fn bareiss_determinant(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * m[n - 1][n - 1]
    }
}

/// Integer row echelon form; the nonzero rows generate the same Z-module.
fn integer_row_basis(mut rows: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivot = 0;
    for c in 0..cols {
        if pivot == rows.len() {
            break;
        }
        loop {
            let best = (pivot..rows.len())
                .filter(|&r| rows[r][c] != 0)
                .min_by_key(|&r| rows[r][c].abs());
            let Some(best) = best else { break };
            rows.swap(pivot, best);
            let mut done = true;
            for r in pivot + 1..rows.len() {
                let q = rows[r][c].div_euclid(rows[pivot][c]);
                if q != 0 {
                    let p = rows[pivot].clone();
                    for (x, y) in rows[r].iter_mut().zip(&p) {
                        *x -= q * y;
                    }
                }
                if rows[r][c] != 0 {
                    done = false;
                }
            }
            if done {
                if rows[pivot][c] < 0 {
                    rows[pivot].iter_mut().for_each(|x| *x = -*x);
                }
                pivot += 1;
                break;
            }
        }
    }
    rows.into_iter().filter(|r| r.iter().any(|&x| x != 0)).collect()
}

/// Repeated pairwise size reduction b_i ← b_i − round(⟨b_i,b_j⟩/⟨b_j,b_j⟩)·b_j.
fn pairwise_reduce(basis: &mut [Vec<i128>]) {
    let dot = |a: &[i128], b: &[i128]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i128>();
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let nj = dot(&basis[j], &basis[j]);
                let mu = (dot(&basis[i], &basis[j]) as f64 / nj as f64).round() as i128;
                if mu != 0 {
                    let bj = basis[j].clone();
                    for (x, y) in basis[i].iter_mut().zip(&bj) {
                        *x -= mu * y;
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    basis.sort_by_key(|b| dot(b, b));
}

/// Orthogonal projector onto V^⊥.
fn complement_projector(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let gram_inv = (b.transpose() * b).try_inverse().expect("validated full rank");
    DMatrix::identity(n, n) - b * gram_inv * b.transpose()
}

/// Reduces a foliation to its transverse orbifold model.
pub fn transverse_model(f: &FoliationModel) -> Result<TransverseModel> {
    f.validate()?;
    match f {
        FoliationModel::LinearTorus { n, leaf_basis } => {
            let n = *n;
            let k = leaf_basis.len();
            if k == n {
                return Err(Error::NoTransverseDirection);
            }
            let b = f.leaf_matrix().expect("torus");
            let p = complement_projector(&b);

            // Orthonormal basis of V^⊥ by Gram–Schmidt on the projected
            // standard basis.
            let mut q_cols: Vec<DVector<f64>> = Vec::new();
            for i in 0..n {
                let mut v = p.column(i).into_owned();
                for u in &q_cols {
                    v -= u * u.dot(&v);
                }
                let norm = v.norm();
                if norm > 1e-8 {
                    q_cols.push(v / norm);
                }
                if q_cols.len() == n - k {
                    break;
                }
            }
            let q = DMatrix::from_columns(&q_cols);

            // Λ' = P·Zⁿ. D·P is integral with D = det(BᵀB).
            let d = gram_determinant(leaf_basis);
            let scaled = &p * d as f64;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let mut row = Vec::with_capacity(n);
                for j in 0..n {
                    let x = scaled[(j, i)];
                    if (x - x.round()).abs() > 1e-6 {
                        return Err(Error::InvalidFoliation("projected lattice is not integral at this precision".into()));
                    }
                    row.push(x.round() as i128);
                }
                rows.push(row);
            }
            let mut basis = integer_row_basis(rows);
            pairwise_reduce(&mut basis);
            if basis.len() != n - k {
                return Err(Error::InvalidFoliation(format!(
                    "projected lattice has rank {} instead of {}",
                    basis.len(),
                    n - k
                )));
            }
            let qt = q.transpose();
            let gens: Vec<DVector<f64>> = basis
                .iter()
                .map(|row| &qt * DVector::from_iterator(n, row.iter().map(|&x| x as f64 / d as f64)))
                .collect();
            let lattice = DMatrix::from_columns(&gens);
            let group = make_group(&GroupSpec::Lattice {
                basis: gens.iter().map(|g| g.as_slice().to_vec()).collect(),
            })?;
            Ok(TransverseModel {
                space: SpaceId::euclidean(n - k),
                group,
                embed: Embedding::Orthonormal { q },
                lattice: Some(lattice),
            })
        }
        FoliationModel::Suspension { fiber, holonomy, .. } => Ok(TransverseModel {
            space: *fiber,
            group: IsometryGroup::from_generators(*fiber, vec![holonomy.clone()])?,
            embed: Embedding::FiberSlice,
            lattice: None,
        }),
    }
}

/// Distance in the leaf space between the leaves through `x` and `y`.
pub fn leaf_residual(f: &FoliationModel, model: &TransverseModel, x: &Point, y: &Point) -> Result<f64> {
    match f {
        FoliationModel::LinearTorus { .. } => {
            let lattice = model.lattice.as_ref().expect("torus model has a lattice");
            let c = model.project(y).into_coords() - model.project(x).into_coords();
            let inv = lattice.clone().try_inverse().expect("lattice basis is invertible");
            let coords = (inv * &c).map(f64::round);
            Ok((c - lattice * coords).norm())
        }
        FoliationModel::Suspension { holonomy, order, .. } => {
            let mut best = f64::INFINITY;
            let mut hx = x.clone();
            for _ in 0..*order {
                best = best.min(modelspace::dist(&hx, y)?);
                hx = holonomy.apply(&hx)?;
            }
            Ok(best)
        }
    }
}

/// A path inside one leaf.
#[derive(Debug, Clone)]
pub enum LeafPath {
    /// Torus: straight path by a displacement lying in V.
    Translate { start: Point, displacement: DVector<f64> },
    /// Suspension: j turns around the base circle starting at a fiber point.
    Winding { start: Point, winding: i64 },
}

impl LeafPath {
    pub fn start(&self) -> &Point {
        match self {
            LeafPath::Translate { start, .. } | LeafPath::Winding { start, .. } => start,
        }
    }
}

/// The geodesic segment t ↦ exp(start, t·velocity), t ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct HorizontalSegment {
    pub start: Point,
    pub velocity: DVector<f64>,
}

impl HorizontalSegment {
    pub fn length(&self) -> f64 {
        self.start.space().tangent_norm(&self.velocity)
    }

    pub fn end(&self) -> Point {
        modelspace::exp_raw(&self.start, &self.velocity)
    }
}

fn leaf_component(f: &FoliationModel, v: &DVector<f64>) -> f64 {
    match f.leaf_matrix() {
        Some(b) => {
            let p = complement_projector(&b);
            (v - &p * v).norm()
        }
        None => 0.0,
    }
}

/// Transports a horizontal segment along a leaf path (flat Bott connection).
/// Returns the transported segment γ̂ at the end of β and the path β̂ from the
/// end of γ.
pub fn parallel_transport(
    f: &FoliationModel,
    beta: &LeafPath,
    gamma: &HorizontalSegment,
) -> Result<(HorizontalSegment, LeafPath)> {
    f.validate()?;
    if gamma.start.space() != f.ambient_space() || beta.start().space() != f.ambient_space() {
        return Err(Error::SpaceMismatch {
            expected: f.ambient_space(),
            found: gamma.start.space(),
        });
    }
    if modelspace::dist(beta.start(), &gamma.start)? > 1e-10 {
        return Err(Error::InvalidFoliation("segment does not start at the leaf path's start".into()));
    }
    let vertical = leaf_component(f, &gamma.velocity);
    if vertical > 1e-10 * gamma.velocity.norm().max(1.0) {
        return Err(Error::NotHorizontal(vertical));
    }
    match (f, beta) {
        (FoliationModel::LinearTorus { .. }, LeafPath::Translate { start, displacement }) => {
            if displacement.len() != start.coords().len() {
                return Err(Error::InvalidFoliation("displacement has the wrong dimension".into()));
            }
            let b = f.leaf_matrix().expect("torus");
            if (complement_projector(&b) * displacement).norm() > 1e-10 * displacement.norm().max(1.0) {
                return Err(Error::InvalidFoliation("leaf path leaves its leaf".into()));
            }
            let moved = Point::euclidean((start.coords() + displacement).as_slice());
            let gamma_hat = HorizontalSegment {
                start: moved,
                velocity: gamma.velocity.clone(),
            };
            let beta_hat = LeafPath::Translate {
                start: gamma.end(),
                displacement: displacement.clone(),
            };
            Ok((gamma_hat, beta_hat))
        }
        (FoliationModel::Suspension { holonomy, .. }, LeafPath::Winding { start, winding }) => {
            let h = holonomy.power(*winding);
            let gamma_hat = HorizontalSegment {
                start: h.apply(start)?,
                velocity: h.linear() * &gamma.velocity,
            };
            let beta_hat = LeafPath::Winding {
                start: gamma.end(),
                winding: *winding,
            };
            Ok((gamma_hat, beta_hat))
        }
        _ => Err(Error::InvalidFoliation("leaf path does not match the foliation family".into())),
    }
}

/// A horizontal curve in the foliated space together with its holonomy class.
#[derive(Debug, Clone)]
pub struct FClosedCurve {
    pub curve: DiscreteCurve,
    pub class: HolonomyClass,
}

struct Reduced {
    model: TransverseModel,
    pair: ClosedPair,
    offset: DVector<f64>,
}

fn reduce(f: &FoliationModel, data: &FClosedCurve) -> Result<Reduced> {
    let model = transverse_model(f)?;
    let curve = &data.curve;
    if curve.space() != f.ambient_space() {
        return Err(Error::SpaceMismatch {
            expected: f.ambient_space(),
            found: curve.space(),
        });
    }
    let residual = leaf_residual(f, &model, curve.first(), curve.last())?;
    if residual > 1e-9 {
        return Err(Error::NotSameLeaf(residual));
    }
    let closure = match (f, data.class) {
        (FoliationModel::LinearTorus { .. }, _) => {
            let c = model.project(curve.last()).into_coords() - model.project(curve.first()).into_coords();
            Isometry::translation(c.as_slice())
        }
        (FoliationModel::Suspension { holonomy, order, .. }, HolonomyClass::Winding(j)) => {
            holonomy.power(j.rem_euclid(*order as i64))
        }
        (FoliationModel::Suspension { .. }, HolonomyClass::Trivial) => Isometry::identity(f.ambient_space()),
    };
    let nodes = curve.nodes().iter().map(|x| model.project(x)).collect();
    let transverse = DiscreteCurve::new(curve.partition().clone(), nodes)?;
    let offset = model.leaf_offset(curve.first());
    let pair = ClosedPair::new(transverse, closure)?;
    Ok(Reduced { model, pair, offset })
}

/// Foliated P̂: project to the transverse model, apply P̂ there and lift back
/// to a horizontal curve through the leaf of the original start point.
pub fn f_p_hat(f: &FoliationModel, data: &FClosedCurve, partition: &Partition, rho0: f64) -> Result<FClosedCurve> {
    let reduced = reduce(f, data)?;
    let shortened = shortening::p_hat(&reduced.pair, partition, rho0)?;
    let nodes = shortened
        .curve()
        .nodes()
        .iter()
        .map(|y| reduced.model.lift(y, &reduced.offset))
        .collect();
    Ok(FClosedCurve {
        curve: DiscreteCurve::new(shortened.curve().partition().clone(), nodes)?,
        class: data.class,
    })
}

/// Energy of the transverse image of an F-closed curve.
pub fn transverse_energy(f: &FoliationModel, data: &FClosedCurve) -> Result<f64> {
    Ok(reduce(f, data)?.pair.energy())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalReport {
    /// Largest leaf component of a unit segment direction.
    pub horizontal_residual: f64,
    /// Leaf-space distance between the endpoints' leaves.
    pub leaf_residual: f64,
    /// Angle between dφ·γ'(0) and γ'(t₁).
    pub closure_angle: f64,
    /// Largest leaf-space distance between γ(n·t₁ + s) and γ(s).
    pub recurrence_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct HorizontalGeodesic {
    /// Transverse closed pair the shortening started from.
    pub initial: ClosedPair,
    pub result: GeodesicResult,
    pub model: TransverseModel,
    pub closure: Isometry,
    /// The geodesic drawn in the foliated space.
    pub lifted: DiscreteCurve,
    pub report: Option<HorizontalReport>,
}

fn closure_for(f: &FoliationModel, model: &TransverseModel, hint: &ClassHint) -> Result<Isometry> {
    match (f, hint) {
        (FoliationModel::LinearTorus { n, .. }, ClassHint::Lattice(z)) => {
            if z.len() != *n {
                return Err(Error::InvalidConfig(format!("class vector must have {n} entries")));
            }
            let x = Point::euclidean(&z.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let c = model.project(&x).into_coords();
            if c.norm() <= 1e-12 {
                return Err(Error::InvalidConfig("class vector lies in the leaf direction".into()));
            }
            Ok(Isometry::translation(c.as_slice()))
        }
        (FoliationModel::Suspension { holonomy, order, .. }, ClassHint::Winding(j)) => {
            let j = j.rem_euclid(*order as i64);
            Ok(holonomy.power(j).with_label(Word::power(0, j)))
        }
        _ => Err(Error::InvalidConfig("class hint does not match the foliation family".into())),
    }
}

fn default_start(space: SpaceId) -> Point {
    match space {
        SpaceId::Sphere { dim: n } => {
            let coords = DVector::from_fn(n + 1, |i, _| 1.0 / (i as f64 + 1.0).powi(2));
            Point::projected(space, coords)
        }
        _ => space.origin(),
    }
}

/// Runs the shortening on the transverse model with the closure element
/// selected by `hint`, then lifts and checks the result in the foliated space.
pub fn find_horizontal_periodic_geodesic(
    f: &FoliationModel,
    hint: &ClassHint,
    options: &ConfigOptions,
) -> Result<HorizontalGeodesic> {
    let model = transverse_model(f)?;
    let w0 = closure_for(f, &model, hint)?;
    let start = default_start(model.space);
    let pair = shortening::auto_pair(&start, &w0, 8)?;
    find_from(f, model, pair, options)
}

/// As [`find_horizontal_periodic_geodesic`], starting from a given transverse
/// closed pair.
pub fn find_horizontal_periodic_geodesic_from(
    f: &FoliationModel,
    pair: &ClosedPair,
    options: &ConfigOptions,
) -> Result<HorizontalGeodesic> {
    let model = transverse_model(f)?;
    find_from(f, model, pair.clone(), options)
}

fn find_from(f: &FoliationModel, model: TransverseModel, pair: ClosedPair, options: &ConfigOptions) -> Result<HorizontalGeodesic> {
    let cfg = ShorteningConfig::for_pair(&pair, options)?;
    let w0 = pair.closure().clone();
    let result = shortening::iterate(&pair, &model.group, &cfg)?;
    let offset = DVector::zeros(f.ambient_space().ambient_dim());
    let nodes = result.pair.curve().nodes().iter().map(|y| model.lift(y, &offset)).collect();
    let lifted = DiscreteCurve::new(result.pair.curve().partition().clone(), nodes)?;
    let report = match result.status {
        shortening::GeodesicStatus::NontrivialGeodesic => Some(check_lift(f, &model, &result, &lifted)?),
        _ => None,
    };
    Ok(HorizontalGeodesic {
        initial: pair,
        result,
        model,
        closure: w0,
        lifted,
        report,
    })
}

fn check_lift(f: &FoliationModel, model: &TransverseModel, result: &GeodesicResult, lifted: &DiscreteCurve) -> Result<HorizontalReport> {
    let nodes = lifted.nodes();
    let mut horizontal_residual: f64 = 0.0;
    for w in nodes.windows(2) {
        let v = modelspace::log(&w[0], &w[1])?;
        let norm = v.norm();
        if norm > 0.0 {
            horizontal_residual = horizontal_residual.max(leaf_component(f, v.vec()) / norm);
        }
    }
    let leaf = leaf_residual(f, model, lifted.first(), lifted.last())?;
    let closure_angle = result.verification.as_ref().map_or(f64::INFINITY, |r| r.worst_angle);

    // Continue the geodesic by its own flow and compare leaves.
    let dt = lifted.partition().values()[1] - lifted.partition().values()[0];
    let initial = modelspace::log(&nodes[0], &nodes[1])?.vec() / dt;
    let mut recurrence_residual: f64 = 0.0;
    for n in 1..=2 {
        for i in 0..5 {
            let s = i as f64 / 5.0;
            let here = lifted.eval(s)?;
            let later = modelspace::exp_raw(&nodes[0], &(&initial * (n as f64 + s)));
            recurrence_residual = recurrence_residual.max(leaf_residual(f, model, &here, &later)?);
        }
    }
    let passed = horizontal_residual <= 1e-9
        && leaf <= 1e-9
        && closure_angle <= result.verification.as_ref().map_or(0.0, |_| 1e-6)
        && recurrence_residual <= 1e-8;
    Ok(HorizontalReport {
        horizontal_residual,
        leaf_residual: leaf,
        closure_angle,
        recurrence_residual,
        passed,
    })
}

/// Shortest projected lattice vector and an integer vector realizing it.
pub fn shortest_horizontal_class(f: &FoliationModel) -> Result<(f64, Vec<i64>)> {
    f.validate()?;
    let FoliationModel::LinearTorus { n, leaf_basis } = f else {
        return Err(Error::NoOracle("class search is only defined for torus foliations".into()));
    };
    let n = *n;
    if leaf_basis.len() == n {
        return Err(Error::NoTransverseDirection);
    }
    if n > ORACLE_MAX_DIM || leaf_basis.iter().flatten().any(|x| x.abs() > ORACLE_BOX) {
        return Err(Error::NoOracle(format!(
            "brute force needs n <= {ORACLE_MAX_DIM} and leaf entries within ±{ORACLE_BOX}"
        )));
    }
    let p = complement_projector(&f.leaf_matrix().expect("torus"));
    let mut z = vec![-ORACLE_BOX; n];
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        let v = DVector::from_iterator(n, z.iter().map(|&x| x as f64));
        let len = (&p * v).norm();
        if len > 1e-12 && len < best.0 - 1e-15 {
            best = (len, z.clone());
        }
        let mut i = 0;
        while i < n && z[i] == ORACLE_BOX {
            z[i] = -ORACLE_BOX;
            i += 1;
        }
        if i == n {
            break;
        }
        z[i] += 1;
    }
    if best.1.is_empty() {
        return Err(Error::NoTransverseDirection);
    }
    Ok(best)
}

/// Independent reference value for the shortest horizontal periodic geodesic.
pub fn shortest_horizontal_length_oracle(f: &FoliationModel) -> Result<f64> {
    match f {
        FoliationModel::LinearTorus { .. } => Ok(shortest_horizontal_class(f)?.0),
        FoliationModel::Suspension { holonomy, order, .. } => {
            f.validate()?;
            let lengths: Vec<f64> = (1..*order as i64)
                .map(|j| holonomy.power(j))
                .filter(|h| fixed_point_test(h).is_free())
                .map(|h| isogroup::translation_length(&h, LengthMode::Analytic).value)
                .collect();
            lengths
                .into_iter()
                .reduce(f64::min)
                .ok_or_else(|| Error::NoOracle("no holonomy power is fixed-point free".into()))
        }
    }
}
