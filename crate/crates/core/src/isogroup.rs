//! Discrete isometry groups of the model spaces.
//!
//! Isometries are stored as exact ambient matrices (plus a translation for
//! Euclidean space). Words in the generators are carried only as labels.

use std::f64::consts::PI;
use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelspace::{self, minkowski, Point, SpaceId, TangentVector};

const ISOMETRY_TOL: f64 = 1e-10;
const FIXED_POINT_TOL: f64 = 1e-9;
const NUMERIC_STARTS: usize = 9;
const NUMERIC_BUDGET: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// A word in the generators, stored as (generator, exponent) syllables.
/// Composition reads left to right: `a b` acts as `a ∘ b`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<(usize, i64)>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(generator: usize) -> Self {
        Word(vec![(generator, 1)])
    }

    pub fn power(generator: usize, exponent: i64) -> Self {
        if exponent == 0 {
            Word::empty()
        } else {
            Word(vec![(generator, exponent)])
        }
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.0
    }

    /// Number of letters, counting exponents with multiplicity.
    pub fn len(&self) -> u64 {
        self.0.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation followed by free reduction at the seam.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &(g, e) in &other.0 {
            match out.last_mut() {
                Some((lg, le)) if *lg == g => {
                    *le += e;
                    if *le == 0 {
                        out.pop();
                    }
                }
                _ => out.push((g, e)),
            }
        }
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    /// Parses whitespace-separated letters `i` or `i^e`, e.g. `"1 0^-1 2^3"`.
    pub fn parse(text: &str) -> std::result::Result<Word, String> {
        let mut w = Word::empty();
        for tok in text.split_whitespace() {
            let (g, e) = match tok.split_once('^') {
                Some((g, e)) => (g, e.parse::<i64>().map_err(|_| format!("bad exponent in `{tok}`"))?),
                None => (tok, 1),
            };
            let g = g.parse::<usize>().map_err(|_| format!("bad generator index in `{tok}`"))?;
            w = w.concat(&Word::power(g, e));
        }
        Ok(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(g, e)| if e == 1 { format!("{g}") } else { format!("{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    space: SpaceId,
    linear: DMatrix<f64>,
    translation: DVector<f64>,
    label: Option<Word>,
}

fn signature(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = -1.0;
    j
}

impl Isometry {
    /// Validating constructor. `translation` must be zero outside Euclidean space.
    pub fn new(space: SpaceId, linear: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        space.validate()?;
        let n = space.ambient_dim();
        let bad = |m: String| Error::InvalidIsometry(m);
        if linear.nrows() != n || linear.ncols() != n {
            return Err(bad(format!("linear part must be {n}x{n}")));
        }
        if translation.len() != n {
            return Err(bad(format!("translation must have {n} entries")));
        }
        if linear.iter().chain(translation.iter()).any(|x| !x.is_finite()) {
            return Err(bad("non-finite entry".into()));
        }
        let defect = match space {
            SpaceId::Hyperbolic2 => {
                let j = signature(3);
                (linear.transpose() * &j * &linear - j).amax()
            }
            _ => (linear.transpose() * &linear - DMatrix::identity(n, n)).amax(),
        };
        if defect > ISOMETRY_TOL {
            return Err(bad(format!("linear part is not an isometry (defect {defect:e})")));
        }
        if space == SpaceId::Hyperbolic2 && linear[(0, 0)] <= 0.0 {
            return Err(bad("linear part swaps the hyperboloid sheets".into()));
        }
        if !matches!(space, SpaceId::Euclidean { .. }) && translation.amax() > 0.0 {
            return Err(bad("translation is only allowed in Euclidean space".into()));
        }
        Ok(Isometry {
            space,
            linear,
            translation,
            label: None,
        })
    }

    pub fn from_linear(space: SpaceId, linear: DMatrix<f64>) -> Result<Self> {
        let n = space.ambient_dim();
        Isometry::new(space, linear, DVector::zeros(n))
    }

    pub fn identity(space: SpaceId) -> Self {
        let n = space.ambient_dim();
        Isometry {
            space,
            linear: DMatrix::identity(n, n),
            translation: DVector::zeros(n),
            label: Some(Word::empty()),
        }
    }

    pub fn translation(offset: &[f64]) -> Self {
        let n = offset.len();
        Isometry {
            space: SpaceId::euclidean(n),
            linear: DMatrix::identity(n, n),
            translation: DVector::from_column_slice(offset),
            label: None,
        }
    }

    /// Reflection in a wall (see [`Wall`]).
    pub fn reflection(space: SpaceId, wall: &Wall) -> Self {
        let n = space.ambient_dim();
        let nv = &wall.normal;
        match space {
            SpaceId::Hyperbolic2 => {
                let jn = &signature(3) * nv;
                Isometry {
                    space,
                    linear: DMatrix::identity(n, n) - nv * jn.transpose() * 2.0,
                    translation: DVector::zeros(n),
                    label: None,
                }
            }
            _ => Isometry {
                space,
                linear: DMatrix::identity(n, n) - nv * nv.transpose() * 2.0,
                translation: nv * (2.0 * wall.offset),
                label: None,
            },
        }
    }

    pub fn with_label(mut self, word: Word) -> Self {
        self.label = Some(word);
        self
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn translation_part(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn label(&self) -> Option<&Word> {
        self.label.as_ref()
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        if p.space() != self.space {
            return Err(Error::SpaceMismatch {
                expected: self.space,
                found: p.space(),
            });
        }
        Ok(self.apply_unchecked(p))
    }

    pub(crate) fn apply_unchecked(&self, p: &Point) -> Point {
        let c = &self.linear * p.coords() + &self.translation;
        Point::projected(self.space, c)
    }

    /// Differential: the linear part acting on the tangent vector, based at
    /// the image of its base point.
    pub fn dapply(&self, v: &TangentVector) -> Result<TangentVector> {
        let base = self.apply(v.base())?;
        Ok(TangentVector::from_parts_unchecked(base, &self.linear * v.vec()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        if other.space != self.space {
            return Err(Error::SpaceMismatch {
                expected: self.space,
                found: other.space,
            });
        }
        let label = match (&self.label, &other.label) {
            (Some(a), Some(b)) => Some(a.concat(b)),
            _ => None,
        };
        Ok(Isometry {
            space: self.space,
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
            label,
        })
    }

    pub fn inverse(&self) -> Isometry {
        let linear = match self.space {
            SpaceId::Hyperbolic2 => {
                let j = signature(3);
                &j * self.linear.transpose() * &j
            }
            _ => self.linear.transpose(),
        };
        let translation = -(&linear * &self.translation);
        Isometry {
            space: self.space,
            linear,
            translation,
            label: self.label.as_ref().map(Word::inverse),
        }
    }

    /// `k ∘ self ∘ k⁻¹`.
    pub fn conjugate_by(&self, k: &Isometry) -> Result<Isometry> {
        k.compose(self)?.compose(&k.inverse())
    }

    pub fn power(&self, n: i64) -> Isometry {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Isometry::identity(self.space);
        if self.label.is_none() {
            out.label = None;
        }
        for _ in 0..n.unsigned_abs() {
            out = out.compose(&base).expect("same space");
        }
        out
    }

    /// Largest entrywise difference of linear and translation parts.
    pub fn distance(&self, other: &Isometry) -> f64 {
        (&self.linear - &other.linear)
            .amax()
            .max((&self.translation - &other.translation).amax())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance(&Isometry::identity(self.space)) <= tol
    }

    /// Invariant defect: |LᵀL − I| (or |LᵀJL − J|) in max norm.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.space.ambient_dim();
        match self.space {
            SpaceId::Hyperbolic2 => {
                let j = signature(3);
                (self.linear.transpose() * &j * &self.linear - j).amax()
            }
            _ => (self.linear.transpose() * &self.linear - DMatrix::identity(n, n)).amax(),
        }
    }

    fn displacement(&self, y: &Point) -> f64 {
        modelspace::dist(y, &self.apply_unchecked(y)).expect("same space")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointVerdict {
    FixedPoint(Point),
    FixedPointFree,
}

impl FixedPointVerdict {
    pub fn is_free(&self) -> bool {
        matches!(self, FixedPointVerdict::FixedPointFree)
    }
}

// Singular values below this count as zero. Isometries of the catalog have
// L − I singular values 0 or bounded well away from it.
const RANK_TOL: f64 = 1e-6;

/// Eigen-decomposition of mᵀm, standing in for an SVD of m.
fn gram_eigen(m: &DMatrix<f64>) -> nalgebra::SymmetricEigen<f64, nalgebra::Dyn> {
    (m.transpose() * m).symmetric_eigen()
}

/// Right singular vectors of `m` with singular value ≤ `tol`.
pub(crate) fn null_basis(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let eig = gram_eigen(m);
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.max(0.0).sqrt() <= tol)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Minimum-norm least-squares solution of m·x = b.
fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let eig = gram_eigen(m);
    let rhs = m.transpose() * b;
    let mut x = DVector::zeros(m.ncols());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.max(0.0).sqrt() > RANK_TOL {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(&rhs) / l);
        }
    }
    x
}

/// Decides whether `w` fixes a point of its space.
pub fn fixed_point_test(w: &Isometry) -> FixedPointVerdict {
    let n = w.space.ambient_dim();
    let a = &w.linear - DMatrix::identity(n, n);
    let candidate = match w.space {
        SpaceId::Euclidean { .. } => {
            Some(Point::projected(w.space, least_squares(&a, &(-&w.translation))))
        }
        SpaceId::Sphere { .. } => null_basis(&a, RANK_TOL)
            .into_iter()
            .next()
            .map(|v| Point::projected(w.space, v)),
        SpaceId::Hyperbolic2 => {
            let basis = null_basis(&a, RANK_TOL);
            if basis.is_empty() {
                None
            } else {
                let b = DMatrix::from_columns(&basis);
                let gram = b.transpose() * signature(3) * &b;
                let eig = gram.symmetric_eigen();
                let (imin, &lmin) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .min_by(|x, y| x.1.total_cmp(y.1))
                    .expect("nonempty");
                if lmin < -1e-12 {
                    let v = &b * eig.eigenvectors.column(imin);
                    Some(Point::projected(w.space, v))
                } else {
                    None
                }
            }
        }
    };
    match candidate {
        Some(p) if w.displacement(&p) <= FIXED_POINT_TOL => FixedPointVerdict::FixedPoint(p),
        _ => FixedPointVerdict::FixedPointFree,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationLength {
    pub value: f64,
    /// A point realizing the infimum, when one is known.
    pub argmin: Option<Point>,
    /// False when the numeric search ran out of budget while still improving.
    pub certified: bool,
    pub evaluations: usize,
}

/// inf over y of d(y, w·y).
pub fn translation_length(w: &Isometry, mode: LengthMode) -> TranslationLength {
    match mode {
        LengthMode::Analytic => analytic_translation_length(w),
        LengthMode::Numeric => numeric_translation_length(w, DEFAULT_SEED),
    }
}

fn analytic_translation_length(w: &Isometry) -> TranslationLength {
    let n = w.space.ambient_dim();
    let (value, argmin) = match w.space {
        SpaceId::Euclidean { .. } => {
            // Component of the translation along ker(L − I), the orthogonal
            // complement of im(L − I).
            let a = &w.linear - DMatrix::identity(n, n);
            let mut t_par = DVector::zeros(n);
            for v in null_basis(&a, RANK_TOL) {
                t_par += &v * v.dot(&w.translation);
            }
            let x = Some(least_squares(&a, &(&t_par - &w.translation)));
            (t_par.norm(), x.map(|x| Point::projected(w.space, x)))
        }
        SpaceId::Sphere { .. } => {
            let sym = (&w.linear + w.linear.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let (imax, &lmax) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty");
            let v = eig.eigenvectors.column(imax).into_owned();
            (lmax.clamp(-1.0, 1.0).acos(), Some(Point::projected(w.space, v)))
        }
        SpaceId::Hyperbolic2 => hyperbolic_translation_length(w),
    };
    TranslationLength {
        value,
        argmin,
        certified: true,
        evaluations: 0,
    }
}

/// Trace classification on O⁺(2,1): orientation preserving elements with
/// trace 1 + 2cosh ℓ and glide reflections with trace 2cosh ℓ − 1.
fn hyperbolic_translation_length(w: &Isometry) -> (f64, Option<Point>) {
    let tr = w.linear.trace();
    let det = w.linear.determinant();
    let c = if det > 0.0 { (tr - 1.0) / 2.0 } else { (tr + 1.0) / 2.0 };
    if c <= 1.0 + 1e-12 {
        let argmin = match fixed_point_test(w) {
            FixedPointVerdict::FixedPoint(p) => Some(p),
            FixedPointVerdict::FixedPointFree => None,
        };
        return (0.0, argmin);
    }
    let ell = c.acosh();
    // The axis is spanned by the two light-like eigenvectors e^{±ℓ}.
    let eigvec = |lambda: f64| -> Option<DVector<f64>> {
        let m = &w.linear - DMatrix::identity(3, 3) * lambda;
        let eig = gram_eigen(&m);
        let (i, _) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1))?;
        let mut v = eig.eigenvectors.column(i).into_owned();
        if v[0] < 0.0 {
            v = -v;
        }
        Some(v)
    };
    let argmin = match (eigvec(ell.exp()), eigvec((-ell).exp())) {
        (Some(a), Some(b)) => {
            let s = a + b;
            if minkowski(&s, &s) < 0.0 {
                Some(Point::projected(SpaceId::Hyperbolic2, s))
            } else {
                None
            }
        }
        _ => None,
    };
    (ell, argmin)
}

/// Multi-start coordinate search for the displacement minimum, using golden
/// section line searches along geodesics of an orthonormal tangent frame.
pub fn numeric_translation_length(w: &Isometry, seed: u64) -> TranslationLength {
    let space = w.space;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = match space {
        SpaceId::Euclidean { .. } => 3.0,
        SpaceId::Sphere { .. } => PI,
        SpaceId::Hyperbolic2 => 1.5,
    };
    let mut starts = vec![space.origin()];
    while starts.len() < NUMERIC_STARTS {
        starts.push(modelspace::sample_point(space, &mut rng, radius));
    }

    let mut evaluations = 0usize;
    let mut best: Option<(f64, Point, bool)> = None;
    for (i, start) in starts.iter().enumerate() {
        let remaining = NUMERIC_BUDGET.saturating_sub(evaluations);
        let share = remaining / (NUMERIC_STARTS - i);
        let (value, point, converged, used) = local_descent(w, start, share);
        evaluations += used;
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, point, converged));
        }
    }
    let (value, point, converged) = best.expect("at least one start");
    TranslationLength {
        value,
        argmin: Some(point),
        certified: converged,
        evaluations,
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn local_descent(w: &Isometry, start: &Point, budget: usize) -> (f64, Point, bool, usize) {
    let mut evals = 0usize;
    let mut y = start.clone();
    let mut fy = w.displacement(&y);
    evals += 1;
    let mut step: f64 = 0.5;
    let max_step = match w.space {
        SpaceId::Sphere { .. } => PI / 2.0,
        _ => f64::INFINITY,
    };
    loop {
        let before = fy;
        let mut largest_move: f64 = 0.0;
        for e in modelspace::tangent_frame(&y) {
            if evals >= budget {
                return (fy, y, false, evals);
            }
            let line = |s: f64| modelspace::exp_raw(&y, &(&e * s));
            let mut g = |s: f64| {
                evals += 1;
                w.displacement(&line(s))
            };
            // Bracket a minimum of s ↦ g(s) around 0.
            let h = step.min(max_step);
            let (gm, gp) = (g(-h), g(h));
            let (mut a, mut b) = if fy <= gm && fy <= gp {
                (-h, h)
            } else {
                let dir = if gp < gm { 1.0 } else { -1.0 };
                let mut lo = 0.0;
                let mut mid = dir * h;
                let mut gmid = gp.min(gm);
                let mut hi = mid * 2.0;
                let mut ghi = g(hi);
                let mut expansions = 0;
                while ghi < gmid && expansions < 60 && hi.abs() < max_step {
                    lo = mid;
                    mid = hi;
                    gmid = ghi;
                    hi *= 2.0;
                    ghi = g(hi);
                    expansions += 1;
                }
                if lo < hi { (lo, hi) } else { (hi, lo) }
            };
            let mut c = b - GOLDEN * (b - a);
            let mut d = a + GOLDEN * (b - a);
            let mut gc = g(c);
            let mut gd = g(d);
            while (b - a).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                if gc < gd {
                    b = d;
                    d = c;
                    gd = gc;
                    c = b - GOLDEN * (b - a);
                    gc = g(c);
                } else {
                    a = c;
                    c = d;
                    gc = gd;
                    d = a + GOLDEN * (b - a);
                    gd = g(d);
                }
            }
            let (s, gs) = if gc < gd { (c, gc) } else { (d, gd) };
            if gs < fy {
                y = line(s);
                fy = gs;
                largest_move = largest_move.max(s.abs());
            }
        }
        if before - fy <= 1e-15 * (1.0 + fy) {
            return (fy, y, true, evals);
        }
        step = (2.0 * largest_move).clamp(1e-6, 1.0);
    }
}

/// A totally geodesic wall. Euclidean: {x : n·x = offset} with unit normal n
/// and chamber side n·x ≥ offset. Hyperbolic: {x : ⟨n,x⟩ = 0} with
/// ⟨n,n⟩ = 1 and chamber side ⟨n,x⟩ ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub normal: DVector<f64>,
    pub offset: f64,
    pub generator: usize,
}

impl Wall {
    pub fn side_value(&self, space: SpaceId, p: &Point) -> f64 {
        match space {
            SpaceId::Hyperbolic2 => minkowski(&self.normal, p.coords()),
            _ => self.normal.dot(p.coords()) - self.offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldStrategy {
    None,
    LatticeRound {
        basis: DMatrix<f64>,
        inverse: DMatrix<f64>,
    },
    CoxeterFold {
        walls: Vec<Wall>,
    },
}

#[derive(Debug, Clone)]
pub struct IsometryGroup {
    space: SpaceId,
    generators: Vec<Isometry>,
    fold: FoldStrategy,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WallSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphericalKind {
    Cyclic { order: u32 },
    Dihedral { order: u32 },
    Antipodal,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IsometrySpec {
    /// Rows of the linear part.
    pub linear: Vec<Vec<f64>>,
    #[serde(default)]
    pub translation: Option<Vec<f64>>,
}

impl IsometrySpec {
    pub fn build(&self, space: SpaceId) -> Result<Isometry> {
        let n = space.ambient_dim();
        if self.linear.len() != n || self.linear.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidIsometry(format!("linear part must be {n}x{n}")));
        }
        let linear = DMatrix::from_fn(n, n, |r, c| self.linear[r][c]);
        let translation = match &self.translation {
            Some(t) if t.len() != n => {
                return Err(Error::InvalidIsometry(format!("translation must have {n} entries")))
            }
            Some(t) => DVector::from_column_slice(t),
            None => DVector::zeros(n),
        };
        Isometry::new(space, linear, translation)
    }
}

/// Constructor families for [`IsometryGroup`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GroupSpec {
    /// Translations by the given basis vectors.
    Lattice { basis: Vec<Vec<f64>> },
    /// Reflections in the chamber walls.
    AffineWeyl { walls: Vec<WallSpec> },
    Spherical {
        dim: usize,
        #[serde(flatten)]
        kind: SphericalKind,
    },
    HyperbolicTriangle { p: u32, q: u32, r: u32 },
    /// Arbitrary generators; no fold strategy.
    Explicit {
        space: SpaceId,
        generators: Vec<IsometrySpec>,
    },
}

fn rotation_in_planes(ambient: usize, angle: f64, planes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(ambient, ambient);
    let (c, s) = (angle.cos(), angle.sin());
    for k in 0..planes {
        let (i, j) = (2 * k, 2 * k + 1);
        m[(i, i)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        m[(j, j)] = c;
    }
    m
}

/// Builds a group from one of the constructor families.
pub fn make_group(spec: &GroupSpec) -> Result<IsometryGroup> {
    let group = match spec {
        GroupSpec::Lattice { basis } => {
            let n = basis.len();
            if n == 0 || basis.iter().any(|b| b.len() != n) {
                return Err(Error::InvalidGroup("lattice basis must be n vectors of length n".into()));
            }
            let b = DMatrix::from_fn(n, n, |r, c| basis[c][r]);
            let inverse = b
                .clone()
                .try_inverse()
                .filter(|_| b.determinant().abs() > 1e-12)
                .ok_or_else(|| Error::InvalidGroup("lattice basis is not invertible".into()))?;
            let generators = (0..n)
                .map(|i| Isometry::translation(&basis[i]).with_label(Word::letter(i)))
                .collect();
            IsometryGroup {
                space: SpaceId::euclidean(n),
                generators,
                fold: FoldStrategy::LatticeRound { basis: b, inverse },
            }
        }
        GroupSpec::AffineWeyl { walls } => {
            if walls.is_empty() {
                return Err(Error::InvalidGroup("affine Weyl group needs at least one wall".into()));
            }
            let n = walls[0].normal.len();
            if n == 0 {
                return Err(Error::InvalidGroup("wall normals must be nonempty".into()));
            }
            let space = SpaceId::euclidean(n);
            let mut built: Vec<Wall> = Vec::with_capacity(walls.len());
            for (i, w) in walls.iter().enumerate() {
                if w.normal.len() != n {
                    return Err(Error::InvalidGroup(format!("wall {i} has the wrong dimension")));
                }
                let normal = DVector::from_column_slice(&w.normal);
                let len = normal.norm();
                if len <= 1e-12 || !len.is_finite() || !w.offset.is_finite() {
                    return Err(Error::InvalidGroup(format!("wall {i} has a degenerate normal")));
                }
                let wall = Wall {
                    normal: normal / len,
                    offset: w.offset / len,
                    generator: i,
                };
                if built.iter().any(|o| {
                    (&o.normal - &wall.normal).amax() <= 1e-12 && (o.offset - wall.offset).abs() <= 1e-12
                }) {
                    return Err(Error::InvalidGroup(format!("wall {i} duplicates an earlier wall")));
                }
                built.push(wall);
            }
            let generators = built
                .iter()
                .map(|w| Isometry::reflection(space, w).with_label(Word::letter(w.generator)))
                .collect();
            IsometryGroup {
                space,
                generators,
                fold: FoldStrategy::CoxeterFold { walls: built },
            }
        }
        GroupSpec::Spherical { dim, kind } => {
            let space = SpaceId::sphere(*dim);
            space.validate()?;
            let m = space.ambient_dim();
            let generators = match kind {
                SphericalKind::Antipodal => vec![Isometry::from_linear(space, -DMatrix::identity(m, m))?],
                SphericalKind::Cyclic { order } => {
                    if *order < 1 {
                        return Err(Error::InvalidGroup("cyclic order must be positive".into()));
                    }
                    let rot = rotation_in_planes(m, 2.0 * PI / *order as f64, m / 2);
                    vec![Isometry::from_linear(space, rot)?]
                }
                SphericalKind::Dihedral { order } => {
                    if *order < 1 {
                        return Err(Error::InvalidGroup("dihedral order must be positive".into()));
                    }
                    let rot = rotation_in_planes(m, 2.0 * PI / *order as f64, 1);
                    let mut refl = DMatrix::identity(m, m);
                    refl[(1, 1)] = -1.0;
                    vec![Isometry::from_linear(space, rot)?, Isometry::from_linear(space, refl)?]
                }
            };
            IsometryGroup {
                space,
                generators: generators
                    .into_iter()
                    .enumerate()
                    .map(|(i, g)| g.with_label(Word::letter(i)))
                    .collect(),
                fold: FoldStrategy::None,
            }
        }
        GroupSpec::HyperbolicTriangle { p, q, r } => hyperbolic_triangle(*p, *q, *r)?,
        GroupSpec::Explicit { space, generators } => {
            let generators = generators
                .iter()
                .enumerate()
                .map(|(i, g)| Ok(g.build(*space)?.with_label(Word::letter(i))))
                .collect::<Result<Vec<_>>>()?;
            IsometryGroup {
                space: *space,
                generators,
                fold: FoldStrategy::None,
            }
        }
    };
    if let Some(msg) = group.discreteness_warning() {
        warn!("{msg}");
    }
    Ok(group)
}

fn cross(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ])
}

/// Triangle with angles π/p, π/q, π/r at vertices P = (1,0,0), Q on the
/// x-axis geodesic, and R above it. Wall i is the side opposite vertex i.
fn hyperbolic_triangle(p: u32, q: u32, r: u32) -> Result<IsometryGroup> {
    if p < 2 || q < 2 || r < 2 {
        return Err(Error::InvalidGroup("triangle orders must be at least 2".into()));
    }
    // 1/p + 1/q + 1/r < 1, checked exactly.
    if (q * r + p * r + p * q) as u64 >= (p as u64) * (q as u64) * (r as u64) {
        return Err(Error::InvalidGroup("angle triple is not hyperbolic".into()));
    }
    let (a, b, c) = (PI / p as f64, PI / q as f64, PI / r as f64);
    let side_pq = ((a.cos() * b.cos() + c.cos()) / (a.sin() * b.sin())).acosh();
    let side_pr = ((a.cos() * c.cos() + b.cos()) / (a.sin() * c.sin())).acosh();
    let vp = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    let vq = DVector::from_column_slice(&[side_pq.cosh(), side_pq.sinh(), 0.0]);
    let vr = DVector::from_column_slice(&[side_pr.cosh(), side_pr.sinh() * a.cos(), side_pr.sinh() * a.sin()]);
    let vertices = [vp, vq, vr];
    let j = signature(3);
    let space = SpaceId::Hyperbolic2;
    let mut walls = Vec::with_capacity(3);
    for i in 0..3 {
        let (u, v, opposite) = (&vertices[(i + 1) % 3], &vertices[(i + 2) % 3], &vertices[i]);
        let mut n = &j * cross(u, v);
        n /= minkowski(&n, &n).sqrt();
        if minkowski(&n, opposite) < 0.0 {
            n = -n;
        }
        walls.push(Wall {
            normal: n,
            offset: 0.0,
            generator: i,
        });
    }
    let generators = walls
        .iter()
        .map(|w| Isometry::reflection(space, w).with_label(Word::letter(w.generator)))
        .collect();
    Ok(IsometryGroup {
        space,
        generators,
        fold: FoldStrategy::CoxeterFold { walls },
    })
}

impl IsometryGroup {
    /// Group generated by explicit isometries, without a fold strategy.
    /// Generator i is relabelled as the letter i.
    pub fn from_generators(space: SpaceId, generators: Vec<Isometry>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidGroup("at least one generator is required".into()));
        }
        if let Some(g) = generators.iter().find(|g| g.space() != space) {
            return Err(Error::SpaceMismatch {
                expected: space,
                found: g.space(),
            });
        }
        let generators = generators
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.with_label(Word::letter(i)))
            .collect();
        Ok(IsometryGroup {
            space,
            generators,
            fold: FoldStrategy::None,
        })
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn fold_strategy(&self) -> &FoldStrategy {
        &self.fold
    }

    pub fn has_fold(&self) -> bool {
        !matches!(self.fold, FoldStrategy::None)
    }

    pub fn walls(&self) -> &[Wall] {
        match &self.fold {
            FoldStrategy::CoxeterFold { walls } => walls,
            _ => &[],
        }
    }

    /// Evaluates a word in the generators.
    pub fn element(&self, word: &Word) -> Result<Isometry> {
        let mut out = Isometry::identity(self.space);
        for &(g, e) in word.syllables() {
            let gen = self.generators.get(g).ok_or_else(|| {
                Error::InvalidGroup(format!(
                    "generator {g} does not exist (group has {})",
                    self.generators.len()
                ))
            })?;
            out = out.compose(&gen.power(e))?;
        }
        Ok(out)
    }

    /// Heuristic non-discreteness check: two words of length ≤ 3 whose
    /// matrices are distinct yet within 1e-6 of each other.
    pub fn discreteness_warning(&self) -> Option<String> {
        let mut letters = Vec::new();
        for g in &self.generators {
            letters.push(g.clone());
            letters.push(g.inverse());
        }
        let mut elements = vec![Isometry::identity(self.space)];
        let mut frontier = elements.clone();
        for _ in 0..3 {
            let mut next = Vec::new();
            for e in &frontier {
                for l in &letters {
                    next.push(e.compose(l).ok()?);
                }
            }
            elements.extend(next.iter().cloned());
            frontier = next;
        }
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                let d = a.distance(b);
                if d > 1e-12 && d <= 1e-6 {
                    return Some(format!(
                        "group may not be discrete: words {} and {} differ by {d:e}",
                        a.label().map(|w| w.to_string()).unwrap_or_default(),
                        b.label().map(|w| w.to_string()).unwrap_or_default()
                    ));
                }
            }
        }
        None
    }
}

/// Moves `p` into the fundamental domain; returns the group element `k` used
/// and the image `k·p`.
pub fn fold(group: &IsometryGroup, p: &Point) -> Result<(Isometry, Point)> {
    if p.space() != group.space {
        return Err(Error::SpaceMismatch {
            expected: group.space,
            found: p.space(),
        });
    }
    match &group.fold {
        FoldStrategy::None => Err(Error::NoFoldStrategy),
        FoldStrategy::LatticeRound { basis, inverse } => {
            let c = inverse * p.coords();
            let shift: Vec<i64> = c.iter().map(|x| x.floor() as i64).collect();
            let n = shift.len();
            let offset = basis * DVector::from_fn(n, |i, _| -(shift[i] as f64));
            let mut word = Word::empty();
            for (i, &s) in shift.iter().enumerate() {
                word = word.concat(&Word::power(i, -s));
            }
            let k = Isometry::translation(offset.as_slice()).with_label(word);
            let image = k.apply_unchecked(p);
            Ok((k, image))
        }
        FoldStrategy::CoxeterFold { walls } => {
            let budget = 10 * walls.len() * walls.len();
            let mut k = Isometry::identity(group.space);
            let mut q = p.clone();
            for _ in 0..=budget {
                let worst = walls
                    .iter()
                    .map(|w| (w, w.side_value(group.space, &q)))
                    .filter(|(_, v)| *v < -1e-12)
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    None => return Ok((k, q)),
                    Some((w, _)) => {
                        let r = &group.generators[w.generator];
                        q = r.apply_unchecked(&q);
                        k = r.compose(&k)?;
                    }
                }
            }
            Err(Error::FoldFailure { steps: budget })
        }
    }
}
