//! Analytic kernel for the three model spaces: Euclidean n-space, the round
//! unit sphere Sⁿ ⊂ ℝⁿ⁺¹, and the hyperbolic plane in the hyperboloid model
//! {x ∈ ℝ³ : ⟨x,x⟩ = −1, x₀ > 0} with ⟨x,y⟩ = −x₀y₀ + x₁y₁ + x₂y₂.
//!
//! Everything here is a pure function of immutable values.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const POINT_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceId {
    Euclidean { dim: usize },
    Sphere { dim: usize },
    Hyperbolic2,
}

impl SpaceId {
    pub fn euclidean(dim: usize) -> Self {
        SpaceId::Euclidean { dim }
    }

    pub fn sphere(dim: usize) -> Self {
        SpaceId::Sphere { dim }
    }

    pub fn hyperbolic2() -> Self {
        SpaceId::Hyperbolic2
    }

    /// Length of the coordinate vectors used to store points.
    pub fn ambient_dim(self) -> usize {
        match self {
            SpaceId::Euclidean { dim } => dim,
            SpaceId::Sphere { dim } => dim + 1,
            SpaceId::Hyperbolic2 => 3,
        }
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            SpaceId::Euclidean { dim } | SpaceId::Sphere { dim } => dim,
            SpaceId::Hyperbolic2 => 2,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            SpaceId::Euclidean { dim } | SpaceId::Sphere { dim } if dim == 0 => {
                Err(Error::InvalidPoint {
                    space: self,
                    reason: "dimension must be at least 1".into(),
                })
            }
            _ => Ok(()),
        }
    }

    /// Ambient bilinear form restricted to tangent spaces gives the metric.
    pub fn inner(self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self {
            SpaceId::Hyperbolic2 => minkowski(a, b),
            _ => a.dot(b),
        }
    }

    /// Norm of a tangent vector in the model metric.
    pub fn tangent_norm(self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn origin(self) -> Point {
        let mut coords = DVector::zeros(self.ambient_dim());
        if !matches!(self, SpaceId::Euclidean { .. }) {
            coords[0] = 1.0;
        }
        Point {
            space: self,
            coords,
        }
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceId::Euclidean { dim } => write!(f, "E^{dim}"),
            SpaceId::Sphere { dim } => write!(f, "S^{dim}"),
            SpaceId::Hyperbolic2 => write!(f, "H^2"),
        }
    }
}

/// Minkowski form of signature (−,+,+,…).
pub fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b) - 2.0 * a[0] * b[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    space: SpaceId,
    coords: DVector<f64>,
}

impl Point {
    /// Validating constructor.
    pub fn new(space: SpaceId, coords: DVector<f64>) -> Result<Self> {
        space.validate()?;
        let bad = |reason: String| Error::InvalidPoint { space, reason };
        if coords.len() != space.ambient_dim() {
            return Err(bad(format!(
                "expected {} coordinates, got {}",
                space.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(bad("non-finite coordinate".into()));
        }
        match space {
            SpaceId::Euclidean { .. } => {}
            SpaceId::Sphere { .. } => {
                let r = coords.norm();
                if (r - 1.0).abs() > POINT_TOL {
                    return Err(bad(format!("norm {r} is not 1")));
                }
            }
            SpaceId::Hyperbolic2 => {
                let q = minkowski(&coords, &coords);
                if (q + 1.0).abs() > POINT_TOL * coords.norm_squared().max(1.0) {
                    return Err(bad(format!("Minkowski square {q} is not -1")));
                }
                if coords[0] <= 0.0 {
                    return Err(bad("point is on the lower sheet".into()));
                }
            }
        }
        Ok(Point { space, coords })
    }

    pub fn from_slice(space: SpaceId, coords: &[f64]) -> Result<Self> {
        Point::new(space, DVector::from_column_slice(coords))
    }

    pub fn euclidean(coords: &[f64]) -> Self {
        Point {
            space: SpaceId::euclidean(coords.len()),
            coords: DVector::from_column_slice(coords),
        }
    }

    /// Renormalizes ambient coordinates onto the model (unit sphere or upper
    /// sheet of the hyperboloid). Euclidean coordinates pass through.
    pub fn projected(space: SpaceId, mut coords: DVector<f64>) -> Self {
        match space {
            SpaceId::Euclidean { .. } => {}
            SpaceId::Sphere { .. } => {
                let r = coords.norm();
                coords /= r;
            }
            SpaceId::Hyperbolic2 => {
                let q = -minkowski(&coords, &coords);
                coords /= q.sqrt();
                if coords[0] < 0.0 {
                    coords = -coords;
                }
            }
        }
        Point { space, coords }
    }

    /// Hyperbolic point at polar coordinates (r, θ) around (1,0,0).
    pub fn hyperbolic_polar(r: f64, theta: f64) -> Self {
        Point::projected(
            SpaceId::Hyperbolic2,
            DVector::from_column_slice(&[r.cosh(), r.sinh() * theta.cos(), r.sinh() * theta.sin()]),
        )
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    fn check_space(&self, other: &Point) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                expected: self.space,
                found: other.space,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Point,
    vec: DVector<f64>,
}

impl TangentVector {
    /// Validating constructor; the vector must be tangent at `base`.
    pub fn new(base: Point, vec: DVector<f64>) -> Result<Self> {
        if vec.len() != base.coords.len() {
            return Err(Error::InvalidTangent(format!(
                "expected {} components, got {}",
                base.coords.len(),
                vec.len()
            )));
        }
        let normal = match base.space {
            SpaceId::Euclidean { .. } => 0.0,
            space => space.inner(&base.coords, &vec),
        };
        if normal.abs() > TANGENT_TOL * vec.norm().max(1e-300) && normal.abs() > 1e-300 {
            return Err(Error::InvalidTangent(format!(
                "normal component {normal:e} at base"
            )));
        }
        Ok(TangentVector { base, vec })
    }

    /// Projects an arbitrary ambient vector onto the tangent space at `base`.
    pub fn projected(base: Point, vec: DVector<f64>) -> Self {
        let vec = project_tangent(&base, vec);
        TangentVector { base, vec }
    }

    pub(crate) fn from_parts_unchecked(base: Point, vec: DVector<f64>) -> Self {
        TangentVector { base, vec }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        self.base.space.tangent_norm(&self.vec)
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector {
            base: self.base.clone(),
            vec: &self.vec * s,
        }
    }
}

fn project_tangent(base: &Point, vec: DVector<f64>) -> DVector<f64> {
    match base.space {
        SpaceId::Euclidean { .. } => vec,
        SpaceId::Sphere { .. } => {
            let c = base.coords.dot(&vec);
            vec - &base.coords * c
        }
        SpaceId::Hyperbolic2 => {
            let c = minkowski(&base.coords, &vec);
            vec + &base.coords * c
        }
    }
}

/// Radius below which minimizing geodesics are unique: +∞ for the flat and
/// hyperbolic models, π on the sphere.
pub fn uniqueness_radius(space: SpaceId) -> f64 {
    match space {
        SpaceId::Sphere { .. } => PI,
        SpaceId::Euclidean { .. } | SpaceId::Hyperbolic2 => f64::INFINITY,
    }
}

pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    p.check_space(q)?;
    Ok(dist_raw(p.space, &p.coords, &q.coords))
}

fn dist_raw(space: SpaceId, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    match space {
        SpaceId::Euclidean { .. } => (q - p).norm(),
        SpaceId::Sphere { .. } => {
            let c = p.dot(q);
            let s = (q - p * c).norm();
            s.atan2(c)
        }
        SpaceId::Hyperbolic2 => {
            let d = q - p;
            let chord = minkowski(&d, &d).max(0.0).sqrt();
            2.0 * (chord / 2.0).asinh()
        }
    }
}

/// Riemannian exponential map.
pub fn exp(p: &Point, v: &TangentVector) -> Result<Point> {
    p.check_space(&v.base)?;
    Ok(exp_raw(p, &v.vec))
}

pub(crate) fn exp_raw(p: &Point, v: &DVector<f64>) -> Point {
    let space = p.space;
    match space {
        SpaceId::Euclidean { .. } => Point {
            space,
            coords: &p.coords + v,
        },
        SpaceId::Sphere { .. } => {
            let n = v.norm();
            if n == 0.0 {
                return p.clone();
            }
            Point::projected(space, &p.coords * n.cos() + v * (n.sin() / n))
        }
        SpaceId::Hyperbolic2 => {
            let n = space.tangent_norm(v);
            if n == 0.0 {
                return p.clone();
            }
            Point::projected(space, &p.coords * n.cosh() + v * (n.sinh() / n))
        }
    }
}

/// Riemannian logarithm: the initial velocity of the unique minimizing
/// geodesic from `p` reaching `q` at time 1.
pub fn log(p: &Point, q: &Point) -> Result<TangentVector> {
    p.check_space(q)?;
    let vec = log_raw(p, q)?;
    Ok(TangentVector {
        base: p.clone(),
        vec,
    })
}

fn log_raw(p: &Point, q: &Point) -> Result<DVector<f64>> {
    let space = p.space;
    match space {
        SpaceId::Euclidean { .. } => Ok(&q.coords - &p.coords),
        SpaceId::Sphere { .. } => {
            let c = p.coords.dot(&q.coords).clamp(-1.0, 1.0);
            let u = &q.coords - &p.coords * c;
            let s = u.norm();
            if s <= 1e-15 {
                if c > 0.0 {
                    return Ok(DVector::zeros(p.coords.len()));
                }
                return Err(Error::NonUniqueGeodesic {
                    segment: None,
                    distance: PI,
                    radius: PI,
                });
            }
            let theta = s.atan2(c);
            Ok(u * (theta / s))
        }
        SpaceId::Hyperbolic2 => {
            let d = dist_raw(space, &p.coords, &q.coords);
            if d == 0.0 {
                return Ok(DVector::zeros(3));
            }
            let u = &q.coords + &p.coords * minkowski(&p.coords, &q.coords);
            let un = space.tangent_norm(&u);
            if un == 0.0 {
                return Ok(DVector::zeros(3));
            }
            Ok(u * (d / un))
        }
    }
}

/// Point at fraction `s` along the minimizing geodesic from `p` to `q`.
pub fn geodesic_point(p: &Point, q: &Point, s: f64) -> Result<Point> {
    p.check_space(q)?;
    if s == 0.0 {
        return Ok(p.clone());
    }
    if s == 1.0 {
        return Ok(q.clone());
    }
    let v = log_raw(p, q)?;
    Ok(exp_raw(p, &(v * s)))
}

/// Angle in [0, π] between two tangent vectors at the same base point.
/// Returns `None` when either vector vanishes.
pub fn tangent_angle(space: SpaceId, a: &DVector<f64>, b: &DVector<f64>) -> Option<f64> {
    let na = space.tangent_norm(a);
    let nb = space.tangent_norm(b);
    if na <= 1e-300 || nb <= 1e-300 {
        return None;
    }
    let ua = a / na;
    let ub = b / nb;
    let diff = space.tangent_norm(&(&ua - &ub));
    let sum = space.tangent_norm(&(&ua + &ub));
    Some(2.0 * diff.atan2(sum))
}

/// Orthonormal basis of the tangent space at `p` (model metric).
pub fn tangent_frame(p: &Point) -> Vec<DVector<f64>> {
    let space = p.space;
    let m = space.ambient_dim();
    let want = space.intrinsic_dim();
    let mut order: Vec<usize> = (0..m).collect();
    if space == SpaceId::Hyperbolic2 {
        order = vec![1, 2, 0];
    }
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(want);
    for i in order {
        if frame.len() == want {
            break;
        }
        let mut v = project_tangent(p, DVector::from_fn(m, |r, _| if r == i { 1.0 } else { 0.0 }));
        for e in &frame {
            let c = space.inner(&v, e);
            v -= e * c;
        }
        let n = space.tangent_norm(&v);
        if n > 1e-6 {
            frame.push(v / n);
        }
    }
    frame
}

/// Random point: uniform in [−radius, radius]ⁿ for Euclidean space, uniform on
/// the sphere, and exp of a uniform-direction tangent with norm ≤ radius at
/// the hyperbolic origin.
pub fn sample_point<R: Rng + ?Sized>(space: SpaceId, rng: &mut R, radius: f64) -> Point {
    match space {
        SpaceId::Euclidean { dim } => Point {
            space,
            coords: DVector::from_fn(dim, |_, _| rng.random_range(-radius..=radius)),
        },
        SpaceId::Sphere { .. } => loop {
            let v = DVector::from_fn(space.ambient_dim(), |_, _| rng.random_range(-1.0..=1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                break Point::projected(space, v);
            }
        },
        SpaceId::Hyperbolic2 => {
            let r = rng.random_range(0.0..=radius);
            let theta = rng.random_range(0.0..2.0 * PI);
            Point::hyperbolic_polar(r, theta)
        }
    }
}

/// Random tangent vector at `p` with norm uniformly drawn from [0, max_norm].
pub fn sample_tangent<R: Rng + ?Sized>(p: &Point, rng: &mut R, max_norm: f64) -> TangentVector {
    let frame = tangent_frame(p);
    let v = loop {
        let mut v = DVector::zeros(p.coords.len());
        for e in &frame {
            v += e * rng.random_range(-1.0..=1.0);
        }
        let n = p.space.tangent_norm(&v);
        if n > 1e-3 {
            break v / n;
        }
    };
    let len = rng.random_range(0.0..=max_norm);
    TangentVector {
        base: p.clone(),
        vec: v * len,
    }
}
