//! Partitioned piecewise-geodesic curves and closed pairs (α, w⁰) with
//! α(b) = w⁰·α(a).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::isogroup::Isometry;
use crate::modelspace::{self, Point, SpaceId};

/// Tolerance on |w⁰·α(a) − α(b)|, one order above kernel drift.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    values: Vec<f64>,
}

impl Partition {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidPartition("need at least two values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPartition("non-finite value".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(format!(
                "values not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Partition { values })
    }

    /// tᵢ = a + i(b − a)/k for i = 0..=k.
    pub fn uniform(a: f64, b: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPartition("k must be at least 1".into()));
        }
        let mut values: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        values[k] = b;
        Partition::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of cells k.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Partition::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// Piecewise minimizing geodesic through `nodes`, node i at parameter tᵢ.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    space: SpaceId,
    partition: Partition,
    nodes: Vec<Point>,
}

impl DiscreteCurve {
    pub fn new(partition: Partition, nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() != partition.values.len() {
            return Err(Error::InvalidCurve(format!(
                "{} nodes for a partition of {} values",
                nodes.len(),
                partition.values.len()
            )));
        }
        let space = nodes[0].space();
        if let Some(p) = nodes.iter().find(|p| p.space() != space) {
            return Err(Error::SpaceMismatch {
                expected: space,
                found: p.space(),
            });
        }
        Ok(DiscreteCurve {
            space,
            partition,
            nodes,
        })
    }

    /// Nodes at the uniform partition of [0, 1].
    pub fn uniform(nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidCurve("need at least two nodes".into()));
        }
        let k = nodes.len() - 1;
        DiscreteCurve::new(Partition::uniform(0.0, 1.0, k)?, nodes)
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn first(&self) -> &Point {
        &self.nodes[0]
    }

    pub fn last(&self) -> &Point {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .map(|w| modelspace::dist(&w[0], &w[1]).expect("same space"))
            .collect()
    }

    /// Σ dist(nodeᵢ₋₁, nodeᵢ)² / (2(tᵢ − tᵢ₋₁)).
    pub fn energy(&self) -> f64 {
        self.segment_lengths()
            .iter()
            .zip(self.partition.values.windows(2))
            .map(|(d, t)| d * d / (2.0 * (t[1] - t[0])))
            .sum()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// dist/Δt per segment.
    pub fn speeds(&self) -> Vec<f64> {
        self.segment_lengths()
            .iter()
            .zip(self.partition.values.windows(2))
            .map(|(d, t)| d / (t[1] - t[0]))
            .collect()
    }

    /// Index i of the cell [tᵢ, tᵢ₊₁] containing `s`.
    fn cell_of(&self, s: f64) -> usize {
        let v = &self.partition.values;
        let i = v.partition_point(|&t| t <= s);
        i.saturating_sub(1).min(v.len() - 2)
    }

    /// Piecewise geodesic interpolation; exact at partition values.
    pub fn eval(&self, s: f64) -> Result<Point> {
        let (a, b) = (self.partition.start(), self.partition.end());
        if !(a..=b).contains(&s) {
            return Err(Error::ParameterOutOfRange {
                value: s,
                start: a,
                end: b,
            });
        }
        let i = self.cell_of(s);
        let v = &self.partition.values;
        if s == v[i] {
            return Ok(self.nodes[i].clone());
        }
        if s == v[i + 1] {
            return Ok(self.nodes[i + 1].clone());
        }
        let u = (s - v[i]) / (v[i + 1] - v[i]);
        modelspace::geodesic_point(&self.nodes[i], &self.nodes[i + 1], u).map_err(|e| match e {
            Error::NonUniqueGeodesic { distance, radius, .. } => Error::NonUniqueGeodesic {
                segment: Some(i),
                distance,
                radius,
            },
            e => e,
        })
    }

    pub fn mapped(&self, w: &Isometry) -> Result<DiscreteCurve> {
        let nodes = self.nodes.iter().map(|p| w.apply(p)).collect::<Result<Vec<_>>>()?;
        Ok(DiscreteCurve {
            space: self.space,
            partition: self.partition.clone(),
            nodes,
        })
    }
}

/// A curve α on [a, b] with closure element w⁰ such that α(b) = w⁰·α(a).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPair {
    curve: DiscreteCurve,
    closure: Isometry,
}

impl ClosedPair {
    pub fn new(curve: DiscreteCurve, closure: Isometry) -> Result<Self> {
        let pair = ClosedPair::new_unchecked(curve, closure)?;
        let residual = pair.closure_residual();
        if residual > CLOSURE_TOL {
            return Err(Error::InvalidCurve(format!(
                "closure residual {residual:e} exceeds {CLOSURE_TOL:e}"
            )));
        }
        Ok(pair)
    }

    /// Checks spaces only; the closure relation is left to
    /// [`validate_closure`].
    pub fn new_unchecked(curve: DiscreteCurve, closure: Isometry) -> Result<Self> {
        if curve.space() != closure.space() {
            return Err(Error::SpaceMismatch {
                expected: curve.space(),
                found: closure.space(),
            });
        }
        Ok(ClosedPair { curve, closure })
    }

    pub fn curve(&self) -> &DiscreteCurve {
        &self.curve
    }

    pub fn closure(&self) -> &Isometry {
        &self.closure
    }

    pub fn into_parts(self) -> (DiscreteCurve, Isometry) {
        (self.curve, self.closure)
    }

    pub fn closure_residual(&self) -> f64 {
        let image = self.closure.apply_unchecked(self.curve.first());
        modelspace::dist(&image, self.curve.last()).expect("same space")
    }

    pub fn energy(&self) -> f64 {
        self.curve.energy()
    }

    pub fn length(&self) -> f64 {
        self.curve.length()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureViolation {
    Closure { residual: f64 },
    Mesh { mesh: f64, bound: f64 },
    Segment { index: usize, length: f64, rho0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub residual: f64,
    pub mesh: f64,
    /// ρ₀²/K.
    pub mesh_bound: f64,
    pub max_segment: f64,
    pub max_segment_index: usize,
    pub violation: Option<ClosureViolation>,
}

impl ClosureReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks the closure relation, the mesh bound mesh < ρ₀²/K, and that every
/// segment is shorter than ρ₀. Reports the first violated condition.
pub fn validate_closure(pair: &ClosedPair, rho0: f64, energy_bound: f64) -> ClosureReport {
    let residual = pair.closure_residual();
    let mesh = pair.curve.partition.mesh();
    let mesh_bound = rho0 * rho0 / energy_bound;
    let lengths = pair.curve.segment_lengths();
    let (max_segment_index, max_segment) = lengths
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    let violation = if residual > CLOSURE_TOL {
        Some(ClosureViolation::Closure { residual })
    } else if mesh >= mesh_bound {
        Some(ClosureViolation::Mesh {
            mesh,
            bound: mesh_bound,
        })
    } else {
        lengths
            .iter()
            .position(|&d| d >= rho0)
            .map(|index| ClosureViolation::Segment {
                index,
                length: lengths[index],
                rho0,
            })
    };
    ClosureReport {
        residual,
        mesh,
        mesh_bound,
        max_segment,
        max_segment_index,
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn e2(pts: &[[f64; 2]]) -> Vec<Point> {
        pts.iter().map(|p| Point::euclidean(p)).collect()
    }

    fn v_curve() -> DiscreteCurve {
        DiscreteCurve::uniform(e2(&[[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]])).unwrap()
    }

    #[test]
    fn partitions() {
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Partition::new(vec![0.0, f64::NAN]).is_err());
        let p = Partition::new(vec![0.0, 0.1, 0.5, 1.0]).unwrap();
        assert!((p.mesh() - 0.5).abs() < 1e-15);
        assert_eq!(p.cells(), 3);
    }

    #[test]
    fn energy_examples() {
        for k in [1, 2, 5, 16] {
            let nodes = (0..=k).map(|i| Point::euclidean(&[i as f64 / k as f64, 0.0])).collect();
            let c = DiscreteCurve::uniform(nodes).unwrap();
            assert!((c.energy() - 0.5).abs() < 1e-14);
        }
        let c = DiscreteCurve::uniform(e2(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])).unwrap();
        assert!((c.energy() - 2.0).abs() < 1e-15);

        let s2 = SpaceId::sphere(2);
        let k = 12;
        let nodes = (0..=k)
            .map(|i| {
                let a = PI * i as f64 / k as f64;
                Point::from_slice(s2, &[a.cos(), a.sin(), 0.0]).unwrap()
            })
            .collect();
        let c = DiscreteCurve::uniform(nodes).unwrap();
        assert!((c.energy() - PI * PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn length_examples() {
        let c = DiscreteCurve::uniform(e2(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(c.length(), 1.0);
        assert!((v_curve().length() - 2f64.sqrt()).abs() < 1e-15);
        let c = DiscreteCurve::uniform(e2(&[[0.3, 0.3], [0.3, 0.3]])).unwrap();
        assert_eq!(c.length(), 0.0);
        assert_eq!(c.energy(), 0.0);
    }

    #[test]
    fn eval_examples() {
        let c = DiscreteCurve::uniform(e2(&[[0.0, 0.0], [2.0, 0.0]])).unwrap();
        assert_eq!(c.eval(0.25).unwrap().coords().as_slice(), &[0.5, 0.0]);
        assert_eq!(v_curve().eval(0.5).unwrap().coords().as_slice(), &[0.5, 0.5]);
        let s2 = SpaceId::sphere(2);
        let c = DiscreteCurve::uniform(vec![
            Point::from_slice(s2, &[1.0, 0.0, 0.0]).unwrap(),
            Point::from_slice(s2, &[0.0, 1.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let m = c.eval(0.5).unwrap();
        assert!((m.coords()[0] - FRAC_1_SQRT_2).abs() < 1e-15 && (m.coords()[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(c.eval(1.5), Err(Error::ParameterOutOfRange { .. })));
        assert!(c.eval(-0.1).is_err());
    }

    #[test]
    fn eval_reports_segment_of_non_unique_geodesic() {
        let s2 = SpaceId::sphere(2);
        let c = DiscreteCurve::new(
            Partition::new(vec![0.0, 0.5, 1.0]).unwrap(),
            vec![
                Point::from_slice(s2, &[0.0, 0.0, 1.0]).unwrap(),
                Point::from_slice(s2, &[1.0, 0.0, 0.0]).unwrap(),
                Point::from_slice(s2, &[-1.0, 0.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        match c.eval(0.75) {
            Err(Error::NonUniqueGeodesic { segment: Some(1), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closure_validation() {
        let line = DiscreteCurve::uniform(e2(&[[0.0, 0.0], [0.25, 0.0], [0.5, 0.0], [0.75, 0.0], [1.0, 0.0]])).unwrap();
        let k = line.energy();
        let pair = ClosedPair::new(line.clone(), Isometry::translation(&[1.0, 0.0])).unwrap();
        let r = validate_closure(&pair, 1.0, k);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.residual, 0.0);

        let bad = ClosedPair::new_unchecked(line.clone(), Isometry::identity(SpaceId::euclidean(2))).unwrap();
        let r = validate_closure(&bad, 1.0, k);
        assert_eq!(r.violation, Some(ClosureViolation::Closure { residual: 1.0 }));
        assert!(ClosedPair::new(line, Isometry::identity(SpaceId::euclidean(2))).is_err());

        let long = DiscreteCurve::new(
            Partition::new(vec![0.0, 0.1, 1.0]).unwrap(),
            e2(&[[0.0, 0.0], [0.1, 0.0], [1.0, 0.0]]),
        )
        .unwrap();
        let pair = ClosedPair::new(long, Isometry::translation(&[1.0, 0.0])).unwrap();
        let r = validate_closure(&pair, 0.5, 0.01);
        assert_eq!(
            r.violation,
            Some(ClosureViolation::Segment { index: 1, length: 0.9, rho0: 0.5 })
        );
        assert_eq!(r.max_segment_index, 1);
    }

    #[test]
    fn mesh_violation() {
        let c = DiscreteCurve::uniform(e2(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])).unwrap();
        let pair = ClosedPair::new(c, Isometry::translation(&[1.0, 0.0])).unwrap();
        let r = validate_closure(&pair, 1.0, 4.0);
        assert!(matches!(r.violation, Some(ClosureViolation::Mesh { .. })));
    }
}
