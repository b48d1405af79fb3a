//! SVG drawings of 1D and 2D Euclidean runs.
//!
//! 2D scenes are drawn to scale. 1D scenes put the coordinate on the
//! horizontal axis and the curve parameter on the vertical one.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::foliation;
use crate::isogroup::{make_group, FoldStrategy};
use crate::modelspace::SpaceId;
use crate::scenario::RunReport;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 20.0;

struct Scene {
    dim: usize,
    cells: Vec<Vec<[f64; 2]>>,
    walls: Vec<(DVector<f64>, f64)>,
    initial: Vec<[f64; 2]>,
    geodesic: Vec<[f64; 2]>,
    translate: [f64; 2],
}

fn place(dim: usize, coords: &[f64], t: f64) -> [f64; 2] {
    if dim == 1 {
        [coords[0], t]
    } else {
        [coords[0], coords[1]]
    }
}

fn scene(report: &RunReport) -> Result<Scene> {
    let dim = match report.space {
        SpaceId::Euclidean { dim } if dim <= 2 => dim,
        other => {
            return Err(Error::Unsupported(format!(
                "figures need a 1D or 2D Euclidean scene, not {other}"
            )))
        }
    };
    let initial = report
        .initial_nodes
        .iter()
        .zip(&report.initial_partition)
        .map(|(p, &t)| place(dim, p, t))
        .collect();
    let geodesic: Vec<[f64; 2]> = report
        .final_nodes
        .iter()
        .zip(&report.final_partition)
        .map(|(p, &t)| place(dim, p, t))
        .collect();
    let w0 = report.closure.build(report.space)?;
    let start = DVector::from_column_slice(&report.final_nodes[0]);
    let moved = w0.linear() * start + w0.translation_part();
    let translate = place(dim, moved.as_slice(), 1.0);

    let mut cells = Vec::new();
    let mut walls = Vec::new();
    let lattice = if let Some(spec) = &report.input.group {
        match make_group(spec)?.fold_strategy() {
            FoldStrategy::LatticeRound { basis, .. } => Some(basis.clone()),
            FoldStrategy::CoxeterFold { walls: ws } => {
                walls.extend(ws.iter().map(|w| (w.normal.clone(), w.offset)));
                None
            }
            FoldStrategy::None => None,
        }
    } else if let Some(spec) = &report.input.foliation {
        foliation::transverse_model(&spec.build()?)?.lattice
    } else {
        None
    };
    if let Some(b) = lattice {
        if dim == 1 {
            let x = b[(0, 0)];
            cells.push(vec![[0.0, 0.0], [x, 0.0], [x, 1.0], [0.0, 1.0]]);
        } else {
            let (u, v) = ([b[(0, 0)], b[(1, 0)]], [b[(0, 1)], b[(1, 1)]]);
            cells.push(vec![[0.0, 0.0], u, [u[0] + v[0], u[1] + v[1]], v]);
        }
    }
    Ok(Scene {
        dim,
        cells,
        walls,
        initial,
        geodesic,
        translate,
    })
}

struct Frame {
    min: [f64; 2],
    scale: [f64; 2],
    height: f64,
}

impl Frame {
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let x = MARGIN + (p[0] - self.min[0]) * self.scale[0];
        let y = self.height - MARGIN - (p[1] - self.min[1]) * self.scale[1];
        (x, y)
    }
}

fn frame(s: &Scene) -> Frame {
    let mut pts: Vec<[f64; 2]> = s.initial.iter().chain(&s.geodesic).copied().collect();
    pts.push(s.translate);
    pts.extend(s.cells.iter().flatten());
    if s.dim == 1 {
        for (n, c) in &s.walls {
            pts.push([c / n[0], 0.0]);
        }
    }
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in &pts {
        for i in 0..2 {
            min[i] = min[i].min(p[i]);
            max[i] = max[i].max(p[i]);
        }
    }
    let mut span = [0.0; 2];
    for i in 0..2 {
        span[i] = (max[i] - min[i]).max(1e-9);
        min[i] -= 0.1 * span[i];
        span[i] *= 1.2;
    }
    let inner = SIZE - 2.0 * MARGIN;
    if s.dim == 2 {
        let k = inner / span[0].max(span[1]);
        Frame {
            min,
            scale: [k, k],
            height: 2.0 * MARGIN + span[1] * k,
        }
    } else {
        Frame {
            min,
            scale: [inner / span[0], inner / span[1]],
            height: SIZE,
        }
    }
}

fn points_attr(f: &Frame, pts: &[[f64; 2]]) -> String {
    pts.iter()
        .map(|&p| {
            let (x, y) = f.map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the run as a byte-stable SVG document.
pub fn render_svg(report: &RunReport) -> Result<String> {
    let s = scene(report)?;
    let f = frame(&s);
    let width = SIZE;
    let mut out = String::new();
    let w = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    w(
        &mut out,
        format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.3} {:.3}" width="{width:.3}" height="{:.3}">"#,
            f.height, f.height
        ),
    );
    w(&mut out, format!("<title>{}</title>", report.scenario));
    for cell in &s.cells {
        w(
            &mut out,
            format!(
                r##"<polygon class="cell" points="{}" fill="none" stroke="#999999"/>"##,
                points_attr(&f, cell)
            ),
        );
    }
    for (n, c) in &s.walls {
        let (a, b) = if s.dim == 1 {
            let x = c / n[0];
            ([x, f.min[1]], [x, f.min[1] + (f.height - 2.0 * MARGIN) / f.scale[1]])
        } else {
            // Long segment along the wall through its point nearest the origin.
            let base = [n[0] * c, n[1] * c];
            let dir = [-n[1], n[0]];
            let reach = 2.0 * (SIZE / f.scale[0]) + base[0].abs() + base[1].abs() + f.min[0].abs() + f.min[1].abs();
            (
                [base[0] - reach * dir[0], base[1] - reach * dir[1]],
                [base[0] + reach * dir[0], base[1] + reach * dir[1]],
            )
        };
        let (x1, y1) = f.map(a);
        let (x2, y2) = f.map(b);
        w(
            &mut out,
            format!(r##"<line class="wall" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#cc3333"/>"##),
        );
    }
    w(
        &mut out,
        format!(
            r##"<polyline class="initial" points="{}" fill="none" stroke="#888888" stroke-dasharray="4 3"/>"##,
            points_attr(&f, &s.initial)
        ),
    );
    let mut d = String::new();
    for (i, &p) in s.geodesic.iter().enumerate() {
        let (x, y) = f.map(p);
        write!(d, "{}{x:.3} {y:.3}", if i == 0 { "M " } else { " L " }).expect("string");
    }
    w(
        &mut out,
        format!(r##"<path class="geodesic" d="{d}" fill="none" stroke="#1144cc" stroke-width="2"/>"##),
    );
    let (cx, cy) = f.map(s.translate);
    w(
        &mut out,
        format!(r##"<circle class="translate" cx="{cx:.3}" cy="{cy:.3}" r="4" fill="#ee8800"/>"##),
    );
    w(&mut out, "</svg>".into());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{execute, parse_scenario, prepare};

    fn report(text: &str) -> RunReport {
        execute(&prepare(parse_scenario(text).unwrap()).unwrap()).unwrap().report
    }

    #[test]
    fn billiard_scene_has_walls_and_path() {
        let r = report(
            r#"{"name": "a1",
                "group": {"family": "affine_weyl", "walls": [{"normal": [1], "offset": 0}, {"normal": [-1], "offset": -1}]},
                "closure": {"word": "1 0"},
                "curve": {"kind": "nodes", "points": [[0], [0.7], [0.4], [1.3], [2]]}}"#,
        );
        let svg = render_svg(&r).unwrap();
        assert_eq!(svg.matches("class=\"wall\"").count(), 2);
        assert_eq!(svg.matches("class=\"geodesic\"").count(), 1);
        assert!(svg.contains("viewBox=\"0 0 "));
        assert_eq!(svg, render_svg(&r).unwrap());
    }

    #[test]
    fn torus_scene_has_cell_and_line() {
        let r = report(
            r#"{"name": "torus",
                "group": {"family": "lattice", "basis": [[1, 0], [0, 1]]},
                "closure": {"word": "0"},
                "curve": {"kind": "nodes", "points": [[0, 0], [0.5, 0.5], [1, 0]]}}"#,
        );
        let svg = render_svg(&r).unwrap();
        assert_eq!(svg.matches("class=\"cell\"").count(), 1);
        assert!(svg.contains("class=\"geodesic\""));
    }

    #[test]
    fn three_dimensional_scene_is_unsupported() {
        let r = report(
            r#"{"name": "screw",
                "group": {"family": "explicit", "space": {"kind": "euclidean", "dim": 3},
                          "generators": [{"linear": [[0, -1, 0], [1, 0, 0], [0, 0, 1]], "translation": [0, 0, 2]}]},
                "closure": {"word": "0"},
                "curve": {"kind": "auto", "base": [0.3, 0.1, 0]},
                "config": {"max_iter": 2}}"#,
        );
        assert!(matches!(render_svg(&r), Err(Error::Unsupported(_))));
    }
}
