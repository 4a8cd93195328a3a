//! OBJ meshes and CSV tables over a parameter grid.

use std::fmt::Write as _;

use isopedal::geometry::{GeometrySample, PointAnalysis, SurfaceEvaluator};
use isopedal::linalg::{dot, norm};
use isopedal::pedal::PedalSample;

/// Linear map from `R^n` to `R^3` applied to OBJ vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub rows: [Vec<f64>; 3],
    pub label: String,
}

impl Projection {
    pub fn first_three(n: usize) -> Projection {
        let unit = |k: usize| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        Projection { rows: [unit(0), unit(1), unit(2)], label: "first three coordinates".into() }
    }

    /// Returns the projection and a warning if its rows are not orthonormal.
    pub fn custom(rows: &[Vec<f64>]) -> (Projection, Option<String>) {
        let p = Projection {
            rows: [rows[0].clone(), rows[1].clone(), rows[2].clone()],
            label: "user matrix".into(),
        };
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&p.rows[i], &p.rows[j]) - want).abs());
            }
        }
        let warn = (worst > 1e-9).then(|| format!("projection rows are not orthonormal (max deviation {worst:.3e})"));
        (p, warn)
    }

    pub fn apply(&self, v: &[f64]) -> [f64; 3] {
        [dot(&self.rows[0], v), dot(&self.rows[1], v), dot(&self.rows[2], v)]
    }
}

/// Positions over the grid in row-major order (x fastest); `None` where
/// the surface cannot be evaluated.
pub fn sample_positions(s: &SurfaceEvaluator, nodes: &[(f64, f64)]) -> Vec<Option<Vec<f64>>> {
    nodes.iter().map(|&(x, y)| s.position(x, y).ok().filter(|p| p.iter().all(|c| c.is_finite()))).collect()
}

/// Wavefront OBJ text. Quads are split along the `(i, j)-(i+1, j+1)`
/// diagonal; triangles touching a missing vertex are dropped.
pub fn obj_mesh(positions: &[Option<Vec<f64>>], nx: usize, ny: usize, proj: &Projection, name: &str) -> String {
    assert_eq!(positions.len(), nx * ny);
    let mut s = String::new();
    let missing = positions.iter().filter(|p| p.is_none()).count();
    writeln!(s, "# {name}").unwrap();
    writeln!(s, "# grid {nx} x {ny}, row-major, x fastest").unwrap();
    writeln!(s, "# projection: {}", proj.label).unwrap();
    for (k, r) in proj.rows.iter().enumerate() {
        let row: Vec<String> = r.iter().map(|c| format!("{c}")).collect();
        writeln!(s, "# row {k}: {}", row.join(" ")).unwrap();
    }
    if missing > 0 {
        writeln!(s, "# {missing} vertices could not be evaluated and are written at the origin").unwrap();
    }
    writeln!(s, "o {name}").unwrap();
    for p in positions {
        let [a, b, c] = p.as_ref().map_or([0.0; 3], |p| proj.apply(p));
        writeln!(s, "v {a:.12e} {b:.12e} {c:.12e}").unwrap();
    }
    let idx = |i: usize, j: usize| j * nx + i;
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            for t in [[a, b, c], [a, c, d]] {
                if t.iter().all(|&k| positions[k].is_some()) {
                    writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
                }
            }
        }
    }
    s
}

pub const GEOMETRY_COLUMNS: [&str; 10] = [
    "x",
    "y",
    "K",
    "K_N",
    "Hnorm2",
    "wintgen_defect",
    "circle_defect_1",
    "circle_defect_2",
    "lambda_2",
    "excluded_flag",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.12e}"))
}

/// One row per node in the documented column order; excluded rows carry
/// empty fields and `excluded_flag = 1`.
pub fn geometry_csv(s: &SurfaceEvaluator, nodes: &[(f64, f64)], order: usize) -> String {
    let mut out = GEOMETRY_COLUMNS.join(",");
    out.push('\n');
    for &(x, y) in nodes {
        let sample = PointAnalysis::new(s, x, y, order).and_then(|pa| GeometrySample::from_analysis(&pa));
        let row = match sample {
            Ok(g) => {
                let c = &g.curvatures;
                vec![
                    format!("{x}"),
                    format!("{y}"),
                    fmt_opt(Some(c.k)),
                    fmt_opt(Some(c.k_n)),
                    fmt_opt(Some(c.h_norm_sq)),
                    fmt_opt(Some(c.wintgen_defect)),
                    fmt_opt(g.ellipse(1).map(|e| e.circle_defect)),
                    fmt_opt(g.ellipse(2).map(|e| e.circle_defect)),
                    fmt_opt(g.ellipse(2).map(|e| e.lambda)),
                    "0".into(),
                ]
            }
            Err(_) => {
                let mut r = vec![format!("{x}"), format!("{y}")];
                r.extend(std::iter::repeat_n(String::new(), 7));
                r.push("1".into());
                r
            }
        };
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn pedal_columns(n: usize) -> Vec<String> {
    let mut c = vec!["x".to_string(), "y".to_string()];
    c.extend((1..=n).map(|k| format!("Z_{k}")));
    c.extend((1..=n).map(|k| format!("g_{k}")));
    for s in ["delta_norm", "eta_norm", "theta", "z_nonzero", "delta_nonzero", "immersion", "excluded_flag"] {
        c.push(s.into());
    }
    c
}

/// Rows of pedal samples; nodes where the decomposition fails are written
/// with empty fields and `excluded_flag = 1`.
pub fn pedal_csv(n: usize, nodes: &[(f64, f64)], samples: &[Option<PedalSample>]) -> String {
    let mut out = pedal_columns(n).join(",");
    out.push('\n');
    let b = |v: bool| if v { "1" } else { "0" }.to_string();
    for (&(x, y), s) in nodes.iter().zip(samples) {
        let mut row = vec![format!("{x}"), format!("{y}")];
        match s {
            Some(s) => {
                row.extend(s.z.iter().chain(&s.g).map(|v| format!("{v:.12e}")));
                row.push(format!("{:.12e}", norm(&s.delta)));
                row.push(format!("{:.12e}", norm(&s.eta)));
                row.push(format!("{:.12e}", s.theta));
                row.extend([b(s.z_nonzero), b(s.delta_nonzero), b(s.immersion), b(s.excluded())]);
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 2 * n + 6));
                row.push("1".into());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
