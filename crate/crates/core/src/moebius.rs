//! Sphere inversions and how they act on normal bundles, shape operators
//! and mean curvature.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{LocalSurface, Provenance, SurfaceEvaluator};
use crate::jets::JetVec;
use crate::linalg::{self, dot, norm};
use crate::pedal::PedalPoint;

/// Relative (to the radius) distance from the center below which points
/// are excluded.
pub const POLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl InversionSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeomError::InvalidSpec(format!("inversion radius {radius}")));
        }
        Ok(InversionSpec { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        let u = linalg::sub(q, &self.center);
        let n2 = dot(&u, &u);
        if n2.sqrt() < POLE_TOL * self.radius {
            return Err(GeomError::PoleProximity);
        }
        Ok(linalg::axpy(&self.center, self.radius * self.radius / n2, &u))
    }

    /// Inversion of a jet-valued point.
    pub fn apply_jet(&self, q: &JetVec) -> Result<JetVec> {
        let u = q.add_const(&linalg::scale(&self.center, -1.0));
        let n2 = u.norm_sq();
        if n2.value().sqrt() < POLE_TOL * self.radius {
            return Err(GeomError::PoleProximity);
        }
        let w = n2.recip()?.scale(self.radius * self.radius);
        Ok(u.scale_jet(&w).add_const(&self.center))
    }
}

pub fn invert_evaluator(s: &SurfaceEvaluator, inv: &InversionSpec) -> SurfaceEvaluator {
    assert_eq!(inv.dim(), s.ambient_dim());
    let s = s.clone();
    let inv = inv.clone();
    SurfaceEvaluator::new(s.ambient_dim(), Provenance::Moebius, move |x, y, order| {
        inv.apply_jet(&s.eval(x, y, order)?)
    })
}

/// The bundle isometry `mu -> mu - 2 <u, mu> u / |u|^2`, `u = g - p0`.
pub fn normal_isometry(g_point: &[f64], mu: &[f64], inv: &InversionSpec) -> Result<Vec<f64>> {
    let u = linalg::sub(g_point, &inv.center);
    let n2 = dot(&u, &u);
    if n2.sqrt() < POLE_TOL * inv.radius {
        return Err(GeomError::PoleProximity);
    }
    Ok(linalg::axpy(mu, -2.0 * dot(&u, mu) / n2, &u))
}

/// Shape operators and mean curvature of the inverted surface, computed
/// directly from its jets and from the transformation formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvertedShape {
    /// Shape operators (as endomorphisms in coordinates) for an orthonormal
    /// normal basis `mu_j` of the original surface, mapped by the isometry.
    pub a_direct: Vec<[[f64; 2]; 2]>,
    pub a_formula: Vec<[[f64; 2]; 2]>,
    pub h_direct: Vec<f64>,
    pub h_formula: Vec<f64>,
    /// Largest singular value of the second fundamental form of the image
    /// on a unit frame.
    pub alpha_scale: f64,
}

impl InvertedShape {
    /// `(max relative shape-operator mismatch, relative mean-curvature mismatch)`.
    pub fn residuals(&self) -> (f64, f64) {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for (a, b) in self.a_direct.iter().zip(&self.a_formula) {
            for i in 0..2 {
                for j in 0..2 {
                    num = num.max((a[i][j] - b[i][j]).abs());
                    den = den.max(b[i][j].abs());
                }
            }
        }
        let hd = norm(&linalg::sub(&self.h_direct, &self.h_formula));
        let hs = norm(&self.h_formula).max(1e-300);
        (num / den.max(1e-300), hd / hs)
    }
}

fn shape_matrix(l: &LocalSurface, mu: &[f64]) -> Result<Matrix2<f64>> {
    let (e, f, g) = l.metric_value();
    let b = |i, j| -> Result<f64> { Ok(dot(&l.alpha_coord(i, j)?.value(), mu)) };
    let bm = Matrix2::new(b(0, 0)?, b(0, 1)?, b(1, 0)?, b(1, 1)?);
    let gm = Matrix2::new(e, f, f, g);
    let gi = gm.try_inverse().ok_or(GeomError::NotImmersion { x: l.point().0, y: l.point().1 })?;
    Ok(gi * bm)
}

fn to_array(m: Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Compares the inverted surface's shape operators and mean curvature
/// with their transformation formulas, from jets of `g` of order >= 2.
pub fn inverted_shape_and_mean(g_jets: &JetVec, point: (f64, f64), inv: &InversionSpec) -> Result<InvertedShape> {
    let lg = LocalSurface::new(g_jets.clone(), point)?;
    let lt = LocalSurface::new(inv.apply_jet(g_jets)?, point)?;
    let gp = g_jets.value();
    let u = linalg::sub(&gp, &inv.center);
    let u2 = dot(&u, &u);
    let r2 = inv.radius * inv.radius;
    let tangent = lg.frame_value().to_vec();
    let normals = linalg::orthonormal_complement(&tangent, gp.len());
    let mut a_direct = Vec::new();
    let mut a_formula = Vec::new();
    for mu in &normals {
        let pmu = normal_isometry(&gp, mu, inv)?;
        a_direct.push(to_array(shape_matrix(&lt, &pmu)?));
        let a = shape_matrix(&lg, mu)?;
        let f = (a * u2 + Matrix2::identity() * (2.0 * dot(&u, mu))) / r2;
        a_formula.push(to_array(f));
    }
    let hg = lg.mean_curvature_jet()?.value();
    let u_perp = linalg::project_off(&u, &tangent);
    let inner = linalg::axpy(&linalg::scale(&hg, u2), 2.0, &u_perp);
    let h_formula = linalg::scale(&normal_isometry(&gp, &inner, inv)?, 1.0 / r2);
    let h_direct = lt.mean_curvature_jet()?.value();
    let alpha_scale = linalg::singular_values(lt.alpha_values()?.as_ref())[0];
    Ok(InvertedShape { a_direct, a_formula, h_direct, h_formula, alpha_scale })
}

/// Numerical rank of `{alpha_11, alpha_12, alpha_22}` at a point.
pub fn first_normal_rank(s: &SurfaceEvaluator, x: f64, y: f64) -> Result<usize> {
    let l = LocalSurface::new(s.eval(x, y, 2)?, (x, y))?;
    Ok(linalg::numerical_rank(l.alpha_values()?.as_ref(), 1e-7))
}

/// Raw residuals of the conditions under which the inversion of the pedal
/// centered at `p0` is minimal at a point:
/// `|g - p0|^2 - |delta|^2 - <p0, Z - delta>`, `<p0, JZ + J delta>` and
/// `|eta - p0^perp|`, where `perp` is the part orthogonal to `T + N_1`.
pub fn minimality_system(pp: &PedalPoint, p0: &[f64]) -> Result<[f64; 3]> {
    let s = &pp.sample;
    let flag = &pp.f.flag;
    let u = linalg::sub(&s.g, p0);
    let zd = linalg::sub(&s.z, &s.delta);
    let r1 = dot(&u, &u) - dot(&s.delta, &s.delta) - dot(p0, &zd);
    let jz = flag.complex_structure(0, &s.z).expect("tangent plane");
    let jd = flag
        .complex_structure(1, &s.delta)
        .ok_or(GeomError::NotRegular { x: s.point.0, y: s.point.1, what: "first normal space" })?;
    let r2 = dot(p0, &linalg::add(&jz, &jd));
    let p_perp = linalg::project_off(p0, &flag.span_values(2));
    let r3 = norm(&linalg::sub(&s.eta, &p_perp));
    Ok([r1, r2, r3])
}

/// `per_axis^3` inversion centers on a cube around the centroid of a point
/// cloud, aligned with its three principal directions and extending one
/// diameter from the centroid.
pub fn lattice_centers(points: &[Vec<f64>], per_axis: usize) -> Vec<Vec<f64>> {
    if points.is_empty() || per_axis == 0 {
        return Vec::new();
    }
    let n = points[0].len();
    let m = points.len() as f64;
    let centroid: Vec<f64> = (0..n).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / m).collect();
    let diam = points
        .iter()
        .flat_map(|p| points.iter().map(move |q| norm(&linalg::sub(p, q))))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let cov = DMatrix::from_fn(n, points.len(), |i, j| points[j][i] - centroid[i]);
    let svd = cov.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let axes: Vec<Vec<f64>> = order.iter().take(3).map(|&c| u.column(c).iter().copied().collect()).collect();
    let offs: Vec<f64> = (0..per_axis)
        .map(|i| {
            if per_axis == 1 {
                0.0
            } else {
                diam * (-1.0 + 2.0 * i as f64 / (per_axis - 1) as f64)
            }
        })
        .collect();
    let mut out = Vec::with_capacity(per_axis.pow(3));
    for &a in &offs {
        for &b in &offs {
            for &c in &offs {
                let mut p = centroid.clone();
                for (w, ax) in [a, b, c].iter().zip(&axes) {
                    p = linalg::axpy(&p, *w, ax);
                }
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedal::pedal_surface;
    use crate::weierstrass::Preset;

    #[test]
    fn inversion_of_point() {
        let inv = InversionSpec::new(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(inv.apply(&[2.0, 0.0, 0.0, 0.0]).unwrap(), vec![0.5, 0.0, 0.0, 0.0]);
        let q = [0.3, -1.2, 0.7, 2.0];
        let inv = InversionSpec::new(vec![0.1, 0.2, -0.3, 0.4], 1.7).unwrap();
        let back = inv.apply(&inv.apply(&q).unwrap()).unwrap();
        assert!(norm(&linalg::sub(&back, &q)) < 1e-12);
        assert_eq!(inv.apply(&inv.center), Err(GeomError::PoleProximity));
        assert!(InversionSpec::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn isometry_cases() {
        let inv = InversionSpec::new(vec![0.0, 0.0, 0.0], 2.0).unwrap();
        let g = [1.0, 0.0, 0.0];
        assert_eq!(normal_isometry(&g, &[0.0, 1.0, 0.0], &inv).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(normal_isometry(&g, &[3.0, 0.0, 0.0], &inv).unwrap(), vec![-3.0, 0.0, 0.0]);
    }

    #[test]
    fn formulas_match_jets_on_pedal() {
        let f = Preset::Holo3.curve().evaluator();
        let g = pedal_surface(&f);
        let inv = InversionSpec::new(vec![0.2, -0.1, 0.3, 0.4, -0.2, 0.1], 1.3).unwrap();
        for &(x, y) in &[(0.5, 0.6), (1.1, 0.4)] {
            let r = inverted_shape_and_mean(&g.eval(x, y, 2).unwrap(), (x, y), &inv).unwrap();
            let (a, h) = r.residuals();
            assert!(a < 1e-7 && h < 1e-7, "{a} {h}");
        }
    }

    #[test]
    fn ranks() {
        let f = Preset::Holo3.curve().evaluator();
        assert_eq!(first_normal_rank(&f, 0.7, 0.5).unwrap(), 2);
        assert_eq!(first_normal_rank(&pedal_surface(&f), 0.7, 0.5).unwrap(), 3);
    }

    #[test]
    fn lattice_shape() {
        let pts = vec![vec![0.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 0.5, 1.0]];
        let c = lattice_centers(&pts, 5);
        assert_eq!(c.len(), 125);
        assert!(c.iter().all(|p| p.len() == 4));
    }
}
