//! Pedal surfaces: the foot of the perpendicular from the origin to the
//! tangent planes of an immersion, computed in jet arithmetic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{LocalSurface, PointAnalysis, Provenance, SurfaceEvaluator};
use crate::jets::JetVec;
use crate::linalg::{self, dot, norm};

/// Relative size (against `|f(p)|`) below which `Z` or `delta` count as zero.
pub const EPS_REG: f64 = 1e-6;

/// Decomposition `c f + v = Z + g` at one point, with `g = delta + eta`
/// split along the first normal space of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedalSample {
    pub point: (f64, f64),
    /// `Z` in the orthonormal tangent frame of `f`.
    pub z_frame: [f64; 2],
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    pub delta: Vec<f64>,
    pub eta: Vec<f64>,
    pub theta: f64,
    pub z_nonzero: bool,
    pub delta_nonzero: bool,
    pub immersion: bool,
}

impl PedalSample {
    pub fn excluded(&self) -> bool {
        !(self.z_nonzero && self.delta_nonzero && self.immersion)
    }

    pub fn reasons(&self) -> Vec<&'static str> {
        let mut r = Vec::new();
        if !self.z_nonzero {
            r.push("Z = 0");
        }
        if !self.delta_nonzero {
            r.push("delta = 0");
        }
        if !self.immersion {
            r.push("pedal not immersed");
        }
        r
    }
}

fn gram_degenerate(gx: &[f64], gy: &[f64]) -> bool {
    let (e, f, g) = (dot(gx, gx), dot(gx, gy), dot(gy, gy));
    let s = e.max(g);
    !(e * g - f * f > 1e-12 * s * s)
}

/// Pedal of `c f + v` taken along the tangent planes of `f`; for `c = 0`
/// this is the normal part `v^perp` of a constant vector.
pub fn pedal_affine(f: &SurfaceEvaluator, c: f64, v: &[f64]) -> SurfaceEvaluator {
    assert_eq!(v.len(), f.ambient_dim());
    let f = f.clone();
    let v = v.to_vec();
    SurfaceEvaluator::new(f.ambient_dim(), Provenance::Pedal, move |x, y, order| {
        let local = LocalSurface::new(f.eval(x, y, order + 1)?, (x, y))?;
        let pos = local.position().scale(c).add_const(&v);
        let g = pos.sub(&local.tangent_part(&pos));
        if order >= 1 && gram_degenerate(&g.dx().value(), &g.dy().value()) {
            return Err(GeomError::PedalDegenerate { x, y });
        }
        Ok(g)
    })
}

pub fn pedal_surface(f: &SurfaceEvaluator) -> SurfaceEvaluator {
    pedal_affine(f, 1.0, &vec![0.0; f.ambient_dim()])
}

/// Everything known at one point about `f` and its pedal `g`.
#[derive(Clone, Debug)]
pub struct PedalPoint {
    pub f: PointAnalysis,
    /// Jets of `g`, one order below those of `f`.
    pub g: JetVec,
    /// Jets of `delta`, the projection of `g` on `N_1`.
    pub delta: JetVec,
    pub sample: PedalSample,
}

impl PedalPoint {
    pub fn new(f: &SurfaceEvaluator, x: f64, y: f64, order: usize) -> Result<Self> {
        Self::with_affine(f, 1.0, &vec![0.0; f.ambient_dim()], x, y, order)
    }

    /// `order` is the jet order of `f`; at least 2.
    pub fn with_affine(f: &SurfaceEvaluator, c: f64, v: &[f64], x: f64, y: f64, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(GeomError::InsufficientOrder { have: order, need: 2 });
        }
        let pa = PointAnalysis::new(f, x, y, order)?;
        let pos = pa.local.position().scale(c).add_const(v);
        let zj = pa.local.tangent_part(&pos);
        let g = pos.sub(&zj);
        let n1: &[JetVec] = pa.flag.level(1).unwrap_or(&[]);
        let mut delta = JetVec::zero(g.dim(), g.order().min(order - 2));
        for e in n1 {
            delta = delta.axpy(&g.dot(e)?, e);
        }
        let [e1, e2] = pa.local.frame_value();
        let pos0 = pos.value();
        let z = zj.value();
        let gv = g.value();
        let dv = delta.value();
        let eta = linalg::sub(&gv, &dv);
        let scale = norm(&pos0);
        let immersion = !gram_degenerate(&g.dx().value(), &g.dy().value());
        let sample = PedalSample {
            point: (x, y),
            z_frame: [dot(&pos0, &e1), dot(&pos0, &e2)],
            theta: dot(&z, &z) + dot(&dv, &dv),
            z_nonzero: norm(&z) > EPS_REG * scale,
            delta_nonzero: norm(&dv) > EPS_REG * scale,
            immersion,
            z,
            g: gv,
            delta: dv,
            eta,
        };
        Ok(PedalPoint { f: pa, g, delta, sample })
    }

    /// Local surface data of `g`.
    pub fn g_local(&self) -> Result<LocalSurface> {
        let (x, y) = self.sample.point;
        LocalSurface::new(self.g.clone(), (x, y)).map_err(|e| match e {
            GeomError::NotImmersion { x, y } => GeomError::PedalDegenerate { x, y },
            other => other,
        })
    }

    /// Coordinate components of `Z` with respect to `(d_x, d_y)`.
    pub fn z_coords(&self) -> [f64; 2] {
        let c = self.f.local.frame_coef_value();
        let z = self.sample.z_frame;
        [z[0] * c[0][0] + z[1] * c[1][0], z[0] * c[0][1] + z[1] * c[1][1]]
    }

    /// `alpha_f(d_k, Z)` for `k` in {0 = x, 1 = y}.
    pub fn alpha_z(&self, k: usize) -> Result<Vec<f64>> {
        let zc = self.z_coords();
        let a = self.f.local.alpha_coord(k, 0)?.value();
        let b = self.f.local.alpha_coord(k, 1)?.value();
        Ok(linalg::axpy(&linalg::scale(&a, zc[0]), zc[1], &b))
    }

    /// Gauss curvature of `f` from the Gauss equation.
    pub fn gauss_curvature(&self) -> Result<f64> {
        let [a11, a12, a22] = self.f.local.alpha_values()?;
        Ok(dot(&a11, &a22) - dot(&a12, &a12))
    }
}

pub fn pedal_decompose(f: &SurfaceEvaluator, x: f64, y: f64) -> Result<PedalSample> {
    Ok(PedalPoint::new(f, x, y, 2)?.sample)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub point: (f64, f64),
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub total: usize,
    pub excluded: Vec<Exclusion>,
}

impl RegularityReport {
    pub fn excluded_count(&self) -> usize {
        self.excluded.len()
    }
}

pub fn pedal_regularity(f: &SurfaceEvaluator, points: &[(f64, f64)]) -> RegularityReport {
    let excluded = points
        .par_iter()
        .filter_map(|&(x, y)| {
            let reasons = match pedal_decompose(f, x, y) {
                Ok(s) if !s.excluded() => return None,
                Ok(s) => s.reasons().into_iter().map(String::from).collect(),
                Err(e) => vec![e.to_string()],
            };
            Some(Exclusion { point: (x, y), reasons })
        })
        .collect();
    RegularityReport { total: points.len(), excluded }
}

/// Relative residuals of `g_* d_k = -A_g d_k - alpha(d_k, Z)` and of
/// `(g_* d_k)^perp = -alpha(d_k, Z)`, maximised over `k = x, y`.
pub fn derivative_residuals(pp: &PedalPoint) -> Result<(f64, f64)> {
    let l = &pp.f.local;
    let [e1, e2] = l.frame_value();
    let g = &pp.sample.g;
    let mut r_full: f64 = 0.0;
    let mut r_perp: f64 = 0.0;
    for k in 0..2 {
        let gk = if k == 0 { pp.g.dx() } else { pp.g.dy() }.value();
        let az = pp.alpha_z(k)?;
        // A_g d_k = sum_j <alpha(d_k, e_j), g> e_j
        let c = l.frame_coef_value();
        let a0 = l.alpha_coord(k, 0)?.value();
        let a1 = l.alpha_coord(k, 1)?.value();
        let alpha_e = |j: usize| linalg::axpy(&linalg::scale(&a0, c[j][0]), c[j][1], &a1);
        let ag = linalg::axpy(
            &linalg::scale(&e1, dot(&alpha_e(0), g)),
            dot(&alpha_e(1), g),
            &e2,
        );
        let closed = linalg::scale(&linalg::add(&ag, &az), -1.0);
        let s = norm(&gk);
        r_full = r_full.max(norm(&linalg::sub(&gk, &closed)) / s);
        let perp = linalg::project_off(&gk, &[e1.clone(), e2.clone()]);
        r_perp = r_perp.max(norm(&linalg::add(&perp, &az)) / s);
    }
    Ok((r_full, r_perp))
}

/// Conformality defect `max(|<g_x,g_y>|, |g_x|^2 - |g_y|^2|) / |g_x|^2` and
/// the relative defect of `|g_x|^2 / |f_x|^2 = -K theta / 2`.
pub fn conformal_factor_defects(pp: &PedalPoint) -> Result<(f64, f64)> {
    let gx = pp.g.dx().value();
    let gy = pp.g.dy().value();
    let ex = dot(&gx, &gx);
    let conf = dot(&gx, &gy).abs().max((ex - dot(&gy, &gy)).abs()) / ex;
    let fx = pp.f.local.coord_partial(1, 0).value();
    let ratio = ex / dot(&fx, &fx);
    let k = pp.gauss_curvature()?;
    let factor = (ratio + 0.5 * k * pp.sample.theta).abs() / ratio;
    Ok((conf, factor))
}

/// Cosines between `g_* d_k` and `Z - delta`, `JZ + J_1 delta`, and the
/// complement of `T + N_1` of `f` (maximised over `k` and over an
/// orthonormal basis of the complement).
pub fn normal_span_residuals(pp: &PedalPoint) -> Result<[f64; 3]> {
    let s = &pp.sample;
    let flag = &pp.f.flag;
    let w1 = linalg::sub(&s.z, &s.delta);
    let jz = flag.complex_structure(0, &s.z).expect("tangent plane");
    let jd = flag
        .complex_structure(1, &s.delta)
        .ok_or(GeomError::NotRegular { x: s.point.0, y: s.point.1, what: "first normal space" })?;
    let w2 = linalg::add(&jz, &jd);
    let span = flag.span_values(2);
    let comp = linalg::orthonormal_complement(&span, flag.ambient_dim());
    let mut out = [0.0f64; 3];
    for k in 0..2 {
        let gk = if k == 0 { pp.g.dx() } else { pp.g.dy() }.value();
        let ng = norm(&gk);
        out[0] = out[0].max(dot(&gk, &w1).abs() / (ng * norm(&w1)));
        out[1] = out[1].max(dot(&gk, &w2).abs() / (ng * norm(&w2)));
        for nu in &comp {
            out[2] = out[2].max(dot(&gk, nu).abs() / ng);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::{CPoly, CVecPoly};
    use crate::weierstrass::{holomorphic_curve, Preset};

    fn phi3() -> SurfaceEvaluator {
        Preset::Holo3.curve().evaluator()
    }

    #[test]
    fn decomposition_at_one() {
        let s = pedal_decompose(&phi3(), 1.0, 0.0).unwrap();
        let z = linalg::scale(&[1.0, 0.0, 2.0, 0.0, 2.0, 0.0], 13.0 / 27.0);
        let g = [14.0 / 27.0, 0.0, 1.0 / 27.0, 0.0, -8.0 / 27.0, 0.0];
        assert!(norm(&linalg::sub(&s.z, &z)) < 1e-14);
        assert!(norm(&linalg::sub(&s.g, &g)) < 1e-14);
        // delta: projection of g onto N_1 = span{alpha(e1,e1), alpha(e1,e2)}.
        // At (1,0): f_x = (1,0,2,0,2,0), f_y = -(0,1,0,2,0,2),
        // f_xx = (0,0,2,0,4,0), f_xy = -(0,0,0,2,0,4); signs do not affect spans.
        let fx = [1.0, 0.0, 2.0, 0.0, 2.0, 0.0];
        let fy = [0.0, 1.0, 0.0, 2.0, 0.0, 2.0];
        let t = vec![linalg::scale(&fx, 1.0 / 3.0), linalg::scale(&fy, 1.0 / 3.0)];
        let n11 = linalg::project_off(&[0.0, 0.0, 2.0, 0.0, 4.0, 0.0], &t);
        let n12 = linalg::project_off(&[0.0, 0.0, 0.0, 2.0, 0.0, 4.0], &t);
        let b = vec![linalg::scale(&n11, 1.0 / norm(&n11)), linalg::scale(&n12, 1.0 / norm(&n12))];
        assert!(dot(&b[0], &b[1]).abs() < 1e-15);
        let d = linalg::project_onto(&g, &b);
        assert!(norm(&linalg::sub(&s.delta, &d)) < 1e-13);
        assert!((s.theta - (169.0 / 81.0 + dot(&d, &d))).abs() < 1e-13);
        // f = Z + g and g is normal
        let f = phi3().position(1.0, 0.0).unwrap();
        assert!(norm(&linalg::sub(&f, &linalg::add(&s.z, &s.g))) < 1e-12 * norm(&f));
        assert!(dot(&s.g, &fx).abs() < 1e-12 && dot(&s.g, &fy).abs() < 1e-12);
        assert!(!s.excluded());
    }

    #[test]
    fn origin_is_excluded() {
        let s = pedal_decompose(&phi3(), 0.0, 0.0).unwrap();
        assert!(!s.z_nonzero && s.excluded());
        let r = pedal_regularity(&phi3(), &[(0.0, 0.0), (0.5, 0.5)]);
        assert_eq!(r.excluded_count(), 1);
        assert_eq!(r.excluded[0].point, (0.0, 0.0));
    }

    #[test]
    fn plane_pedal_degenerate() {
        let plane = holomorphic_curve(&CVecPoly::new(vec![CPoly::from_real(&[0.0, 1.0])]))
            .unwrap()
            .evaluator();
        let g = pedal_surface(&plane);
        assert!(matches!(g.eval(0.4, 0.2, 2), Err(GeomError::PedalDegenerate { .. })));
        assert_eq!(g.eval(0.4, 0.2, 0).unwrap().value(), vec![0.0, 0.0]);
        let r = pedal_regularity(&plane, &[(0.4, 0.2), (0.1, 0.9)]);
        assert_eq!(r.excluded_count(), 2);
    }

    #[test]
    fn pedal_evaluator_matches_point_data() {
        let g = pedal_surface(&phi3());
        let pp = PedalPoint::new(&phi3(), 0.7, 0.4, 4).unwrap();
        let a = g.eval(0.7, 0.4, 3).unwrap();
        for i in 0..=3 {
            for j in 0..=(3 - i) {
                let d = linalg::sub(&a.partial(i, j), &pp.g.partial(i, j));
                assert!(norm(&d) < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_derivative() {
        for &(x, y) in &[(0.4, 0.9), (1.2, 0.3)] {
            let pp = PedalPoint::new(&phi3(), x, y, 3).unwrap();
            let (a, b) = derivative_residuals(&pp).unwrap();
            assert!(a < 1e-8 && b < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn pedal_is_conformal_with_factor() {
        for pre in [Preset::Holo3, Preset::Noniso] {
            let f = pre.curve().evaluator();
            let pp = PedalPoint::new(&f, 0.8, 0.6, 3).unwrap();
            let (c, k) = conformal_factor_defects(&pp).unwrap();
            assert!(c < 1e-8 && k < 1e-7, "{pre:?}: {c} {k}");
            let r = normal_span_residuals(&pp).unwrap();
            assert!(r.iter().all(|v| *v < 1e-8), "{pre:?}: {r:?}");
        }
    }

    #[test]
    fn constant_pedal_is_normal_part() {
        let v = [0.3, -0.2, 0.5, 0.1, -0.4, 0.7];
        let g = pedal_affine(&phi3(), 0.0, &v);
        let p = g.position(0.6, 0.8).unwrap();
        let (_, [e1, e2]) = crate::geometry::first_fundamental(&phi3(), 0.6, 0.8).unwrap();
        assert!(norm(&linalg::sub(&p, &linalg::project_off(&v, &[e1, e2]))) < 1e-14);
    }

    #[test]
    fn pedal_of_homothety_scales() {
        let f2 = phi3().affine(2.0, &[0.0; 6]);
        let a = pedal_surface(&phi3()).position(0.5, 0.7).unwrap();
        let b = pedal_surface(&f2).position(0.5, 0.7).unwrap();
        assert!(norm(&linalg::sub(&b, &linalg::scale(&a, 2.0))) < 1e-14);
    }
}
