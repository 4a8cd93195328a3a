//! Per-point defects for the pedal identities. Every quantity is optional:
//! `None` means the jets were too short or the quantity is undefined there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{ellipse_from_values, Curvatures, LocalSurface, SecondFundamental, SurfaceEvaluator};
use crate::jets::JetVec;
use crate::linalg::{self, dot, norm, CVector};
use crate::pedal::{self, PedalPoint, PedalSample};

/// `alpha(d, d)` for `d = (d_x - i d_y) / 2`, from coordinate values.
pub fn alpha_dd(l: &LocalSurface) -> Result<CVector> {
    let xx = l.alpha_coord(0, 0)?.value();
    let xy = l.alpha_coord(0, 1)?.value();
    let yy = l.alpha_coord(1, 1)?.value();
    Ok(CVector::new(linalg::scale(&linalg::sub(&xx, &yy), 0.25), linalg::scale(&xy, -0.5)))
}

/// `<d_k a, b>` for jet-valued `a` and value `b`, as the complex number
/// obtained by pairing with `d`.
fn d_pair(a: &JetVec, b: &[f64]) -> Complex64 {
    Complex64::new(0.5 * dot(&a.dx().value(), b), -0.5 * dot(&a.dy().value(), b))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PedalMetrics {
    pub point: (f64, f64),
    pub sample: Option<PedalSample>,
    /// Reason for exclusion, if any.
    pub excluded: Option<String>,
    pub f_h_ratio: Option<f64>,
    pub f_k: Option<f64>,
    pub conformality: Option<f64>,
    pub factor: Option<f64>,
    pub span: Option<[f64; 3]>,
    pub derivative: Option<(f64, f64)>,
    pub circle_g: Option<f64>,
    pub circle_shape_g: Option<f64>,
    pub wintgen_g: Option<f64>,
    pub h_formula: Option<f64>,
    pub laplacian: Option<f64>,
    pub normal_form_outside: Option<f64>,
    pub normal_form_complex: Option<f64>,
    /// Indexed by Hodge sign: `[+1, -1]`.
    pub normal_form_c: Option<[f64; 2]>,
    pub hodge: Option<[f64; 2]>,
    pub lambda: Option<f64>,
    pub swillmore: Option<f64>,
    pub scalar_criterion: Option<[f64; 2]>,
    pub kappa_theta: Option<f64>,
    pub rank_g: Option<usize>,
}

pub const SIGNS: [f64; 2] = [1.0, -1.0];

pub fn sign_index(sign: f64) -> usize {
    if sign > 0.0 {
        0
    } else {
        1
    }
}

impl PedalMetrics {
    /// Computes every defect that the jet order (of `f`) allows for the
    /// pedal of `c f + v`.
    pub fn compute(f: &SurfaceEvaluator, c: f64, v: &[f64], x: f64, y: f64, order: usize) -> PedalMetrics {
        let mut m = PedalMetrics { point: (x, y), ..Default::default() };
        let pp = match PedalPoint::with_affine(f, c, v, x, y, order) {
            Ok(pp) => pp,
            Err(e) => {
                m.excluded = Some(e.to_string());
                return m;
            }
        };
        if let Ok(sf) = SecondFundamental::from_local(&pp.f.local) {
            m.f_h_ratio = Some(norm(&sf.h) / sf.scale());
            m.f_k = Some(Curvatures::from_forms(&sf, &pp.f.local.frame_value()).k);
        }
        m.sample = Some(pp.sample.clone());
        if pp.sample.excluded() {
            m.excluded = Some(pp.sample.reasons().join(", "));
            return m;
        }
        m.fill(&pp, order);
        m
    }

    fn fill(&mut self, pp: &PedalPoint, order: usize) {
        self.conformality_and_spans(pp);
        let Ok(gl) = pp.g_local() else {
            self.excluded = Some("pedal not immersed".into());
            return;
        };
        if let Ok(sf) = SecondFundamental::from_local(&gl) {
            let vals = [sf.alpha11.clone(), sf.alpha12.clone(), sf.alpha22.clone()];
            if let Ok(e) = ellipse_from_values(1, &vals) {
                self.circle_g = Some(e.circle_defect);
                self.circle_shape_g = Some(e.shape_defect);
            }
            let s = sf.scale();
            let cv = Curvatures::from_forms(&sf, &gl.frame_value());
            self.wintgen_g = Some(cv.wintgen_defect.abs() / (s * s));
            self.rank_g = Some(linalg::numerical_rank(&vals, 1e-7));
        }
        self.mean_curvature(pp, &gl);
        let _ = self.normal_form(pp, &gl);
        if order >= 4 {
            let _ = self.swillmore(pp, &gl);
        }
    }

    fn conformality_and_spans(&mut self, pp: &PedalPoint) {
        if let Ok((c, k)) = pedal::conformal_factor_defects(pp) {
            self.conformality = Some(c);
            self.factor = Some(k);
        }
        self.span = pedal::normal_span_residuals(pp).ok();
        self.derivative = pedal::derivative_residuals(pp).ok();
        self.kappa_theta = pp
            .f
            .local
            .alpha_values()
            .ok()
            .map(|a| norm(&a[0]) * pp.sample.theta);
    }

    fn mean_curvature(&mut self, pp: &PedalPoint, gl: &LocalSurface) {
        let s = &pp.sample;
        let zd = linalg::sub(&s.z, &s.delta);
        if let Ok(h) = gl.mean_curvature_jet() {
            let h = h.value();
            let want = linalg::scale(&zd, 2.0 / s.theta);
            self.h_formula = Some(norm(&linalg::sub(&h, &want)) / norm(&h));
        }
        if let (Ok(lap), Ok(k)) = (pp.f.local.laplace_beltrami(&pp.g), pp.gauss_curvature()) {
            let want = linalg::scale(&zd, -2.0 * k);
            self.laplacian = Some(norm(&linalg::sub(&lap.value(), &want)) / norm(&want));
        }
    }

    fn normal_form(&mut self, pp: &PedalPoint, gl: &LocalSurface) -> Result<()> {
        let s = &pp.sample;
        let flag = &pp.f.flag;
        let ag = alpha_dd(gl)?;
        let na = ag.norm();
        // (a) no component outside T + N_1 + N_2 of f
        self.normal_form_outside = Some(ag.project_off(&flag.span_values(3)).norm() / na);
        // (b) <ag, JZ + J delta> = i <ag, Z - delta>
        let w1 = linalg::sub(&s.z, &s.delta);
        let jz = flag.complex_structure(0, &s.z).expect("tangent plane");
        let jd = flag.complex_structure(1, &s.delta).ok_or(GeomError::NotRegular {
            x: s.point.0,
            y: s.point.1,
            what: "first normal space",
        })?;
        let w2 = linalg::add(&jz, &jd);
        let lhs = ag.dot_real(&w2);
        let rhs = ag.dot_real(&w1) * Complex64::i();
        self.normal_form_complex = Some((lhs - rhs).norm() / (na * norm(&w1)));

        let conn = pp.f.connection()?;
        self.hodge = match (conn.hodge_residual(1.0), conn.hodge_residual(-1.0)) {
            (Some(a), Some(b)) => Some([a, b]),
            _ => None,
        };
        let lambda = pp.f.ellipse(2)?.lambda;
        self.lambda = Some(lambda);
        // (c) components along e_5, e_6
        let n1 = flag.level(1).filter(|l| l.len() == 2).ok_or(GeomError::InsufficientOrder { have: 0, need: 3 })?;
        let n2 = flag.level(2).filter(|l| l.len() == 2).ok_or(GeomError::InsufficientOrder { have: 0, need: 3 })?;
        let (e3, e4) = (n1[0].value(), n1[1].value());
        let (e5, e6) = (n2[0].value(), n2[1].value());
        let w_d = d_pair(&n1[0], &e5);
        let az = CVector::wirtinger(&pp.alpha_z(0)?, &pp.alpha_z(1)?);
        let g5 = ag.dot_real(&e5);
        let g6 = ag.dot_real(&e6);
        let mut out = [0.0; 2];
        for (k, &sg) in SIGNS.iter().enumerate() {
            let c0 = az.dot_real(&e3) - Complex64::i() * sg * az.dot_real(&e4);
            let p5 = -w_d * c0;
            let p6 = p5 * Complex64::i() * sg * lambda;
            out[k] = (g5 - p5).norm().max((g6 - p6).norm()) / na;
        }
        self.normal_form_c = Some(out);
        Ok(())
    }

    fn swillmore(&mut self, pp: &PedalPoint, gl: &LocalSurface) -> Result<()> {
        let ag = alpha_dd(gl)?;
        let h = gl.mean_curvature_jet()?;
        let tangent = gl.frame_value().to_vec();
        let dh = CVector::wirtinger(&h.dx().value(), &h.dy().value()).project_off(&tangent);
        self.swillmore = Some(dh.parallelism_defect(&ag));

        // scalar criterion in the frame e_3 = delta / |delta|
        let s = &pp.sample;
        let flag = &pp.f.flag;
        let l = &pp.f.local;
        let e3j = pp.delta.scale_jet(&pp.delta.norm_sq().powf(-0.5)?);
        let e3 = e3j.value();
        let e4 = flag.complex_structure(1, &e3).ok_or(GeomError::InsufficientOrder { have: 0, need: 3 })?;
        let n2 = flag.level(2).filter(|l| l.len() == 2).ok_or(GeomError::InsufficientOrder { have: 0, need: 4 })?;
        let e5 = n2[0].value();
        let w = d_pair(&e3j, &e5);
        let a_dd = alpha_dd(l)?;
        let fx = l.coord_partial(1, 0).value();
        let fy = l.coord_partial(0, 1).value();
        let dz = Complex64::new(0.5 * dot(&fx, &s.z), -0.5 * dot(&fy, &s.z));
        let az = CVector::wirtinger(&pp.alpha_z(0)?, &pp.alpha_z(1)?);
        let d2 = dot(&s.delta, &s.delta);
        let conn = pp.f.connection()?;
        let wscale = (2..4)
            .flat_map(|a| (4..6.min(conn.omega_table.len())).map(move |b| (a, b)))
            .flat_map(|(a, b)| conn.omega_table[a][b])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let sigma = linalg::singular_values(l.alpha_values()?.as_ref())[0];
        let e_half = 0.5 * dot(&fx, &fx);
        let norm_c = e_half.powf(1.5) * sigma * s.theta * wscale;
        let mut out = [0.0; 2];
        for (k, &sg) in SIGNS.iter().enumerate() {
            let c0 = az.dot_real(&e3) - Complex64::i() * sg * az.dot_real(&e4);
            let crit = w * (a_dd.dot_real(&e3) * d2 + dz * c0);
            out[k] = crit.norm() / norm_c;
        }
        self.scalar_criterion = Some(out);
        Ok(())
    }
}

/// Pedal circle defect (first order) with the scale normalised by the
/// ellipse itself, used for comparisons across conformal images.
pub fn shape_circle_defect(l: &LocalSurface) -> Result<f64> {
    let v = l.alpha_values()?;
    Ok(ellipse_from_values(1, &v)?.shape_defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierstrass::Preset;

    #[test]
    fn phi3_point_metrics() {
        let f = Preset::Holo3.curve().evaluator();
        let m = PedalMetrics::compute(&f, 1.0, &[0.0; 6], 0.8, 0.6, 4);
        assert!(m.excluded.is_none());
        assert!(m.circle_g.unwrap() < 1e-8);
        assert!(m.h_formula.unwrap() < 1e-7);
        assert!(m.laplacian.unwrap() < 1e-6);
        assert!(m.normal_form_outside.unwrap() < 1e-7);
        assert!(m.normal_form_complex.unwrap() < 1e-7);
        assert_eq!(m.rank_g, Some(3));
    }
}
