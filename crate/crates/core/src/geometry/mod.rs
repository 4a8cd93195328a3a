//! Local invariants of a surface given by a [`SurfaceEvaluator`].

mod evaluator;
mod flag;
mod local;

pub use evaluator::{Provenance, SurfaceEvaluator};
pub use flag::{
    alpha3_recursive, connection_forms, ellipse_data, ellipse_from_values, form_on_direction,
    higher_fundamental, higher_fundamental_at, ConnectionSample, EllipseData, NormalFlag, FLAG_TOL,
};
pub use local::LocalSurface;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{self, dot, norm};

/// A surface's local data at one point: position jets plus its flag.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub local: LocalSurface,
    pub flag: NormalFlag,
}

impl PointAnalysis {
    /// Evaluates jets of the given order and builds the flag as far as
    /// they allow.
    pub fn new(s: &SurfaceEvaluator, x: f64, y: f64, order: usize) -> Result<Self> {
        Self::with_rotation(s, x, y, order, 0.0)
    }

    pub fn with_rotation(s: &SurfaceEvaluator, x: f64, y: f64, order: usize, rotation: f64) -> Result<Self> {
        let local = LocalSurface::with_rotation(s.eval(x, y, order)?, (x, y), rotation)?;
        let flag = NormalFlag::build(&local, order.saturating_sub(1))?;
        Ok(PointAnalysis { local, flag })
    }

    pub fn ellipse(&self, s: usize) -> Result<EllipseData> {
        ellipse_data(&self.local, &self.flag, s)
    }

    pub fn connection(&self) -> Result<ConnectionSample> {
        connection_forms(&self.local, &self.flag)
    }
}

/// Second fundamental form data on the orthonormal tangent frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondFundamental {
    pub alpha11: Vec<f64>,
    pub alpha12: Vec<f64>,
    pub alpha22: Vec<f64>,
    pub h: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
}

impl SecondFundamental {
    pub fn from_local(local: &LocalSurface) -> Result<Self> {
        let [a11, a12, a22] = local.alpha_values()?;
        let h = linalg::scale(&linalg::add(&a11, &a22), 0.5);
        let xi1 = linalg::scale(&linalg::sub(&a11, &a22), 0.5);
        Ok(SecondFundamental {
            xi2: a12.clone(),
            alpha11: a11,
            alpha12: a12,
            alpha22: a22,
            h,
            xi1,
        })
    }

    /// Largest singular value of `{alpha11, alpha12, alpha22}`.
    pub fn scale(&self) -> f64 {
        linalg::singular_values(&[self.alpha11.clone(), self.alpha12.clone(), self.alpha22.clone()])[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curvatures {
    pub k: f64,
    pub k_n: f64,
    pub h_norm_sq: f64,
    /// `|H|^2 - K - |K_N|`
    pub wintgen_defect: f64,
}

impl Curvatures {
    pub fn from_forms(sf: &SecondFundamental, tangent: &[Vec<f64>; 2]) -> Self {
        let k = dot(&sf.alpha11, &sf.alpha22) - dot(&sf.alpha12, &sf.alpha12);
        let (p, q) = (&sf.xi1, &sf.xi2);
        let area2 = (dot(p, p) * dot(q, q) - dot(p, q).powi(2)).max(0.0);
        let mut k_n = 2.0 * area2.sqrt();
        if p.len() == 4 {
            let cols = [&tangent[0], &tangent[1], p, q];
            let m = nalgebra::Matrix4::from_fn(|i, j| cols[j][i]);
            if m.determinant() < 0.0 {
                k_n = -k_n;
            }
        }
        let h_norm_sq = dot(&sf.h, &sf.h);
        Curvatures {
            k,
            k_n,
            h_norm_sq,
            wintgen_defect: h_norm_sq - k - k_n.abs(),
        }
    }
}

/// Per-point geometry record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub point: (f64, f64),
    pub metric: (f64, f64, f64),
    pub tangent_frame: [Vec<f64>; 2],
    pub second: SecondFundamental,
    pub curvatures: Curvatures,
    /// Ellipses of order 1, 2, ... as far as the jets and flag allow.
    pub ellipses: Vec<EllipseData>,
    /// Values of the flag frame, level by level (level 0 is tangent).
    pub normal_flag: Vec<Vec<Vec<f64>>>,
    /// `|alpha(e_1, e_1)|` when the first ellipse is a circle centred at 0.
    pub iso_kappa: Option<f64>,
}

impl GeometrySample {
    pub fn from_analysis(pa: &PointAnalysis) -> Result<Self> {
        let local = &pa.local;
        let second = SecondFundamental::from_local(local)?;
        let tangent_frame = local.frame_value();
        let curvatures = Curvatures::from_forms(&second, &tangent_frame);
        let mut ellipses = Vec::new();
        for s in 1..local.order() {
            match pa.ellipse(s) {
                Ok(e) => ellipses.push(e),
                Err(_) => break,
            }
        }
        let scale = second.scale();
        let iso_kappa = match ellipses.first() {
            Some(e) if e.circle_defect < 1e-8 && norm(&second.h) <= 1e-8 * scale => {
                Some(norm(&second.alpha11))
            }
            _ => None,
        };
        Ok(GeometrySample {
            point: local.point(),
            metric: local.metric_value(),
            tangent_frame,
            second,
            curvatures,
            ellipses,
            normal_flag: pa
                .flag
                .levels()
                .iter()
                .map(|l| l.iter().map(|e| e.value()).collect())
                .collect(),
            iso_kappa,
        })
    }

    pub fn ellipse(&self, s: usize) -> Option<&EllipseData> {
        self.ellipses.get(s.wrapping_sub(1))
    }
}

/// `(E, F, G)` and the orthonormal tangent frame at a point.
pub fn first_fundamental(s: &SurfaceEvaluator, x: f64, y: f64) -> Result<((f64, f64, f64), [Vec<f64>; 2])> {
    let l = LocalSurface::new(s.eval(x, y, 1)?, (x, y))?;
    Ok((l.metric_value(), l.frame_value()))
}

pub fn second_fundamental(s: &SurfaceEvaluator, x: f64, y: f64) -> Result<SecondFundamental> {
    SecondFundamental::from_local(&LocalSurface::new(s.eval(x, y, 2)?, (x, y))?)
}

pub fn curvatures(s: &SurfaceEvaluator, x: f64, y: f64) -> Result<Curvatures> {
    let l = LocalSurface::new(s.eval(x, y, 2)?, (x, y))?;
    Ok(Curvatures::from_forms(&SecondFundamental::from_local(&l)?, &l.frame_value()))
}

/// Ellipse of order `order_s` at a point.
pub fn ellipse_test(s: &SurfaceEvaluator, x: f64, y: f64, order_s: usize) -> Result<EllipseData> {
    PointAnalysis::new(s, x, y, order_s + 1)?.ellipse(order_s)
}

/// Maximal isotropy order over a set of points together with the largest
/// circle defect seen for each ellipse order `1..=max_order`. Points where
/// the surface is singular or an ellipse degenerates are skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub order: usize,
    pub max_defects: Vec<f64>,
    pub points_used: usize,
}

pub fn isotropy_order(
    s: &SurfaceEvaluator,
    points: &[(f64, f64)],
    max_order: usize,
    tol: f64,
) -> IsotropyReport {
    let per_point: Vec<Option<Vec<f64>>> = points
        .par_iter()
        .map(|&(x, y)| {
            let pa = PointAnalysis::new(s, x, y, max_order + 1).ok()?;
            (1..=max_order)
                .map(|k| pa.ellipse(k).map(|e| e.circle_defect))
                .collect::<Result<Vec<f64>>>()
                .ok()
        })
        .collect();
    let mut max_defects = vec![0.0f64; max_order];
    let mut used = 0;
    for d in per_point.into_iter().flatten() {
        used += 1;
        for (m, v) in max_defects.iter_mut().zip(d) {
            *m = m.max(v);
        }
    }
    let order = if used == 0 {
        0
    } else {
        max_defects.iter().take_while(|&&d| d <= tol).count()
    };
    IsotropyReport { order, max_defects, points_used: used }
}

/// Error helper for callers that need a minimum jet order.
pub fn require_order(have: usize, need: usize) -> Result<()> {
    if have < need {
        Err(GeomError::InsufficientOrder { have, need })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::{CPoly, CVecPoly};
    use crate::weierstrass::{holomorphic_curve, w_generate, IsotropicSpec, Preset};

    fn phi3() -> SurfaceEvaluator {
        Preset::Holo3.curve().evaluator()
    }

    fn plane() -> SurfaceEvaluator {
        holomorphic_curve(&CVecPoly::new(vec![CPoly::from_real(&[0.0, 1.0])]))
            .unwrap()
            .evaluator()
    }

    // Oracle: ds^2 = (1 + 2|z|^2)^2 |dz|^2 for phi_3, so
    // K = -Delta log(1 + 2 r^2) / (1 + 2 r^2)^2 = -8 / (1 + 2 r^2)^4.
    fn k_oracle(x: f64, y: f64) -> f64 {
        -8.0 / (1.0 + 2.0 * (x * x + y * y)).powi(4)
    }

    #[test]
    fn phi3_metric_at_one() {
        let ((e, f, g), _) = first_fundamental(&phi3(), 1.0, 0.0).unwrap();
        assert!((e - 9.0).abs() < 1e-12 && (g - 9.0).abs() < 1e-12 && f.abs() < 1e-12);
    }

    #[test]
    fn plane_data() {
        let ((e, f, g), _) = first_fundamental(&plane(), 0.3, 0.2).unwrap();
        assert_eq!((e, f, g), (1.0, 0.0, 1.0));
        let sf = second_fundamental(&plane(), 0.3, 0.2).unwrap();
        assert!(norm(&sf.alpha11) + norm(&sf.alpha12) + norm(&sf.alpha22) == 0.0);
        let c = curvatures(&plane(), 0.3, 0.2).unwrap();
        assert_eq!((c.k, c.k_n, c.h_norm_sq, c.wintgen_defect), (0.0, 0.0, 0.0, 0.0));
        let pa = PointAnalysis::new(&plane(), 0.3, 0.2, 4).unwrap();
        for s in 2..=4 {
            let v = higher_fundamental(&pa.local, &pa.flag, s).unwrap();
            assert!(v.iter().all(|w| norm(w) == 0.0));
        }
        let c = pa.connection().unwrap();
        assert!(c.omega_table.iter().flatten().all(|f| f == &[0.0, 0.0]));
    }

    #[test]
    fn phi3_gauss_curvature_matches_closed_form() {
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.4, -0.7), (1.2, 0.9)] {
            let c = curvatures(&phi3(), x, y).unwrap();
            let want = k_oracle(x, y);
            assert!((c.k - want).abs() < 1e-10 * want.abs(), "{x},{y}: {} vs {want}", c.k);
            assert!(c.wintgen_defect.abs() < 1e-9 * c.k.abs());
        }
        let c = curvatures(&phi3(), 1.0, 0.0).unwrap();
        assert!((c.k + 8.0 / 81.0).abs() < 1e-14);
    }

    #[test]
    fn intrinsic_curvature_agrees_with_gauss_equation() {
        for &(x, y) in &[(0.2, 0.3), (1.0, -0.5)] {
            let l = LocalSurface::new(phi3().eval(x, y, 3).unwrap(), (x, y)).unwrap();
            let ki = l.intrinsic_gauss_curvature().unwrap();
            let kg = curvatures(&phi3(), x, y).unwrap().k;
            assert!((ki - kg).abs() < 1e-6 * kg.abs());
        }
    }

    #[test]
    fn mean_curvature_jet_matches_trace() {
        let s = Preset::Noniso.curve().evaluator().affine(1.0, &[0.0; 6]);
        let l = LocalSurface::new(s.eval(0.5, 0.5, 3).unwrap(), (0.5, 0.5)).unwrap();
        let sf = SecondFundamental::from_local(&l).unwrap();
        let h = l.mean_curvature_jet().unwrap().value();
        assert!(norm(&linalg::sub(&h, &sf.h)) <= 1e-10 * sf.scale().max(1.0));
        // minimal
        assert!(norm(&sf.h) <= 1e-9 * sf.scale());
    }

    #[test]
    fn isotropy_orders_of_presets() {
        let pts: Vec<(f64, f64)> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (0.3 + 0.3 * i as f64, 0.3 + 0.3 * j as f64)))
            .collect();
        let r = isotropy_order(&phi3(), &pts, 2, 1e-8);
        assert_eq!(r.order, 2, "{:?}", r);
        let r = isotropy_order(&Preset::Holo4.curve().evaluator(), &pts, 3, 1e-8);
        assert_eq!(r.order, 3, "{:?}", r);
        let r = isotropy_order(&Preset::Noniso.curve().evaluator(), &pts, 2, 1e-8);
        assert_eq!(r.order, 1, "{:?}", r);
    }

    #[test]
    fn odd_dimension_last_bundle_has_rank_one() {
        let spec = IsotropicSpec {
            ambient_dim: 5,
            isotropy_order: 1,
            alpha0: CVecPoly::new(vec![CPoly::from_real(&[1.0])]),
            betas: vec![CPoly::from_real(&[1.0]), CPoly::from_real(&[1.0])],
        };
        let s = w_generate(&spec).unwrap().evaluator();
        let pa = PointAnalysis::new(&s, 0.6, 0.4, 4).unwrap();
        assert_eq!(pa.flag.ranks(), vec![2, 2, 1]);
    }

    #[test]
    fn one_isotropy_commutes_with_complex_structures() {
        let pa = PointAnalysis::new(&phi3(), 0.8, 0.3, 3).unwrap();
        let sf = SecondFundamental::from_local(&pa.local).unwrap();
        // J_1^perp alpha(e1, e1) = alpha(J e1, e1) = alpha(e2, e1)
        let j = pa.flag.complex_structure(1, &sf.alpha11).unwrap();
        assert!(norm(&linalg::sub(&j, &sf.alpha12)) < 1e-9 * sf.scale());
        let j = pa.flag.complex_structure(1, &sf.alpha12).unwrap();
        assert!(norm(&linalg::sub(&j, &sf.alpha22)) < 1e-9 * sf.scale());
    }
}
