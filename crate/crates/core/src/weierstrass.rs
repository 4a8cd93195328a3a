//! Weierstrass-type generation of m-isotropic minimal surfaces.
//!
//! Starting from a seed `alpha_0` in `C^{N-2(m+1)}`, each step maps
//! `alpha_r` to `beta_{r+1} (1 - phi_r^2, i(1 + phi_r^2), 2 phi_r)` with
//! `phi_r` the zero-constant antiderivative of `alpha_r`. After `m + 1`
//! steps the real part of `phi_{m+1}` is an m-isotropic minimal surface in
//! `R^N`. All data are polynomial, so the construction is exact up to
//! floating-point coefficient arithmetic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cpoly::{CPoly, CVecPoly};
use crate::error::{GeomError, Result};
use crate::geometry::{Provenance, SurfaceEvaluator};
use crate::jets::{Jet, JetVec};

/// Residual above which a generated curve is rejected as non-isotropic.
pub const ISOTROPY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicSpec {
    pub ambient_dim: usize,
    pub isotropy_order: usize,
    #[serde(default)]
    pub alpha0: CVecPoly,
    pub betas: Vec<CPoly>,
}

impl IsotropicSpec {
    /// Spec with empty seed (`N = 2(m+1)`) and all multipliers equal to one.
    pub fn unit(isotropy_order: usize) -> Self {
        IsotropicSpec {
            ambient_dim: 2 * (isotropy_order + 1),
            isotropy_order,
            alpha0: CVecPoly::empty(),
            betas: vec![CPoly::from_real(&[1.0]); isotropy_order + 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ambient_dim;
        let m = self.isotropy_order;
        if n < 4 {
            return Err(GeomError::InvalidSpec(format!("ambient_dim {n} < 4")));
        }
        if m < 1 {
            return Err(GeomError::InvalidSpec("isotropy_order must be >= 1".into()));
        }
        let seed_dim = n as isize - 2 * (m as isize + 1);
        if seed_dim < 0 {
            return Err(GeomError::InvalidSpec(format!(
                "ambient_dim {n} too small for isotropy order {m}: need N >= {}",
                2 * (m + 1)
            )));
        }
        if self.alpha0.dim() != seed_dim as usize {
            return Err(GeomError::InvalidSpec(format!(
                "alpha0 has dimension {}, expected {seed_dim}",
                self.alpha0.dim()
            )));
        }
        if seed_dim > 0 && self.alpha0.is_zero() {
            return Err(GeomError::InvalidSpec("alpha0 must be nonzero".into()));
        }
        if self.betas.len() != m + 1 {
            return Err(GeomError::InvalidSpec(format!(
                "expected {} multipliers, got {}",
                m + 1,
                self.betas.len()
            )));
        }
        if let Some(k) = self.betas.iter().position(CPoly::is_zero) {
            return Err(GeomError::InvalidSpec(format!("beta_{} is zero", k + 1)));
        }
        Ok(())
    }
}

/// Where an isotropic curve came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveOrigin {
    Weierstrass(IsotropicSpec),
    Holomorphic(CVecPoly),
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicCurve {
    /// The final curve `phi_{m+1}`; the surface is its real part.
    pub phi: CVecPoly,
    /// Intermediate `phi_0, ..., phi_m` (empty for non-Weierstrass origins).
    pub level_curves: Vec<CVecPoly>,
    pub origin: CurveOrigin,
}

impl IsotropicCurve {
    pub fn ambient_dim(&self) -> usize {
        self.phi.dim()
    }

    /// Accept an explicit curve, checking isotropy of its derivative.
    pub fn from_phi(phi: CVecPoly) -> Result<Self> {
        check_isotropy(&phi)?;
        Ok(IsotropicCurve {
            phi,
            level_curves: Vec::new(),
            origin: CurveOrigin::Explicit,
        })
    }

    pub fn evaluator(&self) -> SurfaceEvaluator {
        surface_evaluator(self)
    }
}

/// Relative isotropy residual `|phi' . phi'| / |phi'|^2` over coefficients.
pub fn isotropy_residual(phi: &CVecPoly) -> f64 {
    let d = phi.differentiate();
    let sq = d.dot(&d).expect("same dimension");
    let scale = d.coeff_norm().powi(2);
    if scale == 0.0 {
        return 0.0;
    }
    sq.coeff_norm() / scale
}

fn check_isotropy(phi: &CVecPoly) -> Result<()> {
    let residual = isotropy_residual(phi);
    if residual > ISOTROPY_TOL || !residual.is_finite() {
        return Err(GeomError::IsotropyViolation { residual });
    }
    Ok(())
}

/// One recursion step: `alpha_r -> alpha_{r+1}`.
pub fn w_step(alpha_r: &CVecPoly, beta_next: &CPoly) -> CVecPoly {
    let phi = alpha_r.integrate();
    let phi2 = phi.dot(&phi).expect("same dimension");
    let one = CPoly::from_real(&[1.0]);
    let i = Complex64::new(0.0, 1.0);
    let mut comps = Vec::with_capacity(alpha_r.dim() + 2);
    comps.push(beta_next * &(&one - &phi2));
    comps.push((beta_next * &(&one + &phi2)).scale(i));
    for c in phi.components() {
        comps.push((beta_next * c).scale(Complex64::new(2.0, 0.0)));
    }
    CVecPoly::new(comps)
}

pub fn w_generate(spec: &IsotropicSpec) -> Result<IsotropicCurve> {
    spec.validate()?;
    let mut alpha = spec.alpha0.clone();
    let mut levels = Vec::with_capacity(spec.isotropy_order + 1);
    for beta in &spec.betas {
        levels.push(alpha.integrate());
        alpha = w_step(&alpha, beta);
    }
    let phi = alpha.integrate();
    debug_assert_eq!(phi.dim(), spec.ambient_dim);
    check_isotropy(&phi)?;
    Ok(IsotropicCurve {
        phi,
        level_curves: levels,
        origin: CurveOrigin::Weierstrass(spec.clone()),
    })
}

/// The holomorphic curve `w: C -> C^k` as a surface in `R^{2k}`.
///
/// The curve is encoded as `phi = (w_1, i w_1, w_2, i w_2, ...)`, whose
/// real part is `(Re w_1, -Im w_1, ...)`, the conjugate curve. This is the
/// same encoding the recursion produces for an empty seed with unit
/// multipliers.
pub fn holomorphic_curve(components: &CVecPoly) -> Result<IsotropicCurve> {
    if components.differentiate().is_zero() {
        return Err(GeomError::InvalidSpec(
            "holomorphic curve has identically zero derivative".into(),
        ));
    }
    let i = Complex64::new(0.0, 1.0);
    let mut comps = Vec::with_capacity(2 * components.dim());
    for w in components.components() {
        comps.push(w.clone());
        comps.push(w.scale(i));
    }
    let phi = CVecPoly::new(comps);
    check_isotropy(&phi)?;
    Ok(IsotropicCurve {
        phi,
        level_curves: Vec::new(),
        origin: CurveOrigin::Holomorphic(components.clone()),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Real and imaginary jets of `phi(x + iy)` at `(x, y)`.
pub fn jet_lift_complex(curve: &CVecPoly, x: f64, y: f64, order: usize) -> (JetVec, JetVec) {
    let z0 = Complex64::new(x, y);
    let i_pows = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut re = Vec::with_capacity(curve.dim());
    let mut im = Vec::with_capacity(curve.dim());
    for comp in curve.components() {
        let t = comp.taylor_at(z0, order);
        // (dx + i dy)^n = sum_b C(n, b) i^b dx^{n-b} dy^b
        let coeff = |a: usize, b: usize| t[a + b] * binomial(a + b, b) * i_pows[b % 4];
        re.push(Jet::from_fn(order, |a, b| coeff(a, b).re));
        im.push(Jet::from_fn(order, |a, b| coeff(a, b).im));
    }
    (JetVec::new(re), JetVec::new(im))
}

/// Jet of the real surface `Re phi` at `(x, y)`.
pub fn jet_lift(curve: &CVecPoly, x: f64, y: f64, order: usize) -> JetVec {
    jet_lift_complex(curve, x, y, order).0
}

pub fn surface_evaluator(curve: &IsotropicCurve) -> SurfaceEvaluator {
    let phi = curve.phi.clone();
    SurfaceEvaluator::new(phi.dim(), Provenance::Weierstrass, move |x, y, order| {
        Ok(jet_lift(&phi, x, y, order))
    })
}

/// Named seeds used by the command line and the verification harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 2-isotropic curve `(z, z^2, 2z^3/3)` in R^6 from the recursion.
    Holo3,
    /// 3-isotropic holomorphic curve `(z, z^2, z^3, z^4)` in R^8.
    Holo4,
    /// 1-isotropic but not 2-isotropic surface in R^6 from the seed `(1, z)`.
    Noniso,
}

impl Preset {
    pub fn curve(self) -> IsotropicCurve {
        match self {
            Preset::Holo3 => w_generate(&IsotropicSpec::unit(2)).expect("valid preset"),
            Preset::Holo4 => {
                let comps = (1..=4)
                    .map(|k| CPoly::monomial(Complex64::new(1.0, 0.0), k))
                    .collect();
                holomorphic_curve(&CVecPoly::new(comps)).expect("valid preset")
            }
            Preset::Noniso => w_generate(&Preset::noniso_spec()).expect("valid preset"),
        }
    }

    pub fn noniso_spec() -> IsotropicSpec {
        IsotropicSpec {
            ambient_dim: 6,
            isotropy_order: 1,
            alpha0: CVecPoly::new(vec![CPoly::from_real(&[1.0]), CPoly::from_real(&[0.0, 1.0])]),
            betas: vec![CPoly::from_real(&[1.0]); 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Holo3 => "holo3",
            Preset::Holo4 => "holo4",
            Preset::Noniso => "noniso",
        }
    }

    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "holo3" => Some(Preset::Holo3),
            "holo4" => Some(Preset::Holo4),
            "noniso" => Some(Preset::Noniso),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mono(re: f64, im: f64, k: usize) -> CPoly {
        CPoly::monomial(c(re, im), k)
    }

    // Independent oracle: integrate/square by hand-built monomial lists.
    #[test]
    fn step_from_empty_seed() {
        let a1 = w_step(&CVecPoly::empty(), &CPoly::from_real(&[1.0]));
        assert_eq!(a1, CVecPoly::new(vec![mono(1.0, 0.0, 0), mono(0.0, 1.0, 0)]));
    }

    #[test]
    fn second_and_third_steps() {
        let a1 = CVecPoly::new(vec![mono(1.0, 0.0, 0), mono(0.0, 1.0, 0)]);
        let a2 = w_step(&a1, &CPoly::from_real(&[1.0]));
        let expect2 = CVecPoly::new(vec![
            mono(1.0, 0.0, 0),
            mono(0.0, 1.0, 0),
            mono(2.0, 0.0, 1),
            mono(0.0, 2.0, 1),
        ]);
        assert_eq!(a2, expect2);
        let a3 = w_step(&a2, &CPoly::from_real(&[1.0]));
        let expect3 = CVecPoly::new(vec![
            mono(1.0, 0.0, 0),
            mono(0.0, 1.0, 0),
            mono(2.0, 0.0, 1),
            mono(0.0, 2.0, 1),
            mono(2.0, 0.0, 2),
            mono(0.0, 2.0, 2),
        ]);
        assert_eq!(a3, expect3);
    }

    #[test]
    fn generate_holo3_and_r4() {
        let curve = w_generate(&IsotropicSpec::unit(2)).unwrap();
        let expect = CVecPoly::new(vec![
            mono(1.0, 0.0, 1),
            mono(0.0, 1.0, 1),
            mono(1.0, 0.0, 2),
            mono(0.0, 1.0, 2),
            mono(2.0 / 3.0, 0.0, 3),
            mono(0.0, 2.0 / 3.0, 3),
        ]);
        assert_eq!(curve.phi, expect);
        assert_eq!(curve.level_curves.len(), 3);

        let r4 = w_generate(&IsotropicSpec::unit(1)).unwrap();
        let expect = CVecPoly::new(vec![
            mono(1.0, 0.0, 1),
            mono(0.0, 1.0, 1),
            mono(1.0, 0.0, 2),
            mono(0.0, 1.0, 2),
        ]);
        assert_eq!(r4.phi, expect);
    }

    #[test]
    fn dimensions_grow_by_two() {
        let spec = Preset::noniso_spec();
        let mut alpha = spec.alpha0.clone();
        for beta in &spec.betas {
            let next = w_step(&alpha, beta);
            assert_eq!(next.dim(), alpha.dim() + 2);
            alpha = next;
        }
    }

    #[test]
    fn holomorphic_matches_recursion() {
        let w = CVecPoly::new(vec![
            mono(1.0, 0.0, 1),
            mono(1.0, 0.0, 2),
            mono(2.0 / 3.0, 0.0, 3),
        ]);
        let holo = holomorphic_curve(&w).unwrap();
        let gen = w_generate(&IsotropicSpec::unit(2)).unwrap();
        for k in 0..5 {
            for l in 0..5 {
                let (x, y) = (-1.0 + 0.5 * k as f64, -1.0 + 0.5 * l as f64);
                let a = jet_lift(&holo.phi, x, y, 0).value();
                let b = jet_lift(&gen.phi, x, y, 0).value();
                for (p, q) in a.iter().zip(&b) {
                    assert!((p - q).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = IsotropicSpec::unit(2);
        s.betas[1] = CPoly::zero();
        assert!(matches!(s.validate(), Err(GeomError::InvalidSpec(_))));

        let s = IsotropicSpec {
            ambient_dim: 5,
            isotropy_order: 2,
            alpha0: CVecPoly::empty(),
            betas: vec![CPoly::from_real(&[1.0]); 3],
        };
        assert!(s.validate().is_err());

        let s = IsotropicSpec {
            ambient_dim: 8,
            isotropy_order: 2,
            alpha0: CVecPoly::new(vec![CPoly::zero(), CPoly::zero()]),
            betas: vec![CPoly::from_real(&[1.0]); 3],
        };
        assert!(s.validate().is_err());

        let flat = CVecPoly::new(vec![CPoly::from_real(&[1.0])]);
        assert!(holomorphic_curve(&flat).is_err());
    }

    #[test]
    fn non_isotropic_curve_rejected() {
        let phi = CVecPoly::new(vec![mono(1.0, 0.0, 1), mono(1.0, 0.0, 2)]);
        assert!(matches!(
            IsotropicCurve::from_phi(phi),
            Err(GeomError::IsotropyViolation { .. })
        ));
    }

    #[test]
    fn lift_of_z_squared() {
        let phi = CVecPoly::new(vec![mono(1.0, 0.0, 2)]);
        let (re, im) = jet_lift_complex(&phi, 1.0, 0.0, 2);
        let r = re.component(0);
        assert_eq!(
            [r.value(), r.partial(1, 0), r.partial(0, 1), r.partial(2, 0), r.partial(1, 1), r.partial(0, 2)],
            [1.0, 2.0, 0.0, 2.0, 0.0, -2.0]
        );
        let i = im.component(0);
        assert_eq!([i.value(), i.partial(1, 0), i.partial(0, 1), i.partial(1, 1)], [0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn lift_of_identity_is_plane() {
        let phi = CVecPoly::new(vec![mono(1.0, 0.0, 1)]);
        let (re, im) = jet_lift_complex(&phi, 0.3, -0.2, 3);
        assert_eq!(re.component(0), &Jet::var_x(0.3, 3));
        assert_eq!(im.component(0), &Jet::var_y(-0.2, 3));
    }

    #[test]
    fn lift_of_holo3_at_one() {
        let curve = Preset::Holo3.curve();
        let f = jet_lift(&curve.phi, 1.0, 0.0, 3);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-14);
        assert!(close(&f.value(), &[1.0, 0.0, 1.0, 0.0, 2.0 / 3.0, 0.0]));
        assert!(close(&f.partial(1, 0), &[1.0, 0.0, 2.0, 0.0, 2.0, 0.0]));
        assert!(close(&f.partial(0, 1), &[0.0, -1.0, 0.0, -2.0, 0.0, -2.0]));
        // conformality at order 0: f_x . f_y = 0
        let fx = f.dx();
        let fy = f.dy();
        assert!(fx.dot(&fy).unwrap().value().abs() < 1e-14);
    }

    #[test]
    fn lift_matches_symbolic_oracle() {
        // Oracle: differentiate Re phi componentwise via CPoly derivatives,
        // d/dx Re w = Re w', d/dy Re w = Re(i w'), d2/dxdy Re w = Re(i w'').
        let curve = Preset::Noniso.curve();
        let (x, y) = (0.7, -0.4);
        let z = c(x, y);
        let f = jet_lift(&curve.phi, x, y, 2);
        let d1 = curve.phi.differentiate();
        let d2 = d1.differentiate();
        for (k, comp) in curve.phi.components().iter().enumerate() {
            let w1 = d1.components()[k].eval(z);
            let w2 = d2.components()[k].eval(z);
            let jk = f.component(k);
            assert!((jk.value() - comp.eval(z).re).abs() < 1e-12);
            assert!((jk.partial(1, 0) - w1.re).abs() < 1e-12);
            assert!((jk.partial(0, 1) - (c(0.0, 1.0) * w1).re).abs() < 1e-12);
            assert!((jk.partial(1, 1) - (c(0.0, 1.0) * w2).re).abs() < 1e-12);
            assert!((jk.partial(0, 2) + w2.re).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluator_examples() {
        let s = surface_evaluator(&Preset::Holo3.curve());
        assert_eq!(s.position(0.0, 0.0).unwrap(), vec![0.0; 6]);
        assert_eq!(s.eval(0.5, 0.5, 3).unwrap().order(), 3);
        assert_eq!(s.ambient_dim(), 6);
    }
}
