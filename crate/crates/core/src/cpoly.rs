//! Complex polynomials in one variable and vectors of them.
//!
//! Coefficients are stored in ascending degree order. The representation is
//! canonical: trailing zero coefficients are stripped, so the zero polynomial
//! is the empty list.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// A dense univariate polynomial with `Complex64` coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct CPoly {
    coeffs: Vec<Complex64>,
}

impl From<Vec<[f64; 2]>> for CPoly {
    fn from(pairs: Vec<[f64; 2]>) -> Self {
        CPoly::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<CPoly> for Vec<[f64; 2]> {
    fn from(p: CPoly) -> Self {
        p.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl CPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    pub fn zero() -> Self {
        CPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        CPoly::new(vec![c])
    }

    /// `c * z^k`.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        CPoly::new(coeffs)
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(coeffs: &[f64]) -> Self {
        CPoly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as -1.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn scale(&self, c: Complex64) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn differentiate(&self) -> CPoly {
        CPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integrate(&self) -> CPoly {
        if self.is_zero() {
            return CPoly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex64::new(0.0, 0.0));
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k as f64 + 1.0)),
        );
        CPoly::new(out)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Taylor coefficients of the polynomial re-expanded about `z0`:
    /// `p(z0 + h) = sum_k out[k] h^k`, truncated to `k <= max_order`.
    pub fn taylor_at(&self, z0: Complex64, max_order: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); max_order + 1];
        let mut d = self.clone();
        let mut fact = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = d.eval(z0) / fact;
            d = d.differentiate();
            if d.is_zero() {
                break;
            }
        }
        out
    }

    /// Euclidean norm of the coefficient list.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &CPoly {
    type Output = CPoly;
    fn sub(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: &CPoly) -> CPoly {
        if self.is_zero() || rhs.is_zero() {
            return CPoly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly::new(out)
    }
}

impl Neg for &CPoly {
    type Output = CPoly;
    fn neg(self) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for CPoly {
            type Output = CPoly;
            fn $m(self, rhs: CPoly) -> CPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A vector of complex polynomials: a polynomial holomorphic curve in C^k.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVecPoly {
    components: Vec<CPoly>,
}

impl CVecPoly {
    pub fn new(components: Vec<CPoly>) -> Self {
        CVecPoly { components }
    }

    pub fn empty() -> Self {
        CVecPoly { components: Vec::new() }
    }

    pub fn components(&self) -> &[CPoly] {
        &self.components
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(CPoly::is_zero)
    }

    pub fn degree(&self) -> isize {
        self.components.iter().map(CPoly::degree).max().unwrap_or(-1)
    }

    /// Bilinear (unconjugated) sum `sum_k u_k v_k`.
    pub fn dot(&self, other: &CVecPoly) -> Result<CPoly> {
        if self.dim() != other.dim() {
            return Err(GeomError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .fold(CPoly::zero(), |acc, (a, b)| &acc + &(a * b)))
    }

    pub fn differentiate(&self) -> CVecPoly {
        CVecPoly::new(self.components.iter().map(CPoly::differentiate).collect())
    }

    pub fn integrate(&self) -> CVecPoly {
        CVecPoly::new(self.components.iter().map(CPoly::integrate).collect())
    }

    /// Multiply every component by the scalar polynomial `p`.
    pub fn mul_poly(&self, p: &CPoly) -> CVecPoly {
        CVecPoly::new(self.components.iter().map(|c| c * p).collect())
    }

    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        self.components.iter().map(|c| c.eval(z)).collect()
    }

    /// Apply a real matrix (rows x dim) to the component vector.
    pub fn transform_real(&self, rows: &[Vec<f64>]) -> Result<CVecPoly> {
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != self.dim() {
                return Err(GeomError::DimensionMismatch {
                    left: row.len(),
                    right: self.dim(),
                });
            }
            let comp = row
                .iter()
                .zip(&self.components)
                .fold(CPoly::zero(), |acc, (&r, c)| &acc + &c.scale(Complex64::new(r, 0.0)));
            out.push(comp);
        }
        Ok(CVecPoly::new(out))
    }

    /// Root of the sum of squared coefficient moduli over all components.
    pub fn coeff_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.coeff_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn difference_of_squares() {
        let a = CPoly::from_real(&[1.0, 1.0]);
        let b = CPoly::from_real(&[1.0, -1.0]);
        assert_eq!(&a * &b, CPoly::from_real(&[1.0, 0.0, -1.0]));
    }

    #[test]
    fn cancellation_gives_empty_list() {
        let a = CPoly::monomial(c(1.0, 0.0), 2);
        let b = CPoly::monomial(c(-1.0, 0.0), 2);
        let s = &a + &b;
        assert!(s.coeffs().is_empty());
        assert_eq!(s.degree(), -1);
    }

    #[test]
    fn scale_by_i() {
        let z = CPoly::monomial(c(1.0, 0.0), 1);
        assert_eq!(z.scale(c(0.0, 1.0)), CPoly::monomial(c(0.0, 1.0), 1));
    }

    #[test]
    fn calculus_examples() {
        assert_eq!(
            CPoly::monomial(c(2.0, 0.0), 1).integrate(),
            CPoly::monomial(c(1.0, 0.0), 2)
        );
        assert_eq!(
            CPoly::monomial(c(1.0, 0.0), 3).differentiate(),
            CPoly::monomial(c(3.0, 0.0), 2)
        );
        assert!(CPoly::zero().integrate().is_zero());
    }

    #[test]
    fn dot_examples() {
        let one = CPoly::from_real(&[1.0]);
        let i = CPoly::constant(c(0.0, 1.0));
        let u = CVecPoly::new(vec![one.clone(), i]);
        assert!(u.dot(&u).unwrap().is_zero());

        let z = CPoly::monomial(c(1.0, 0.0), 1);
        let iz = CPoly::monomial(c(0.0, 1.0), 1);
        let w = CVecPoly::new(vec![z.clone(), iz]);
        assert!(w.dot(&w).unwrap().is_zero());

        let v = CVecPoly::new(vec![one, z]);
        assert_eq!(v.dot(&v).unwrap(), CPoly::from_real(&[1.0, 0.0, 1.0]));

        assert!(CVecPoly::empty().dot(&CVecPoly::empty()).unwrap().is_zero());
        assert!(matches!(
            v.dot(&CVecPoly::empty()),
            Err(GeomError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let z2 = CPoly::monomial(c(1.0, 0.0), 2);
        assert_eq!(z2.eval(c(1.0, 1.0)), c(0.0, 2.0));
        assert_eq!(CPoly::from_real(&[5.0]).eval(c(-3.0, 7.0)), c(5.0, 0.0));
        assert_eq!(CPoly::from_real(&[1.0, 0.0, -1.0]).eval(c(1.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn taylor_re_expansion() {
        // z^3 about 1: 1 + 3h + 3h^2 + h^3
        let p = CPoly::monomial(c(1.0, 0.0), 3);
        let t = p.taylor_at(c(1.0, 0.0), 5);
        let expect = [1.0, 3.0, 3.0, 1.0, 0.0, 0.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - c(b, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn serde_pairs() {
        let p = CPoly::new(vec![c(1.0, -2.0), c(0.0, 0.5)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[1.0,-2.0],[0.0,0.5]]");
        let back: CPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    fn arb_poly() -> impl Strategy<Value = CPoly> {
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 0..8)
            .prop_map(|v| CPoly::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
    }

    fn close(a: &CPoly, b: &CPoly, rel: f64) -> bool {
        let n = a.coeffs().len().max(b.coeffs().len());
        let scale = a.coeff_norm().max(b.coeff_norm()).max(1.0);
        (0..n).all(|k| (a.coeff(k) - b.coeff(k)).norm() <= rel * scale)
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_poly(), b in arb_poly(), cc in arb_poly()) {
            prop_assert!(close(&(&(&a * &b) * &cc), &(&a * &(&b * &cc)), 1e-14));
            prop_assert!(close(&(&a * &(&b + &cc)), &(&(&a * &b) + &(&a * &cc)), 1e-14));
        }

        #[test]
        fn integrate_then_differentiate(a in arb_poly()) {
            prop_assert!(close(&a.integrate().differentiate(), &a, 1e-15));
        }

        #[test]
        fn dot_symmetric(u in prop::collection::vec(arb_poly(), 3), v in prop::collection::vec(arb_poly(), 3)) {
            let u = CVecPoly::new(u);
            let v = CVecPoly::new(v);
            let d = &u.dot(&v).unwrap() - &v.dot(&u).unwrap();
            prop_assert!(d.coeff_norm() <= 1e-14 * (1.0 + u.coeff_norm() * v.coeff_norm()));
        }

        #[test]
        fn eval_homomorphism(
            a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 0..11),
            b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 0..11),
            r in 0.0..2.0f64, t in 0.0..6.3f64,
        ) {
            let a = CPoly::new(a.into_iter().map(|(x, y)| c(x, y)).collect());
            let b = CPoly::new(b.into_iter().map(|(x, y)| c(x, y)).collect());
            let z = Complex64::from_polar(r, t);
            let lhs = (&a * &b).eval(z);
            let rhs = a.eval(z) * b.eval(z);
            // relative to the magnitude the terms can reach
            let bound: f64 = a.coeffs().iter().enumerate().map(|(k, c)| c.norm() * r.powi(k as i32)).sum::<f64>()
                * b.coeffs().iter().enumerate().map(|(k, c)| c.norm() * r.powi(k as i32)).sum::<f64>();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * bound.max(1e-300));
        }
    }
}
