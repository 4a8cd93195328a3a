//! Truncated Taylor expansions in two real variables.
//!
//! A [`Jet`] of order `d` stores `c[i][j] = (d/dx)^i (d/dy)^j f / (i! j!)`
//! for `i + j <= d`, so multiplication is a truncated convolution. Binary
//! operations between jets of different orders truncate to the lower one.
//! A [`JetVec`] is a jet-valued vector, used for immersions and frame fields.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{GeomError, Result};

#[inline]
fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    tri(i + j) + j
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet {
            order,
            c: vec![0.0; tri(order + 1)],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Jet::zero(order);
        j.c[0] = value;
        j
    }

    /// The coordinate function `x` expanded at base abscissa `x0`.
    pub fn var_x(x0: f64, order: usize) -> Self {
        let mut j = Jet::constant(x0, order);
        if order >= 1 {
            j.c[idx(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `y` expanded at base ordinate `y0`.
    pub fn var_y(y0: f64, order: usize) -> Self {
        let mut j = Jet::constant(y0, order);
        if order >= 1 {
            j.c[idx(0, 1)] = 1.0;
        }
        j
    }

    /// Build from Taylor coefficients given by `f(i, j)`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut j = Jet::zero(order);
        for n in 0..=order {
            for b in 0..=n {
                j.c[idx(n - b, b)] = f(n - b, b);
            }
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor coefficient of `dx^i dy^j`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.c[idx(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, v: f64) {
        assert!(i + j <= self.order, "coefficient ({i},{j}) beyond jet order");
        self.c[idx(i, j)] = v;
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The partial derivative `(d/dx)^i (d/dy)^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            c: self.c[..tri(order + 1)].to_vec(),
        }
    }

    /// Derivative in x; the result has one order less.
    pub fn dx(&self) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        Jet::from_fn(self.order - 1, |i, j| (i + 1) as f64 * self.c[idx(i + 1, j)])
    }

    /// Derivative in y; the result has one order less.
    pub fn dy(&self) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        Jet::from_fn(self.order - 1, |i, j| (j + 1) as f64 * self.c[idx(i, j + 1)])
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            order: self.order,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(other.order);
        let n = tri(order + 1);
        Jet {
            order,
            c: (0..n).map(|k| f(self.c[k], other.c[k])).collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for n1 in 0..=order {
            for b1 in 0..=n1 {
                let a = self.c[idx(n1 - b1, b1)];
                if a == 0.0 {
                    continue;
                }
                for n2 in 0..=(order - n1) {
                    for b2 in 0..=n2 {
                        let i = n1 - b1 + n2 - b2;
                        let j = b1 + b2;
                        out.c[idx(i, j)] += a * other.c[idx(n2 - b2, b2)];
                    }
                }
            }
        }
        out
    }

    /// Evaluate `sum_k series[k] (self - self.value())^k`, i.e. compose a
    /// univariate function, given by its Taylor coefficients at the base
    /// value, with this jet.
    pub fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let top = self.order.min(series.len().saturating_sub(1));
        let mut acc = Jet::constant(series.get(top).copied().unwrap_or(0.0), self.order);
        for k in (0..top).rev() {
            acc = acc.product(&h).add_const(series[k]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(GeomError::DegenerateJet("reciprocal of a jet with zero value"));
        }
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s / a0.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&series))
    }

    /// `self^p` for a jet with positive value.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(GeomError::DegenerateJet("real power of a jet with non-positive value"));
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (p - (k as f64 - 1.0)) / k as f64;
            }
            series.push(binom * a0.powf(p - k as f64));
        }
        Ok(self.compose(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.product(&other.recip()?))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_binop {
    ($ty:ty, $tr:ident, $m:ident) => {
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $m(self, rhs: $ty) -> $ty {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&$ty> for $ty {
            type Output = $ty;
            fn $m(self, rhs: &$ty) -> $ty {
                (&self).$m(rhs)
            }
        }
    };
}
forward_binop!(Jet, Add, add);
forward_binop!(Jet, Sub, sub);
forward_binop!(Jet, Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// A vector of jets sharing one order and base point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetVec {
    comps: Vec<Jet>,
}

impl JetVec {
    /// Components are truncated to their common minimal order.
    pub fn new(comps: Vec<Jet>) -> Self {
        let order = comps.iter().map(Jet::order).min().unwrap_or(0);
        JetVec {
            comps: comps.into_iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        JetVec {
            comps: vec![Jet::zero(order); dim],
        }
    }

    pub fn constant(v: &[f64], order: usize) -> Self {
        JetVec {
            comps: v.iter().map(|&x| Jet::constant(x, order)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn order(&self) -> usize {
        self.comps.first().map_or(usize::MAX, Jet::order)
    }

    pub fn components(&self) -> &[Jet] {
        &self.comps
    }

    pub fn component(&self, k: usize) -> &Jet {
        &self.comps[k]
    }

    pub fn value(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    /// The vector of partial derivatives `(d/dx)^i (d/dy)^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.partial(i, j)).collect()
    }

    pub fn truncate(&self, order: usize) -> JetVec {
        JetVec {
            comps: self.comps.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn dx(&self) -> JetVec {
        JetVec {
            comps: self.comps.iter().map(Jet::dx).collect(),
        }
    }

    pub fn dy(&self) -> JetVec {
        JetVec {
            comps: self.comps.iter().map(Jet::dy).collect(),
        }
    }

    /// Euclidean inner product of jet-valued vectors.
    pub fn dot(&self, other: &JetVec) -> Result<Jet> {
        if self.dim() != other.dim() {
            return Err(GeomError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let order = self.order().min(other.order());
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .fold(Jet::zero(order), |acc, (a, b)| &acc + &(a * b)))
    }

    pub fn norm_sq(&self) -> Jet {
        self.dot(self).expect("same dimension")
    }

    pub fn scale(&self, s: f64) -> JetVec {
        JetVec {
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn scale_jet(&self, s: &Jet) -> JetVec {
        JetVec {
            comps: self.comps.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &JetVec) -> JetVec {
        assert_eq!(self.dim(), other.dim());
        JetVec::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &JetVec) -> JetVec {
        assert_eq!(self.dim(), other.dim());
        JetVec::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: &Jet, other: &JetVec) -> JetVec {
        assert_eq!(self.dim(), other.dim());
        JetVec::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + &(s * b))
                .collect(),
        )
    }

    /// Add a constant vector to the order-0 part.
    pub fn add_const(&self, v: &[f64]) -> JetVec {
        assert_eq!(self.dim(), v.len());
        JetVec {
            comps: self.comps.iter().zip(v).map(|(c, &s)| c.add_const(s)).collect(),
        }
    }

    /// Linear combination `sum_k a[k] * self[k]` with real matrix rows.
    pub fn transform(&self, rows: &[Vec<f64>]) -> JetVec {
        let order = self.order();
        JetVec::new(
            rows.iter()
                .map(|row| {
                    row.iter()
                        .zip(&self.comps)
                        .fold(Jet::zero(order), |acc, (&r, c)| &acc + &c.scale(r))
                })
                .collect(),
        )
    }
}

/// Classical Gram-Schmidt in jet arithmetic.
///
/// Fails with [`GeomError::RankDeficient`] when a residual's value falls
/// below `1e-9` of the largest input value norm.
pub fn jet_gram_schmidt(vectors: &[JetVec]) -> Result<Vec<JetVec>> {
    let scale = vectors
        .iter()
        .map(|v| norm(&v.value()))
        .fold(0.0, f64::max);
    let mut out: Vec<JetVec> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for q in &out {
            let c = v.dot(q)?;
            w = w.axpy(&-c, q);
        }
        let n2 = w.norm_sq();
        if scale == 0.0 || n2.value().sqrt() <= 1e-9 * scale {
            return Err(GeomError::RankDeficient { index });
        }
        let inv = n2.powf(-0.5)?;
        out.push(w.scale_jet(&inv));
    }
    Ok(out)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mixed_product_of_coordinates() {
        let u = Jet::var_x(0.0, 3);
        let v = Jet::var_y(0.0, 3);
        let p = &u * &v;
        assert_eq!(p.partial(1, 1), 1.0);
        assert_eq!(p.partial(2, 0), 0.0);
        assert_eq!(p.partial(0, 2), 0.0);
        assert_eq!(p.value(), 0.0);
    }

    #[test]
    fn sqrt_of_constant() {
        let s = Jet::constant(4.0, 3).sqrt().unwrap();
        assert_eq!(s, Jet::constant(2.0, 3));
    }

    #[test]
    fn recip_geometric_series() {
        let a = Jet::var_x(0.0, 2).add_const(1.0);
        let r = a.recip().unwrap();
        assert_eq!(r.coeff(0, 0), 1.0);
        assert_eq!(r.coeff(1, 0), -1.0);
        assert_eq!(r.coeff(2, 0), 1.0);
        assert_eq!(r.coeff(0, 1), 0.0);
        assert_eq!(r.coeff(1, 1), 0.0);
    }

    #[test]
    fn degenerate_preconditions() {
        assert!(matches!(Jet::zero(2).recip(), Err(GeomError::DegenerateJet(_))));
        assert!(matches!(
            Jet::constant(-1.0, 2).sqrt(),
            Err(GeomError::DegenerateJet(_))
        ));
    }

    #[test]
    fn jet_dot_examples() {
        let x = Jet::var_x(1.0, 3);
        let y = Jet::var_y(0.0, 3);
        let f = JetVec::new(vec![x, y]);
        let r2 = f.dot(&f).unwrap();
        assert_eq!(r2.value(), 1.0);
        assert_eq!(r2.partial(1, 0), 2.0);
        assert_eq!(r2.partial(2, 0), 2.0);

        let a = JetVec::constant(&[1.0, 0.0, 0.0], 2);
        let b = JetVec::constant(&[0.0, 3.0, 0.0], 2);
        assert_eq!(a.dot(&b).unwrap(), Jet::zero(2));
        assert!(a.dot(&JetVec::constant(&[1.0], 2)).is_err());
    }

    #[test]
    fn gram_schmidt_constant_examples() {
        let a = JetVec::constant(&[1.0, 0.0, 0.0], 2);
        let b = JetVec::constant(&[1.0, 1.0, 0.0], 2);
        let q = jet_gram_schmidt(&[a.clone(), b]).unwrap();
        assert_eq!(q[0].value(), vec![1.0, 0.0, 0.0]);
        assert_eq!(q[1].value(), vec![0.0, 1.0, 0.0]);

        let e2 = JetVec::constant(&[0.0, 1.0, 0.0], 2);
        let q = jet_gram_schmidt(&[a.clone(), e2.clone()]).unwrap();
        assert_eq!(q, vec![a.clone(), e2]);

        assert!(matches!(
            jet_gram_schmidt(&[a.clone(), a.scale(2.0)]),
            Err(GeomError::RankDeficient { index: 1 })
        ));
    }

    #[test]
    fn derivative_shifts_order() {
        // f = x^2 y at (1, 2)
        let x = Jet::var_x(1.0, 4);
        let y = Jet::var_y(2.0, 4);
        let f = &(&x * &x) * &y;
        let fx = f.dx();
        assert_eq!(fx.order(), 3);
        assert!((fx.value() - 4.0).abs() < 1e-15);
        assert!((fx.partial(0, 1) - 2.0).abs() < 1e-15);
        assert!((f.dy().value() - 1.0).abs() < 1e-15);
    }

    // Polynomial p(x,y) with given coefficients on monomials x^a y^b, a+b<=3.
    fn poly_f64(cs: &[f64], x: f64, y: f64) -> f64 {
        let mut k = 0;
        let mut s = 0.0;
        for n in 0..=3 {
            for b in 0..=n {
                s += cs[k] * x.powi(((n - b))) * y.powi(b);
                k += 1;
            }
        }
        s
    }

    fn poly_jet(cs: &[f64], x0: f64, y0: f64, order: usize) -> Jet {
        let x = Jet::var_x(x0, order);
        let y = Jet::var_y(y0, order);
        let mut k = 0;
        let mut s = Jet::zero(order);
        for n in 0..=3 {
            for b in 0..=n {
                let mut m = Jet::constant(cs[k], order);
                for _ in 0..(n - b) {
                    m = &m * &x;
                }
                for _ in 0..b {
                    m = &m * &y;
                }
                s = &s + &m;
                k += 1;
            }
        }
        s
    }

    proptest! {
        #[test]
        fn chain_matches_finite_differences(
            p in prop::collection::vec(-1.0..1.0f64, 10),
            q in prop::collection::vec(-1.0..1.0f64, 10),
            x0 in -0.8..0.8f64, y0 in -0.8..0.8f64,
        ) {
            // F = sqrt(1 + p^2) / (3 + q^2) * p
            let oracle = |x: f64, y: f64| {
                let pv = poly_f64(&p, x, y);
                let qv = poly_f64(&q, x, y);
                (1.0 + pv * pv).sqrt() / (3.0 + qv * qv) * pv
            };
            let pj = poly_jet(&p, x0, y0, 3);
            let qj = poly_jet(&q, x0, y0, 3);
            let num = (&pj * &pj).add_const(1.0).sqrt().unwrap();
            let den = (&qj * &qj).add_const(3.0);
            let f = &num.div(&den).unwrap() * &pj;

            let h = 1e-4;
            let fd = [
                (1, 0, (oracle(x0 + h, y0) - oracle(x0 - h, y0)) / (2.0 * h)),
                (0, 1, (oracle(x0, y0 + h) - oracle(x0, y0 - h)) / (2.0 * h)),
                (2, 0, (oracle(x0 + h, y0) - 2.0 * oracle(x0, y0) + oracle(x0 - h, y0)) / (h * h)),
                (0, 2, (oracle(x0, y0 + h) - 2.0 * oracle(x0, y0) + oracle(x0, y0 - h)) / (h * h)),
                (1, 1, (oracle(x0 + h, y0 + h) - oracle(x0 + h, y0 - h)
                    - oracle(x0 - h, y0 + h) + oracle(x0 - h, y0 - h)) / (4.0 * h * h)),
            ];
            for (i, j, approx) in fd {
                let exact = f.partial(i, j);
                prop_assert!((exact - approx).abs() <= 1e-5 * exact.abs().max(1.0),
                    "d{i}{j}: jet {exact} fd {approx}");
            }
        }

        #[test]
        fn recip_is_inverse(p in prop::collection::vec(-1.0..1.0f64, 10), x0 in -0.5..0.5f64, y0 in -0.5..0.5f64) {
            let a = poly_jet(&p, x0, y0, 4).add_const(5.0);
            let prod = &a * &a.recip().unwrap();
            let one = Jet::constant(1.0, 4);
            prop_assert!((&prod - &one).max_abs() < 1e-12);
        }

        #[test]
        fn gram_schmidt_orthonormal_as_jets(
            cs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 10), 3),
            x0 in -0.5..0.5f64, y0 in -0.5..0.5f64,
        ) {
            // three random polynomial vectors in R^4, made well-conditioned
            let vecs: Vec<JetVec> = (0..3).map(|k| {
                JetVec::new((0..4).map(|c| {
                    let mut j = poly_jet(&cs[(k + c) % 3], x0, y0, 4).scale(0.2 * (c as f64 + 1.0));
                    if c == k { j = j.add_const(2.0); }
                    j
                }).collect())
            }).collect();
            let q = jet_gram_schmidt(&vecs).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let d = q[a].dot(&q[b]).unwrap();
                    let target = Jet::constant(if a == b { 1.0 } else { 0.0 }, d.order());
                    prop_assert!((&d - &target).max_abs() < 1e-10);
                }
            }
        }
    }
}
