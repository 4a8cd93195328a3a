//! Small dense helpers on `Vec<f64>` vectors and realified complex vectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Orthogonal projection of `v` onto the span of an orthonormal list.
pub fn project_onto(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    basis
        .iter()
        .fold(vec![0.0; v.len()], |acc, e| axpy(&acc, dot(v, e), e))
}

/// `v` minus its projection onto the span of an orthonormal list.
pub fn project_off(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    sub(v, &project_onto(v, basis))
}

/// Singular values (descending) of the matrix whose columns are `cols`.
pub fn singular_values(cols: &[Vec<f64>]) -> Vec<f64> {
    if cols.is_empty() {
        return Vec::new();
    }
    let n = cols[0].len();
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank: singular values above `rel_tol` times the largest.
pub fn numerical_rank(cols: &[Vec<f64>], rel_tol: f64) -> usize {
    let s = singular_values(cols);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the orthogonal complement of an orthonormal list
/// in `R^n`, built by pivoted Gram-Schmidt on the standard basis.
pub fn orthonormal_complement(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut current: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::new();
    while current.len() < n {
        let best = (0..n)
            .map(|k| {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                project_off(&e, &current)
            })
            .max_by(|a, b| norm(a).total_cmp(&norm(b)));
        let Some(r) = best else { break };
        let nr = norm(&r);
        if nr < 1e-8 {
            break;
        }
        // second pass for orthogonality
        let r = project_off(&scale(&r, 1.0 / nr), &current);
        let r = scale(&r, 1.0 / norm(&r));
        current.push(r.clone());
        out.push(r);
    }
    out
}

/// A complex vector in `C^n = R^n + i R^n`, stored as real and imaginary
/// parts. Products are complex-bilinear unless stated otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Self {
        assert_eq!(re.len(), im.len());
        CVector { re, im }
    }

    pub fn real(re: Vec<f64>) -> Self {
        let n = re.len();
        CVector { re, im: vec![0.0; n] }
    }

    /// `(a - i b) / 2`, the Wirtinger combination of two real vectors.
    pub fn wirtinger(a: &[f64], b: &[f64]) -> Self {
        CVector::new(scale(a, 0.5), scale(b, -0.5))
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    /// Complex-bilinear product `sum u_k v_k`.
    pub fn bilinear(&self, other: &CVector) -> Complex64 {
        Complex64::new(
            dot(&self.re, &other.re) - dot(&self.im, &other.im),
            dot(&self.re, &other.im) + dot(&self.im, &other.re),
        )
    }

    /// Bilinear product with a real vector.
    pub fn dot_real(&self, v: &[f64]) -> Complex64 {
        Complex64::new(dot(&self.re, v), dot(&self.im, v))
    }

    /// Hermitian product `sum conj(u_k) v_k`.
    pub fn hermitian(&self, other: &CVector) -> Complex64 {
        Complex64::new(
            dot(&self.re, &other.re) + dot(&self.im, &other.im),
            dot(&self.re, &other.im) - dot(&self.im, &other.re),
        )
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.re, &self.re) + dot(&self.im, &self.im)).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> CVector {
        CVector::new(
            axpy(&scale(&self.re, c.re), -c.im, &self.im),
            axpy(&scale(&self.im, c.re), c.im, &self.re),
        )
    }

    pub fn add(&self, other: &CVector) -> CVector {
        CVector::new(add(&self.re, &other.re), add(&self.im, &other.im))
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        CVector::new(sub(&self.re, &other.re), sub(&self.im, &other.im))
    }

    /// `c * v` for a real vector `v`.
    pub fn from_real_scaled(v: &[f64], c: Complex64) -> CVector {
        CVector::new(scale(v, c.re), scale(v, c.im))
    }

    pub fn project_off(&self, basis: &[Vec<f64>]) -> CVector {
        CVector::new(project_off(&self.re, basis), project_off(&self.im, basis))
    }

    /// Sine of the Hermitian angle between two complex vectors: zero
    /// exactly when they are parallel over C.
    pub fn parallelism_defect(&self, other: &CVector) -> f64 {
        let a = self.norm();
        let b = other.norm();
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let c = self.hermitian(other).norm() / (a * b);
        (1.0 - c * c).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_spans_rest() {
        let b = vec![[1.0, 1.0, 0.0].iter().map(|x| x / 2f64.sqrt()).collect::<Vec<_>>()];
        let c = orthonormal_complement(&b, 3);
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!((norm(v) - 1.0).abs() < 1e-14);
            assert!(dot(v, &b[0]).abs() < 1e-14);
        }
        assert!(dot(&c[0], &c[1]).abs() < 1e-14);
    }

    #[test]
    fn rank_of_dependent_columns() {
        let cols = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(numerical_rank(&cols, 1e-7), 2);
    }

    #[test]
    fn parallel_over_c() {
        let u = CVector::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        let w = u.scale(Complex64::new(0.3, -2.0));
        assert!(u.parallelism_defect(&w) < 1e-7);
        let v = CVector::new(vec![1.0, 0.0], vec![0.0, -1.0]);
        assert!((u.parallelism_defect(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_vector_bilinear_square_vanishes() {
        let u = CVector::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        assert_eq!(u.bilinear(&u), Complex64::new(0.0, 0.0));
        assert!((u.hermitian(&u).re - 2.0).abs() < 1e-15);
    }
}
