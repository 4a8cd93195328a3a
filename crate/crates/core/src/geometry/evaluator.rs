use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jets::{Jet, JetVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Weierstrass,
    Pedal,
    Moebius,
    Composite,
}

type EvalFn = dyn Fn(f64, f64, usize) -> Result<JetVec> + Send + Sync;

/// A pointwise map `(x, y, order) -> jet of the immersion at (x, y)`.
///
/// This is the common currency of the geometry, pedal and inversion code:
/// every construction takes evaluators and returns new ones.
#[derive(Clone)]
pub struct SurfaceEvaluator {
    map: Arc<EvalFn>,
    ambient_dim: usize,
    provenance: Provenance,
}

impl fmt::Debug for SurfaceEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceEvaluator")
            .field("ambient_dim", &self.ambient_dim)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl SurfaceEvaluator {
    pub fn new(
        ambient_dim: usize,
        provenance: Provenance,
        map: impl Fn(f64, f64, usize) -> Result<JetVec> + Send + Sync + 'static,
    ) -> Self {
        SurfaceEvaluator {
            map: Arc::new(map),
            ambient_dim,
            provenance,
        }
    }

    /// Evaluator of an explicit map written in jet arithmetic of the
    /// coordinate jets `x` and `y`.
    pub fn from_jet_map(
        ambient_dim: usize,
        map: impl Fn(&Jet, &Jet) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        SurfaceEvaluator::new(ambient_dim, Provenance::Composite, move |x, y, order| {
            let xs = Jet::var_x(x, order);
            let ys = Jet::var_y(y, order);
            Ok(JetVec::new(map(&xs, &ys)))
        })
    }

    pub fn eval(&self, x: f64, y: f64, order: usize) -> Result<JetVec> {
        (self.map)(x, y, order)
    }

    pub fn position(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        Ok(self.eval(x, y, 0)?.value())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The homothety-translate `c f + v`.
    pub fn affine(&self, c: f64, v: &[f64]) -> SurfaceEvaluator {
        assert_eq!(v.len(), self.ambient_dim);
        let inner = self.clone();
        let v = v.to_vec();
        SurfaceEvaluator::new(self.ambient_dim, Provenance::Composite, move |x, y, order| {
            Ok(inner.eval(x, y, order)?.scale(c).add_const(&v))
        })
    }

    /// Apply a real linear map (rows x ambient_dim) to the immersion.
    pub fn linear(&self, rows: Vec<Vec<f64>>) -> SurfaceEvaluator {
        let inner = self.clone();
        SurfaceEvaluator::new(rows.len(), Provenance::Composite, move |x, y, order| {
            Ok(inner.eval(x, y, order)?.transform(&rows))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_orders_are_truncations() {
        let s = SurfaceEvaluator::from_jet_map(3, |x, y| {
            vec![x.clone(), y.clone(), &(x * x) * y]
        });
        let hi = s.eval(0.4, -0.7, 4).unwrap();
        let lo = s.eval(0.4, -0.7, 2).unwrap();
        assert_eq!(hi.truncate(2), lo);
        assert_eq!(lo.order(), 2);
    }

    #[test]
    fn affine_shifts_and_scales() {
        let s = SurfaceEvaluator::from_jet_map(2, |x, y| vec![x.clone(), y.clone()]);
        let t = s.affine(2.0, &[1.0, -1.0]);
        assert_eq!(t.position(0.5, 0.25).unwrap(), vec![2.0, -0.5]);
    }
}
