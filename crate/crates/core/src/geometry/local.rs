use crate::error::{GeomError, Result};
use crate::jets::{jet_gram_schmidt, Jet, JetVec};

/// Jets of an immersion at one parameter point, with its metric and an
/// orthonormal tangent frame.
///
/// The tangent frame is `e_a = sum_k coef[a][k] d_k f` (k = x, y), obtained
/// from Gram-Schmidt on the coordinate basis rotated by `rotation`. The
/// frame is positively oriented with respect to `(d_x, d_y)`.
#[derive(Clone, Debug)]
pub struct LocalSurface {
    point: (f64, f64),
    order: usize,
    // partials[a][b] = d_x^a d_y^b f, a + b <= order
    partials: Vec<Vec<JetVec>>,
    metric: [Jet; 3],
    frame: [JetVec; 2],
    coef: [[Jet; 2]; 2],
}

impl LocalSurface {
    pub fn new(pos: JetVec, point: (f64, f64)) -> Result<Self> {
        Self::with_rotation(pos, point, 0.0)
    }

    pub fn with_rotation(pos: JetVec, point: (f64, f64), rotation: f64) -> Result<Self> {
        let order = pos.order();
        if order < 1 {
            return Err(GeomError::InsufficientOrder { have: order, need: 1 });
        }
        let mut partials: Vec<Vec<JetVec>> = Vec::with_capacity(order + 1);
        let mut row = pos;
        for a in 0..=order {
            let mut col = Vec::with_capacity(order + 1 - a);
            let mut cur = row.clone();
            for b in 0..=(order - a) {
                if b > 0 {
                    cur = cur.dy();
                }
                col.push(cur.clone());
            }
            partials.push(col);
            if a < order {
                row = row.dx();
            }
        }
        let fx = &partials[1][0];
        let fy = &partials[0][1];
        let e = fx.norm_sq();
        let f = fx.dot(fy)?;
        let g = fy.norm_sq();
        let det = e.value() * g.value() - f.value() * f.value();
        let scale = e.value().max(g.value());
        let (x, y) = point;
        if !(det > 1e-12 * scale * scale) {
            return Err(GeomError::NotImmersion { x, y });
        }

        let (s, c) = rotation.sin_cos();
        let u = fx.scale(c).add(&fy.scale(s));
        let w = fx.scale(-s).add(&fy.scale(c));
        let frame = jet_gram_schmidt(&[u.clone(), w.clone()])
            .map_err(|_| GeomError::NotImmersion { x, y })?;
        let n1 = u.norm_sq().powf(-0.5)?;
        let p = w.dot(&frame[0])?;
        let wp = w.axpy(&-&p, &frame[0]);
        let n2 = wp.norm_sq().powf(-0.5)?;
        let c00 = n1.scale(c);
        let c01 = n1.scale(s);
        let c10 = &(&(&p * &c00).add_const(s) * &n2) * -1.0;
        let c11 = &(&(&p * &c01) * -1.0).add_const(c) * &n2;
        Ok(LocalSurface {
            point,
            order,
            partials,
            metric: [e, f, g],
            frame: [frame[0].clone(), frame[1].clone()],
            coef: [[c00, c01], [c10, c11]],
        })
    }

    pub fn point(&self) -> (f64, f64) {
        self.point
    }

    /// Jet order of the position.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ambient_dim(&self) -> usize {
        self.partials[0][0].dim()
    }

    pub fn position(&self) -> &JetVec {
        &self.partials[0][0]
    }

    /// `d_x^a d_y^b f` as a jet of order `order - a - b`.
    pub fn coord_partial(&self, a: usize, b: usize) -> &JetVec {
        &self.partials[a][b]
    }

    /// `(E, F, G)` as jets.
    pub fn metric(&self) -> &[Jet; 3] {
        &self.metric
    }

    pub fn metric_value(&self) -> (f64, f64, f64) {
        (
            self.metric[0].value(),
            self.metric[1].value(),
            self.metric[2].value(),
        )
    }

    pub fn frame(&self) -> &[JetVec; 2] {
        &self.frame
    }

    pub fn frame_value(&self) -> [Vec<f64>; 2] {
        [self.frame[0].value(), self.frame[1].value()]
    }

    /// Coordinate coefficients of the tangent frame.
    pub fn frame_coef(&self) -> &[[Jet; 2]; 2] {
        &self.coef
    }

    pub fn frame_coef_value(&self) -> [[f64; 2]; 2] {
        [
            [self.coef[0][0].value(), self.coef[0][1].value()],
            [self.coef[1][0].value(), self.coef[1][1].value()],
        ]
    }

    /// `D^k f (e_{a_1}, ..., e_{a_k})` for frame indices `a_l` in {0, 1},
    /// as a jet of order `order - k`.
    pub fn frame_derivative(&self, args: &[usize]) -> Result<JetVec> {
        let k = args.len();
        if k > self.order {
            return Err(GeomError::InsufficientOrder { have: self.order, need: k });
        }
        let out_order = self.order - k;
        let mut acc = JetVec::zero(self.ambient_dim(), out_order);
        for mask in 0..(1usize << k) {
            let mut w = Jet::constant(1.0, out_order);
            let mut nx = 0;
            for (l, &a) in args.iter().enumerate() {
                let dir = (mask >> l) & 1;
                if dir == 0 {
                    nx += 1;
                }
                w = &w * &self.coef[a][dir];
            }
            acc = acc.axpy(&w, &self.partials[nx][k - nx]);
        }
        Ok(acc)
    }

    /// Tangential part of a jet-valued vector.
    pub fn tangent_part(&self, v: &JetVec) -> JetVec {
        let mut out = JetVec::zero(v.dim(), v.order().min(self.order - 1));
        for e in &self.frame {
            let c = v.dot(e).expect("same dimension");
            out = out.axpy(&c, e);
        }
        out
    }

    pub fn normal_part(&self, v: &JetVec) -> JetVec {
        v.sub(&self.tangent_part(v))
    }

    /// `alpha(d_i, d_j)` on coordinate vectors, `i, j` in {0 = x, 1 = y}.
    pub fn alpha_coord(&self, i: usize, j: usize) -> Result<JetVec> {
        if self.order < 2 {
            return Err(GeomError::InsufficientOrder { have: self.order, need: 2 });
        }
        let a = (i == 0) as usize + (j == 0) as usize;
        Ok(self.normal_part(&self.partials[a][2 - a]))
    }

    /// `alpha(e_a, e_b)` on the orthonormal frame.
    pub fn alpha_frame(&self, a: usize, b: usize) -> Result<JetVec> {
        if self.order < 2 {
            return Err(GeomError::InsufficientOrder { have: self.order, need: 2 });
        }
        Ok(self.normal_part(&self.frame_derivative(&[a, b])?))
    }

    /// Values `[alpha_11, alpha_12, alpha_22]` at the base point.
    pub fn alpha_values(&self) -> Result<[Vec<f64>; 3]> {
        Ok([
            self.alpha_frame(0, 0)?.value(),
            self.alpha_frame(0, 1)?.value(),
            self.alpha_frame(1, 1)?.value(),
        ])
    }

    /// Laplace-Beltrami operator of this surface's metric applied to a
    /// jet-valued function. Loses two orders.
    pub fn laplace_beltrami(&self, u: &JetVec) -> Result<JetVec> {
        let have = u.order().min(self.order);
        if have < 2 {
            return Err(GeomError::InsufficientOrder { have, need: 2 });
        }
        let [e, f, g] = &self.metric;
        let det = &(e * g) - &(f * f);
        let w = det.powf(-0.5)?;
        let ux = u.dx();
        let uy = u.dy();
        let a = ux.scale_jet(g).sub(&uy.scale_jet(f)).scale_jet(&w);
        let b = uy.scale_jet(e).sub(&ux.scale_jet(f)).scale_jet(&w);
        Ok(a.dx().add(&b.dy()).scale_jet(&w))
    }

    /// Mean curvature vector field `H = (1/2) Delta f` as a jet of order
    /// `order - 2`.
    pub fn mean_curvature_jet(&self) -> Result<JetVec> {
        if self.order < 2 {
            return Err(GeomError::InsufficientOrder { have: self.order, need: 2 });
        }
        Ok(self.laplace_beltrami(self.position())?.scale(0.5))
    }

    /// Gauss curvature of the induced metric from the metric jets alone
    /// (Brioschi formula). Needs position jets of order 3.
    pub fn intrinsic_gauss_curvature(&self) -> Result<f64> {
        if self.order < 3 {
            return Err(GeomError::InsufficientOrder { have: self.order, need: 3 });
        }
        let [e, f, g] = &self.metric;
        let (ev, fv, gv) = (e.value(), f.value(), g.value());
        let eu = e.partial(1, 0);
        let ev_ = e.partial(0, 1);
        let evv = e.partial(0, 2);
        let fu = f.partial(1, 0);
        let fv_ = f.partial(0, 1);
        let fuv = f.partial(1, 1);
        let gu = g.partial(1, 0);
        let gv_ = g.partial(0, 1);
        let guu = g.partial(2, 0);
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let m1 = [
            [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev_],
            [fv_ - 0.5 * gu, ev, fv],
            [0.5 * gv_, fv, gv],
        ];
        let m2 = [
            [0.0, 0.5 * ev_, 0.5 * gu],
            [0.5 * ev_, ev, fv],
            [0.5 * gu, fv, gv],
        ];
        let d = ev * gv - fv * fv;
        Ok((det3(m1) - det3(m2)) / (d * d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceEvaluator;
    use crate::linalg::{dot, norm};

    fn paraboloid() -> SurfaceEvaluator {
        SurfaceEvaluator::from_jet_map(3, |x, y| {
            vec![x.clone(), y.clone(), (&(x * x) + &(y * y)).scale(0.5)]
        })
    }

    #[test]
    fn paraboloid_at_origin() {
        let s = LocalSurface::new(paraboloid().eval(0.0, 0.0, 3).unwrap(), (0.0, 0.0)).unwrap();
        let [a11, a12, a22] = s.alpha_values().unwrap();
        assert_eq!(a11, vec![0.0, 0.0, 1.0]);
        assert_eq!(a12, vec![0.0, 0.0, 0.0]);
        assert_eq!(a22, vec![0.0, 0.0, 1.0]);
        let h = s.mean_curvature_jet().unwrap().value();
        assert!(norm(&crate::linalg::sub(&h, &[0.0, 0.0, 1.0])) < 1e-14);
        // K = 1 for the osculating paraboloid at its vertex
        assert!((s.intrinsic_gauss_curvature().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_is_orthonormal_and_rotated_frames_agree_on_invariants() {
        let ev = paraboloid();
        let pos = ev.eval(0.3, -0.6, 3).unwrap();
        let s0 = LocalSurface::new(pos.clone(), (0.3, -0.6)).unwrap();
        let s1 = LocalSurface::with_rotation(pos, (0.3, -0.6), 0.8).unwrap();
        for s in [&s0, &s1] {
            let [e1, e2] = s.frame_value();
            assert!((dot(&e1, &e1) - 1.0).abs() < 1e-14);
            assert!(dot(&e1, &e2).abs() < 1e-14);
            // coefficients reproduce the frame
            let c = s.frame_coef_value();
            let fx = s.coord_partial(1, 0).value();
            let fy = s.coord_partial(0, 1).value();
            for a in 0..2 {
                let v: Vec<f64> = (0..3).map(|k| c[a][0] * fx[k] + c[a][1] * fy[k]).collect();
                assert!(norm(&crate::linalg::sub(&v, &s.frame_value()[a])) < 1e-14);
            }
        }
        let h0 = s0.alpha_values().unwrap();
        let h1 = s1.alpha_values().unwrap();
        let tr0 = crate::linalg::add(&h0[0], &h0[2]);
        let tr1 = crate::linalg::add(&h1[0], &h1[2]);
        assert!(norm(&crate::linalg::sub(&tr0, &tr1)) < 1e-13);
    }

    #[test]
    fn degenerate_map_is_not_immersion() {
        let s = SurfaceEvaluator::from_jet_map(3, |x, _y| vec![x.clone(), x * x, Jet::zero(x.order())]);
        let err = LocalSurface::new(s.eval(0.1, 0.1, 2).unwrap(), (0.1, 0.1)).unwrap_err();
        assert!(matches!(err, GeomError::NotImmersion { .. }));
    }
}
