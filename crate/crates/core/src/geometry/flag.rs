use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::{jet_gram_schmidt, JetVec};
use crate::linalg::{self, dot, norm, project_off};

use super::local::LocalSurface;

/// Relative threshold below which an osculating candidate is treated as
/// dependent on the previous levels.
pub const FLAG_TOL: f64 = 1e-7;

/// Orthonormal jet frames of `T, N_1, N_2, ...`.
///
/// Level `r >= 1` is spanned by the normal parts of `D^{r+1} f` orthogonal
/// to all previous levels. Its first vector points along
/// `alpha^{r+1}(e_1, ..., e_1)`; the second is oriented by
/// `alpha^{r+1}(e_2, e_1, ..., e_1)`.
#[derive(Clone, Debug)]
pub struct NormalFlag {
    levels: Vec<Vec<JetVec>>,
    ambient_dim: usize,
}

impl NormalFlag {
    /// Builds the flag up to `N_{max_level}`, limited by the jet order and
    /// the ambient dimension. Construction stops early when a level is
    /// empty (the surface then lies in the span built so far).
    pub fn build(local: &LocalSurface, max_level: usize) -> Result<NormalFlag> {
        let n = local.ambient_dim();
        let mut levels: Vec<Vec<JetVec>> = vec![local.frame().to_vec()];
        let mut count = 2;
        for r in 1..=max_level {
            let s = r + 1;
            if s > local.order() || count >= n {
                break;
            }
            let prev: Vec<&JetVec> = levels.iter().flatten().collect();
            let mut candidates = Vec::with_capacity(s + 1);
            let mut scale: f64 = 0.0;
            for t in 0..=s {
                let args: Vec<usize> = (0..s).map(|l| (l < t) as usize).collect();
                let raw = local.frame_derivative(&args)?;
                scale = scale.max(norm(&raw.value()));
                let mut w = raw;
                for e in &prev {
                    let c = w.dot(e)?;
                    w = w.axpy(&-&c, e);
                }
                candidates.push(w);
            }
            let mut picked: Vec<JetVec> = Vec::new();
            let mut picked_vals: Vec<Vec<f64>> = Vec::new();
            for w in candidates {
                if count + picked.len() >= n {
                    break;
                }
                let res = project_off(&w.value(), &picked_vals);
                let nr = norm(&res);
                if nr > FLAG_TOL * scale && nr > 0.0 {
                    picked_vals.push(linalg::scale(&res, 1.0 / nr));
                    picked.push(w);
                }
            }
            if picked.is_empty() {
                break;
            }
            let (x, y) = local.point();
            let basis = jet_gram_schmidt(&picked).map_err(|_| GeomError::NotRegular {
                x,
                y,
                what: "normal flag level",
            })?;
            count += basis.len();
            levels.push(basis);
        }
        Ok(NormalFlag { levels, ambient_dim: n })
    }

    /// Level 0 is the tangent plane.
    pub fn levels(&self) -> &[Vec<JetVec>] {
        &self.levels
    }

    pub fn level(&self, r: usize) -> Option<&[JetVec]> {
        self.levels.get(r).map(|v| v.as_slice())
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// All frame vectors `e_1, e_2, e_3, ...` in order.
    pub fn frame(&self) -> Vec<&JetVec> {
        self.levels.iter().flatten().collect()
    }

    /// Values of the frame vectors at the base point.
    pub fn frame_values(&self) -> Vec<Vec<f64>> {
        self.frame().iter().map(|e| e.value()).collect()
    }

    /// Values of the vectors in levels `0..upto` (exclusive).
    pub fn span_values(&self, upto: usize) -> Vec<Vec<f64>> {
        self.levels
            .iter()
            .take(upto)
            .flatten()
            .map(|e| e.value())
            .collect()
    }

    /// Rotation by +90 degrees in the oriented plane of level `r`
    /// (`J` for r = 0, `J_r^perp` otherwise); zero on the other levels.
    /// Requires the level to have rank two.
    pub fn complex_structure(&self, r: usize, v: &[f64]) -> Option<Vec<f64>> {
        let l = self.levels.get(r)?;
        if l.len() != 2 {
            return None;
        }
        let a = l[0].value();
        let b = l[1].value();
        Some(linalg::axpy(&linalg::scale(&b, dot(v, &a)), -dot(v, &b), &a))
    }

    /// `J_1^perp + J_2^perp` acting on the normal space.
    pub fn normal_complex_structure(&self, v: &[f64]) -> Option<Vec<f64>> {
        let a = self.complex_structure(1, v)?;
        let b = self.complex_structure(2, v)?;
        Some(linalg::add(&a, &b))
    }
}

/// Values of `alpha^s(e_2^t, e_1^{s-t})` for `t = 0..=s`, i.e. the normal
/// part of `D^s f` orthogonal to `T + N_1 + ... + N_{s-2}`.
pub fn higher_fundamental(local: &LocalSurface, flag: &NormalFlag, s: usize) -> Result<Vec<Vec<f64>>> {
    if s < 2 {
        return Err(GeomError::InvalidSpec(format!("fundamental form of order {s}")));
    }
    if s > local.order() {
        return Err(GeomError::InsufficientOrder { have: local.order(), need: s });
    }
    let basis = flag.span_values(s - 1);
    (0..=s)
        .map(|t| {
            let args: Vec<usize> = (0..s).map(|l| (l < t) as usize).collect();
            Ok(project_off(&local.frame_derivative(&args)?.value(), &basis))
        })
        .collect()
}

/// `alpha^s` on an arbitrary ordered list of frame indices.
pub fn higher_fundamental_at(
    local: &LocalSurface,
    flag: &NormalFlag,
    args: &[usize],
) -> Result<Vec<f64>> {
    let s = args.len();
    if s > local.order() {
        return Err(GeomError::InsufficientOrder { have: local.order(), need: s });
    }
    let basis = flag.span_values(s.saturating_sub(1));
    Ok(project_off(&local.frame_derivative(args)?.value(), &basis))
}

/// The third fundamental form computed recursively: the normal
/// derivative of `alpha(e_b, e_c)` along `e_a`, projected off `T + N_1`.
pub fn alpha3_recursive(local: &LocalSurface, flag: &NormalFlag, args: [usize; 3]) -> Result<Vec<f64>> {
    if local.order() < 3 {
        return Err(GeomError::InsufficientOrder { have: local.order(), need: 3 });
    }
    let [a, b, c] = args;
    let al = local.alpha_frame(b, c)?;
    let coef = local.frame_coef_value();
    let d = linalg::axpy(
        &linalg::scale(&al.dx().value(), coef[a][0]),
        coef[a][1],
        &al.dy().value(),
    );
    Ok(project_off(&d, &flag.span_values(2)))
}

/// Curvature ellipse of order `s` (image of the unit circle under
/// `alpha^{s+1}(X, ..., X)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseData {
    pub order: usize,
    /// Semi-axes, `a >= b >= 0`.
    pub a: f64,
    pub b: f64,
    /// Conjugate semi-diameters: `alpha^{s+1}(X_t) = A cos((s+1)t) + B sin((s+1)t)`
    /// for the top harmonic.
    pub semi_a: Vec<f64>,
    pub semi_b: Vec<f64>,
    /// `max(2|<A,B>| / sigma^2, 2| |A| - |B| | / sigma)`, `sigma` the largest
    /// singular value of the form's values on the frame.
    pub circle_defect: f64,
    /// Same defect measured relative to the ellipse itself (by `a`).
    pub shape_defect: f64,
    pub lambda: f64,
    pub scale: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Evaluates `alpha^k(X_t, ..., X_t)` for `X_t = cos t e_1 + sin t e_2`
/// from the values on `e_2^j e_1^{k-j}`.
pub fn form_on_direction(values: &[Vec<f64>], t: f64) -> Vec<f64> {
    let k = values.len() - 1;
    let (s, c) = t.sin_cos();
    let mut out = vec![0.0; values[0].len()];
    for (j, v) in values.iter().enumerate() {
        let w = binomial(k, j) * c.powi((k - j) as i32) * s.powi(j as i32);
        out = linalg::axpy(&out, w, v);
    }
    out
}

/// Top-harmonic decomposition of a form of degree `k` given by its values.
pub fn ellipse_from_values(order: usize, values: &[Vec<f64>]) -> Result<EllipseData> {
    let k = values.len() - 1;
    let m = 4 * (k + 1);
    let n = values[0].len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for l in 0..m {
        let t = 2.0 * std::f64::consts::PI * l as f64 / m as f64;
        let v = form_on_direction(values, t);
        let (sk, ck) = ((k as f64) * t).sin_cos();
        a = linalg::axpy(&a, 2.0 * ck / m as f64, &v);
        b = linalg::axpy(&b, 2.0 * sk / m as f64, &v);
    }
    let sigma = linalg::singular_values(values).first().copied().unwrap_or(0.0);
    let sv = linalg::singular_values(&[a.clone(), b.clone()]);
    let (sa, sb) = (sv[0], sv[1]);
    if !(sigma > 0.0) || sa <= 1e-12 * sigma {
        return Err(GeomError::DegenerateEllipse { order });
    }
    let na = norm(&a);
    let nb = norm(&b);
    let circle_defect = (2.0 * dot(&a, &b).abs() / (sigma * sigma)).max(2.0 * (na - nb).abs() / sigma);
    let shape_defect = (2.0 * dot(&a, &b).abs() / (sa * sa)).max(2.0 * (na - nb).abs() / sa);
    Ok(EllipseData {
        order,
        a: sa,
        b: sb,
        semi_a: a,
        semi_b: b,
        circle_defect,
        shape_defect,
        lambda: sb / sa,
        scale: sigma,
    })
}

/// Ellipse of order `s` at a point; needs the flag up to `N_{s-1}` and
/// position jets of order `s + 1`.
pub fn ellipse_data(local: &LocalSurface, flag: &NormalFlag, s: usize) -> Result<EllipseData> {
    if s == 0 {
        return Err(GeomError::InvalidSpec("ellipse of order 0".into()));
    }
    let values = higher_fundamental(local, flag, s + 1)?;
    ellipse_from_values(s, &values)
}

/// Normal and tangent connection forms in the flag frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSample {
    /// `psi(e_i) = <nabla_{e_i} e_1, e_2>`.
    pub psi: [f64; 2],
    /// `omega_table[a][b][i] = <D_{e_i} e_a, e_b>` over frame vectors whose
    /// jets are at least first order (0-based: `e_1` is index 0).
    pub omega_table: Vec<Vec<[f64; 2]>>,
    /// `<nabla^perp e_3, e_5>` on `e_1, e_2`; zero when `e_5` is unavailable.
    pub omega: [f64; 2],
    /// Axis ratio of the second ellipse.
    pub lambda: f64,
}

impl ConnectionSample {
    pub fn form(&self, a: usize, b: usize) -> Option<[f64; 2]> {
        self.omega_table.get(a).and_then(|r| r.get(b)).copied()
    }

    /// Residual of the relations
    /// `omega_45 = -*omega, omega_46 = -*omega_36, omega_36 = lambda *omega`
    /// with the Hodge operator `*w(X) = sign * w(JX)`, normalised by the
    /// largest normal form entry. `None` if `e_6` is unavailable.
    pub fn hodge_residual(&self, sign: f64) -> Option<f64> {
        let w = self.form(2, 4)?;
        let w45 = self.form(3, 4)?;
        let w36 = self.form(2, 5)?;
        let w46 = self.form(3, 5)?;
        let star = |f: [f64; 2]| [sign * f[1], -sign * f[0]];
        let sw = star(w);
        let s36 = star(w36);
        let mut res: f64 = 0.0;
        for i in 0..2 {
            res = res
                .max((w45[i] + sw[i]).abs())
                .max((w46[i] + s36[i]).abs())
                .max((w36[i] - self.lambda * sw[i]).abs());
        }
        let scale = [w, w45, w36, w46]
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Some(if scale > 0.0 { res / scale } else { 0.0 })
    }
}

pub fn connection_forms(local: &LocalSurface, flag: &NormalFlag) -> Result<ConnectionSample> {
    let frame: Vec<&JetVec> = flag.frame().into_iter().filter(|e| e.order() >= 1).collect();
    if frame.len() < 2 {
        return Err(GeomError::InsufficientOrder { have: local.order(), need: 2 });
    }
    let vals: Vec<Vec<f64>> = frame.iter().map(|e| e.value()).collect();
    let coef = local.frame_coef_value();
    let derivs: Vec<[Vec<f64>; 2]> = frame
        .iter()
        .map(|e| {
            let (dx, dy) = (e.dx().value(), e.dy().value());
            [0, 1].map(|i| linalg::axpy(&linalg::scale(&dx, coef[i][0]), coef[i][1], &dy))
        })
        .collect();
    let m = frame.len();
    let raw = |a: usize, b: usize, i: usize| dot(&derivs[a][i], &vals[b]);
    let table: Vec<Vec<[f64; 2]>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| [0, 1].map(|i| 0.5 * (raw(a, b, i) - raw(b, a, i))))
                .collect()
        })
        .collect();
    let omega = if m > 4 { table[2][4] } else { [0.0, 0.0] };
    let lambda = match ellipse_data(local, flag, 2) {
        Ok(e) => e.lambda,
        Err(_) => f64::NAN,
    };
    Ok(ConnectionSample {
        psi: table[0][1],
        omega_table: table,
        omega,
        lambda,
    })
}
