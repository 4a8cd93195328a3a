//! Individual grid checks. Each produces one [`CheckRecord`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cpoly::{CPoly, CVecPoly};
use crate::geometry::{
    curvatures, ellipse_from_values, LocalSurface, PointAnalysis, SecondFundamental, SurfaceEvaluator,
};
use crate::jets::JetVec;
use crate::linalg::{self, norm};
use crate::moebius::{self, InversionSpec};
use crate::pedal::{pedal_affine, pedal_surface, PedalPoint};
use crate::weierstrass::{isotropy_residual, w_generate, IsotropicSpec, Preset};

use super::config::{RunConfig, SeedSpec, Tolerances};
use super::metrics::{sign_index, PedalMetrics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Passes when the defect is at most the threshold.
    Bound,
    /// Passes when the defect is at least the threshold.
    Refutation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub grid: usize,
    pub excluded: usize,
    pub defect: Option<f64>,
    pub threshold: f64,
    pub kind: CheckKind,
    pub pass: bool,
    pub status: Status,
    #[serde(default)]
    pub details: BTreeMap<String, Value>,
}

impl CheckRecord {
    fn new(id: &str, anchor: &str, kind: CheckKind, threshold: f64, grid: usize, defect: Option<f64>, excluded: usize) -> Self {
        let (pass, status) = match defect {
            None => (false, Status::Inconclusive),
            Some(d) => {
                let ok = match kind {
                    CheckKind::Bound => d <= threshold,
                    CheckKind::Refutation => d >= threshold,
                };
                (ok, if ok { Status::Pass } else { Status::Fail })
            }
        };
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            grid,
            excluded,
            defect,
            threshold,
            kind,
            pass,
            status,
            details: BTreeMap::new(),
        }
    }

    /// Largest of the values; inconclusive if there are none.
    pub fn bound(id: &str, anchor: &str, threshold: f64, grid: usize, values: &[f64]) -> Self {
        let defect = max_of(values);
        CheckRecord::new(id, anchor, CheckKind::Bound, threshold, grid, defect, grid.saturating_sub(values.len()))
    }

    /// The `(1 - fraction)` quantile of the values must reach the threshold,
    /// i.e. at least `fraction` of the points exceed it.
    pub fn refutation(id: &str, anchor: &str, threshold: f64, fraction: f64, grid: usize, values: &[f64]) -> Self {
        let defect = lower_quantile(values, fraction);
        let mut r = CheckRecord::new(id, anchor, CheckKind::Refutation, threshold, grid, defect, grid.saturating_sub(values.len()));
        r.detail("required_fraction", json!(fraction));
        if !values.is_empty() {
            let above = values.iter().filter(|&&v| v >= threshold).count() as f64 / values.len() as f64;
            r.detail("fraction_above", json!(above));
        }
        r
    }

    pub fn inconclusive(id: &str, anchor: &str, kind: CheckKind, threshold: f64, grid: usize, reason: &str) -> Self {
        let mut r = CheckRecord::new(id, anchor, kind, threshold, grid, None, 0);
        r.detail("reason", json!(reason));
        r
    }

    pub fn detail(&mut self, key: &str, v: Value) -> &mut Self {
        self.details.insert(key.into(), v);
        self
    }

    fn with(mut self, key: &str, v: Value) -> Self {
        self.detail(key, v);
        self
    }
}

pub fn max_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
    }
}

pub fn min_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().fold(f64::INFINITY, |m, &v| m.min(v)))
    }
}

/// Value `q` such that at least `fraction` of the values are `>= q`.
pub fn lower_quantile(values: &[f64], fraction: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let keep = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    Some(v[n - keep])
}

/// Threshold and kind of every check id.
pub fn pinned(id: &str, t: &Tolerances) -> (f64, CheckKind) {
    use CheckKind::{Bound as B, Refutation as R};
    match id {
        "isotropy.exact" => (t.isotropy, B),
        "minimality.f" => (t.minimality, B),
        "gauss.oracle" => (t.gauss_oracle, B),
        "gauss.consistency" => (t.gauss_consistency, B),
        "wintgen.f" => (t.wintgen_inequality, B),
        "superconformal.pedal" => (t.circle, B),
        "superconformal.wintgen" => (t.wintgen, B),
        "superconformal.control" => (t.refute_circle, R),
        "conformal.pedal" | "conformal.control" => (t.conformality, B),
        "conformal.factor" => (t.conformal_factor, B),
        "normal_bundle.pedal" => (t.normal_bundle, B),
        "pedal.derivative" => (t.derivative, B),
        "mean_curvature.formula" => (t.mean_curvature, B),
        "mean_curvature.laplacian" => (t.laplacian, B),
        "mean_curvature.homothety" => (t.homothety, B),
        "normal_form.outside" | "normal_form.complex" | "normal_form.control" => (t.normal_form_ab, B),
        "normal_form.second_normal" => (t.normal_form_c, B),
        "hodge.convention" => (t.hodge, B),
        "inversion.formulas" => (t.inversion_formula, B),
        "inversion.invariance" => (t.moebius_invariance, B),
        "inversion.far_center" => (t.far_center, B),
        "inversion.nonminimal" => (t.nonminimal, R),
        "inversion.min_system" => (t.min_system, R),
        "swillmore.defect" => (t.swillmore, R),
        "swillmore.criterion" => (t.criterion_agreement, R),
        "swillmore.kappa_theta" => (t.kappa_theta, R),
        "final.affine_pedal" | "final.constant_pedal" => (t.circle, B),
        "final.constant_inversion" => (t.final_minimal, B),
        "final.rank" => (0.0, B),
        "hygiene.finite_difference" => (t.finite_difference, B),
        _ => (f64::NAN, B),
    }
}

fn skipped(t: &Tolerances, id: &str, anchor: &str, grid: usize, reason: &str) -> CheckRecord {
    let (thr, kind) = pinned(id, t);
    CheckRecord::inconclusive(id, anchor, kind, thr, grid, reason)
}

fn insufficient(t: &Tolerances, id: &str, anchor: &str, grid: usize, have: usize, need: usize) -> CheckRecord {
    skipped(t, id, anchor, grid, &format!("insufficient jet order: have {have}, need {need}"))
}

/// Everything computed once per run and shared by the checks.
pub struct RunContext {
    pub config: RunConfig,
    pub tol: Tolerances,
    /// The surface `c f + v` whose pedal is examined.
    pub f: SurfaceEvaluator,
    pub control: SurfaceEvaluator,
    pub points: Vec<(f64, f64)>,
    pub metrics: Vec<PedalMetrics>,
    pub control_metrics: Vec<PedalMetrics>,
    /// Hodge sign selected from the connection relations, if decidable.
    pub hodge_sign: Option<f64>,
}

impl RunContext {
    pub fn new(config: &RunConfig) -> Result<Self, super::config::ConfigError> {
        config.validate()?;
        let curve = config.seed.curve()?;
        let n = curve.ambient_dim();
        let base = curve.evaluator();
        if config.scale == 0.0 {
            return Err(super::config::ConfigError::new(
                "scale",
                "verification needs an immersion c f + v with c != 0",
            ));
        }
        let f = base.affine(config.scale, &config.translation_vec(n));
        let control = config.control_seed.curve()?.evaluator();
        let points = config.grid.points();
        let order = config.jet_order;
        let compute = |s: &SurfaceEvaluator| -> Vec<PedalMetrics> {
            let zero = vec![0.0; s.ambient_dim()];
            points
                .par_iter()
                .map(|&(x, y)| PedalMetrics::compute(s, 1.0, &zero, x, y, order))
                .collect()
        };
        let metrics = compute(&f);
        let control_metrics = compute(&control);
        let mut ctx = RunContext {
            config: config.clone(),
            tol: config.tolerances.clone(),
            f,
            control,
            points,
            metrics,
            control_metrics,
            hodge_sign: None,
        };
        ctx.hodge_sign = ctx.select_hodge().map(|(s, _)| s);
        Ok(ctx)
    }

    pub fn grid(&self) -> usize {
        self.points.len()
    }

    pub fn excluded_count(&self) -> usize {
        self.metrics.iter().filter(|m| m.excluded.is_some()).count()
    }

    fn collect(&self, get: impl Fn(&PedalMetrics) -> Option<f64>) -> Vec<f64> {
        self.metrics.iter().filter(|m| m.excluded.is_none()).filter_map(get).collect()
    }

    fn collect_control(&self, get: impl Fn(&PedalMetrics) -> Option<f64>) -> Vec<f64> {
        self.control_metrics.iter().filter(|m| m.excluded.is_none()).filter_map(get).collect()
    }

    /// Sign with the smaller worst-case residual, and both residuals.
    fn select_hodge(&self) -> Option<(f64, [f64; 2])> {
        let plus = max_of(&self.collect(|m| m.hodge.map(|h| h[0])))?;
        let minus = max_of(&self.collect(|m| m.hodge.map(|h| h[1])))?;
        Some((if plus <= minus { 1.0 } else { -1.0 }, [plus, minus]))
    }

    /// Sample points of the pedal (non-excluded) with their position.
    fn pedal_cloud(&self) -> Vec<Vec<f64>> {
        self.metrics
            .iter()
            .filter(|m| m.excluded.is_none())
            .filter_map(|m| m.sample.as_ref().map(|s| s.g.clone()))
            .collect()
    }

    fn usable_points(&self) -> Vec<(f64, f64)> {
        self.metrics.iter().filter(|m| m.excluded.is_none()).map(|m| m.point).collect()
    }
}

fn diameter(cloud: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for p in cloud {
        for q in cloud {
            d = d.max(norm(&linalg::sub(p, q)));
        }
    }
    d
}

fn centroid(cloud: &[Vec<f64>]) -> Vec<f64> {
    let n = cloud[0].len();
    let m = cloud.len() as f64;
    (0..n).map(|k| cloud.iter().map(|p| p[k]).sum::<f64>() / m).collect()
}

/// Random spec for the isotropy check: `4 <= N <= 10`, random seed and
/// multipliers of degree at most two.
pub fn random_spec(rng: &mut ChaCha8Rng) -> IsotropicSpec {
    let n = rng.gen_range(4..=10usize);
    let m = rng.gen_range(1..=(n / 2 - 1));
    let seed_dim = n - 2 * (m + 1);
    let poly = |rng: &mut ChaCha8Rng| loop {
        let deg = rng.gen_range(0..=2usize);
        let p = CPoly::new(
            (0..=deg)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        if !p.is_zero() {
            return p;
        }
    };
    let alpha0 = CVecPoly::new((0..seed_dim).map(|_| poly(rng)).collect());
    let betas = (0..=m).map(|_| poly(rng)).collect();
    IsotropicSpec { ambient_dim: n, isotropy_order: m, alpha0, betas }
}

pub fn check_isotropy(ctx: &RunContext) -> CheckRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.rng_seed);
    let mut residuals = Vec::new();
    let mut failures = 0;
    let seeds = [
        ctx.config.seed.clone(),
        SeedSpec::Preset(Preset::Holo3),
        SeedSpec::Preset(Preset::Holo4),
        SeedSpec::Preset(Preset::Noniso),
    ];
    for s in &seeds {
        match s.curve() {
            Ok(c) => residuals.push(isotropy_residual(&c.phi)),
            Err(_) => failures += 1,
        }
    }
    for _ in 0..200 {
        let spec = random_spec(&mut rng);
        match w_generate(&spec) {
            Ok(c) => residuals.push(isotropy_residual(&c.phi)),
            Err(_) => failures += 1,
        }
    }
    let total = residuals.len() + failures;
    let mut r = CheckRecord::bound(
        "isotropy.exact",
        "generated curves satisfy phi'.phi' = 0",
        ctx.tol.isotropy,
        total,
        &residuals,
    );
    if failures > 0 {
        r.pass = false;
        r.status = Status::Fail;
    }
    r.with("random_specs", json!(200)).with("generation_failures", json!(failures))
}

pub fn check_minimality(ctx: &RunContext) -> CheckRecord {
    let v: Vec<f64> = ctx.metrics.iter().filter_map(|m| m.f_h_ratio).collect();
    CheckRecord::bound(
        "minimality.f",
        "real part of an isotropic curve is minimal: |H_f| / |alpha_f| = 0",
        ctx.tol.minimality,
        ctx.grid(),
        &v,
    )
}

fn k_closed_form(x: f64, y: f64) -> f64 {
    -8.0 / (1.0 + 2.0 * (x * x + y * y)).powi(4)
}

/// Only meaningful for the `holo3` seed.
pub fn check_gauss_oracle(ctx: &RunContext) -> Option<CheckRecord> {
    if ctx.config.seed != SeedSpec::Preset(Preset::Holo3) {
        return None;
    }
    let c2 = ctx.config.scale * ctx.config.scale;
    let rel = |x: f64, y: f64, k: f64| {
        let want = k_closed_form(x, y) / c2;
        (k - want).abs() / want.abs()
    };
    let v: Vec<f64> = ctx
        .metrics
        .iter()
        .filter_map(|m| m.f_k.map(|k| rel(m.point.0, m.point.1, k)))
        .collect();
    let mut r = CheckRecord::bound(
        "gauss.oracle",
        "K = -8 / (1 + 2|z|^2)^4 for Re(z, iz, z^2, iz^2, 2z^3/3, 2iz^3/3)",
        ctx.tol.gauss_oracle,
        ctx.grid(),
        &v,
    );
    let origin = curvatures(&ctx.f, 0.0, 0.0).map(|c| rel(0.0, 0.0, c.k));
    match origin {
        Ok(d) => {
            r.detail("origin_defect", json!(d));
            if !(d <= ctx.tol.gauss_oracle) {
                r.pass = false;
                r.status = Status::Fail;
            }
        }
        Err(e) => {
            r.detail("origin_error", json!(e.to_string()));
        }
    }
    Some(r)
}

pub fn check_gauss_consistency(ctx: &RunContext) -> CheckRecord {
    let (id, anchor) = ("gauss.consistency", "Gauss equation curvature equals intrinsic curvature of the metric");
    if ctx.config.jet_order < 3 {
        return insufficient(&ctx.tol, id, anchor, ctx.grid(), ctx.config.jet_order, 3);
    }
    let order = ctx.config.jet_order;
    let v: Vec<f64> = ctx
        .points
        .par_iter()
        .filter_map(|&(x, y)| {
            let l = LocalSurface::new(ctx.f.eval(x, y, order).ok()?, (x, y)).ok()?;
            let ki = l.intrinsic_gauss_curvature().ok()?;
            let sf = SecondFundamental::from_local(&l).ok()?;
            let kg = crate::geometry::Curvatures::from_forms(&sf, &l.frame_value()).k;
            Some((ki - kg).abs() / kg.abs().max(1e-300))
        })
        .collect();
    CheckRecord::bound(id, anchor, ctx.tol.gauss_consistency, ctx.grid(), &v)
}

pub fn check_wintgen_inequality(ctx: &RunContext) -> CheckRecord {
    let v: Vec<f64> = ctx
        .points
        .par_iter()
        .filter_map(|&(x, y)| {
            let l = LocalSurface::new(ctx.f.eval(x, y, 2).ok()?, (x, y)).ok()?;
            let sf = SecondFundamental::from_local(&l).ok()?;
            let c = crate::geometry::Curvatures::from_forms(&sf, &l.frame_value());
            let s = sf.scale();
            Some((-c.wintgen_defect / (s * s)).max(0.0))
        })
        .collect();
    CheckRecord::bound(
        "wintgen.f",
        "K + |K_N| <= |H|^2 holds on f",
        ctx.tol.wintgen_inequality,
        ctx.grid(),
        &v,
    )
}

pub fn check_superconformal(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    if ctx.config.jet_order < 3 {
        return vec![
            insufficient(t, "superconformal.pedal", "pedal of a 2-isotropic surface has circular curvature ellipse", g, ctx.config.jet_order, 3),
            insufficient(t, "superconformal.wintgen", "pedal of a 2-isotropic surface attains |H|^2 = K + |K_N|", g, ctx.config.jet_order, 3),
            insufficient(t, "superconformal.control", "pedal of a 1- but not 2-isotropic surface has non-circular ellipse", g, ctx.config.jet_order, 3),
        ];
    }
    let pos = CheckRecord::bound(
        "superconformal.pedal",
        "pedal of a 2-isotropic surface has circular curvature ellipse",
        t.circle,
        g,
        &ctx.collect(|m| m.circle_g),
    );
    let wint = CheckRecord::bound(
        "superconformal.wintgen",
        "pedal of a 2-isotropic surface attains |H|^2 = K + |K_N|",
        t.wintgen,
        g,
        &ctx.collect(|m| m.wintgen_g),
    );
    let neg = CheckRecord::refutation(
        "superconformal.control",
        "pedal of a 1- but not 2-isotropic surface has non-circular ellipse",
        t.refute_circle,
        t.refute_fraction,
        g,
        &ctx.collect_control(|m| m.circle_g),
    )
    .with("control_seed", json!(ctx.config.control_seed.describe()));
    vec![pos, wint, neg]
}

pub fn check_conformal(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    vec![
        CheckRecord::bound(
            "conformal.pedal",
            "pedal of a 1-isotropic surface is conformal to it",
            t.conformality,
            g,
            &ctx.collect(|m| m.conformality),
        ),
        CheckRecord::bound(
            "conformal.factor",
            "|g_x|^2 / |f_x|^2 = -K theta / 2 with theta = |Z|^2 + |delta|^2",
            t.conformal_factor,
            g,
            &ctx.collect(|m| m.factor),
        ),
        CheckRecord::bound(
            "conformal.control",
            "conformality of the pedal needs only 1-isotropy (control seed)",
            t.conformality,
            g,
            &ctx.collect_control(|m| m.conformality.zip(m.factor).map(|(a, b)| a.max(b))),
        ),
    ]
}

pub fn check_normal_bundle(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let span = ctx.collect(|m| m.span.map(|s| s[0].max(s[1]).max(s[2])));
    let mut r = CheckRecord::bound(
        "normal_bundle.pedal",
        "g_* is orthogonal to Z - delta, JZ + J delta and to the complement of T + N_1",
        t.normal_bundle,
        g,
        &span,
    );
    for (k, name) in ["z_minus_delta", "jz_plus_jdelta", "outside_first_normal"].iter().enumerate() {
        if let Some(v) = max_of(&ctx.collect(|m| m.span.map(|s| s[k]))) {
            r.detail(name, json!(v));
        }
    }
    let der = ctx.collect(|m| m.derivative.map(|(a, b)| a.max(b)));
    vec![
        r,
        CheckRecord::bound(
            "pedal.derivative",
            "g_* X = -A_g X - alpha(X, Z) and its normal part is -alpha(X, Z)",
            t.derivative,
            g,
            &der,
        ),
    ]
}

pub fn check_mean_curvature(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let (a1, a2, a3) = (
        "H_g = (2 / theta)(Z - delta)",
        "Laplacian of g in the metric of f equals 2K(delta - Z)",
        "pedal of 2f has half the mean curvature vector",
    );
    if ctx.config.jet_order < 3 {
        let o = ctx.config.jet_order;
        return vec![
            insufficient(t, "mean_curvature.formula", a1, g, o, 3),
            insufficient(t, "mean_curvature.laplacian", a2, g, o, 3),
            insufficient(t, "mean_curvature.homothety", a3, g, o, 3),
        ];
    }
    let f2 = ctx.f.affine(2.0, &vec![0.0; ctx.f.ambient_dim()]);
    let g1 = pedal_surface(&ctx.f);
    let g2 = pedal_surface(&f2);
    let hom: Vec<f64> = ctx
        .usable_points()
        .par_iter()
        .filter_map(|&(x, y)| {
            let h1 = LocalSurface::new(g1.eval(x, y, 2).ok()?, (x, y)).ok()?.mean_curvature_jet().ok()?.value();
            let h2 = LocalSurface::new(g2.eval(x, y, 2).ok()?, (x, y)).ok()?.mean_curvature_jet().ok()?.value();
            Some(norm(&linalg::sub(&h2, &linalg::scale(&h1, 0.5))) / norm(&h1))
        })
        .collect();
    vec![
        CheckRecord::bound("mean_curvature.formula", a1, t.mean_curvature, g, &ctx.collect(|m| m.h_formula)),
        CheckRecord::bound("mean_curvature.laplacian", a2, t.laplacian, g, &ctx.collect(|m| m.laplacian)),
        CheckRecord::bound("mean_curvature.homothety", a3, t.homothety, g, &hom),
    ]
}

pub fn check_normal_form(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let o = ctx.config.jet_order;
    let hodge_anchor = "normal connection forms satisfy omega_45 = -*omega, omega_46 = -*omega_36, omega_36 = lambda *omega";
    let a_anchor = "alpha_g(d, d) has no component orthogonal to N_1 + N_2 of f";
    let b_anchor = "<alpha_g(d, d), JZ + J delta> = i <alpha_g(d, d), Z - delta>";
    let c_anchor = "components of alpha_g(d, d) along e_5, e_6 are -omega(d)<alpha(d, Z), e_3 + i e_4>(1, -i lambda)";
    let ctl_anchor = "normal form of alpha_g(d, d) needs only 1-isotropy (control seed)";
    let mut out = Vec::new();
    if o < 3 {
        out.push(insufficient(t, "normal_form.outside", a_anchor, g, o, 3));
        out.push(insufficient(t, "normal_form.complex", b_anchor, g, o, 3));
        out.push(insufficient(t, "normal_form.control", ctl_anchor, g, o, 3));
    } else {
        out.push(CheckRecord::bound("normal_form.outside", a_anchor, t.normal_form_ab, g, &ctx.collect(|m| m.normal_form_outside)));
        out.push(CheckRecord::bound("normal_form.complex", b_anchor, t.normal_form_ab, g, &ctx.collect(|m| m.normal_form_complex)));
        let ab = ctx.collect_control(|m| m.normal_form_outside.zip(m.normal_form_complex).map(|(a, b)| a.max(b)));
        let lam = ctx.collect_control(|m| m.lambda);
        let mut r = CheckRecord::bound("normal_form.control", ctl_anchor, t.normal_form_ab, g, &ab);
        if let (Some(lo), Some(hi)) = (min_of(&lam), max_of(&lam)) {
            r.detail("lambda_min", json!(lo)).detail("lambda_max", json!(hi));
        }
        out.push(r);
    }
    if o < 4 {
        out.push(insufficient(t, "hodge.convention", hodge_anchor, g, o, 4));
        out.push(insufficient(t, "normal_form.second_normal", c_anchor, g, o, 4));
        return out;
    }
    match (ctx.select_hodge(), ctx.hodge_sign) {
        (Some((sign, both)), Some(_)) => {
            let k = sign_index(sign);
            let n = ctx.collect(|m| m.hodge.map(|h| h[k])).len();
            let mut r = CheckRecord::new("hodge.convention", hodge_anchor, CheckKind::Bound, t.hodge, g, Some(both[k]), g - n);
            r.detail("selected", json!(if sign > 0.0 { "*w(X) = w(JX)" } else { "*w(X) = -w(JX)" }))
                .detail("residual_plus", json!(both[0]))
                .detail("residual_minus", json!(both[1]));
            out.push(r);
            let c = ctx.collect(|m| m.normal_form_c.map(|c| c[k]));
            let mut r = CheckRecord::bound("normal_form.second_normal", c_anchor, t.normal_form_c, g, &c);
            r.detail("hodge_sign", json!(sign));
            if let Some(other) = max_of(&ctx.collect(|m| m.normal_form_c.map(|c| c[1 - k]))) {
                r.detail("other_sign_defect", json!(other));
            }
            out.push(r);
        }
        _ => {
            out.push(skipped(t, "hodge.convention", hodge_anchor, g, "second normal bundle unavailable"));
            out.push(skipped(t, "normal_form.second_normal", c_anchor, g, "second normal bundle unavailable"));
        }
    }
    out
}

pub fn check_swillmore(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let a1 = "normal derivative of H_g is not complex-parallel to alpha_g(d, d)";
    let a2 = "scalar criterion omega(d)(|delta|^2 <A_e3 d, d> + <d, Z><alpha(d, Z), e_3 + i e_4>) vanishes exactly where the parallelism defect does";
    let a3 = "kappa theta does not vanish";
    let o = ctx.config.jet_order;
    if o < 4 {
        return vec![
            insufficient(t, "swillmore.defect", a1, g, o, 4),
            insufficient(t, "swillmore.criterion", a2, g, o, 4),
            insufficient(t, "swillmore.kappa_theta", a3, g, o, 4),
        ];
    }
    let d = CheckRecord::refutation("swillmore.defect", a1, t.swillmore, t.refute_fraction, g, &ctx.collect(|m| m.swillmore));
    let crit = match ctx.hodge_sign {
        Some(sign) => {
            let k = sign_index(sign);
            let pairs: Vec<(f64, f64)> = ctx
                .metrics
                .iter()
                .filter(|m| m.excluded.is_none())
                .filter_map(|m| m.swillmore.zip(m.scalar_criterion.map(|c| c[k])))
                .collect();
            let z = t.criterion_zero;
            let agree = pairs.iter().filter(|(a, b)| (*a > z) == (*b > z)).count();
            let frac = if pairs.is_empty() { None } else { Some(agree as f64 / pairs.len() as f64) };
            let mut r = CheckRecord::new("swillmore.criterion", a2, CheckKind::Refutation, t.criterion_agreement, g, frac, g - pairs.len());
            let crits: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Some(m) = min_of(&crits) {
                r.detail("criterion_min", json!(m));
            }
            r.detail("nonzero_threshold", json!(z));
            r
        }
        None => skipped(t, "swillmore.criterion", a2, g, "Hodge convention undetermined"),
    };
    let kt: Vec<f64> = ctx
        .metrics
        .iter()
        .filter(|m| m.excluded.is_none())
        .filter_map(|m| {
            let s = m.sample.as_ref()?;
            let scale = norm(&linalg::add(&s.z, &s.g));
            m.kappa_theta.map(|v| v / scale)
        })
        .collect();
    let k = CheckRecord::refutation("swillmore.kappa_theta", a3, t.kappa_theta, 1.0, g, &kt);
    vec![d, crit, k]
}

fn random_inversions(ctx: &RunContext, cloud: &[Vec<f64>], count: usize, salt: u64) -> Vec<InversionSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.rng_seed ^ salt);
    let c = centroid(cloud);
    let d = diameter(cloud).max(1e-12);
    (0..count)
        .map(|_| {
            let p: Vec<f64> = c.iter().map(|x| x + d * rng.gen_range(-1.0..1.0)).collect();
            InversionSpec::new(p, d * rng.gen_range(0.5..1.5)).expect("positive radius")
        })
        .collect()
}

pub fn check_inversion(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let o = ctx.config.jet_order;
    let anchors = [
        ("inversion.formulas", "shape operators and H of I o g follow the inversion transformation rules"),
        ("inversion.invariance", "circle defect and axis ratio of the ellipse are invariant under inversion"),
        ("inversion.far_center", "inversion with far center and radius |p0| preserves |H| to first order"),
        ("inversion.nonminimal", "no inversion of the pedal of a 2-isotropic surface is minimal"),
        ("inversion.min_system", "the minimality conditions for an inverted pedal have no solution"),
    ];
    if o < 3 {
        return anchors.iter().map(|(id, a)| insufficient(t, id, a, g, o, 3)).collect();
    }
    let cloud = ctx.pedal_cloud();
    if cloud.len() < 2 {
        return anchors
            .iter()
            .map(|(id, a)| skipped(t, id, a, g, "no usable pedal points"))
            .collect();
    }
    let pts = ctx.usable_points();
    let gev = pedal_surface(&ctx.f);
    let g2: Vec<Option<JetVec>> = pts.par_iter().map(|&(x, y)| gev.eval(x, y, 2).ok()).collect();
    let diam = diameter(&cloud);
    let invs = random_inversions(ctx, &cloud, ctx.config.random_inversions, 0x51);
    let mut out = Vec::new();

    // transformation formulas
    let form: Vec<f64> = invs
        .par_iter()
        .flat_map_iter(|inv| {
            pts.iter().zip(&g2).filter_map(move |(&p, j)| {
                let r = moebius::inverted_shape_and_mean(j.as_ref()?, p, inv).ok()?;
                let (a, h) = r.residuals();
                Some(a.max(h))
            })
        })
        .collect();
    out.push(
        CheckRecord::bound(anchors[0].0, anchors[0].1, t.inversion_formula, g, &form)
            .with("inversions", json!(invs.len())),
    );

    // invariance on the primary and control pedals
    let control_g = pedal_surface(&ctx.control);
    let mut inv_vals = Vec::new();
    for s in [&gev, &control_g] {
        let c: Vec<Vec<f64>> = pts.iter().filter_map(|&(x, y)| s.position(x, y).ok()).collect();
        if c.len() < 2 {
            continue;
        }
        let local_invs = random_inversions(ctx, &c, ctx.config.random_inversions, 0x77);
        let vals: Vec<f64> = local_invs
            .par_iter()
            .flat_map_iter(|inv| {
                pts.iter().filter_map(move |&(x, y)| {
                    let j = s.eval(x, y, 2).ok()?;
                    let a = LocalSurface::new(j.clone(), (x, y)).ok()?;
                    let b = LocalSurface::new(inv.apply_jet(&j).ok()?, (x, y)).ok()?;
                    let ea = ellipse_from_values(1, &a.alpha_values().ok()?).ok()?;
                    let eb = ellipse_from_values(1, &b.alpha_values().ok()?).ok()?;
                    Some((ea.shape_defect - eb.shape_defect).abs().max((ea.lambda - eb.lambda).abs()))
                })
            })
            .collect();
        inv_vals.extend(vals);
    }
    out.push(CheckRecord::bound(anchors[1].0, anchors[1].1, t.moebius_invariance, g, &inv_vals));

    // far center
    let c = centroid(&cloud);
    let far: Vec<f64> = {
        let mut dir = vec![0.0; c.len()];
        dir[0] = 1.0;
        dir[c.len() - 1] = 1.0;
        let p0 = linalg::axpy(&c, 1e3 * diam / 2f64.sqrt(), &dir);
        let inv = InversionSpec::new(p0.clone(), norm(&p0)).expect("positive radius");
        pts.iter()
            .zip(&g2)
            .filter_map(|(&p, j)| {
                let j = j.as_ref()?;
                let h = LocalSurface::new(j.clone(), p).ok()?.mean_curvature_jet().ok()?.value();
                let ht = LocalSurface::new(inv.apply_jet(j).ok()?, p).ok()?.mean_curvature_jet().ok()?.value();
                Some((norm(&ht) / norm(&h) - 1.0).abs())
            })
            .collect()
    };
    out.push(
        CheckRecord::bound(anchors[2].0, anchors[2].1, t.far_center, g, &far)
            .with("center_distance_over_diameter", json!(1e3)),
    );

    // lattice scan
    let centers = moebius::lattice_centers(&cloud, ctx.config.inversion_lattice.per_axis);
    let radius = ctx.config.inversion_lattice.radius * diam;
    let order = o;
    let pps: Vec<Option<PedalPoint>> = pts.par_iter().map(|&(x, y)| PedalPoint::new(&ctx.f, x, y, order.min(3)).ok()).collect();
    let per_center: Vec<(Option<f64>, Option<[f64; 3]>, usize)> = centers
        .par_iter()
        .map(|p0| {
            let inv = InversionSpec::new(p0.clone(), radius).expect("positive radius");
            let mut hmin: Option<f64> = None;
            let mut sums = [0.0f64; 3];
            let mut n = 0usize;
            let mut poles = 0usize;
            for (j, pp) in g2.iter().zip(&pps) {
                let (Some(j), Some(pp)) = (j, pp) else { continue };
                match inv.apply_jet(j) {
                    Ok(jt) => {
                        if let Ok(l) = LocalSurface::new(jt, pp.sample.point) {
                            if let (Ok(h), Ok(a)) = (l.mean_curvature_jet(), l.alpha_values()) {
                                let s = linalg::singular_values(a.as_ref())[0];
                                let v = norm(&h.value()) / s;
                                hmin = Some(hmin.map_or(v, |m: f64| m.min(v)));
                            }
                        }
                    }
                    Err(_) => poles += 1,
                }
                if let Ok(r) = moebius::minimality_system(pp, p0) {
                    let l = diam;
                    let rn = [r[0] / (l * l), r[1] / (l * l), r[2] / l];
                    for k in 0..3 {
                        sums[k] += rn[k] * rn[k];
                    }
                    n += 1;
                }
            }
            let rms = (n > 0).then(|| sums.map(|s| (s / n as f64).sqrt()));
            (hmin, rms, poles)
        })
        .collect();
    let hvals: Vec<f64> = per_center.iter().filter_map(|c| c.0).collect();
    let poles: usize = per_center.iter().map(|c| c.2).sum();
    out.push(
        CheckRecord::refutation(anchors[3].0, anchors[3].1, t.nonminimal, 1.0, centers.len(), &hvals)
            .with("centers", json!(centers.len()))
            .with("pole_exclusions", json!(poles))
            .with("normalisation", json!("|H| / largest singular value of alpha on a unit frame")),
    );
    let sys: Vec<f64> = per_center.iter().filter_map(|c| c.1.map(|r| norm(&r))).collect();
    let mut r = CheckRecord::refutation(anchors[4].0, anchors[4].1, t.min_system, 1.0, centers.len(), &sys).with("centers", json!(centers.len()));
    for k in 0..3 {
        let v: Vec<f64> = per_center.iter().filter_map(|c| c.1.map(|r| r[k])).collect();
        if let Some(m) = min_of(&v) {
            r.detail(&format!("min_equation_{}", k + 1), json!(m));
        }
    }
    out.push(r);
    out
}

pub fn check_final(ctx: &RunContext) -> Vec<CheckRecord> {
    let g = ctx.grid();
    let t = &ctx.tol;
    let o = ctx.config.jet_order;
    let a = [
        ("final.affine_pedal", "pedal of c f + v is superconformal and conformal to f"),
        ("final.constant_pedal", "v^perp is superconformal"),
        ("final.constant_inversion", "inversion of v^perp centered at v is minimal"),
        ("final.rank", "first normal bundle of the pedal and of its inversions has rank three"),
    ];
    if o < 3 {
        return a.iter().map(|(id, an)| insufficient(t, id, an, g, o, 3)).collect();
    }
    let pts = ctx.usable_points();
    let n = ctx.f.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.rng_seed ^ 0xf1);
    let mut out = Vec::new();

    let mut vals = Vec::new();
    for _ in 0..3 {
        let c = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: Vec<f64> = pts
            .par_iter()
            .filter_map(|&(x, y)| {
                let m = PedalMetrics::compute(&ctx.f, c, &v, x, y, 3);
                if m.excluded.is_some() {
                    return None;
                }
                Some(m.circle_g?.max(m.conformality?))
            })
            .collect();
        vals.extend(m);
    }
    out.push(CheckRecord::bound(a[0].0, a[0].1, t.circle, g, &vals).with("samples", json!(3)));

    let v: Vec<f64> = {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        linalg::scale(&raw, 1.0 / norm(&raw))
    };
    let gv = pedal_affine(&ctx.f, 0.0, &v);
    let inv = InversionSpec::new(v.clone(), 1.0).expect("positive radius");
    let per: Vec<(Option<f64>, Option<f64>)> = pts
        .par_iter()
        .map(|&(x, y)| {
            let Ok(j) = gv.eval(x, y, 2) else { return (None, None) };
            let circ = LocalSurface::new(j.clone(), (x, y))
                .ok()
                .and_then(|l| ellipse_from_values(1, &l.alpha_values().ok()?).ok())
                .map(|e| e.circle_defect);
            let minimal = inv
                .apply_jet(&j)
                .ok()
                .and_then(|jt| LocalSurface::new(jt, (x, y)).ok())
                .and_then(|l| {
                    let h = l.mean_curvature_jet().ok()?.value();
                    let s = linalg::singular_values(l.alpha_values().ok()?.as_ref())[0];
                    Some(norm(&h) / s)
                });
            (circ, minimal)
        })
        .collect();
    let circ: Vec<f64> = per.iter().filter_map(|p| p.0).collect();
    let mins: Vec<f64> = per.iter().filter_map(|p| p.1).collect();
    out.push(CheckRecord::bound(a[1].0, a[1].1, t.circle, g, &circ).with("v", json!(v)));
    out.push(CheckRecord::bound(a[2].0, a[2].1, t.final_minimal, g, &mins).with("v", json!(v)));

    // rank three: pedal of f and of the 3-isotropic preset, with inversions
    let mut bad = 0usize;
    let mut total = 0usize;
    let mut surfaces: Vec<(String, SurfaceEvaluator)> = vec![("primary".into(), pedal_surface(&ctx.f))];
    surfaces.push(("holo4".into(), pedal_surface(&Preset::Holo4.curve().evaluator())));
    let mut per_surface = BTreeMap::new();
    for (name, s) in &surfaces {
        let cloud: Vec<Vec<f64>> = pts.iter().filter_map(|&(x, y)| s.position(x, y).ok()).collect();
        if cloud.len() < 2 {
            continue;
        }
        let mut evs = vec![s.clone()];
        for inv in random_inversions(ctx, &cloud, ctx.config.random_inversions, 0x3a) {
            evs.push(moebius::invert_evaluator(s, &inv));
        }
        let ranks: Vec<usize> = evs
            .par_iter()
            .flat_map_iter(|e| pts.iter().filter_map(move |&(x, y)| rank_at(e, x, y, t.rank)))
            .collect();
        let b = ranks.iter().filter(|&&r| r != 3).count();
        per_surface.insert(name.clone(), json!({"evaluated": ranks.len(), "not_rank_three": b}));
        bad += b;
        total += ranks.len();
    }
    let defect = (total > 0).then_some(bad as f64);
    let mut r = CheckRecord::new(a[3].0, a[3].1, CheckKind::Bound, 0.0, g, defect, 0);
    r.detail("surfaces", json!(per_surface)).detail("inversions_each", json!(ctx.config.random_inversions));
    out.push(r);
    out
}

fn rank_at(s: &SurfaceEvaluator, x: f64, y: f64, tol: f64) -> Option<usize> {
    let l = LocalSurface::new(s.eval(x, y, 2).ok()?, (x, y)).ok()?;
    Some(linalg::numerical_rank(l.alpha_values().ok()?.as_ref(), tol))
}

/// Jets of the pedal against central differences of its positions.
pub fn check_finite_differences(ctx: &RunContext) -> CheckRecord {
    let gs = &ctx.config.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.rng_seed ^ 0xfd);
    let probes: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.gen_range(gs.x0.min(gs.x1)..=gs.x0.max(gs.x1)), rng.gen_range(gs.y0.min(gs.y1)..=gs.y0.max(gs.y1))))
        .collect();
    let g = pedal_surface(&ctx.f);
    let vals: Vec<f64> = probes
        .par_iter()
        .filter_map(|&(x, y)| fd_defect(&g, x, y))
        .collect();
    CheckRecord::bound(
        "hygiene.finite_difference",
        "jet derivatives of the pedal agree with central differences",
        ctx.tol.finite_difference,
        probes.len(),
        &vals,
    )
    .with("step_first", json!(1e-4))
    .with("step_second", json!(2e-4))
}

/// Largest relative mismatch of first and second derivatives.
pub fn fd_defect(s: &SurfaceEvaluator, x: f64, y: f64) -> Option<f64> {
    let j = s.eval(x, y, 2).ok()?;
    let p = |a: f64, b: f64| s.position(a, b).ok();
    let h = 1e-4;
    let fx = linalg::scale(&linalg::sub(&p(x + h, y)?, &p(x - h, y)?), 0.5 / h);
    let fy = linalg::scale(&linalg::sub(&p(x, y + h)?, &p(x, y - h)?), 0.5 / h);
    let k = 2e-4;
    let c = p(x, y)?;
    let second = |a: Vec<f64>, b: Vec<f64>| linalg::scale(&linalg::axpy(&linalg::add(&a, &b), -2.0, &c), 1.0 / (k * k));
    let fxx = second(p(x + k, y)?, p(x - k, y)?);
    let fyy = second(p(x, y + k)?, p(x, y - k)?);
    let fxy = linalg::scale(
        &linalg::sub(
            &linalg::sub(&p(x + k, y + k)?, &p(x + k, y - k)?),
            &linalg::sub(&p(x - k, y + k)?, &p(x - k, y - k)?),
        ),
        0.25 / (k * k),
    );
    let d1 = norm(&j.partial(1, 0)).max(norm(&j.partial(0, 1)));
    let d2 = norm(&j.partial(2, 0)).max(norm(&j.partial(1, 1))).max(norm(&j.partial(0, 2)));
    let e1 = norm(&linalg::sub(&fx, &j.partial(1, 0))).max(norm(&linalg::sub(&fy, &j.partial(0, 1)))) / d1;
    let e2 = norm(&linalg::sub(&fxx, &j.partial(2, 0)))
        .max(norm(&linalg::sub(&fxy, &j.partial(1, 1))))
        .max(norm(&linalg::sub(&fyy, &j.partial(0, 2))))
        / d2;
    Some(e1.max(e2))
}

/// Frame-rotation invariance of scalar invariants at a point.
pub fn rotation_defect(s: &SurfaceEvaluator, x: f64, y: f64, order: usize, angle: f64) -> Option<f64> {
    let a = PointAnalysis::new(s, x, y, order).ok()?;
    let b = PointAnalysis::with_rotation(s, x, y, order, angle).ok()?;
    let sa = crate::geometry::GeometrySample::from_analysis(&a).ok()?;
    let sb = crate::geometry::GeometrySample::from_analysis(&b).ok()?;
    let scale = sa.second.scale().max(1e-300);
    let mut d = ((sa.curvatures.k - sb.curvatures.k).abs() / (scale * scale))
        .max((sa.curvatures.k_n.abs() - sb.curvatures.k_n.abs()).abs() / (scale * scale))
        .max((sa.curvatures.h_norm_sq.sqrt() - sb.curvatures.h_norm_sq.sqrt()).abs() / scale);
    for (ea, eb) in sa.ellipses.iter().zip(&sb.ellipses) {
        d = d.max((ea.a - eb.a).abs() / ea.scale).max((ea.b - eb.b).abs() / ea.scale);
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_semantics() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(lower_quantile(&v, 0.9), Some(2.0));
        assert_eq!(lower_quantile(&v, 1.0), Some(1.0));
        assert_eq!(lower_quantile(&[], 0.9), None);
    }

    #[test]
    fn record_semantics() {
        let r = CheckRecord::bound("a", "b", 1e-3, 3, &[1e-4, 2e-4]);
        assert!(r.pass && r.status == Status::Pass && r.excluded == 1);
        let r = CheckRecord::refutation("a", "b", 1e-3, 0.9, 2, &[1e-4, 2e-2]);
        assert!(!r.pass && r.status == Status::Fail);
        let r = CheckRecord::bound("a", "b", 1e-3, 0, &[]);
        assert_eq!(r.status, Status::Inconclusive);
    }

    #[test]
    fn random_specs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = random_spec(&mut rng);
            s.validate().unwrap();
        }
    }
}
