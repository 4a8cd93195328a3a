use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isopedal::geometry::{curvatures, second_fundamental};
use isopedal::verify::checks::{pinned, rotation_defect};
use isopedal::verify::report::run_all;
use isopedal::verify::{CheckKind, GridSpec, RunConfig, SeedSpec, Status};
use isopedal::weierstrass::Preset;

fn random_orthogonal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    (0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect()
}

fn rotated(seed: Preset, q: &[Vec<f64>]) -> SeedSpec {
    SeedSpec::Explicit(seed.curve().phi.transform_real(q).unwrap())
}

fn small_grid() -> GridSpec {
    GridSpec { nx: 9, ny: 9, ..GridSpec::default() }
}

#[test]
fn defects_invariant_under_ambient_rotation() {
    let q = random_orthogonal(6, 11);
    let ids = [
        "minimality.f",
        "gauss.consistency",
        "wintgen.f",
        "superconformal",
        "conformal",
        "normal_bundle",
        "pedal.derivative",
        "mean_curvature.formula",
        "mean_curvature.laplacian",
        "normal_form",
        "hodge",
        "swillmore.defect",
        "swillmore.kappa_theta",
        "inversion.nonminimal",
        "inversion.min_system",
    ];
    let base = RunConfig {
        grid: small_grid(),
        checks: Some(ids.iter().map(|s| s.to_string()).collect()),
        ..RunConfig::default()
    };
    let turned = RunConfig {
        seed: rotated(Preset::Holo3, &q),
        control_seed: rotated(Preset::Noniso, &q),
        ..base.clone()
    };
    let a = run_all(&base).unwrap();
    let b = run_all(&turned).unwrap();
    assert_eq!(a.checks.len(), b.checks.len());
    assert!(a.checks.len() >= 20);
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.id, y.id);
        let (dx, dy) = (x.defect.unwrap(), y.defect.unwrap());
        assert!((dx - dy).abs() <= 1e-8, "{}: {dx:e} vs {dy:e}", x.id);
    }
}

#[test]
fn default_thresholds_are_separated_by_a_factor_ten() {
    let r = run_all(&RunConfig::default()).unwrap();
    for c in &r.checks {
        assert_eq!(pinned(&c.id, &r.environment.tolerances), (c.threshold, c.kind), "{}", c.id);
        let d = c.defect.expect("defect present");
        match (c.kind, c.id.as_str()) {
            // count of rank failures and agreement fraction are not magnitudes
            (_, "final.rank") | (_, "swillmore.criterion") => assert!(c.pass, "{}", c.id),
            (CheckKind::Bound, _) => assert!(d * 10.0 <= c.threshold, "{}: {d:e} vs {:e}", c.id, c.threshold),
            (CheckKind::Refutation, _) => assert!(d >= 10.0 * c.threshold, "{}: {d:e} vs {:e}", c.id, c.threshold),
        }
    }
}

#[test]
fn low_jet_order_is_reported_not_guessed() {
    let cfg = RunConfig {
        jet_order: 2,
        grid: GridSpec { nx: 4, ny: 4, ..GridSpec::default() },
        checks: Some(vec!["swillmore".into(), "superconformal".into(), "conformal".into()]),
        ..RunConfig::default()
    };
    let r = run_all(&cfg).unwrap();
    let s = r.check("swillmore.defect").unwrap();
    assert_eq!(s.status, Status::Inconclusive);
    let reason = s.details["reason"].as_str().unwrap();
    assert!(reason.contains("insufficient jet order"), "{reason}");
    assert_eq!(r.check("superconformal.pedal").unwrap().status, Status::Inconclusive);
    assert_eq!(r.check("conformal.pedal").unwrap().status, Status::Pass);
    assert_eq!(r.status, Status::Inconclusive);
}

#[test]
fn empty_grid_is_inconclusive() {
    let cfg = RunConfig {
        grid: GridSpec { nx: 3, ny: 3, excluded_disks: vec![[0.8, 0.8, 2.0]], ..GridSpec::default() },
        ..RunConfig::default()
    };
    let r = run_all(&cfg).unwrap();
    assert_eq!(r.grid_points, 0);
    assert_eq!(r.status, Status::Inconclusive);
    assert!(r.checks.iter().all(|c| c.status != Status::Fail || c.id == "isotropy.exact"));
}

#[test]
fn affine_pedal_with_zero_scale_is_rejected_by_verify() {
    let cfg = RunConfig { scale: 0.0, ..RunConfig::default() };
    let e = run_all(&cfg).unwrap_err();
    assert_eq!(e.field, "scale");
}

#[test]
fn determinism_of_reports() {
    let cfg = RunConfig {
        grid: small_grid(),
        checks: Some(vec!["isotropy".into(), "final".into(), "hygiene".into()]),
        ..RunConfig::default()
    };
    assert_eq!(run_all(&cfg).unwrap().to_json(), run_all(&cfg).unwrap().to_json());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariants_do_not_depend_on_tangent_frame(x in 0.2f64..1.4, y in 0.2f64..1.4, t in 0.0f64..6.3) {
        let f = Preset::Holo3.curve().evaluator();
        let d = rotation_defect(&f, x, y, 4, t).unwrap();
        prop_assert!(d <= 1e-9, "{}", d);
        let g = isopedal::pedal::pedal_surface(&f);
        let d = rotation_defect(&g, x, y, 3, t).unwrap();
        prop_assert!(d <= 1e-8, "{}", d);
    }

    #[test]
    fn wintgen_inequality_on_isotropic_surfaces(x in -1.5f64..1.5, y in -1.5f64..1.5, which in 0usize..3) {
        let p = [Preset::Holo3, Preset::Holo4, Preset::Noniso][which];
        let f = p.curve().evaluator();
        prop_assume!(x.abs() + y.abs() > 1e-3);
        let c = curvatures(&f, x, y).unwrap();
        let s = second_fundamental(&f, x, y).unwrap().scale();
        prop_assert!(c.wintgen_defect >= -1e-9 * s * s, "{} {}", c.wintgen_defect, s);
    }
}
