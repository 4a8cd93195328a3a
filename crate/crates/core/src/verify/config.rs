use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cpoly::CVecPoly;
use crate::moebius::InversionSpec;
use crate::weierstrass::{holomorphic_curve, w_generate, IsotropicCurve, IsotropicSpec, Preset};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("configuration error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

/// Source of the isotropic curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpec {
    Preset(Preset),
    Weierstrass(IsotropicSpec),
    /// Components `w_k`; the curve is `(w_1, i w_1, w_2, i w_2, ...)`.
    Holomorphic(CVecPoly),
    /// A curve with isotropic derivative given directly.
    Explicit(CVecPoly),
}

impl SeedSpec {
    pub fn curve(&self) -> Result<IsotropicCurve, ConfigError> {
        let r = match self {
            SeedSpec::Preset(p) => Ok(p.curve()),
            SeedSpec::Weierstrass(s) => w_generate(s),
            SeedSpec::Holomorphic(w) => holomorphic_curve(w),
            SeedSpec::Explicit(phi) => IsotropicCurve::from_phi(phi.clone()),
        };
        r.map_err(|e| ConfigError::new("seed", e.to_string()))
    }

    pub fn describe(&self) -> String {
        match self {
            SeedSpec::Preset(p) => p.name().to_string(),
            SeedSpec::Weierstrass(s) => format!("weierstrass N={} m={}", s.ambient_dim, s.isotropy_order),
            SeedSpec::Holomorphic(w) => format!("holomorphic dim={}", 2 * w.dim()),
            SeedSpec::Explicit(p) => format!("explicit dim={}", p.dim()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    /// Disks `[cx, cy, r]` removed from the grid.
    #[serde(default)]
    pub excluded_disks: Vec<[f64; 3]>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x0: 0.3, x1: 1.3, y0: 0.3, y1: 1.3, nx: 21, ny: 21, excluded_disks: Vec::new() }
    }
}

impl GridSpec {
    /// Parses `"x0,x1,y0,y1,nx,ny"`.
    pub fn parse(s: &str) -> Result<GridSpec, ConfigError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(ConfigError::new("grid", "expected x0,x1,y0,y1,nx,ny"));
        }
        let f = |i: usize, name: &str| {
            parts[i].parse::<f64>().map_err(|_| ConfigError::new(format!("grid.{name}"), "not a number"))
        };
        let u = |i: usize, name: &str| {
            parts[i].parse::<usize>().map_err(|_| ConfigError::new(format!("grid.{name}"), "not an integer"))
        };
        let g = GridSpec {
            x0: f(0, "x0")?,
            x1: f(1, "x1")?,
            y0: f(2, "y0")?,
            y1: f(3, "y1")?,
            nx: u(4, "nx")?,
            ny: u(5, "ny")?,
            excluded_disks: Vec::new(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nx < 2 {
            return Err(ConfigError::new("grid.nx", format!("must be >= 2, got {}", self.nx)));
        }
        if self.ny < 2 {
            return Err(ConfigError::new("grid.ny", format!("must be >= 2, got {}", self.ny)));
        }
        for (name, v) in [("x0", self.x0), ("x1", self.x1), ("y0", self.y0), ("y1", self.y1)] {
            if !v.is_finite() {
                return Err(ConfigError::new(format!("grid.{name}"), "not finite"));
            }
        }
        Ok(())
    }

    /// Row-major list of all nodes (`x` fastest).
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let lerp = |a: f64, b: f64, i: usize, n: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| (lerp(self.x0, self.x1, i, self.nx), lerp(self.y0, self.y1, j, self.ny)))
            .collect()
    }

    pub fn in_excluded_disk(&self, p: (f64, f64)) -> bool {
        self.excluded_disks
            .iter()
            .any(|d| (p.0 - d[0]).hypot(p.1 - d[1]) < d[2])
    }

    /// Nodes outside the excluded disks.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.nodes().into_iter().filter(|&p| !self.in_excluded_disk(p)).collect()
    }
}

/// Thresholds of every check. Bounds are upper limits on normalised
/// defects; refutation thresholds are lower limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub isotropy: f64,
    pub minimality: f64,
    pub gauss_oracle: f64,
    pub gauss_consistency: f64,
    pub wintgen_inequality: f64,
    pub circle: f64,
    pub wintgen: f64,
    pub refute_circle: f64,
    pub refute_fraction: f64,
    pub conformality: f64,
    pub conformal_factor: f64,
    pub normal_bundle: f64,
    pub derivative: f64,
    pub mean_curvature: f64,
    pub laplacian: f64,
    pub homothety: f64,
    pub normal_form_ab: f64,
    pub normal_form_c: f64,
    pub hodge: f64,
    pub inversion_formula: f64,
    pub moebius_invariance: f64,
    pub far_center: f64,
    pub nonminimal: f64,
    pub min_system: f64,
    pub swillmore: f64,
    pub criterion_zero: f64,
    pub criterion_agreement: f64,
    pub kappa_theta: f64,
    pub final_minimal: f64,
    pub rank: f64,
    pub finite_difference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            isotropy: 1e-10,
            minimality: 1e-9,
            gauss_oracle: 1e-6,
            gauss_consistency: 1e-6,
            wintgen_inequality: 1e-9,
            circle: 1e-8,
            wintgen: 1e-7,
            refute_circle: 1e-3,
            refute_fraction: 0.9,
            conformality: 1e-8,
            conformal_factor: 1e-7,
            normal_bundle: 1e-8,
            derivative: 1e-8,
            mean_curvature: 1e-7,
            laplacian: 1e-6,
            homothety: 1e-9,
            normal_form_ab: 1e-7,
            normal_form_c: 1e-6,
            hodge: 1e-8,
            inversion_formula: 1e-7,
            moebius_invariance: 1e-7,
            far_center: 0.05,
            nonminimal: 1e-3,
            min_system: 1e-3,
            swillmore: 1e-3,
            criterion_zero: 1e-6,
            criterion_agreement: 0.99,
            kappa_theta: 1e-3,
            final_minimal: 1e-7,
            rank: 1e-7,
            finite_difference: 1e-5,
        }
    }
}

impl Tolerances {
    /// Sets a named tolerance; the value must be positive.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ConfigError::new(format!("tolerances.{name}"), "must be positive"));
        }
        let mut v = serde_json::to_value(&*self).expect("serializable");
        let obj = v.as_object_mut().expect("object");
        if !obj.contains_key(name) {
            return Err(ConfigError::new(format!("tolerances.{name}"), "unknown tolerance"));
        }
        obj.insert(name.to_string(), serde_json::json!(value));
        *self = serde_json::from_value(v).expect("same shape");
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = serde_json::to_value(self).expect("serializable");
        for (k, x) in v.as_object().expect("object") {
            let x = x.as_f64().unwrap_or(f64::NAN);
            if !(x > 0.0) {
                return Err(ConfigError::new(format!("tolerances.{k}"), "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeSpec {
    /// Centers per principal axis; the lattice has `per_axis^3` centers.
    pub per_axis: usize,
    /// Inversion radius relative to the diameter of the sampled surface.
    pub radius: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec { per_axis: 5, radius: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct OutputSpec {
    pub dir: Option<String>,
    /// 3 x n projection for OBJ export; first three coordinates if absent.
    pub projection: Option<Vec<Vec<f64>>>,
}


/// The single configuration document of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: SeedSpec,
    /// Seed of the negative controls (expected 1- but not 2-isotropic).
    pub control_seed: SeedSpec,
    /// Scale `c` in the pedal of `c f + v`.
    pub scale: f64,
    /// Translation `v`; zero if absent.
    pub translation: Option<Vec<f64>>,
    pub grid: GridSpec,
    pub jet_order: usize,
    pub tolerances: Tolerances,
    pub inversion_lattice: LatticeSpec,
    pub random_inversions: usize,
    pub rng_seed: u64,
    /// Subset of check ids to run; all if absent.
    pub checks: Option<Vec<String>>,
    pub outputs: OutputSpec,
    /// Inversion used by `export --what inverted`; chosen from the pedal's
    /// bounding region if absent.
    pub inversion: Option<InversionSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: SeedSpec::Preset(Preset::Holo3),
            control_seed: SeedSpec::Preset(Preset::Noniso),
            scale: 1.0,
            translation: None,
            grid: GridSpec::default(),
            jet_order: 4,
            tolerances: Tolerances::default(),
            inversion_lattice: LatticeSpec::default(),
            random_inversions: 10,
            rng_seed: 1729,
            checks: None,
            outputs: OutputSpec::default(),
            inversion: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<RunConfig, ConfigError> {
        let c: RunConfig = serde_json::from_str(s).map_err(|e| ConfigError::new("config", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate()?;
        if self.jet_order < 2 {
            return Err(ConfigError::new("jet_order", format!("must be >= 2, got {}", self.jet_order)));
        }
        if self.jet_order > 8 {
            return Err(ConfigError::new("jet_order", format!("must be <= 8, got {}", self.jet_order)));
        }
        self.tolerances.validate()?;
        if !self.scale.is_finite() {
            return Err(ConfigError::new("scale", "not finite"));
        }
        if self.inversion_lattice.per_axis == 0 || !(self.inversion_lattice.radius > 0.0) {
            return Err(ConfigError::new("inversion_lattice", "per_axis and radius must be positive"));
        }
        let curve = self.seed.curve()?;
        if let Some(v) = &self.translation {
            if v.len() != curve.ambient_dim() {
                return Err(ConfigError::new(
                    "translation",
                    format!("length {} does not match ambient dimension {}", v.len(), curve.ambient_dim()),
                ));
            }
        }
        if let Some(p) = &self.outputs.projection {
            if p.len() != 3 || p.iter().any(|r| r.len() != curve.ambient_dim()) {
                return Err(ConfigError::new("outputs.projection", "expected a 3 x n matrix"));
            }
        }
        if let Some(inv) = &self.inversion {
            if inv.center.len() != curve.ambient_dim() {
                return Err(ConfigError::new("inversion.center", "length does not match ambient dimension"));
            }
            if !(inv.radius > 0.0) || !inv.radius.is_finite() {
                return Err(ConfigError::new("inversion.radius", "must be positive"));
            }
        }
        self.control_seed.curve()?;
        Ok(())
    }

    pub fn translation_vec(&self, dim: usize) -> Vec<f64> {
        self.translation.clone().unwrap_or_else(|| vec![0.0; dim])
    }

    /// Hex SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("serializable");
        Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// True if some selected check lies in the group `prefix`.
    pub fn wants_group(&self, prefix: &str) -> bool {
        match &self.checks {
            None => true,
            Some(list) => list
                .iter()
                .any(|c| c == prefix || c.starts_with(&format!("{prefix}.")) || prefix.starts_with(&format!("{c}."))),
        }
    }

    pub fn wants(&self, id: &str) -> bool {
        match &self.checks {
            None => true,
            Some(list) => list.iter().any(|c| id == c || id.starts_with(&format!("{c}."))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&s).unwrap(), c);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn bad_grid_names_field() {
        let e = RunConfig::from_json(r#"{"grid": {"x0":0,"x1":1,"y0":0,"y1":1,"nx":1,"ny":5}}"#).unwrap_err();
        assert_eq!(e.field, "grid.nx");
        let e = GridSpec::parse("0,1,0,1,3").unwrap_err();
        assert_eq!(e.field, "grid");
    }

    #[test]
    fn grid_nodes_row_major() {
        let g = GridSpec::parse("0,1,0,2,3,2").unwrap();
        assert_eq!(g.nodes(), vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (0.0, 2.0), (0.5, 2.0), (1.0, 2.0)]);
    }

    #[test]
    fn tolerance_override() {
        let mut t = Tolerances::default();
        t.set("circle", 1e-6).unwrap();
        assert_eq!(t.circle, 1e-6);
        assert!(t.set("circle", -1.0).is_err());
        assert!(t.set("nope", 1.0).is_err());
    }

    #[test]
    fn seeds_parse() {
        let c = RunConfig::from_json(r#"{"seed": {"preset": "holo4"}}"#).unwrap();
        assert_eq!(c.seed.curve().unwrap().ambient_dim(), 8);
        let c = RunConfig::from_json(
            r#"{"seed": {"holomorphic": [[[0,0],[1,0]], [[0,0],[0,0],[1,0]]]}}"#,
        )
        .unwrap();
        assert_eq!(c.seed.curve().unwrap().ambient_dim(), 4);
        assert!(RunConfig::from_json(r#"{"jet_order": 1}"#).is_err());
    }
}
