//! Runs the selected checks and assembles the report.

use serde::{Deserialize, Serialize};

use super::checks::{self, CheckRecord, RunContext, Status};
use super::config::{ConfigError, GridSpec, RunConfig, Tolerances};

pub const REPORT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub jet_order: usize,
    pub seed: String,
    pub control_seed: String,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    pub config_hash: String,
    /// `+1` for `*w(X) = w(JX)`, `-1` for `*w(X) = -w(JX)`.
    pub hodge_sign: Option<f64>,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub status: Status,
    pub grid_points: usize,
    pub excluded_fraction: f64,
}

impl VerificationReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let defect = c.defect.map_or("-".to_string(), |d| format!("{d:.3e}"));
            let st = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Inconclusive => "INCONCLUSIVE",
            };
            let cmp = match c.kind {
                checks::CheckKind::Bound => "<=",
                checks::CheckKind::Refutation => ">=",
            };
            s.push_str(&format!(
                "{st:<12} {:<28} defect {defect:>10} {cmp} {:.1e}  ({} pts, {} excluded)\n",
                c.id, c.threshold, c.grid, c.excluded
            ));
        }
        s.push_str(&format!(
            "overall: {:?}, excluded fraction {:.3}\n",
            self.status, self.excluded_fraction
        ));
        s
    }
}

/// Overall status: any failure fails; otherwise any inconclusive check
/// (or an empty grid) is inconclusive.
pub fn overall(checks: &[CheckRecord], grid_points: usize) -> Status {
    if checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if grid_points == 0 || checks.is_empty() || checks.iter().any(|c| c.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

pub fn run_checks(ctx: &RunContext) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let want = |id: &str| ctx.config.wants_group(id);
    let mut push = |recs: Vec<CheckRecord>| {
        out.extend(recs.into_iter().filter(|r| ctx.config.wants(&r.id)));
    };
    if want("isotropy.exact") {
        push(vec![checks::check_isotropy(ctx)]);
    }
    if want("minimality.f") {
        push(vec![checks::check_minimality(ctx)]);
    }
    if want("gauss.oracle") {
        push(checks::check_gauss_oracle(ctx).into_iter().collect());
    }
    if want("gauss.consistency") {
        push(vec![checks::check_gauss_consistency(ctx)]);
    }
    if want("wintgen.f") {
        push(vec![checks::check_wintgen_inequality(ctx)]);
    }
    if want("superconformal") {
        push(checks::check_superconformal(ctx));
    }
    if want("conformal") {
        push(checks::check_conformal(ctx));
    }
    if want("normal_bundle") || want("pedal.derivative") {
        push(checks::check_normal_bundle(ctx));
    }
    if want("mean_curvature") {
        push(checks::check_mean_curvature(ctx));
    }
    if want("normal_form") || want("hodge") {
        push(checks::check_normal_form(ctx));
    }
    if want("inversion") {
        push(checks::check_inversion(ctx));
    }
    if want("swillmore") {
        push(checks::check_swillmore(ctx));
    }
    if want("final") {
        push(checks::check_final(ctx));
    }
    if want("hygiene.finite_difference") {
        push(vec![checks::check_finite_differences(ctx)]);
    }
    out
}

pub fn build_report(ctx: &RunContext, checks: Vec<CheckRecord>) -> VerificationReport {
    let grid_points = ctx.grid();
    let excluded_fraction = if grid_points == 0 {
        0.0
    } else {
        ctx.excluded_count() as f64 / grid_points as f64
    };
    VerificationReport {
        version: REPORT_VERSION.into(),
        environment: Environment {
            jet_order: ctx.config.jet_order,
            seed: ctx.config.seed.describe(),
            control_seed: ctx.config.control_seed.describe(),
            grid: ctx.config.grid.clone(),
            tolerances: ctx.tol.clone(),
            config_hash: ctx.config.hash(),
            hodge_sign: ctx.hodge_sign,
            crate_version: env!("CARGO_PKG_VERSION").into(),
        },
        status: overall(&checks, grid_points),
        checks,
        grid_points,
        excluded_fraction,
    }
}

/// Runs every check the configuration selects.
pub fn run_all(config: &RunConfig) -> Result<VerificationReport, ConfigError> {
    let ctx = RunContext::new(config)?;
    let checks = run_checks(&ctx);
    Ok(build_report(&ctx, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_status_rules() {
        let pass = CheckRecord::bound("a", "x", 1.0, 1, &[0.5]);
        let fail = CheckRecord::bound("b", "x", 1.0, 1, &[2.0]);
        let inc = CheckRecord::bound("c", "x", 1.0, 1, &[]);
        assert_eq!(overall(std::slice::from_ref(&pass), 1), Status::Pass);
        assert_eq!(overall(&[pass.clone(), inc.clone()], 1), Status::Inconclusive);
        assert_eq!(overall(&[inc, fail], 1), Status::Fail);
        assert_eq!(overall(&[pass], 0), Status::Inconclusive);
    }
}
