//! `isopedal` command-line front end.

mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use isopedal::geometry::{isotropy_order, PointAnalysis, SurfaceEvaluator};
use isopedal::linalg::{self, norm};
use isopedal::moebius::{invert_evaluator, InversionSpec};
use isopedal::pedal::{pedal_affine, PedalPoint};
use isopedal::verify::report::{run_all, VerificationReport};
use isopedal::verify::{ConfigError, GridSpec, RunConfig, SeedSpec, Status};
use isopedal::weierstrass::{isotropy_residual, Preset};

use export::Projection;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EXCLUDED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "isopedal", version, about = "Pedal surfaces of isotropic minimal surfaces: generation, export and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Check ids (or id prefixes) to run, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    check: Vec<String>,
    #[arg(long, global = true)]
    jet_order: Option<usize>,
    /// "x0,x1,y0,y1,nx,ny"
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true, value_enum)]
    seed_preset: Option<PresetArg>,
    /// JSON file holding a 3 x n projection matrix for OBJ output.
    #[arg(long, global = true)]
    projection: Option<PathBuf>,
    /// Tolerance override NAME=VALUE; may be repeated.
    #[arg(long, global = true)]
    tol: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the isotropic curve and write its coefficients.
    Generate,
    /// Export meshes of f and its pedal and a CSV of pedal samples.
    Pedal,
    /// Run the checks and write report.json.
    Verify,
    /// Export one surface as OBJ or CSV.
    Export {
        #[arg(long, value_enum, default_value = "g")]
        what: What,
        #[arg(long, value_enum, default_value = "obj")]
        format: Format,
    },
    /// Print a previously written report.
    Report {
        /// Report file; `<out>/report.json` if absent.
        path: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Holo3,
    Holo4,
    Noniso,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum What {
    F,
    G,
    Inverted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Obj,
    Csv,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_FAIL, message: format!("{}: {e}", path.display()) }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure {
                code: EXIT_CONFIG,
                message: format!("cannot read config {}: {e}", p.display()),
            })?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| ConfigError::new("config", e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(k) = cli.jet_order {
        cfg.jet_order = k;
    }
    if let Some(g) = &cli.grid {
        cfg.grid = GridSpec::parse(g)?;
    }
    if let Some(p) = cli.seed_preset {
        cfg.seed = SeedSpec::Preset(match p {
            PresetArg::Holo3 => Preset::Holo3,
            PresetArg::Holo4 => Preset::Holo4,
            PresetArg::Noniso => Preset::Noniso,
        });
    }
    if let Some(p) = &cli.projection {
        let text = fs::read_to_string(p)
            .map_err(|e| ConfigError::new("projection", format!("cannot read {}: {e}", p.display())))?;
        let m: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| ConfigError::new("projection", e.to_string()))?;
        cfg.outputs.projection = Some(m);
    }
    for t in &cli.tol {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| ConfigError::new("tol", format!("expected NAME=VALUE, got `{t}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| ConfigError::new(format!("tolerances.{}", name.trim()), format!("not a number: `{value}`")))?;
        cfg.tolerances.set(name.trim(), v)?;
    }
    if !cli.check.is_empty() {
        cfg.checks = Some(cli.check.clone());
    }
    if let Some(o) = &cli.out {
        cfg.outputs.dir = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let d = PathBuf::from(cfg.outputs.dir.clone().unwrap_or_else(|| "isopedal-out".into()));
    fs::create_dir_all(&d).map_err(|e| io_failure(&d, e))?;
    Ok(d)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn projection(cfg: &RunConfig, n: usize) -> Projection {
    match &cfg.outputs.projection {
        Some(rows) => {
            let (p, warn) = Projection::custom(rows);
            if let Some(w) = warn {
                eprintln!("warning: {w}");
            }
            p
        }
        None => Projection::first_three(n),
    }
}

/// Grid nodes with those inside excluded disks marked absent.
fn mesh_positions(s: &SurfaceEvaluator, grid: &GridSpec) -> Vec<Option<Vec<f64>>> {
    let nodes = grid.nodes();
    export::sample_positions(s, &nodes)
        .into_iter()
        .zip(&nodes)
        .map(|(p, &n)| if grid.in_excluded_disk(n) { None } else { p })
        .collect()
}

fn cmd_generate(cfg: &RunConfig) -> Result<u8, Failure> {
    let curve = cfg.seed.curve()?;
    let n = curve.ambient_dim();
    let residual = isotropy_residual(&curve.phi).abs();
    let dir = out_dir(cfg)?;
    let seed = SeedSpec::Explicit(curve.phi.clone());
    let text = serde_json::to_string_pretty(&seed).expect("serialisable");
    write(&dir.join("curve.json"), &text)?;
    let f = curve.evaluator();
    let pts: Vec<(f64, f64)> = cfg.grid.points().into_iter().step_by(37).take(12).collect();
    let max_m = (n / 2).saturating_sub(1).max(1);
    let iso = isotropy_order(&f, &pts, max_m, 1e-8);
    println!("seed: {}", cfg.seed.describe());
    println!("ambient dimension N = {n}");
    println!("degree of phi = {}", curve.phi.degree());
    println!("isotropy residual = {residual:.3e}");
    println!("isotropy order m = {} (from {} grid points)", iso.order, iso.points_used);
    if let Some(&p) = pts.first() {
        if let Ok(pa) = PointAnalysis::new(&f, p.0, p.1, n.div_ceil(2) + 1) {
            let ranks = pa.flag.ranks();
            println!("normal flag ranks at ({:.3}, {:.3}) = {:?}", p.0, p.1, ranks);
            if n % 2 == 1 && ranks.last() == Some(&1) {
                println!("last normal bundle has rank 1 (odd ambient dimension)");
            }
        }
    }
    if residual > cfg.tolerances.isotropy {
        eprintln!("error: isotropy residual {residual:.3e} exceeds {:.1e}", cfg.tolerances.isotropy);
        return Ok(EXIT_FAIL);
    }
    Ok(0)
}

fn cmd_pedal(cfg: &RunConfig) -> Result<u8, Failure> {
    let curve = cfg.seed.curve()?;
    let n = curve.ambient_dim();
    let f = curve.evaluator();
    let v = cfg.translation_vec(n);
    let g = pedal_affine(&f, cfg.scale, &v);
    let dir = out_dir(cfg)?;
    let proj = projection(cfg, n);
    let (nx, ny) = (cfg.grid.nx, cfg.grid.ny);
    write(&dir.join("f.obj"), &export::obj_mesh(&mesh_positions(&f, &cfg.grid), nx, ny, &proj, "f"))?;
    write(&dir.join("g.obj"), &export::obj_mesh(&mesh_positions(&g, &cfg.grid), nx, ny, &proj, "pedal"))?;
    let pts = cfg.grid.points();
    let samples: Vec<_> = pts
        .iter()
        .map(|&(x, y)| PedalPoint::with_affine(&f, cfg.scale, &v, x, y, 2).ok().map(|p| p.sample))
        .collect();
    write(&dir.join("pedal.csv"), &export::pedal_csv(n, &pts, &samples))?;
    let excluded = samples.iter().filter(|s| s.as_ref().is_none_or(|s| s.excluded())).count();
    println!("excluded points: {excluded} of {}", pts.len());
    Ok(exclusion_code(excluded, pts.len()))
}

fn exclusion_code(excluded: usize, total: usize) -> u8 {
    if 2 * excluded > total {
        eprintln!("error: more than half of the grid is excluded");
        EXIT_EXCLUDED
    } else {
        0
    }
}

fn report_code(r: &VerificationReport) -> u8 {
    if r.excluded_fraction > 0.5 {
        return EXIT_EXCLUDED;
    }
    match r.status {
        Status::Pass => 0,
        _ => EXIT_FAIL,
    }
}

fn print_report(r: &VerificationReport) {
    print!("{}", r.summary());
    for c in r.checks.iter().filter(|c| c.status != Status::Pass) {
        eprintln!("{:?}: {} ({})", c.status, c.id, c.anchor);
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<u8, Failure> {
    let report = run_all(cfg)?;
    let dir = out_dir(cfg)?;
    write(&dir.join("report.json"), &report.to_json())?;
    print_report(&report);
    Ok(report_code(&report))
}

fn default_inversion(g: &SurfaceEvaluator, grid: &GridSpec) -> Option<InversionSpec> {
    let cloud: Vec<Vec<f64>> = grid.points().iter().filter_map(|&(x, y)| g.position(x, y).ok()).collect();
    if cloud.is_empty() {
        return None;
    }
    let n = cloud[0].len();
    let m = cloud.len() as f64;
    let c: Vec<f64> = (0..n).map(|k| cloud.iter().map(|p| p[k]).sum::<f64>() / m).collect();
    let diam = cloud.iter().map(|p| norm(&linalg::sub(p, &c))).fold(0.0, f64::max).max(1e-3) * 2.0;
    let mut center = c;
    center[0] += diam;
    InversionSpec::new(center, diam).ok()
}

fn cmd_export(cfg: &RunConfig, what: What, format: Format) -> Result<u8, Failure> {
    let curve = cfg.seed.curve()?;
    let n = curve.ambient_dim();
    let f = curve.evaluator();
    let g = pedal_affine(&f, cfg.scale, &cfg.translation_vec(n));
    let (surface, name) = match what {
        What::F => (f, "f"),
        What::G => (g, "g"),
        What::Inverted => {
            let inv = match &cfg.inversion {
                Some(i) => i.clone(),
                None => default_inversion(&g, &cfg.grid)
                    .ok_or_else(|| Failure { code: EXIT_FAIL, message: "pedal could not be sampled".into() })?,
            };
            println!("inversion center {:?}, radius {}", inv.center, inv.radius);
            (invert_evaluator(&g, &inv), "inverted")
        }
    };
    let dir = out_dir(cfg)?;
    match format {
        Format::Obj => {
            let pos = mesh_positions(&surface, &cfg.grid);
            let text = export::obj_mesh(&pos, cfg.grid.nx, cfg.grid.ny, &projection(cfg, n), name);
            write(&dir.join(format!("{name}.obj")), &text)?;
        }
        Format::Csv => {
            let text = export::geometry_csv(&surface, &cfg.grid.nodes(), cfg.jet_order);
            write(&dir.join(format!("{name}_geometry.csv")), &text)?;
        }
    }
    Ok(0)
}

fn cmd_report(cli: &Cli, path: Option<&Path>) -> Result<u8, Failure> {
    let p = match path {
        Some(p) => p.to_path_buf(),
        None => cli.out.clone().unwrap_or_else(|| PathBuf::from("isopedal-out")).join("report.json"),
    };
    let text = fs::read_to_string(&p).map_err(|e| io_failure(&p, e))?;
    let r: VerificationReport = serde_json::from_str(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: not a report: {e}", p.display()),
    })?;
    print_report(&r);
    Ok(report_code(&r))
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    if let Command::Report { path } = &cli.command {
        return cmd_report(cli, path.as_deref());
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Pedal => cmd_pedal(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Export { what, format } => cmd_export(&cfg, *what, *format),
        Command::Report { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
