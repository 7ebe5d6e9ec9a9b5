use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quasidisc::disc::{
    harmonic_residual, hull_containment, minimize_area, pde_residual, principal_curvatures, seed_mesh, ConformalChart,
    DiscError, ProbeStrategy, TriMesh,
};
use quasidisc::geom::SupportPlane;
use quasidisc::harness::{
    parse_config, report_csv, report_json, report_svg, run_sweep, verify_bound, write_text, ConfigMap, FamilySpec,
    HarnessError, SweepSpec,
};
use quasidisc::infinity::{foliation_width, forms_at_infinity, InfinityError};
use quasidisc::teich::{sample_quasicircle, LaurentMap, TeichError};

/// Residual thresholds used by `verify`.
const PDE_LIMIT: f64 = 5e-2;
const HULL_LIMIT: f64 = -5e-2;
const HARMONIC_LIMIT: f64 = 0.1;

#[derive(Parser)]
#[command(name = "quasidisc", version, about = "Minimal discs spanning quasicircles in hyperbolic 3-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family member: map coefficients, boundary samples, data at
    /// infinity and foliation width.
    Generate(Common),
    /// Solve one minimal disc and write the mesh, curvatures and a summary.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Map file of `k re im` lines, used instead of the family.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Run the residual suite on an existing mesh.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Mesh in OFF format with hyperboloid coordinates.
        #[arg(long)]
        mesh: PathBuf,
        /// Map whose quasicircle bounds the mesh; defaults to the family at the first t.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Run the full parameter sweep and check the curvature bounds.
    Sweep(Common),
}

/// Flags mirroring the sweep specification. Each may also come from the
/// `--config` file under the same name; the command line wins.
#[derive(Args, Default)]
struct Common {
    /// `key = value` file supplying any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `c<k>` or `k:re[,im];...`.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    vertices: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hull_planes: Option<usize>,
    #[arg(long)]
    boundary_samples: Option<usize>,
    #[arg(long)]
    pde_plane_height: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

const CONFIG_KEYS: &[&str] = &[
    "family",
    "t",
    "t_min",
    "t_max",
    "steps",
    "vertices",
    "epsilon",
    "tol",
    "max_iters",
    "seed",
    "hull_planes",
    "boundary_samples",
    "pde_plane_height",
    "threads",
    "output_dir",
];

fn pick<T: std::str::FromStr>(cli: Option<T>, file: &ConfigMap, key: &str) -> Result<Option<T>, HarnessError> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| HarnessError::Usage(format!("bad parameter list `{s}`"))))
        .collect()
}

impl Common {
    fn spec(&self) -> Result<SweepSpec, HarnessError> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| HarnessError::Usage(format!("{}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => ConfigMap::default(),
        };
        file.check_keys(CONFIG_KEYS)?;
        let mut spec = SweepSpec::default();
        if let Some(f) = pick(self.family.clone(), &file, "family")? {
            spec.family = f.parse::<FamilySpec>()?;
        }
        let t_min = pick(self.t_min, &file, "t_min")?;
        let t_max = pick(self.t_max, &file, "t_max")?;
        let steps = pick(self.steps, &file, "steps")?;
        let list = pick(self.t.clone(), &file, "t")?;
        match (list, t_min, t_max) {
            (Some(l), _, _) if self.t.is_some() || (self.t_min.is_none() && self.t_max.is_none()) => {
                spec.t_values = parse_list(&l)?
            }
            (_, Some(a), Some(b)) => spec.t_values = SweepSpec::range(a, b, steps.unwrap_or(5))?,
            (_, None, None) => {}
            _ => return Err(HarnessError::Usage("t_min and t_max must be given together".into())),
        }
        let s = &mut spec.solver;
        s.target_vertices = pick(self.vertices, &file, "vertices")?.unwrap_or(s.target_vertices);
        s.epsilon = pick(self.epsilon, &file, "epsilon")?.unwrap_or(s.epsilon);
        s.tol = pick(self.tol, &file, "tol")?.unwrap_or(s.tol);
        s.max_iters = pick(self.max_iters, &file, "max_iters")?.unwrap_or(s.max_iters);
        s.seed = pick(self.seed, &file, "seed")?.unwrap_or(s.seed);
        spec.hull_planes = pick(self.hull_planes, &file, "hull_planes")?.unwrap_or(spec.hull_planes);
        spec.boundary_samples = pick(self.boundary_samples, &file, "boundary_samples")?.unwrap_or(spec.boundary_samples);
        spec.pde_plane_height = pick(self.pde_plane_height, &file, "pde_plane_height")?.unwrap_or(spec.pde_plane_height);
        spec.threads = pick(self.threads, &file, "threads")?.unwrap_or(spec.threads);
        spec.output_dir = pick(self.output_dir.clone(), &file, "output_dir")?;
        spec.validate()?;
        Ok(spec)
    }
}

fn out_dir(spec: &SweepSpec) -> &Path {
    spec.output_dir.as_deref().unwrap_or(Path::new("."))
}

fn load_map(path: &Path) -> Result<LaurentMap, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    Ok(LaurentMap::parse(&text)?)
}

fn generate(common: &Common) -> Result<ExitCode, HarnessError> {
    let spec = common.spec()?;
    let dir = out_dir(&spec);
    for (i, &t) in spec.t_values.iter().enumerate() {
        let psi = spec.family.map(t)?;
        let data = forms_at_infinity(&psi, &spec.infinity_grid)?;
        let width = foliation_width(data.sup_a)?;
        write_text(dir, &format!("map_{i}.txt"), &format!("# t = {t}\n{}", psi.to_text()))?;
        write_text(dir, &format!("quasicircle_{i}.csv"), &sample_quasicircle(&psi, spec.boundary_samples)?.to_csv())?;
        write_text(dir, &format!("infinity_{i}.csv"), &data.to_csv())?;
        let json = serde_json::to_string_pretty(&width).map_err(|e| HarnessError::Io(e.to_string()))?;
        write_text(dir, &format!("width_{i}.json"), &json)?;
        println!("t={t} supA={} width={}", width.sup_a, width.width);
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(common: &Common, map: Option<&Path>) -> Result<ExitCode, HarnessError> {
    let spec = common.spec()?;
    let psi = match map {
        Some(p) => load_map(p)?,
        None => spec.family.map(spec.t_values[0])?,
    };
    let gamma = sample_quasicircle(&psi, spec.boundary_samples)?;
    let solved = minimize_area(&seed_mesh(&gamma, &spec.solver)?, &spec.solver)?;
    let report = principal_curvatures(&solved.mesh, ProbeStrategy::TransportedFrame);
    let dir = out_dir(&spec);
    write_text(dir, "disc.off", &solved.mesh.to_off())?;
    write_text(dir, "curvature.csv", &report.to_csv())?;
    let summary = json!({
        "vertices": solved.mesh.vertices.len(),
        "converged": solved.converged,
        "iterations": solved.iterations,
        "residual": solved.residual,
        "supLambda": report.sup_lambda,
        "maxTrace": report.max_trace,
    });
    write_text(dir, "summary.json", &format!("{summary:#}"))?;
    println!("{summary}");
    Ok(if solved.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn verify(common: &Common, mesh: &Path, map: Option<&Path>) -> Result<ExitCode, HarnessError> {
    let spec = common.spec()?;
    let text = std::fs::read_to_string(mesh).map_err(|e| HarnessError::Usage(format!("{}: {e}", mesh.display())))?;
    let mesh = TriMesh::from_off(&text)?;
    let psi = match map {
        Some(p) => load_map(p)?,
        None => spec.family.map(spec.t_values[0])?,
    };
    let gamma = sample_quasicircle(&psi, spec.boundary_samples)?;
    let curv = principal_curvatures(&mesh, ProbeStrategy::TransportedFrame);
    let pde = pde_residual(&mesh, &SupportPlane::horizontal(spec.pde_plane_height));
    let hull = hull_containment(&mesh, &gamma, spec.hull_planes)?.violation;
    let harmonic = harmonic_residual(&ConformalChart::from_mesh(&mesh)?);
    let checks = [
        ("pde_residual", pde, pde < PDE_LIMIT),
        ("hull_violation", hull, hull >= HULL_LIMIT),
        ("harmonic_residual", harmonic, harmonic < HARMONIC_LIMIT),
    ];
    let mut pass = true;
    for (name, value, ok) in checks {
        println!("{} {name} = {value:e}", if ok { "PASS" } else { "FAIL" });
        pass &= ok;
    }
    println!("sup_lambda = {:e}", curv.sup_lambda);
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn sweep(common: &Common) -> Result<ExitCode, HarnessError> {
    let spec = common.spec()?;
    let report = run_sweep(&spec)?;
    let dir = out_dir(&spec);
    write_text(dir, "sweep.csv", &report_csv(&report)?)?;
    write_text(dir, "sweep.json", &report_json(&report)?)?;
    write_text(dir, "sweep.svg", &report_svg(&report))?;
    for r in &report.records {
        match &r.error {
            Some(e) => eprintln!("t={}: {e}", r.t),
            None => println!("t={} bers_norm={} sup_lambda={}", r.t, r.bers_norm, r.sup_lambda),
        }
    }
    println!("C_fit={} (rms {})  C'_fit={} (rms {})", report.c_fit, report.c_fit_residual, report.c_log_fit, report.c_log_fit_residual);
    match verify_bound(&report) {
        Ok(summary) => {
            let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))?;
            write_text(dir, "verify.json", &json)?;
            for f in &summary.failures {
                eprintln!("FAIL {f}");
            }
            println!("bound check: {}", if summary.pass { "pass" } else { "fail" });
            Ok(if summary.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Err(e @ HarnessError::InsufficientRows(_)) => {
            eprintln!("bound check skipped: {e}");
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => Err(e),
    }
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Usage(_)
        | HarnessError::Io(_)
        | HarnessError::Teich(TeichError::Parse(_))
        | HarnessError::Teich(TeichError::OrderTooLarge(_))
        | HarnessError::Teich(TeichError::NonFinite)
        | HarnessError::Teich(TeichError::NotUnivalent(_))
        | HarnessError::Infinity(InfinityError::Teich(TeichError::NotUnivalent(_)))
        | HarnessError::Disc(DiscError::Config(_))
        | HarnessError::Disc(DiscError::Parse(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Solve { common, map } => solve(common, map.as_deref()),
        Command::Verify { common, mesh, map } => verify(common, mesh, map.as_deref()),
        Command::Sweep(c) => sweep(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
