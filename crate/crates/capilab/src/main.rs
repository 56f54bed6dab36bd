//! Command-line front end: solve and check single domains, run the cap
//! convergence study, and drive the stability sweeps. All file outputs are
//! deterministic; identical configuration yields byte-identical bytes.

use capilab::config::{parse_level, parse_mode, snap_angle, to_radians, FileConfig};
use capilab::error::{Error, Result};
use capilab::experiments::{
    cmc_sweep, default_amplitudes, default_levels, hk_sweep, rigidity_study, serrin_sweep,
    NeumannChoice, SweepConfig, SweepResult,
};
use capilab::fem::{solve, Solution};
use capilab::geometry::{DomainSpec, Mode, PerturbationMode};
use capilab::meshgen::build;
use capilab::quantities::{capillary_constant, deficit_report, invariant_suite, DeficitReport};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad usage or
/// configuration.
#[derive(Parser)]
#[command(
    name = "capilab",
    version,
    about = "Capillary torsion laboratory: solve, check, and sweep cap-like half-space domains",
    after_help = "Angles are radians unless --deg is given. A --config TOML file (version = 1) \
supplies any flag not set explicitly; explicit flags win. The CAPILAB_THREADS variable caps \
the worker pool used by studies and sweeps. Outputs land in --out and are byte-identical \
across reruns of the same configuration."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one domain and export the mesh, the field, and solver stats.
    Solve(DomainArgs),
    /// Solve one domain, evaluate the full deficit report, and run the
    /// invariant suite; exits 1 if any invariant fails.
    Check(DomainArgs),
    /// Cap convergence study against the closed-form solution.
    Rigidity(RigidityArgs),
    /// Stability sweep of the flux overdetermination deficit.
    SweepSerrin(SweepArgs),
    /// Stability sweep of the curvature deficit.
    SweepCmc(SweepArgs),
    /// Sweep of the curvature-integral excess and its refined margin.
    SweepHk(SweepArgs),
}

#[derive(Args, Clone)]
struct DomainArgs {
    /// TOML config file supplying defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain mode: planar or axisymmetric [default: planar]
    #[arg(long)]
    mode: Option<String>,
    /// Cap radius [default: 1]
    #[arg(long)]
    r: Option<f64>,
    /// Contact angle in (0, pi/2] [default: pi/2]
    #[arg(long)]
    theta: Option<f64>,
    /// Interpret --theta in degrees.
    #[arg(long)]
    deg: bool,
    /// Perturbation wavenumber [default: 2]
    #[arg(long)]
    k: Option<u32>,
    /// Perturbation amplitude; 0 keeps the exact cap [default: 0]
    #[arg(long)]
    a: Option<f64>,
    /// Perturbation phase offset [default: 0]
    #[arg(long)]
    delta: Option<f64>,
    /// Base flux constant [default: the angle-forced value c(theta)]
    #[arg(long)]
    c: Option<f64>,
    /// Radial mesh resolution [default: 64]
    #[arg(long)]
    n_radial: Option<usize>,
    /// Angular mesh resolution [default: 128]
    #[arg(long)]
    n_angular: Option<usize>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RigidityArgs {
    /// TOML config file supplying defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain mode: planar or axisymmetric [default: planar]
    #[arg(long)]
    mode: Option<String>,
    /// Cap radius [default: 1]
    #[arg(long)]
    r: Option<f64>,
    /// Contact angle in (0, pi/2] [default: pi/2]
    #[arg(long)]
    theta: Option<f64>,
    /// Interpret --theta in degrees.
    #[arg(long)]
    deg: bool,
    /// Refinement levels as RADIALxANGULAR [default: 16x32,32x64,64x128]
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<String>>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// TOML config file supplying defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain mode: planar or axisymmetric [default: planar]
    #[arg(long)]
    mode: Option<String>,
    /// Cap radius [default: 1]
    #[arg(long)]
    r: Option<f64>,
    /// Contact angle in (0, pi/2] [default: pi/2]
    #[arg(long)]
    theta: Option<f64>,
    /// Interpret --theta in degrees.
    #[arg(long)]
    deg: bool,
    /// Perturbation wavenumber [default: 2]
    #[arg(long)]
    k: Option<u32>,
    /// Perturbation phase offset [default: 0]
    #[arg(long)]
    delta: Option<f64>,
    /// Amplitudes, comma separated [default: 0.02,0.0431,0.0928,0.2]
    #[arg(long, value_delimiter = ',')]
    amps: Option<Vec<f64>>,
    /// Fixed nonpositive flux constant; flux sweep only
    /// [default: the angle-forced value c(theta)]
    #[arg(long)]
    c: Option<f64>,
    /// Radial mesh resolution [default: 64]
    #[arg(long)]
    n_radial: Option<usize>,
    /// Angular mesh resolution [default: 128]
    #[arg(long)]
    n_angular: Option<usize>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Solve(args) => run_solve(args, false),
        Cmd::Check(args) => run_solve(args, true),
        Cmd::Rigidity(args) => run_rigidity(args),
        Cmd::SweepSerrin(args) => run_sweep(args, Study::Serrin),
        Cmd::SweepCmc(args) => run_sweep(args, Study::Cmc),
        Cmd::SweepHk(args) => run_sweep(args, Study::Hk),
    }
}

fn load_file(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_out(dir: &Path, name: &str, bytes: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

struct DomainRun {
    spec: DomainSpec,
    c: f64,
    n_radial: usize,
    n_angular: usize,
    out: PathBuf,
}

fn resolve_domain(args: DomainArgs) -> Result<DomainRun> {
    let file = load_file(&args.config)?;
    let mode = parse_mode(
        args.mode
            .or(file.mode.clone())
            .as_deref()
            .unwrap_or("planar"),
    )?;
    let degrees = args.deg || file.deg.unwrap_or(false);
    let theta = snap_angle(to_radians(
        args.theta
            .or(file.theta)
            .unwrap_or(std::f64::consts::FRAC_PI_2),
        degrees,
    ));
    let r = args.r.or(file.r).unwrap_or(1.0);
    let a = args.a.or(file.a).unwrap_or(0.0);
    let perturbation = if a != 0.0 {
        vec![PerturbationMode {
            k: args.k.or(file.k).unwrap_or(2),
            a,
            delta: args.delta.or(file.delta).unwrap_or(0.0),
        }]
    } else {
        Vec::new()
    };
    let spec = DomainSpec::new(mode, r, theta, perturbation)?;
    let c = match args.c.or(file.c) {
        Some(v) => v,
        None => capillary_constant(&spec.measures()?, theta),
    };
    Ok(DomainRun {
        spec,
        c,
        n_radial: args.n_radial.or(file.n_radial).unwrap_or(64),
        n_angular: args.n_angular.or(file.n_angular).unwrap_or(128),
        out: out_dir(args.out, &file),
    })
}

fn run_solve(args: DomainArgs, check: bool) -> Result<bool> {
    let run = resolve_domain(args)?;
    let mesh = build(&run.spec, run.n_radial, run.n_angular)?;
    let sol = solve(&run.spec, mesh, run.c)?;

    write_out(&run.out, "mesh.txt", &mesh_export(&sol))?;
    write_out(&run.out, "field.txt", &field_export(&sol))?;
    write_out(&run.out, "solve.json", &json_line(&solve_summary(&sol)))?;
    println!(
        "solved {:?} r={} theta={:.6} c={:.6e}: {} nodes, h={:.3e}, {} cg iters, residual {:.2e}",
        run.spec.mode,
        run.spec.r,
        run.spec.theta,
        sol.c,
        sol.space.n_nodes,
        sol.space.mesh.h_max,
        sol.stats.iterations,
        sol.stats.relative_residual,
    );

    if !check {
        println!("wrote mesh.txt, field.txt, solve.json to {}", run.out.display());
        return Ok(true);
    }

    let gs = run.spec.measures()?;
    let report = deficit_report(&run.spec, &gs, &sol);
    let suite = invariant_suite(&run.spec, &gs, &sol, &report);
    let mut csv = String::from(DeficitReport::csv_header());
    csv.push('\n');
    csv.push_str(&report.csv_row());
    csv.push('\n');
    write_out(&run.out, "report.json", &json_line(&report))?;
    write_out(&run.out, "report.csv", &csv)?;
    write_out(&run.out, "suite.json", &json_line(&suite))?;

    for chk in &suite.checks {
        println!(
            "  {} {:<38} observed {:>13.6e}  bound {:>13.6e}",
            if chk.passed { "pass" } else { "FAIL" },
            chk.name,
            chk.observed,
            chk.bound
        );
    }
    for note in &suite.notes {
        println!("  note: {note}");
    }
    println!(
        "check: serrin deficit {:.6e}, cmc deficit {:.6e}, suite {}",
        report.serrin_deficit,
        report.cmc_deficit,
        if suite.passed { "passed" } else { "FAILED" }
    );
    Ok(suite.passed)
}

fn run_rigidity(args: RigidityArgs) -> Result<bool> {
    let file = load_file(&args.config)?;
    let mode = parse_mode(
        args.mode
            .or(file.mode.clone())
            .as_deref()
            .unwrap_or("planar"),
    )?;
    let degrees = args.deg || file.deg.unwrap_or(false);
    let theta = snap_angle(to_radians(
        args.theta
            .or(file.theta)
            .unwrap_or(std::f64::consts::FRAC_PI_2),
        degrees,
    ));
    let r = args.r.or(file.r).unwrap_or(1.0);
    let levels = match args.levels {
        Some(raw) => raw
            .iter()
            .map(|s| parse_level(s))
            .collect::<Result<Vec<_>>>()?,
        None => match &file.levels {
            Some(ls) => ls.iter().map(|&[a, b]| (a, b)).collect(),
            None => default_levels(),
        },
    };
    let out = out_dir(args.out, &file);

    let study = rigidity_study(mode, r, theta, &levels)?;
    write_out(&out, "rigidity.csv", &study.csv())?;
    write_out(&out, "rigidity.json", &json_line(&study))?;

    for l in &study.levels {
        println!(
            "  {:>3}x{:<3} h={:.3e} field={:.3e} flux={:.3e} center={:.3e} deficit={:.3e}",
            l.n_radial, l.n_angular, l.h, l.field_err, l.flux_err, l.center_err,
            l.serrin_deficit
        );
    }
    let fmt = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "noise".into());
    println!(
        "rigidity: orders field={} flux={} center={} deficit={}; {}",
        fmt(study.orders.field),
        fmt(study.orders.flux),
        fmt(study.orders.center),
        fmt(study.orders.deficit),
        if study.passed { "passed" } else { "FAILED" }
    );
    for note in &study.notes {
        println!("  note: {note}");
    }
    Ok(study.passed)
}

enum Study {
    Serrin,
    Cmc,
    Hk,
}

fn run_sweep(args: SweepArgs, study: Study) -> Result<bool> {
    let file = load_file(&args.config)?;
    let mode = parse_mode(
        args.mode
            .or(file.mode.clone())
            .as_deref()
            .unwrap_or("planar"),
    )?;
    let degrees = args.deg || file.deg.unwrap_or(false);
    let theta = snap_angle(to_radians(
        args.theta
            .or(file.theta)
            .unwrap_or(std::f64::consts::FRAC_PI_2),
        degrees,
    ));
    let mut cfg = SweepConfig::new(
        mode,
        theta,
        args.k.or(file.k).unwrap_or(2),
        args.amps
            .or_else(|| file.amps.clone())
            .unwrap_or_else(default_amplitudes),
    );
    cfg.r = args.r.or(file.r).unwrap_or(1.0);
    cfg.delta = args.delta.or(file.delta).unwrap_or(0.0);
    cfg.n_radial = args.n_radial.or(file.n_radial).unwrap_or(64);
    cfg.n_angular = args.n_angular.or(file.n_angular).unwrap_or(128);
    if let Some(c) = args.c.or(file.c) {
        if !matches!(study, Study::Serrin) {
            return Err(Error::Config(
                "--c applies only to the flux sweep; the others force c(theta)".into(),
            ));
        }
        cfg.choice = NeumannChoice::Fixed(c);
    }
    let out = out_dir(args.out, &file);

    let (name, result) = match study {
        Study::Serrin => ("serrin", serrin_sweep(cfg)?),
        Study::Cmc => ("cmc", cmc_sweep(cfg)?),
        Study::Hk => ("hk", hk_sweep(cfg)?),
    };
    write_out(&out, &format!("sweep-{name}.csv"), &result.csv())?;
    write_out(&out, &format!("sweep-{name}.json"), &json_line(&result))?;
    if let Some(svg) = result.plot_svg() {
        write_out(&out, &format!("sweep-{name}.svg"), &svg)?;
    }
    print_sweep(name, &result);
    Ok(result.passed)
}

fn print_sweep(name: &str, res: &SweepResult) {
    for row in &res.rows {
        println!(
            "  a={:<7.4} deficit={:.4e} rho_gap={:.4e} ratio={} gated={} suite={}",
            row.amplitude,
            row.deficit,
            row.rho_gap,
            row.ratio
                .map(|v| format!("{v:.3e}"))
                .unwrap_or_else(|| "-".into()),
            row.gated,
            if row.suite_passed { "pass" } else { "FAIL" }
        );
    }
    let fmt = |o: Option<f64>| o.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    println!(
        "sweep-{name}: c={:.6e} slope={} spread={} deficit_monotone={} rho_monotone={} {}",
        res.c,
        fmt(res.slope),
        fmt(res.ratio_spread),
        res.deficit_monotone,
        res.rho_monotone,
        if res.passed { "passed" } else { "FAILED" }
    );
    for note in &res.notes {
        println!("  note: {note}");
    }
}

/// Plain-text mesh export, format version 1: a header line
/// `capilab-mesh 1 <mode> <n_vertices> <n_triangles>`, then one `x y` line
/// per vertex, then one `i j k` line of vertex indices per triangle.
fn mesh_export(sol: &Solution) -> String {
    let mesh = &sol.space.mesh;
    let mut s = format!(
        "capilab-mesh 1 {} {} {}\n",
        match mesh.mode {
            Mode::Planar => "planar",
            Mode::Axisymmetric => "axisymmetric",
        },
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    for v in &mesh.vertices {
        s.push_str(&format!("{:.16e} {:.16e}\n", v[0], v[1]));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    s
}

/// Plain-text field export, format version 1: a header line
/// `capilab-field 1 <n_nodes> <c>`, then one `x y f` line per node
/// (vertex nodes first, then edge midpoints, matching the solver ordering).
fn field_export(sol: &Solution) -> String {
    let mut s = format!(
        "capilab-field 1 {} {:.16e}\n",
        sol.space.n_nodes, sol.c
    );
    for i in 0..sol.space.n_nodes {
        let p = sol.space.node_pos[i];
        s.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], sol.f[i]));
    }
    s
}

fn solve_summary(sol: &Solution) -> serde_json::Value {
    let (flux_lo, flux_hi) = sol.flux.node_range();
    let field_max = sol.f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let field_min = sol.f.iter().cloned().fold(f64::INFINITY, f64::min);
    serde_json::json!({
        "format": 1,
        "mode": sol.space.mesh.mode,
        "c": sol.c,
        "n_vertices": sol.space.n_vertices,
        "n_nodes": sol.space.n_nodes,
        "h_max": sol.space.mesh.h_max,
        "min_angle_deg": sol.space.mesh.min_angle_deg,
        "volume": sol.volume_h,
        "base_area": sol.base_h,
        "compatibility_gap": sol.compatibility_gap,
        "cg_iterations": sol.stats.iterations,
        "cg_residual": sol.stats.relative_residual,
        "field_min": field_min,
        "field_max": field_max,
        "flux_min": flux_lo,
        "flux_max": flux_hi,
    })
}
