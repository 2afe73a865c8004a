//! Command line front end. Three subcommands map onto the library's three
//! jobs: time-domain simulation, laminate homogenization, and the named
//! verification suites. Everything here is plumbing; the physics lives in
//! the core crate.
//!
//! Exit codes: 0 success, 1 verification checks failed, 2 bad
//! configuration, 3 runtime failure. Failures print one machine-readable
//! line to stderr of the form `error[kind]: message`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use willislab_core::config::{self, Mode, RunConfig};
use willislab_core::csvio;
use willislab_core::error::CoreError;
use willislab_core::homogenize::{effective_dispersion, effective_operators, BlochPoint};
use willislab_core::solver::Solver;
use willislab_core::state::WaveState;
use willislab_core::verify;

#[derive(Parser)]
#[command(name = "willislab", version, about = "Gauge-coupled elastodynamics on pre-stressed media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time-domain simulation and write snapshot tables
    Simulate(RunArgs),
    /// Sweep the homogenizer over a frequency band and write tables
    Homogenize(RunArgs),
    /// Run verification suites and print the check report
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Suite to run (repeatable); overrides the config's selection
    #[arg(long)]
    suite: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            let kind = match err {
                CoreError::Config(_) | CoreError::Expr(_) => "config",
                _ => "runtime",
            };
            eprintln!("error[{kind}]: {err}");
            ExitCode::from(if kind == "config" { 2 } else { 3 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CoreError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load(&args, Mode::Simulate)?;
            run_simulate(&cfg, &args)
        }
        Command::Homogenize(args) => {
            let cfg = load(&args, Mode::Homogenize)?;
            run_homogenize(&cfg, &args)
        }
        Command::Verify(args) => {
            let cfg = load(&args.run, Mode::Verify)?;
            run_verify(&cfg, &args)
        }
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Simulate => "simulate",
        Mode::Homogenize => "homogenize",
        Mode::Verify => "verify",
    }
}

fn load(args: &RunArgs, want: Mode) -> Result<RunConfig, CoreError> {
    let cfg = config::parse_config(&args.config)?;
    if cfg.mode != want {
        return Err(CoreError::Config(format!(
            "config selects `{}` mode but the command is `{}`",
            mode_name(cfg.mode),
            mode_name(want)
        )));
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, args: &RunArgs) -> PathBuf {
    if let Some(dir) = &args.out {
        return dir.clone();
    }
    match &cfg.file.output {
        Some(o) => cfg.base_dir.join(&o.dir),
        None => PathBuf::from("out"),
    }
}

fn run_simulate(cfg: &RunConfig, args: &RunArgs) -> Result<ExitCode, CoreError> {
    let run = config::build_simulation(cfg)?;
    let solver = Solver::new(
        run.variant,
        &run.grid,
        &run.material,
        &run.pre,
        &run.force,
        run.solver.clone(),
    )?;
    let traj = solver.run(&WaveState::zeros(&run.grid))?;
    let dir = out_dir(cfg, args);
    std::fs::create_dir_all(&dir)?;
    csvio::write_trajectory(&dir, &run.grid, &traj)?;
    csvio::write_run_meta(&dir.join("run_meta.txt"), &cfg.hash)?;
    println!(
        "wrote {} snapshots ({} steps, dt {:.6e}) to {}",
        traj.len(),
        run.solver.n_steps,
        traj.dt,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_homogenize(cfg: &RunConfig, args: &RunArgs) -> Result<ExitCode, CoreError> {
    let spec = cfg
        .file
        .homogenize
        .as_ref()
        .ok_or_else(|| CoreError::Config("config has no [homogenize] block".into()))?;
    let lam = config::build_laminate(&spec.laminate)?;
    let step = (spec.omega_max - spec.omega_min) / (spec.n_points - 1) as f64;
    let omegas: Vec<f64> = (0..spec.n_points)
        .map(|i| spec.omega_min + step * i as f64)
        .collect();
    let started = Instant::now();
    let disp = effective_dispersion(&lam, &omegas, spec.n_harmonics)?;
    let mut rows = Vec::new();
    for p in &disp {
        if !p.converged {
            continue;
        }
        let ops = effective_operators(
            &lam,
            &BlochPoint {
                omega: p.omega,
                q: p.q,
                n_harmonics: spec.n_harmonics,
            },
        )?;
        rows.push(csvio::SweepRow { omega: p.omega, q: p.q, ops });
    }
    let dir = out_dir(cfg, args);
    std::fs::create_dir_all(&dir)?;
    csvio::write_dispersion_csv(&dir.join("dispersion.csv"), &disp)?;
    csvio::write_sweep_csv(&dir.join("operators.csv"), &rows)?;
    csvio::write_run_meta(&dir.join("run_meta.txt"), &cfg.hash)?;
    let gaps = disp.len() - rows.len();
    println!(
        "swept {} frequencies ({} without an in-zone root) in {:.2}s; tables in {}",
        disp.len(),
        gaps,
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(cfg: &RunConfig, args: &VerifyArgs) -> Result<ExitCode, CoreError> {
    let spec = cfg
        .file
        .verify
        .as_ref()
        .ok_or_else(|| CoreError::Config("config has no [verify] block".into()))?;
    let suites = if args.suite.is_empty() {
        spec.suites.clone()
    } else {
        args.suite.clone()
    };
    let report = verify::run_suites(&suites, &cfg.hash)?;
    let text = report.render();
    print!("{text}");
    let dir = out_dir(cfg, &args.run);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.txt"), &text)?;
    csvio::write_run_meta(&dir.join("run_meta.txt"), &cfg.hash)?;
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        eprintln!("error[check]: {failed} verification checks failed");
        Ok(ExitCode::from(1))
    }
}
