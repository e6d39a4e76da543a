use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use hydrate_sim::compare::{convergence_rates, family_errors, TrajectoryTable, Window};
use hydrate_sim::output::write_run;
use hydrate_sim::run::run_problem;
use hydrate_sim::{Result, Scenario, SimError};

/// Exit status for usage, input and I/O errors.
const INPUT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "hydrate-sim", version, about = "Methane transport in the hydrate stability zone")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory, knots and report into a directory.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the number of cells.
        #[arg(long)]
        nx: Option<usize>,
        /// Override the time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the final time.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Compare trajectories with the closed-form advection solution.
    Compare {
        scenario: PathBuf,
        /// Trajectory CSV; repeat for a refinement family, coarse to fine.
        #[arg(long = "traj", required = true)]
        traj: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Skip cells outside the validity window instead of failing.
        #[arg(long)]
        window: bool,
    },
    /// Run every `*.toml` scenario of a directory in parallel.
    Sweep {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Parent of the per-scenario output directories.
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Check a scenario file and print its digest.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYDRATE_SIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run { scenario, out, nx, dt, t_end } => run(&scenario, &out, nx, dt, t_end),
        Command::Compare { scenario, traj, times, window } => compare(&scenario, &traj, &times, window),
        Command::Sweep { dir, jobs, out } => sweep(&dir, jobs, &out),
        Command::Validate { scenario } => validate(&scenario),
    };
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn run_one(scenario: Scenario, out: &Path) -> Result<u8> {
    let problem = scenario.problem()?;
    let output = run_problem(&problem);
    let (files, report) = write_run(out, &scenario, &problem, &output)?;
    for key in ["scenario", "status", "steps_taken", "max_saturation", "blowup_crossing_time", "mass_defect"] {
        println!("{key} = {}", report.get(key).unwrap_or(""));
    }
    println!("report = {}", files.report.display());
    if let Some(failure) = &output.failure {
        eprintln!("solver failure: {failure}");
    }
    Ok(output.status.exit_code() as u8)
}

fn run(path: &Path, out: &Path, nx: Option<usize>, dt: Option<f64>, t_end: Option<f64>) -> Result<u8> {
    let scenario = Scenario::load(path)?.with_overrides(nx, dt, t_end);
    run_one(scenario, out)
}

fn compare(path: &Path, trajs: &[PathBuf], times: &[f64], window: bool) -> Result<u8> {
    let scenario = Scenario::load(path)?;
    let problem = scenario.problem()?;
    let oracle = problem.oracle.ok_or_else(|| {
        SimError::Validation(vec!["scenario has no [oracle] block to compare against".into()])
    })?;
    let window = if window { Window::ValidOnly } else { Window::Strict };
    let tables = trajs.iter().map(|p| TrajectoryTable::read(p)).collect::<Result<Vec<_>>>()?;
    let (a, b) = (scenario.domain.x_left, scenario.domain.x_right);
    println!("t,cells,compared,u_l1,u_linf,chi_l1,chi_linf,S_l1,S_linf");
    for &t in times {
        let rows = family_errors(&tables, a, b, &oracle, t, window)?;
        for (n, r) in &rows {
            println!(
                "{t:?},{n},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.cells, r.u.l1, r.u.linf, r.chi.l1, r.chi.linf, r.saturation.l1, r.saturation.linf
            );
        }
        if rows.len() > 1 {
            let family: Vec<(f64, f64)> = rows.iter().map(|(n, r)| ((b - a) / *n as f64, r.u.l1)).collect();
            for ((ratio, order), n) in convergence_rates(&family).iter().zip(rows.keys().skip(1)) {
                println!("# t = {t:?}, n = {n}: u L1 ratio {ratio:.3}, observed order {order:.3}");
            }
        }
    }
    Ok(0)
}

fn sweep(dir: &Path, jobs: usize, out: &Path) -> Result<u8> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| SimError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Parse(format!("cannot start {jobs} workers: {e}")))?;
    let codes: Vec<u8> = pool.install(|| {
        paths
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().unwrap_or_default();
                let result = Scenario::load(path).and_then(|s| {
                    let problem = s.problem()?;
                    let output = run_problem(&problem);
                    write_run(&out.join(stem), &s, &problem, &output)?;
                    Ok(output.status)
                });
                match result {
                    Ok(status) => {
                        println!("{}: {}", path.display(), status.as_str());
                        status.exit_code() as u8
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        INPUT_ERROR
                    }
                }
            })
            .collect()
    });
    // input errors dominate; otherwise the most severe run status
    Ok(if codes.contains(&INPUT_ERROR) { INPUT_ERROR } else { codes.into_iter().max().unwrap_or(0) })
}

fn validate(path: &Path) -> Result<u8> {
    let scenario = Scenario::load(path)?;
    scenario.problem()?;
    println!("{}: valid, digest {}", scenario.name, scenario.digest());
    Ok(0)
}
