//! Output files of a run: fields in long CSV form, per-knot diagnostics and
//! a `key = value` report.
//!
//! Real numbers are written in Rust's shortest round-trip form, so reading
//! a file back reproduces the stored values bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hydrate_core::Trajectory;

use crate::error::{Result, SimError};
use crate::run::RunOutput;
use crate::scenario::{Problem, Scenario};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const KNOTS_FILE: &str = "knots.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const SCENARIO_FILE: &str = "scenario.toml";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_real)
}

/// Knots whose fields are written: every `every`-th, the last one, and the
/// two knots bracketing the first `S ≥ 1` crossing.
pub fn written_knots(traj: &Trajectory, every: usize) -> Vec<usize> {
    let last = traj.len().saturating_sub(1);
    let blow = traj.blowup().map(|b| b.knot);
    (0..traj.len())
        .filter(|&j| {
            j % every == 0 || j == last || blow.is_some_and(|k| j == k || j + 1 == k)
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> SimError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::io(path, io),
        other => SimError::Trajectory { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

/// Writes `t,x,variable,value` rows: `u`, `chi` and `S` per cell, then
/// `p_star` per cell and one `q` row with an empty `x` for coupled runs.
pub fn write_trajectory(path: &Path, traj: &Trajectory, knots: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["t", "x", "variable", "value"]).map_err(|e| csv_error(path, e))?;
    let xs: Vec<String> = traj.grid().centers().map(fmt_real).collect();
    for &j in knots {
        let r = &traj.records()[j];
        let t = fmt_real(r.t);
        let mut fields: Vec<(&str, &[f64])> = vec![("u", &r.u), ("chi", &r.chi), ("S", &r.saturation)];
        if let Some(p) = &r.p_star {
            fields.push(("p_star", p));
        }
        for (name, values) in fields {
            for (x, v) in xs.iter().zip(values) {
                w.write_record([t.as_str(), x.as_str(), name, &fmt_real(*v)])
                    .map_err(|e| csv_error(path, e))?;
            }
        }
        if let Some(q) = r.flux {
            w.write_record([t.as_str(), "", "q", &fmt_real(q)]).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Writes one diagnostics row per knot.
pub fn write_knots(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["t", "mass", "max_saturation", "iterations", "residual", "mass_change", "q", "clogged"])
        .map_err(|e| csv_error(path, e))?;
    for (j, r) in traj.records().iter().enumerate() {
        let row = [
            fmt_real(r.t),
            fmt_real(traj.mass(j)),
            fmt_real(traj.max_saturation_at(j)),
            r.iterations.to_string(),
            fmt_real(r.residual),
            r.balance.map(|b| fmt_real(b.mass_change())).unwrap_or_default(),
            r.flux.map(fmt_real).unwrap_or_default(),
            r.clogged.to_string(),
        ];
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Scalar summary of a run, written as `key = value` lines in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub entries: Vec<(&'static str, String)>,
}

impl Report {
    pub fn new(scenario: &Scenario, problem: &Problem, out: &RunOutput) -> Self {
        let traj = &out.trajectory;
        let steps = traj.steps();
        let iterations = traj.iterations();
        let blow = traj.blowup();
        let flux: Vec<f64> = traj.records().iter().filter_map(|r| r.flux).collect();
        let entries = vec![
            ("scenario", scenario.name.clone()),
            ("digest", scenario.digest()),
            ("status", out.status.as_str().to_string()),
            ("exit_code", out.status.exit_code().to_string()),
            ("cells", problem.grid.len().to_string()),
            ("steps_planned", problem.time.steps().to_string()),
            ("steps_taken", steps.to_string()),
            ("t_end", fmt_real(traj.last().t)),
            ("tol", fmt_real(problem.params.tol)),
            ("method", format!("{:?}", scenario.solver.method).to_lowercase()),
            ("iterations_total", iterations.iter().sum::<usize>().to_string()),
            ("iterations_max", iterations.iter().max().copied().unwrap_or(0).to_string()),
            ("step_iterations", iterations.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")),
            ("mass_initial", fmt_real(traj.mass(0))),
            ("mass_final", fmt_real(traj.mass(steps))),
            ("mass_defect", fmt_real(traj.mass_defect())),
            ("mass_defect_bound", fmt_real(steps as f64 * problem.params.tol)),
            ("quadrature_defect", fmt_real(traj.quadrature_defect)),
            ("max_saturation", fmt_real(traj.max_saturation())),
            ("blowup_knot_time", fmt_opt(blow.map(|b| b.knot_time))),
            ("blowup_crossing_time", fmt_opt(blow.map(|b| b.crossing_time))),
            ("entered_extension", traj.entered_extension().to_string()),
            ("clogged", traj.records().iter().any(|r| r.clogged).to_string()),
            ("clog_halt_time", fmt_opt(out.clog_halt)),
            ("flux_initial", fmt_opt(flux.first().copied())),
            ("flux_final", fmt_opt(flux.last().copied())),
            ("path_disagreement", fmt_opt(out.path_disagreement)),
            ("failure", out.failure.clone().unwrap_or_else(|| "none".into()).replace('\n', " ")),
            ("wall_time_s", format!("{:.6}", out.wall_time.as_secs_f64())),
        ];
        Self { entries }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Parses report text into a key → value map.
    pub fn parse(text: &str) -> BTreeMap<String, String> {
        text.lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub trajectory: PathBuf,
    pub knots: PathBuf,
    pub report: PathBuf,
    pub scenario: PathBuf,
}

/// Writes all output files of a run into `dir`, creating it if needed.
pub fn write_run(dir: &Path, scenario: &Scenario, problem: &Problem, out: &RunOutput) -> Result<(RunFiles, Report)> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let files = RunFiles {
        trajectory: dir.join(TRAJECTORY_FILE),
        knots: dir.join(KNOTS_FILE),
        report: dir.join(REPORT_FILE),
        scenario: dir.join(SCENARIO_FILE),
    };
    fs::write(&files.scenario, scenario.to_toml()).map_err(|e| SimError::io(&files.scenario, e))?;
    let knots = written_knots(&out.trajectory, problem.every);
    write_trajectory(&files.trajectory, &out.trajectory, &knots)?;
    write_knots(&files.knots, &out.trajectory)?;
    let report = Report::new(scenario, problem, out);
    fs::write(&files.report, report.to_text()).map_err(|e| SimError::io(&files.report, e))?;
    Ok((files, report))
}
