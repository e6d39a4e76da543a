use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hydrate_sim::compare::{compare_at, TrajectoryTable, Window};
use hydrate_sim::output::{write_run, Report};
use hydrate_sim::run::{run_problem, RunStatus};
use hydrate_sim::{Scenario, SimError};

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn load(name: &str) -> Scenario {
    Scenario::load(&bundled(name)).unwrap()
}

const BUNDLED: [&str; 4] = ["scenario_A", "scenario_B", "scenario_C", "scenario_D"];

#[test]
fn canonical_text_round_trips() {
    for name in BUNDLED {
        let s = load(name);
        let text = s.to_toml();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(back, s, "{name}");
        assert_eq!(back.to_toml(), text);
        assert_eq!(back.digest(), s.digest());
    }
}

#[test]
fn bundled_scenario_a_is_a_safe_pulse() {
    let problem = load("scenario_A").problem().unwrap();
    let oracle = problem.oracle.unwrap();
    assert_eq!(oracle.pulse_length, 0.5);
    let safe = oracle.safe_pulse();
    assert!(safe.safe);
    assert!((safe.margin - 0.1875).abs() < 1e-12);
}

fn run_into(scenario: &Scenario, dir: &Path) -> (RunStatus, Report) {
    let problem = scenario.problem().unwrap();
    let out = run_problem(&problem);
    let (_, report) = write_run(dir, scenario, &problem, &out).unwrap();
    (out.status, report)
}

#[test]
fn identical_runs_write_identical_files() {
    let s = load("scenario_C").with_overrides(Some(40), Some(0.05), Some(1.0));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_into(&s, a.path());
    run_into(&s, b.path());
    for file in ["trajectory.csv", "knots.csv", "scenario.toml"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

fn knots_table(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| headers.iter().zip(r.unwrap().iter()).map(|(k, v)| (k.to_string(), v.to_string())).collect())
        .collect()
}

fn real(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Recomputes the report scalars from the two CSV files.
fn check_report_against_files(dir: &Path) {
    let report = Report::parse(&fs::read_to_string(dir.join("report.txt")).unwrap());
    let knots = knots_table(&dir.join("knots.csv"));
    let table = TrajectoryTable::read(&dir.join("trajectory.csv")).unwrap();
    let close = |key: &str, want: f64| {
        let got = real(&report[key]);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{key}: {got} vs {want}");
    };

    let steps = knots.len() - 1;
    assert_eq!(report["steps_taken"], steps.to_string());
    assert_eq!(real(&report["t_end"]), real(&knots[steps]["t"]));
    let mass: Vec<f64> = knots.iter().map(|k| real(&k["mass"])).collect();
    close("mass_initial", mass[0]);
    close("mass_final", mass[steps]);
    let predicted: f64 = knots[1..].iter().map(|k| real(&k["mass_change"])).sum();
    close("mass_defect", (mass[steps] - mass[0] - predicted).abs());

    // with every knot written the fields reproduce the per-knot columns
    assert_eq!(table.knots.len(), knots.len());
    let h = (table.centers[1] - table.centers[0]).abs();
    for ((t, snap), k) in table.knots.iter().zip(&knots) {
        assert_eq!(*t, real(&k["t"]));
        let m: f64 = snap.u.iter().sum::<f64>() * h;
        assert!((m - real(&k["mass"])).abs() <= 1e-12);
        assert_eq!(snap.saturation.iter().copied().fold(0.0, f64::max), real(&k["max_saturation"]));
        if let Some(q) = snap.q {
            assert_eq!(q, real(&k["q"]));
        }
    }
    let max_s: Vec<f64> = knots.iter().map(|k| real(&k["max_saturation"])).collect();
    close("max_saturation", max_s.iter().copied().fold(0.0, f64::max));
    match max_s.iter().position(|s| *s >= 1.0) {
        Some(j) => {
            let (t0, t1) = (real(&knots[j - 1]["t"]), real(&knots[j]["t"]));
            close("blowup_knot_time", t1);
            close("blowup_crossing_time", t0 + (t1 - t0) * (1.0 - max_s[j - 1]) / (max_s[j] - max_s[j - 1]));
        }
        None => {
            assert_eq!(report["blowup_knot_time"], "none");
            assert_eq!(report["blowup_crossing_time"], "none");
        }
    }

    let iters: Vec<usize> = knots[1..].iter().map(|k| k["iterations"].parse().unwrap()).collect();
    assert_eq!(report["iterations_total"], iters.iter().sum::<usize>().to_string());
    assert_eq!(report["iterations_max"], iters.iter().max().unwrap().to_string());
    assert_eq!(report["step_iterations"], iters.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    let clogged = knots.iter().any(|k| k["clogged"] == "true");
    assert_eq!(report["clogged"], clogged.to_string());
    let flux: Vec<f64> = knots.iter().filter(|k| !k["q"].is_empty()).map(|k| real(&k["q"])).collect();
    match (flux.first(), flux.last()) {
        (Some(a), Some(b)) => {
            close("flux_initial", *a);
            close("flux_final", *b);
        }
        _ => assert_eq!(report["flux_initial"], "none"),
    }
}

#[test]
fn report_is_recomputable_from_the_files() {
    let cases = [
        load("scenario_A").with_overrides(Some(100), Some(0.01), None),
        load("scenario_B").with_overrides(Some(100), Some(0.02), Some(4.5)),
        load("scenario_C").with_overrides(Some(50), Some(0.05), None),
        load("scenario_D"),
    ];
    for mut s in cases {
        s.output.every = 1;
        let dir = tempfile::tempdir().unwrap();
        run_into(&s, dir.path());
        check_report_against_files(dir.path());
    }
}

#[test]
fn exit_statuses_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let (a, report) = run_into(&load("scenario_A").with_overrides(Some(100), Some(0.01), None), dir.path());
    assert_eq!((a, a.exit_code()), (RunStatus::Completed, 0));
    assert_eq!(report.get("exit_code"), Some("0"));
    let (b, report) = run_into(&load("scenario_B").with_overrides(Some(100), Some(0.02), Some(4.5)), dir.path());
    assert_eq!((b, b.exit_code()), (RunStatus::Blowup, 2));
    assert_eq!(report.get("status"), Some("blowup"));
}

#[test]
fn zero_data_give_a_zero_trajectory() {
    let mut s = load("scenario_D");
    s.initial = hydrate_sim::scenario::InitialSpec::Zero;
    s.source = hydrate_sim::scenario::SourceSpec::Zero;
    let out = run_problem(&s.problem().unwrap());
    assert_eq!(out.status, RunStatus::Completed);
    for r in out.trajectory.records() {
        assert!(r.u.iter().chain(&r.chi).chain(&r.saturation).all(|v| *v == 0.0));
    }
}

#[test]
fn scenario_d_respects_the_maximum_estimate() {
    let s = load("scenario_D");
    let problem = s.problem().unwrap();
    let out = run_problem(&problem);
    let tol = problem.params.tol;
    for r in out.trajectory.records() {
        for (i, x) in problem.grid.centers().enumerate() {
            assert!(r.u[i] >= -tol && r.u[i] <= problem.law.ceiling + tol);
            assert!(r.chi[i] <= problem.law.chi_star_at(x) + tol);
        }
    }
}

#[test]
fn cross_checked_runs_agree_across_solver_paths() {
    let mut s = load("scenario_A").with_overrides(Some(60), Some(1.0 / 60.0), None);
    s.solver.method = hydrate_sim::scenario::MethodSpec::Both;
    let out = run_problem(&s.problem().unwrap());
    let gap = out.path_disagreement.unwrap();
    assert!(gap <= 2.0 * s.solver.tol, "{gap}");
}

#[test]
fn oracle_sampled_on_the_grid_has_zero_error() {
    let s = load("scenario_A").with_overrides(Some(50), None, None);
    let problem = s.problem().unwrap();
    let oracle = problem.oracle.unwrap();
    let t = 0.4;
    let mut text = String::from("t,x,variable,value\n");
    for (name, f) in [
        ("u", &(|x| oracle.content(x, t).unwrap()) as &dyn Fn(f64) -> f64),
        ("chi", &|x| oracle.chi(x, t).unwrap()),
        ("S", &|x| oracle.saturation(x, t).unwrap()),
    ] {
        for x in problem.grid.centers() {
            text.push_str(&format!("{t:?},{x:?},{name},{:?}\n", f(x)));
        }
    }
    let table = TrajectoryTable::parse(&text).unwrap();
    let grid = table.grid_on(0.0, 1.0).unwrap();
    let row = compare_at(&table, &grid, &oracle, t, Window::Strict).unwrap();
    assert_eq!(row.cells, 50);
    assert_eq!((row.u.l1, row.chi.linf, row.saturation.linf), (0.0, 0.0, 0.0));
}

#[test]
fn comparison_outside_the_window_is_rejected() {
    let s = load("scenario_A").with_overrides(Some(40), Some(0.025), Some(5.0));
    let problem = s.problem().unwrap();
    let out = run_problem(&problem);
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &s, &problem, &out).unwrap();
    let table = TrajectoryTable::read(&dir.path().join("trajectory.csv")).unwrap();
    let grid = table.grid_on(0.0, 1.0).unwrap();
    let oracle = problem.oracle.unwrap();
    let err = compare_at(&table, &grid, &oracle, 5.0, Window::Strict).unwrap_err();
    assert!(matches!(err, SimError::OutsideValidity { t, .. } if t == 5.0));
    // every cell has seen the tail by t = 5
    let row = compare_at(&table, &grid, &oracle, 5.0, Window::ValidOnly).unwrap();
    assert_eq!(row.cells, 0);
    assert!(matches!(compare_at(&table, &grid, &oracle, 0.123, Window::Strict), Err(SimError::TimeNotFound(_))));
    assert!(matches!(table.grid_on(0.0, 2.0), Err(SimError::GridMismatch)));
}

#[test]
fn validation_collects_every_problem() {
    let mut s = load("scenario_A");
    s.phase.ceiling = 0.03;
    s.boundary.right = Some(0.0);
    s.time.steps = Some(10);
    let err = s.problem().unwrap_err();
    let SimError::Validation(msgs) = err else { panic!("{err}") };
    assert!(msgs.iter().any(|m| m.contains("χ ≤ χ*(x) < R")), "{msgs:?}");
    assert!(msgs.iter().any(|m| m.contains("no outflow boundary condition")), "{msgs:?}");
    assert!(msgs.len() >= 3, "{msgs:?}");

    let mut c = load("scenario_C");
    c.pressure = None;
    let SimError::Validation(msgs) = c.problem().unwrap_err() else { panic!() };
    assert!(msgs.iter().any(|m| m.contains("[pressure]")), "{msgs:?}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = fs::read_to_string(bundled("scenario_A")).unwrap().replace("ceiling = 0.1", "ceiling = 0.1\nceilng = 0.2");
    assert!(matches!(Scenario::from_toml(&text), Err(SimError::Parse(_))));
}
