use std::path::Path;

use hydrate_sim::compare::TrajectoryTable;
use hydrate_sim::output::{fmt_real, write_run, Report};
use hydrate_sim::run::run_problem;
use hydrate_sim::scenario::InitialSpec;
use hydrate_sim::Scenario;
use proptest::prelude::*;

fn scenario_d() -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/scenario_D.toml");
    Scenario::load(&path).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reals_survive_formatting(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn edited_scenarios_round_trip(
        cells in 2usize..5000,
        dt in 1e-6..1.0f64,
        t_end in 1e-3..10.0f64,
        ceiling in 0.05..1.0f64,
        diffusion in 0.0..1.0f64,
        every in 1usize..100,
    ) {
        let mut s = scenario_d().with_overrides(Some(cells), Some(dt), Some(t_end));
        s.phase.ceiling = ceiling;
        s.operator.diffusion = diffusion;
        s.output.every = every;
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.digest(), s.digest());
    }

    #[test]
    fn written_fields_read_back_exactly(
        values in prop::collection::vec(0.0..0.1f64, 2..12),
        steps in 1usize..6,
    ) {
        let mut s = scenario_d();
        s.domain.cells = values.len();
        s.time.steps = Some(steps);
        let points = values.iter().enumerate().map(|(i, v)| [(i as f64 + 0.5) / values.len() as f64, *v]).collect();
        s.initial = InitialSpec::Table { points };
        s.output.every = 1;
        let problem = s.problem().unwrap();
        let out = run_problem(&problem);
        let dir = tempfile::tempdir().unwrap();
        let (files, report) = write_run(dir.path(), &s, &problem, &out).unwrap();
        let table = TrajectoryTable::read(&files.trajectory).unwrap();
        prop_assert_eq!(table.knots.len(), out.trajectory.len());
        for ((t, snap), r) in table.knots.iter().zip(out.trajectory.records()) {
            prop_assert_eq!(*t, r.t);
            prop_assert_eq!(&snap.u, &r.u);
            prop_assert_eq!(&snap.chi, &r.chi);
            prop_assert_eq!(&snap.saturation, &r.saturation);
        }
        let parsed = Report::parse(&std::fs::read_to_string(&files.report).unwrap());
        prop_assert_eq!(parsed.len(), report.entries.len());
        for (k, v) in &report.entries {
            prop_assert_eq!(parsed.get(*k), Some(v));
        }
    }
}

/// Fenced blocks tagged `text file=<dir>/<file>` in the format document.
fn documented_files(doc: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut lines = doc.lines();
    while let Some(line) = lines.next() {
        if let Some(name) = line.strip_prefix("```text file=") {
            let body: String = lines.by_ref().take_while(|l| *l != "```").map(|l| format!("{l}\n")).collect();
            out.push((name.to_string(), body));
        }
    }
    out
}

#[test]
fn format_document_matches_real_output() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let doc = std::fs::read_to_string(root.join("docs/FORMATS.md")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (input, out) in [("docs/example.toml", "tiny_pulse"), ("docs/example_coupled.toml", "tiny_coupled")] {
        let s = Scenario::load(&root.join(input)).unwrap();
        let problem = s.problem().unwrap();
        write_run(&dir.path().join(out), &s, &problem, &run_problem(&problem)).unwrap();
    }
    let blocks = documented_files(&doc);
    assert_eq!(blocks.len(), 7);
    for (name, body) in blocks {
        let path = if name.starts_with("docs/") { root.join(&name) } else { dir.path().join(&name) };
        let actual = std::fs::read_to_string(&path).unwrap();
        let strip = |s: &str| s.split_inclusive('\n').filter(|l| !l.starts_with("wall_time_s")).collect::<String>();
        assert_eq!(strip(&body), strip(&actual), "{name}");
    }
}
