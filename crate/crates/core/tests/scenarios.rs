use std::path::PathBuf;

use crashclique::harness::{run_scenario_file, Scenario};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_run() {
    let mut seen = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scn") {
            let rows =
                run_scenario_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!rows.is_empty());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn shipped_scenarios_round_trip() {
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(
            Scenario::parse(&s.to_text()).unwrap(),
            s,
            "{}",
            path.display()
        );
    }
}

#[test]
fn repetitions_reproduce_rounds() {
    let rows = run_scenario_file(&scenario_dir().join("tc_random.scn")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(
        |r| r.rounds_total == rows[0].rounds_total && r.crashes_total == rows[0].crashes_total
    ));
}
