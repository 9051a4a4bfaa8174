//! Golden CSV output for the bundled scenarios. Set `UPDATE_GOLDEN=1` to
//! regenerate after an intentional change.

mod common;

use deba::config::load_scenario;
use deba::csv::write_csv;
use deba::par::Execution;
use deba::sim::{run, Mode};

fn check(scenario: &str, epochs: Option<usize>, mode: Option<Mode>, golden: &str) {
    let mut sc = load_scenario(common::scenario_path(scenario)).unwrap();
    if let Some(n) = epochs {
        sc = sc.with_epochs(n);
    }
    if let Some(m) = mode {
        sc.mode = m;
    }
    let out = run(&sc, Execution::Parallel).unwrap();
    let mut produced = Vec::new();
    write_csv(&out.reports, &mut produced).unwrap();

    let path = common::golden_path(golden);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &produced).unwrap();
        return;
    }
    let expected = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1 to create)", path.display()));
    if produced != expected {
        let produced = String::from_utf8_lossy(&produced);
        let expected = String::from_utf8_lossy(&expected);
        let first = produced
            .lines()
            .zip(expected.lines())
            .position(|(a, b)| a != b)
            .unwrap_or(produced.lines().count().min(expected.lines().count()));
        panic!(
            "{golden} differs at line {}:\n  got      {:?}\n  expected {:?}",
            first + 1,
            produced.lines().nth(first),
            expected.lines().nth(first)
        );
    }
}

#[test]
fn default_scenario_first_30_epochs() {
    check("deba-table1.conf", Some(30), None, "deba-table1-30.csv");
}

#[test]
fn desk_scale_full_run() {
    check("desk-scale.conf", None, None, "desk-scale.csv");
}

#[test]
fn desk_scale_baselines() {
    check("desk-scale.conf", Some(60), Some(Mode::NoOpt), "desk-scale-no-opt-60.csv");
    check("desk-scale.conf", None, Some(Mode::GreedyBaseline), "desk-scale-greedy.csv");
    check("desk-scale.conf", Some(60), Some(Mode::DebaP1), "desk-scale-deba-p1-60.csv");
}
