use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled_config() -> PathBuf {
    repo().join("data/synthetic/config.toml")
}

fn scenario(name: &str) -> PathBuf {
    repo().join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitdemand"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV file split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(v: &str) -> f64 {
    v.parse().unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn missing_config_exits_with_input_error() {
    let out = run(&["simulate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn empty_occasions_file_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(repo().join("data/synthetic")).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    std::fs::write(dir.path().join("choice_occasions.csv"), "").unwrap();
    let cfg = dir.path().join("config.toml");
    let out = run(&["estimate-choice", "--config", s(&cfg), "--out", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run(&["simulate", "--config", s(&bundled_config()), "--from", "2012", "--to", "2016", "--out", s(d)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trajectory_stocks.csv", "trajectory_choice.csv", "summary.json", "price_log.csv", "compliance_log.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

fn run_scenario(spec: &str, baseline: &str, out: &Path) {
    let o = run(&[
        "scenario",
        "--config",
        s(&bundled_config()),
        "--spec",
        s(&scenario(spec)),
        "--baseline",
        s(&scenario(baseline)),
        "--out",
        s(out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fragments_appear_in_the_event_year() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("fragmentation_high.toml", "baseline_2012.toml", dir.path());
    let base = rows(&dir.path().join("baseline/trajectory_stocks.csv"));
    let cf = rows(&dir.path().join("counterfactual/trajectory_stocks.csv"));
    let added = |shell: &str| {
        let pick = |rs: &[Vec<String>]| {
            rs.iter()
                .find(|r| r[0] == "2014" && r[1] == "COF" && r[2] == shell)
                .map(|r| num(&r[3]))
                .unwrap()
        };
        pick(&cf) - pick(&base)
    };
    assert!((added("14") - 500.0).abs() < 1e-6);
    assert!((added("15") - 125.0).abs() < 1e-6);
}

#[test]
fn cost_shock_halves_prices_below_cut() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("cost_cut.toml", "cost_cut_baseline.toml", dir.path());
    let log = rows(&dir.path().join("counterfactual/price_log.csv"));
    let mut checked = 0;
    for r in &log {
        let (year, shell) = (num(&r[0]) as i32, num(&r[2]) as usize);
        let (launch, shell_price) = (num(&r[3]), num(&r[4]));
        let expected = if year >= 2024 && shell < 8 { 0.5 * launch } else { launch };
        assert!((shell_price - expected).abs() <= 1e-12 * launch, "{r:?}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn compliance_ramp_reaches_full_by_end_year() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("pmd_ramp.toml", "pmd_ramp_baseline.toml", dir.path());
    let log = rows(&dir.path().join("counterfactual/compliance_log.csv"));
    let at_2025: Vec<f64> = log.iter().filter(|r| r[0] == "2025").map(|r| num(&r[2])).collect();
    assert_eq!(at_2025.len(), 5);
    assert!(at_2025.iter().all(|&v| v == 1.0));
    let at_2021: Vec<f64> = log.iter().filter(|r| r[0] == "2021").map(|r| num(&r[2])).collect();
    assert!(at_2021.iter().all(|&v| v < 1.0));
}
