use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bodt"))
        .args(args)
        .envs(env.iter().copied())
        .output()
        .expect("bodt runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn json(out: &Output) -> Value {
    assert_eq!(
        code(out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"], &[])), 0);
    assert_eq!(code(&run(&["plan", "--help"], &[])), 0);
}

#[test]
fn bad_arguments_exit_one() {
    let sc = fixture("two-regions.toml");
    assert_eq!(
        code(&run(
            &["plan", "--scenario", path_str(&sc), "--beta", "1.5"],
            &[]
        )),
        1
    );
    assert_eq!(
        code(&run(
            &["plan", "--scenario", "no-such-file.toml", "--beta", "0"],
            &[]
        )),
        1
    );
    assert_eq!(code(&run(&["frobnicate"], &[])), 1);
    assert_eq!(
        code(&run(
            &["budget", "--scenario", path_str(&sc), "--budget", "0"],
            &[]
        )),
        1
    );
}

#[test]
fn unreachable_budget_exits_three_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("budget.json");
    let sc = fixture("two-regions.toml");
    let o = run(
        &[
            "budget",
            "--scenario",
            path_str(&sc),
            "--budget",
            "1",
            "--out",
            path_str(&out),
        ],
        &[],
    );
    assert_eq!(code(&o), 3);
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["feasible"], false);
    assert!(dir.path().join("budget.csv").exists());
}

#[test]
fn oracle_cap_exits_four() {
    let sc = fixture("two-regions.toml");
    let o = run(
        &["oracle", "--scenario", path_str(&sc), "--beta", "0.5"],
        &[("BODT_ORACLE_CAP", "10")],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn oracle_gap_is_zero_on_one_task() {
    let sc = fixture("minimal.toml");
    let r = json(&run(
        &["oracle", "--scenario", path_str(&sc), "--beta", "0.3"],
        &[],
    ));
    assert_eq!(r["gap"], 0.0);
    assert_eq!(r["min_blocks"], 1);
}

#[test]
fn single_beta_sweep_matches_plan() {
    let sc = fixture("two-regions.toml");
    let p = json(&run(
        &["plan", "--scenario", path_str(&sc), "--beta", "0.7"],
        &[],
    ));
    let s = json(&run(
        &["sweep", "--scenario", path_str(&sc), "--betas", "0.7"],
        &[],
    ));
    let row = &s["rows"][0];
    assert_eq!(row["chosen"], p["chosen"]["name"]);
    assert_eq!(row["total_blocks"], p["chosen"]["metrics"]["total_blocks"]);
    assert_eq!(row["overall_exec"], p["chosen"]["metrics"]["overall_exec"]);
    assert_eq!(s["monotone"], true);
}

#[test]
fn compare_prefers_sites_near_the_data() {
    let sc = fixture("two-regions.toml");
    let r = json(&run(
        &["compare", "--scenario", path_str(&sc), "--beta", "0"],
        &[],
    ));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows[0]["role"], "decentralised");
    assert_eq!(rows[1]["role"], "centralised");
    assert!(rows[0]["total_blocks"].as_u64() < rows[1]["total_blocks"].as_u64());
    assert_eq!(r["blocks_saved"], 1);
}

#[test]
fn compare_on_one_site_is_a_tie() {
    let sc = fixture("minimal.toml");
    let r = json(&run(
        &["compare", "--scenario", path_str(&sc), "--beta", "0.5"],
        &[],
    ));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows[0]["plan"], rows[1]["plan"]);
    assert_eq!(rows[1]["speedup"], 1.0);
    assert_eq!(r["blocks_saved"], 0);
}

#[test]
fn planned_assignment_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let sc = fixture("two-regions.toml");
    let o = run(
        &[
            "plan",
            "--scenario",
            path_str(&sc),
            "--beta",
            "1",
            "--out",
            path_str(&plan),
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("plan.sites.csv").exists());
    let r = json(&run(
        &[
            "simulate",
            "--scenario",
            path_str(&sc),
            "--plan",
            path_str(&plan),
        ],
        &[],
    ));
    assert_eq!(r["any_underpredicted"], false);
    for row in r["rows"].as_array().unwrap() {
        assert_eq!(row["accurate"], true, "{row}");
    }
}

#[test]
fn generate_writes_a_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.toml");
    let o = run(
        &[
            "generate",
            "--out",
            path_str(&out),
            "--locations",
            "4",
            "--sites",
            "2",
            "--tasks",
            "12",
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    let r = json(&run(
        &["plan", "--scenario", path_str(&out), "--beta", "0"],
        &[],
    ));
    assert_eq!(r["scenario"]["tasks"], 12);
}
