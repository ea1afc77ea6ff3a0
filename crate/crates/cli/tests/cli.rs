use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn butfpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_butfpi"))
        .args(args)
        .env_remove("BUTFPI_FUEL")
        .output()
        .expect("binary runs")
}

fn program(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "programs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["run", "translate", "simulate", "check", "cost", "scale", "explore"] {
        let o = butfpi(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage: butfpi"), "{sub}");
    }
    assert!(butfpi(&["--help"]).status.success());
}

#[test]
fn translate_number() {
    let o = butfpi(&["translate", &program("five.butf")]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("-- "));
    assert_eq!(lines[1], "o<5>");
}

#[test]
fn check_beta_passes() {
    let o = butfpi(&["check", &program("beta.butf"), "--seeds", "20", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["value_match"], true);
    assert_eq!(r["butf_steps"], 1);
    assert_eq!(r["important"]["min"], 1);
    assert_eq!(r["important"]["max"], 1);
    assert_eq!(r["seeds_run"], 20);
}

#[test]
fn broadcast_is_one_step() {
    let o = butfpi(&["simulate", "--raw", "c:<1> | c(x).0 | c(y).0", "--format", "json"]);
    assert!(o.status.success());
    let r = json(&o);
    let steps = r["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0]["rule"], "BROAD");
    assert_eq!(r["status"], "quiescent");
}

#[test]
fn epi_files_are_accepted() {
    let o = butfpi(&["simulate", &program("broadcast.epi"), "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["steps"].as_array().unwrap().len(), 1);
}

#[test]
fn json_is_deterministic() {
    let runs: [&[&str]; 5] = [
        &["check", "-e", "map (\\x. x + 1, iota 3)", "--seeds", "5", "--format", "json"],
        &["simulate", "-e", "[(\\x. x) 1, 2]", "--seed", "7", "--format", "json"],
        &["cost", "-e", "size (iota 4)", "--seeds", "4", "--format", "json"],
        &["scale", "--family", "nested-apps", "--sizes", "1,2,3", "--format", "json"],
        &["explore", "-e", "[(\\x. x) 1, (\\y. y) 2]", "--format", "json"],
    ];
    for args in runs {
        let a = butfpi(args);
        let b = butfpi(args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn simulate_reads_back_result() {
    let o = butfpi(&["simulate", &program("double.butf"), "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["result"], "[0, 2, 4, 6]");
}

#[test]
fn run_reports_stuck_programs() {
    let o = butfpi(&["run", "-e", "[1, 2][5]", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["status"], "stuck");
    let o = butfpi(&["run", "-e", "(\\x. x) 5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("value 5"));
}

#[test]
fn scale_fits_predicted_shapes() {
    let o = butfpi(&["scale", "--family", "map-over-iota", "--sizes", "1,2,3,4", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("family,n,seed,work,span,admin_steps"));
    assert_eq!(out.lines().count(), 1 + 4 * 3);
}

#[test]
fn usage_and_parse_errors_exit_two() {
    assert_eq!(butfpi(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(butfpi(&["check", "-e", "(\\x. x"]).status.code(), Some(2));
    assert_eq!(butfpi(&["check"]).status.code(), Some(2));
    assert_eq!(butfpi(&["translate", "/nonexistent.butf"]).status.code(), Some(2));
    assert_eq!(butfpi(&["simulate", "--raw", "c<1"]).status.code(), Some(2));
}

#[test]
fn fuel_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_butfpi"))
        .args(["run", "-e", "(\\x. x x) (\\x. x x)", "--format", "json"])
        .env("BUTFPI_FUEL", "50")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["status"], "diverged");
    assert_eq!(r["steps"], 50);
}
