//! End-to-end tests of the `twistor` binary: exit codes, report schema,
//! determinism, CSV output, and flag handling.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn twistor(args: &[&str], envs: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twistor"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("no signal"),
        stdout: String::from_utf8(out.stdout).expect("stdout is utf-8"),
        stderr: String::from_utf8(out.stderr).expect("stderr is utf-8"),
    }
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn report(run: &Run) -> Value {
    serde_json::from_str(&run.stdout)
        .unwrap_or_else(|e| panic!("stdout is a JSON report ({e}): {}", run.stdout))
}

fn defect_rows<'a>(rep: &'a Value, check: &str) -> Vec<&'a Value> {
    rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"] == check)
        .flat_map(|c| c["defects"].as_array().unwrap())
        .collect()
}

/// Timing is the one legitimate run-to-run difference; zero it out.
fn zero_seconds(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (key, val) in map.iter_mut() {
                if key == "seconds" {
                    *val = Value::from(0);
                } else {
                    zero_seconds(val);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(zero_seconds),
        _ => {}
    }
}

#[test]
fn list_corpus_names_every_surface_with_model_and_class() {
    let run = twistor(&["list-corpus"], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    for needle in [
        "plane_r4",
        "graph_z2",
        "graph_parab",
        "sphere_tg",
        "clifford",
        "cp1_line",
        "veronese",
        "flat-r4",
        "round-s4",
        "fubini-study-cp2",
        "minimal-not-superminimal",
        "non-minimal",
        "note:",
    ] {
        assert!(run.stdout.contains(needle), "missing {needle:?} in:\n{}", run.stdout);
    }
}

#[test]
fn flat_plane_scenario_passes_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        r#"{
            "schema": "twistor-scenario/1",
            "surface": {"builtin": "plane_r4"},
            "grid": [6, 6],
            "lambda_list": [0.5, 1.0, 2.0],
            "n_theta": 8,
            "checks": ["superminimal", "lagrangian", "minimal-l", "converse", "lie"]
        }"#,
    );
    let run = twistor(&["run", config.to_str().unwrap()], &[]);
    assert_eq!(run.code, 0, "stderr: {}\nstdout: {}", run.stderr, run.stdout);
    let rep = report(&run);
    assert_eq!(rep["schema"], "twistor-report/1");
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["checks"].as_array().unwrap().len(), 5);
    for check in ["superminimal", "lagrangian"] {
        for row in defect_rows(&rep, check) {
            let value = row["value"].as_f64().unwrap();
            assert!(
                value < 1e-10,
                "{check} defect {} = {value}",
                row["name"]
            );
        }
    }
    // Every defect row carries the tolerance it was judged against.
    for check in rep["checks"].as_array().unwrap() {
        for row in check["defects"].as_array().unwrap() {
            assert!(row["tolerance"].as_f64().unwrap() > 0.0);
        }
    }
}

#[test]
fn clifford_fails_both_negative_checks_with_large_defects() {
    let sm = twistor(&["check-superminimal", "clifford", "--grid", "6"], &[]);
    assert_eq!(sm.code, 1, "{}", sm.stderr);
    let rep = report(&sm);
    assert_eq!(rep["passed"], false);
    let vertical = defect_rows(&rep, "superminimal")
        .into_iter()
        .find(|r| r["name"] == "vertical")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!(vertical > 1e-2, "clifford vertical defect = {vertical}");

    let lag = twistor(
        &[
            "check-lagrangian",
            "clifford",
            "--grid",
            "8",
            "--n-theta",
            "8",
            "--lambda",
            "1",
        ],
        &[],
    );
    assert_eq!(lag.code, 1, "{}", lag.stderr);
    let rep = report(&lag);
    for row in defect_rows(&rep, "lagrangian") {
        let value = row["value"].as_f64().unwrap();
        assert!(value > 1e-2, "{} = {value}", row["name"]);
        assert_eq!(row["passed"], false);
    }
}

#[test]
fn verify_lie_prints_an_all_pass_table() {
    let run = twistor(&["verify-lie", "--lambda", "0.5,1,2"], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("PASS"));
    assert!(run.stdout.contains("all pass"));
    assert!(!run.stdout.contains("FAIL  "));
    assert!(run.stdout.contains("worst residual"));
}

#[test]
fn config_problems_exit_two_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();

    let missing = twistor(&["run", "/no/such/config.json"], &[]);
    assert_eq!(missing.code, 2);
    assert!(missing.stderr.contains("cannot read config file"));

    let invalid = write_config(&dir, "{ not json");
    let run = twistor(&["run", invalid.to_str().unwrap()], &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("not valid JSON"));

    let formula = write_config(
        &dir,
        r#"{
            "surface": {
                "name": "broken", "model": "flat-r4",
                "formulas": ["u", "v", "u + * v", "0"],
                "domain": [[-1, 1], [-1, 1]], "grid": [6, 6]
            },
            "checks": ["superminimal"]
        }"#,
    );
    let run = twistor(&["run", formula.to_str().unwrap()], &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("component 2"), "{}", run.stderr);
    assert!(run.stderr.contains("at byte"), "location in: {}", run.stderr);

    let coarse = twistor(&["check-superminimal", "plane_r4", "--grid", "3"], &[]);
    assert_eq!(coarse.code, 2);
    assert!(coarse.stderr.contains("at least 4x4"));

    let tolerance = twistor(
        &["check-superminimal", "plane_r4", "--tolerance", "bogus=1"],
        &[],
    );
    assert_eq!(tolerance.code, 2);
    assert!(tolerance.stderr.contains("unknown tolerance key"));

    let target = twistor(&["check-superminimal", "not_a_surface"], &[]);
    assert_eq!(target.code, 2);
    assert!(target.stderr.contains("list-corpus"));
}

#[test]
fn execution_errors_are_recorded_per_check_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // Parses fine but is not an immersion: both components equal.
    let config = write_config(
        &dir,
        r#"{
            "surface": {
                "name": "collapsed", "model": "flat-r4",
                "formulas": ["u", "u", "0", "0"],
                "domain": [[-1, 1], [-1, 1]], "grid": [6, 6]
            },
            "lambda_list": [1.0],
            "checks": ["superminimal", "lie"]
        }"#,
    );
    let run = twistor(&["run", config.to_str().unwrap()], &[]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    let rep = report(&run);
    let checks = rep["checks"].as_array().unwrap();
    assert_eq!(checks[0]["status"], "error");
    assert!(checks[0]["error"]
        .as_str()
        .unwrap()
        .contains("immersion"));
    // The algebra suite still ran after the broken surface check.
    assert_eq!(checks[1]["name"], "lie");
    assert_eq!(checks[1]["status"], "pass");
}

#[test]
fn reports_are_byte_identical_modulo_timing_and_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        r#"{
            "surface": {"builtin": "graph_z2"},
            "grid": [6, 6],
            "lambda_list": [0.5, 1.0],
            "n_theta": 8,
            "checks": ["superminimal", "lagrangian", "minimal-l", "converse", "lie"]
        }"#,
    );
    let a = twistor(
        &["run", config.to_str().unwrap()],
        &[("RAYON_NUM_THREADS", "1")],
    );
    let b = twistor(
        &["run", config.to_str().unwrap()],
        &[("RAYON_NUM_THREADS", "4")],
    );
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(b.code, 0, "{}", b.stderr);
    let mut ra = report(&a);
    let mut rb = report(&b);
    zero_seconds(&mut ra);
    zero_seconds(&mut rb);
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
}

#[test]
fn csv_flag_writes_one_row_per_defect() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("defects.csv");
    let run = twistor(
        &[
            "check-lagrangian",
            "plane_r4",
            "--grid",
            "5",
            "--n-theta",
            "8",
            "--lambda",
            "1",
            "--sign",
            "plus",
            "--csv",
            csv_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "check,status,defect,value,tolerance,passed,argmax"
    );
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2, "one omega row and one metric row:\n{csv}");
    assert!(body[0].contains("omega[lambda=1, sign=plus]"));
    assert!(body[1].contains("metric-route[lambda=1, sign=plus]"));
}

#[test]
fn tolerance_overrides_flip_the_verdict() {
    // Clifford fails all three superminimality meters at the defaults;
    // loose thresholds turn the same measurements into a pass.
    let relaxed = twistor(
        &[
            "check-superminimal",
            "clifford",
            "--grid",
            "6",
            "--tolerance",
            "vertical=10",
            "--tolerance",
            "circularity=10",
            "--tolerance",
            "holonomy=10",
        ],
        &[],
    );
    assert_eq!(relaxed.code, 0, "{}", relaxed.stderr);
    let rep = report(&relaxed);
    let row = defect_rows(&rep, "superminimal")
        .into_iter()
        .find(|r| r["name"] == "vertical")
        .unwrap();
    assert_eq!(row["tolerance"].as_f64().unwrap(), 10.0);
    assert!(row["value"].as_f64().unwrap() > 1e-2, "still a real defect");
    assert_eq!(row["passed"], true);

    // Below machine epsilon the override itself is rejected as config error.
    let absurd = twistor(
        &[
            "check-superminimal",
            "clifford",
            "--tolerance",
            "vertical=1e-30",
        ],
        &[],
    );
    assert_eq!(absurd.code, 2);
    assert!(absurd.stderr.contains("machine epsilon"), "{}", absurd.stderr);
}

#[test]
fn check_subcommands_accept_a_config_path_and_force_their_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        r#"{
            "surface": {"builtin": "plane_r4"},
            "grid": [5, 5],
            "lambda_list": [2.0],
            "signs": ["minus"],
            "n_theta": 8,
            "checks": ["superminimal", "lie"]
        }"#,
    );
    let run = twistor(&["check-lagrangian", config.to_str().unwrap()], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rep = report(&run);
    let checks = rep["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1, "the subcommand replaces the config's checks");
    assert_eq!(checks[0]["name"], "lagrangian");
    let rows = defect_rows(&rep, "lagrangian");
    assert_eq!(rows.len(), 2, "one lambda, one sign, two routes");
    assert!(rows.iter().all(|r| r["name"]
        .as_str()
        .unwrap()
        .contains("lambda=2, sign=minus")));
}
