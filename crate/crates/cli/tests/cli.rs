use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const HEADER: &str = "T,trials,empirical_error,mean_regret,regret_stderr,bound_error,bound_regret,wall_time_ms";

fn funbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funbandit"))
        .args(args)
        .env_remove("FUNBANDIT_WORKERS")
        .output()
        .expect("binary runs")
}

fn example_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_arm_example.json")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
}

#[test]
fn run_writes_one_row_per_budget() {
    let out = funbandit(&["run", "--config", example_config().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some(HEADER));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "100");
    assert_eq!(&rows[0][1], "500");
    assert_eq!(&rows[0][7], "0");
    let error: f64 = rows[0][2].parse().unwrap();
    assert!((0.0..=1.0).contains(&error));
}

#[test]
fn json_carries_the_csv_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("r.csv");
    let json_path = dir.path().join("r.json");
    let config = example_config();
    let config = config.to_str().unwrap();
    for (path, format) in [(&csv_path, "csv"), (&json_path, "json")] {
        let out = funbandit(&["run", "--config", config, "--format", format, "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let json_row = &report["rows"][0];
    for (i, key) in HEADER.split(',').enumerate() {
        let from_csv: f64 = row[i].parse().unwrap();
        let from_json = json_row[key].as_f64().unwrap_or_else(|| panic!("{key} missing"));
        assert_eq!(from_csv, from_json, "{key}");
    }
    assert_eq!(report["metadata"]["seed"], 7);
}

#[test]
fn seed_flag_overrides_config() {
    let config = example_config();
    let config = config.to_str().unwrap();
    let a = funbandit(&["run", "--config", config, "--seed", "1"]);
    let b = funbandit(&["run", "--config", config, "--seed", "1"]);
    let c = funbandit(&["run", "--config", config]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn budget_below_h_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{
            "arms": [{"dist": "bernoulli", "p": 0.9}, {"dist": "bernoulli", "p": 0.5},
                     {"dist": "bernoulli", "p": 0.4}, {"dist": "bernoulli", "p": 0.3}],
            "functional": {"name": "mean"},
            "schedule": {"policy": "sr"},
            "budgets": [1],
            "trials": 5,
            "seed": 1
        }"#,
    );
    let out = funbandit(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T = 1"));
}

#[test]
fn schema_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(example_config()).unwrap();
    let path = write_config(dir.path(), &text.replace("\"mean\"", "\"median\""));
    let out = funbandit(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("functional"));

    let path = write_config(dir.path(), &text.replace("\"p\": 0.45", "\"p\": 1.4"));
    let out = funbandit(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("arms[1].p"));

    let out = funbandit(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn workers_variable_must_be_positive() {
    for bad in ["0", "-3", "many"] {
        let out = Command::new(env!("CARGO_BIN_EXE_funbandit"))
            .args(["run", "--config", example_config().to_str().unwrap()])
            .env("FUNBANDIT_WORKERS", bad)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "FUNBANDIT_WORKERS={bad}");
    }
}

#[test]
fn bound_mean_example() {
    let out = funbandit(&["bound", "--functional", "mean", "--K", "8", "--T", "14014", "--d", "0.2", "--schedule", "sh"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "H"), "14");
    let raw: f64 = field(&text, "bound_raw").parse().unwrap();
    assert!((raw - 6.356e-4).abs() < 1e-7, "{raw}");
    assert_eq!(field(&text, "bound"), field(&text, "bound_raw"));
}

#[test]
fn bound_clamps_but_reports_raw() {
    let out = funbandit(&["bound", "--functional", "mean", "--K", "8", "--T", "1400", "--d", "0.2", "--schedule", "sh"]);
    let text = stdout(&out);
    assert_eq!(field(&text, "bound"), "1");
    assert!(field(&text, "bound_raw").starts_with("5.202"));
}

#[test]
fn bound_other_functionals() {
    let mv = funbandit(&["bound", "--functional", "mv", "--K", "4", "--T", "909", "--d", "0.2", "--lambda", "1", "--A", "0", "--B", "1"]);
    assert!(field(&stdout(&mv), "bound_raw").starts_with("14.62"));
    let var = funbandit(&["bound", "--functional", "var", "--K", "4", "--T", "1000", "--d", "0.2", "--V", "0", "--W", "0.0025"]);
    assert_eq!(field(&stdout(&var), "bound_raw"), "6");
    let avar = funbandit(&[
        "bound", "--functional", "avar", "--K", "2", "--T", "202", "--d", "0.2", "--lambda", "0.5", "--M", "1", "--D", "1",
        "--D-prime", "0",
    ]);
    let text = stdout(&avar);
    assert!(field(&text, "bound_raw").starts_with("3.93"), "{text}");
    let entropy = funbandit(&["bound", "--functional", "entropy", "--K", "4", "--T", "1000", "--d", "0.2", "--c4", "1", "--N", "100"]);
    assert_eq!(field(&stdout(&entropy), "bound_raw"), "24");
}

#[test]
fn bound_errors() {
    let at_h = funbandit(&["bound", "--functional", "mean", "--K", "8", "--T", "14", "--d", "0.2", "--schedule", "sh"]);
    assert_eq!(at_h.status.code(), Some(2));
    let vacuous = funbandit(&["bound", "--functional", "var", "--K", "4", "--T", "1000", "--d", "0.2", "--V", "0.1", "--W", "0.01"]);
    assert_eq!(vacuous.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&vacuous.stderr).contains("vacuous"));
    let unmet = funbandit(&[
        "bound", "--functional", "avar", "--K", "2", "--T", "4", "--d", "0.2", "--lambda", "0.5", "--M", "1", "--D", "1",
        "--D-prime", "0", "--C1", "1",
    ]);
    assert_eq!(unmet.status.code(), Some(4));
    let missing = funbandit(&["bound", "--functional", "mv", "--K", "4", "--T", "909", "--d", "0.2"]);
    assert_eq!(missing.status.code(), Some(2));
    let no_d = funbandit(&["bound", "--functional", "avar", "--K", "2", "--T", "202", "--d", "0.2", "--lambda", "0.5", "--M", "1"]);
    assert_eq!(no_d.status.code(), Some(2));
}

#[test]
fn schedule_examples() {
    let sh = stdout(&funbandit(&["schedule", "--K", "8", "--policy", "sh"]));
    assert_eq!((field(&sh, "L"), field(&sh, "x"), field(&sh, "H")), ("3", "4,2,1", "14"));
    let sr = stdout(&funbandit(&["schedule", "--K", "4", "--policy", "sr", "--T", "90"]));
    assert_eq!((field(&sr, "L"), field(&sr, "x"), field(&sr, "H")), ("3", "1,1,1", "9"));
    assert_eq!(field(&sr, "pulls_per_round"), "40,30,20");
    assert_eq!(field(&sr, "total_pulls"), "90");
    assert_eq!(funbandit(&["schedule", "--K", "1", "--policy", "sr"]).status.code(), Some(2));
    assert_eq!(funbandit(&["schedule", "--K", "4", "--policy", "xx"]).status.code(), Some(2));
}
