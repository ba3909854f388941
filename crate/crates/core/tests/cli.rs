use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hgsim");

const COHERENT_SH: &str = r#"
scenario_id = "coherent-sh"
pulses = 1000
seed = 5

[source]
kind = "coherent"
mean_photons = 1e6

[[stages]]
kind = "harmonic"
order = 2
eta = 1e-9

[[detectors]]
kind = "charge"
name = "pump"
port = "pump"

[[analyses]]
kind = "efficiency"
orders = [2]

[[analyses]]
kind = "gn"
detector = "pump"
orders = [2, 3]
"#;

fn hgsim(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("HGSIM_OUT").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data lines of a CSV file, metadata line dropped.
fn payload(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

fn summary_value(path: &Path, estimator: &str) -> (f64, f64) {
    let lines = payload(path);
    let header: Vec<&str> = lines[0].split(',').map(|h| h.split(':').next().unwrap()).collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let row = lines[1..]
        .iter()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|r| r[col("estimator_id")] == estimator)
        .unwrap_or_else(|| panic!("no {estimator} row"));
    (row[col("value")].parse().unwrap(), row[col("std_error")].parse().unwrap())
}

#[test]
fn coherent_second_harmonic_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COHERENT_SH);
    let out = hgsim(&["run", &cfg, "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = dir.path().join("res/coherent-sh_summary.csv");
    let (xi, se) = summary_value(&summary, "xi2_over_eta");
    assert!((xi - 1.0).abs() <= 3.0 * se + 1e-9, "{xi} ± {se}");

    let text = fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert!(lines.next().unwrap().starts_with("scenario_id:str,grid_index:i64,"));
    for line in lines {
        assert!(line.starts_with("coherent-sh,0,,,5,"), "{line}");
    }

    let records = payload(&dir.path().join("res/coherent-sh_pulses.csv"));
    assert_eq!(records.len(), 1001);
    assert_eq!(records[0], "pulse:u64,grid_index:u32,status:str,pump:f64,harmonic2:f64,pump_photons:u64,pump_area:f64");
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = COHERENT_SH.replace("kind = \"coherent\"", "kind = \"bsv\"").replace("pulses = 1000", "pulses = 5000");
    let cfg = write_config(dir.path(), "b.toml", &text);
    for (threads, out) in [("1", "t1"), ("4", "t4")] {
        let o = hgsim(&["run", &cfg, "--threads", threads, "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["coherent-sh_pulses.csv", "coherent-sh_summary.csv"] {
        let a = payload(&dir.path().join("t1").join(file));
        let b = payload(&dir.path().join("t4").join(file));
        assert!(a.len() > 2);
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn seed_and_pulse_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &COHERENT_SH.replace("coherent", "thermal"));
    let o = hgsim(&["run", &cfg, "--seed", "77", "--pulses", "300", "--no-records", "--out", "o"], dir.path());
    assert!(o.status.success());
    let rows = payload(&dir.path().join("o/thermal-sh_summary.csv"));
    assert!(rows[1].contains(",77,"));
    assert!(rows[1].ends_with(",300"));
    assert!(!dir.path().join("o/thermal-sh_pulses.csv").exists());
}

#[test]
fn jsonl_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COHERENT_SH);
    let o = hgsim(&["run", &cfg, "--format", "jsonl", "--out", "j"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("j/coherent-sh_summary.jsonl")).unwrap();
    let mut lines = text.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap());
    assert_eq!(lines.next().unwrap()["_meta"]["scenario_id"], "coherent-sh");
    let row = lines.next().unwrap();
    assert_eq!(row["seed"], 5);
    assert!(row["value"].is_f64());
    let records = fs::read_to_string(dir.path().join("j/coherent-sh_pulses.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 1001);
}

#[test]
fn large_runs_are_chunked() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{COHERENT_SH}\n[output]\nchunk_rows = 400\n");
    let cfg = write_config(dir.path(), "c.toml", &text);
    assert!(hgsim(&["run", &cfg, "--out", "o"], dir.path()).status.success());
    let sizes: Vec<usize> = (0..3)
        .map(|k| payload(&dir.path().join(format!("o/coherent-sh_pulses.{k:03}.csv"))).len() - 1)
        .collect();
    assert_eq!(sizes, vec![400, 400, 200]);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COHERENT_SH);
    let o = Command::new(BIN)
        .args(["run", &cfg, "--no-records"])
        .current_dir(dir.path())
        .env("HGSIM_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/coherent-sh_summary.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &COHERENT_SH.replace("seed = 5", "seed = 5\nsed = 6"));
    let o = hgsim(&["run", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coherent-sh"));

    let chain = format!("{COHERENT_SH}\n[[stages]]\nkind = \"absorber\"\nkappa = 1e-6\n");
    let cfg = write_config(dir.path(), "chain.toml", &chain);
    assert_eq!(hgsim(&["run", &cfg], dir.path()).status.code(), Some(2));

    assert_eq!(hgsim(&["reproduce", "fig7"], dir.path()).status.code(), Some(2));
    assert_eq!(hgsim(&["run", "missing.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn empty_post_selection_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = COHERENT_SH.replace(
        "[[stages]]\nkind = \"harmonic\"",
        "[[stages]]\nkind = \"sampler\"\ntap = 0.01\n\n[[stages]]\nkind = \"harmonic\"",
    ) + "\n[[detectors]]\nkind = \"charge\"\nname = \"mon\"\nport = \"monitor\"\n\n[postselect]\nmonitor = \"mon\"\nmode = \"absolute\"\nwindow = [-2.0, -1.0]\n";
    let cfg = write_config(dir.path(), "e.toml", &text);
    let o = hgsim(&["run", &cfg, "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("coherent-sh") && err.contains("empty selection"), "{err}");
}

#[test]
fn emitted_preset_runs_as_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = hgsim(&["reproduce", "fig5-mech", "--emit-config"], dir.path());
    assert!(o.status.success());
    let cfg = write_config(dir.path(), "p.toml", &String::from_utf8(o.stdout).unwrap());
    let o = hgsim(&["run", &cfg, "--pulses", "2000", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = payload(&dir.path().join("o/fig5-mech_summary.csv"));
    assert_eq!(rows.len() - 1, 9 * 3);
}

#[test]
fn gn_table_prints_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = hgsim(&["gn-table", "--max-order", "8"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for v in ["105", "24", "2027025", "40320", "1287/7"] {
        assert!(text.contains(v), "missing {v} in\n{text}");
    }
}
