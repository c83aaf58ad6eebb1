use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn filmflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filmflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RUN: &str = r#"
seed = 3

[geometry]
m = 1
b = 6.283185307179586
n = 32

[flow]
epsilon = 1e-3
t_end = 0.12

[elasticity]
mu = 1.0
lambda = 1.0
e0 = 0.5
ny = 8

[initial]
mean = 1.0
modes = [{ k = [1], amplitude = 0.01 }, { k = [3], amplitude = 0.002, phase = 0.5 }]

[output]
dir = "out"
snapshot_stride = 2
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn evolve_writes_trace_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", RUN);
    let o = filmflow(&["evolve", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("terminal events: none"));

    let trace = fs::read_to_string(tmp.path().join("out/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("# filmflow-trace v1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..3], ["step", "t", "E_total"]);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // t_end / tau = 0.12 / (b^2 / 1024) rounds up to 4 steps
    assert_eq!(rows.len(), 5);
    let vol = header.iter().position(|h| *h == "volume").unwrap();
    for r in &rows {
        assert!((r[vol] - rows[0][vol]).abs() <= 1e-10 * rows[0][vol]);
    }
    for w in rows.windows(2) {
        assert!(w[1][2] <= w[0][2] + 1e-12);
    }
    assert!(tmp.path().join("out/profiles.csv").exists());
    assert!(tmp.path().join("out/plot.gp").exists());
    assert!(tmp.path().join("out/run.log").exists());
}

#[test]
fn evolve_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", RUN);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(filmflow(&["evolve", &cfg, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(filmflow(&["evolve", &cfg, "--out", b.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(a.join("trace.csv")).unwrap(),
        fs::read_to_string(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn lambda0_rule_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let text = RUN.replace("t_end = 0.12", "t_end = 0.12\nlambda0 = 0.001");
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let o = filmflow(&["evolve", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("flow.lambda0") && err.contains("max slope"), "{err}");
}

#[test]
fn unknown_config_key_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &RUN.replace("ny = 8", "ny = 8\nnx = 4"));
    let o = filmflow(&["evolve", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nx"));
}

#[test]
fn slope_activation_gives_exit_two() {
    // above the flat-film threshold the k = 1 mode grows until the slope bound binds
    let tmp = tempfile::tempdir().unwrap();
    let text = RUN
        .replace(", { k = [3], amplitude = 0.002, phase = 0.5 }", "")
        .replace("mean = 1.0", "mean = 3.7")
        .replace("t_end = 0.12", "t_end = 3.0\nlambda0 = 0.0105");
    let cfg = write_config(tmp.path(), "slope.toml", &text);
    let o = filmflow(&["evolve", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("slope bound active"));
}

#[test]
fn sweep_runs_all_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "a.toml", &RUN.replace("dir = \"out\"", "dir = \"out_a\""));
    let b = write_config(
        tmp.path(),
        "b.toml",
        &RUN.replace("dir = \"out\"", "dir = \"out_b\"").replace("epsilon = 1e-3", "epsilon = 2e-3"),
    );
    let o = filmflow(&["sweep", &a, &b, "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("out_a/trace.csv").exists());
    assert!(tmp.path().join("out_b/trace.csv").exists());
}

#[test]
fn stability_prints_threshold() {
    let o = filmflow(&["stability", "--mu", "1", "--lambda", "1", "--e0", "0.5", "--psi11", "1", "--b", "6.283185307179586"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let d: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("d_loc = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((d - 0.9228487).abs() < 1e-6, "{out}");
}

#[test]
fn stability_infinite_branch() {
    let o = filmflow(&["stability", "--mu", "1", "--lambda", "1", "--e0", "0.01", "--psi11", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("d_loc = inf"));
}

#[test]
fn stability_rejects_bad_moduli() {
    let o = filmflow(&["stability", "--mu", "-1", "--lambda", "1", "--e0", "0.5", "--psi11", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = filmflow(&["stability", "--mu", "1", "--lambda", "1", "--e0", "0.5", "--psi11", "0", "--b", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stability_numeric_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("st");
    let o = filmflow(&[
        "stability", "--mu", "1", "--lambda", "1", "--e0", "0.5", "--psi11", "1", "--b", "6.283185307179586",
        "--numeric", "--n", "64", "--ny", "16", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("stability.json")).unwrap()).unwrap();
    let gap = json["relative_gap"].as_f64().unwrap();
    assert!(gap < 0.1, "{json}");
    let csv = fs::read_to_string(dir.join("second_variation.csv")).unwrap();
    assert!(csv.lines().nth(1) == Some("d,k,second_variation"));
}

#[test]
fn probe_reports_json() {
    let o = filmflow(&["probe", "--id", "H1", "--trials", "20", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = json["report"]["worst_ratio"].as_f64().unwrap();
    assert!(r > 0.0 && r <= 1.0 + 1e-10);
    let again = filmflow(&["probe", "--id", "H1", "--trials", "20", "--seed", "5"]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn probe_pure_mode_is_sharp() {
    let o = filmflow(&["probe", "--id", "A", "--pure-mode", "2", "--trials", "1"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = json["report"]["worst_ratio"].as_f64().unwrap();
    assert!((r - 1.0).abs() < 1e-10, "{r}");
}

#[test]
fn probe_unknown_id_lists_valid_ids() {
    let o = filmflow(&["probe", "--id", "Z"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("A, C, D, H1, morini"), "{err}");
}

#[test]
fn probe_inadmissible_exponent() {
    let o = filmflow(&["probe", "--id", "A", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}
