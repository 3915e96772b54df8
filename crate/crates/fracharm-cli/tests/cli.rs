use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracharm"));
    c.env_remove("FRACHARM_OUT");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn fracharm")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn without_timestamp(s: &str) -> String {
    s.lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn figure1_writes_deterministic_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = run(&["figure1", "--out", d, "--points", "21"], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let csv = read(&a.join("figure1_alpha_1_3.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,E"));
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    // mantissa digits: 1 before the point, 16 after
    let mant = row[1].split('e').next().unwrap();
    assert_eq!(mant.replace(['.', '-'], "").len(), 17, "{}", row[1]);
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let (x, y) = (read(&a.join(&name)), read(&b.join(&name)));
        assert_eq!(without_timestamp(&x), without_timestamp(&y), "{name:?} differs between runs");
    }
    let m: serde_json::Value = serde_json::from_str(&read(&a.join("figure1.json"))).unwrap();
    let keys: Vec<&String> = m.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["command", "version", "core_version", "parallel", "seed", "inputs", "results", "checks", "artifacts", "passed", "timestamp"]
    );
    assert_eq!(m["passed"], true);
    assert_eq!(m["seed"], 7);
}

#[test]
fn flags_beat_config_and_env_sets_output() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.cfg"), "# eigen settings\nbasis = 6\ntests = 3\nseed = 11\nout = from_cfg\n").unwrap();
    let o = run(&["eigen", "--config", "run.cfg", "--tests", "2"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("from_cfg/eigen.json"))).unwrap();
    assert_eq!(m["inputs"]["basis"], 6);
    assert_eq!(m["inputs"]["tests"], 2);
    assert_eq!(m["seed"], 11);

    let o = bin().args(["eigen", "--config", "run.cfg", "--tests", "0"]).env("FRACHARM_OUT", "from_env").current_dir(tmp.path()).output().unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from_env/eigen.json").exists());

    let o = bin()
        .args(["eigen", "--config", "run.cfg", "--tests", "0", "--out", "from_flag"])
        .env("FRACHARM_OUT", "from_env")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from_flag/eigen.json").exists());
}

#[test]
fn failed_invariant_gives_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    // far from the origin the slope of E - 1 is not α
    let o = run(&["figure1", "--out", "x", "--slope-lo", "1e-3", "--slope-hi", "1e-2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let m: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("x/figure1.json"))).unwrap();
    assert_eq!(m["passed"], false);
}

#[test]
fn bad_settings_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.cfg"), "nonsense = 1\n").unwrap();
    assert_eq!(run(&["eigen", "--config", "bad.cfg"], tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--s", "-1"], tmp.path()).status.code(), Some(2));
}

#[test]
fn span_manifest_reports_full_rank() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["span", "--out", "s", "--block-checks", "1"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let m: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("s/span.json"))).unwrap();
    assert_eq!(m["results"]["rank"], m["results"]["kprime"]);
    assert_eq!(m["results"]["kprime"], 20);
}

#[test]
fn green_closed_form_error_small() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["green", "--out", "g", "--pairs", "2000", "--agree-pairs", "20", "--dirichlet-points", "0"], tmp.path());
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("g/green.json"))).unwrap();
    let c = &m["checks"][0];
    assert_eq!(c["name"], "n=1 s=1 kernel vs closed form");
    assert!(c["value"].as_f64().unwrap() < 1e-10);
}
