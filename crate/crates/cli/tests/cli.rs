use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rdm-lab"));
    c.env_remove("RDM_LAB_OUT");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let out = bin().args(args).arg("--out").arg(dir).output().unwrap();
    out.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn help_lists_flags_with_defaults() {
    for cmd in rdm_lab::manifest::command_names() {
        let out = bin().args([cmd.as_str(), "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in ["--site", "--law", "--dim", "--extent", "--resolution", "--trials", "--seed", "--out", "--manifest", "--format", "--assert", "--threads"] {
            assert!(text.contains(flag), "{cmd}: {flag} missing");
        }
        assert!(text.contains("[default: "), "{cmd}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["landscape", "--bogus"]), 1);
    assert_eq!(run_in(dir.path(), &["landscape", "--resolution", "x"]), 1);
    assert_eq!(run_in(dir.path(), &["lifshitz", "--law", "gaussian"]), 1);
    assert_eq!(run_in(dir.path(), &["ids", "--dim", "2"]), 1);
    assert_eq!(run_in(dir.path(), &["landscape", "--resolution", "2"]), 1);
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
}

#[test]
fn numerical_failure_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(dir.path(), &["constants", "--site", "alt2", "--dim", "1", "--trials", "2", "--resolution", "16"]);
    assert_eq!(code, 2);
    let diag: serde_json::Value = serde_json::from_slice(&read(dir.path(), "constants.error.json")).unwrap();
    assert!(diag["error"].as_str().unwrap().contains("flat"));
    assert_eq!(diag["manifest"]["command"], "constants");
}

#[test]
fn assert_mode_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["lifshitz", "--c1", "100", "--extent", "2", "--trials", "4", "--resolution", "8"];
    assert_eq!(run_in(dir.path(), &args), 0);
    let mut with_assert = args.to_vec();
    with_assert.push("--assert");
    assert_eq!(run_in(dir.path(), &with_assert), 3);
}

#[test]
fn landscape_writes_data_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let code = run_in(&out, &["landscape", "--dim", "1", "--resolution", "64", "--site", "default"]);
    assert_eq!(code, 0);
    let csv = String::from_utf8(read(&out, "landscape.csv")).unwrap();
    let meta: serde_json::Value = serde_json::from_slice(&read(&out, "landscape.meta.json")).unwrap();
    let hash = meta["manifest_sha256"].as_str().unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# manifest_sha256={hash}"));
    assert_eq!(csv.lines().nth(1).unwrap(), "a0,e0,grad0");
    assert_eq!(csv.lines().count(), 2 + 9);
    let m: rdm_lab::Manifest = serde_json::from_value(meta["manifest"].clone()).unwrap();
    assert_eq!(m.sha256(), hash);
}

#[test]
fn environment_overrides_out() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = bin()
        .env("RDM_LAB_OUT", b.path())
        .args(["minimizer", "--dim", "1", "--resolution", "16", "--out"])
        .arg(a.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(b.path().join("minimizer.meta.json").exists());
    assert!(!a.path().join("minimizer.meta.json").exists());
}

#[test]
fn ids_is_byte_identical_across_runs_threads_and_manifests() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let args = ["ids", "--extent", "200", "--trials", "3", "--resolution", "16", "--seed", "7"];
    assert_eq!(run_in(dirs[0].path(), &[&args[..], &["--threads", "1"]].concat()), 0);
    assert_eq!(run_in(dirs[1].path(), &[&args[..], &["--threads", "3"]].concat()), 0);
    let manifest = dirs[0].path().join("ids.meta.json");
    assert_eq!(run_in(dirs[2].path(), &["ids", "--extent", "5", "--manifest", manifest.to_str().unwrap()]), 0);
    for name in ["ids.csv", "ids.meta.json", "ids.log.jsonl"] {
        let first = read(dirs[0].path(), name);
        assert_eq!(first, read(dirs[1].path(), name), "{name}");
        assert_eq!(first, read(dirs[2].path(), name), "{name}");
    }
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["tube", "--extent", "4", "--resolution", "8", "--format", "json"]), 0);
    let v: serde_json::Value = serde_json::from_slice(&read(dir.path(), "tube.json")).unwrap();
    assert_eq!(v["columns"][0], "L");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}
