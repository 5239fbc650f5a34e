use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use uhlmann_dmrg_harness::report::sha256_hex;

const CROSSING: &str = "experiment = \"crossing_scan\"\n[two_level]\npoints = 21\nmax_dt = 0.05\n";

fn tool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uhlmann-dmrg")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn crossing_scan_run_writes_verified_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CROSSING);
    let out = tmp.path().join("out");
    let res = tool(&["run", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let m = manifest(&out);
    assert_eq!(m["exit_status"], 0);
    assert_eq!(m["experiment"], "crossing_scan");
    let outputs = m["outputs"].as_array().unwrap();
    let names: Vec<&str> = outputs.iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(names, vec!["crossing_scan.csv", "summary.json", "manifest.json"]);
    for o in outputs {
        let path = out.join(o["path"].as_str().unwrap());
        match o["sha256"].as_str() {
            Some(digest) => assert_eq!(sha256_hex(&std::fs::read(path).unwrap()), digest),
            None => assert_eq!(o["path"], "manifest.json"),
        }
    }
}

#[test]
fn reruns_produce_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CROSSING);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(tool(&["crossing-scan", &cfg, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(tool(&["crossing-scan", &cfg, "--out", b.to_str().unwrap()]).status.code(), Some(0));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
}

#[test]
fn invalid_config_exits_1_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "experiment = \"crossing_scan\"\ncolour = 2\n[two_level]\npoints = 1\n");
    let out = tmp.path().join("out");
    let res = tool(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("colour"));
    assert!(!out.exists());
}

#[test]
fn validate_reports_every_issue() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "good.toml", CROSSING);
    assert_eq!(tool(&["validate", &good]).status.code(), Some(0));
    let bad = write_config(
        tmp.path(),
        "bad.toml",
        "experiment = \"pec_comparison\"\n[coefficient_grids]\ngamma1 = [1.0]\n[dmrg]\nmax_bond = 0\n",
    );
    let res = tool(&["validate", &bad]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("coefficient_grids.gamma1") && err.contains("dmrg.max_bond"), "{err}");
    assert!(err.contains("never do worse than the standard policy"));
}

#[test]
fn non_convergence_exits_2_with_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        "experiment = \"pec_comparison\"\n[spin_chain]\nsites = 6\npoints = 3\nfield_min = 0.9\nfield_max = 1.1\n\
         [dmrg]\nnum_sweeps = 1\n[[policies]]\nkind = \"standard\"\n",
    );
    let out = tmp.path().join("out");
    let res = tool(&["pec-comparison", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["exit_status"], 2);
    assert_eq!(m["converged"], false);
    let points = std::fs::read_to_string(out.join("pec_points.csv")).unwrap();
    assert!(points.lines().next().unwrap().ends_with("standard_converged"));
    assert!(points.lines().skip(1).any(|l| l.ends_with(",0")));
}

#[test]
fn subcommand_must_match_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CROSSING);
    let out = tmp.path().join("out");
    assert_eq!(tool(&["dmrg-benchmark", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CROSSING);
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let res = tool(&["run", &cfg, "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("not writable"));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(tool(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tool(&["run", "x.toml", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(tool(&["run", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(tool(&["--help"]).status.code(), Some(0));
    assert_eq!(tool(&["--version"]).status.code(), Some(0));
}
