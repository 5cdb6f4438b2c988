use std::fs;
use std::process::Command;

use fuzzy_spectral::cli::ResultBundle;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fuzzy-spectral"))
}

#[test]
fn action_writes_bundle_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .arg("action")
        .arg(format!("--output_dir={}", out.display()))
        .args(["--n_list=2,3", "--scales", "1,2", "--cache=false"])
        .status()
        .unwrap();
    assert!(status.success());
    let json = fs::read_to_string(out.join("action.json")).unwrap();
    let bundle = ResultBundle::from_json(&json).unwrap();
    assert_eq!(bundle.schema_version, 1);
    assert_eq!(bundle.action.unwrap().rows.len(), 4);
    let csv = fs::read_to_string(out.join("action.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,scale,trace_f"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("n_list = [2]\ncache = false\noutput_dir = {:?}\n[function]\nkind = \"gaussian\"\nwidth = 3.0\n", out)).unwrap();
    let status = bin().arg("calculus").arg("--config").arg(&cfg).arg("--function.width=2").status().unwrap();
    assert!(status.success());
    let b = ResultBundle::from_json(&fs::read_to_string(out.join("calculus.json")).unwrap()).unwrap();
    assert_eq!(b.metadata.config.n_list, vec![2]);
    assert_eq!(b.calculus.unwrap().function, fuzzy_spectral::calculus::FunctionKind::Gaussian { width: 2.0 });

    let status = bin().arg("action").arg("--scales=3").arg("--config").arg(&cfg).status().unwrap();
    assert!(status.success());
    let b = ResultBundle::from_json(&fs::read_to_string(out.join("action.json")).unwrap()).unwrap();
    assert_eq!(b.metadata.config.scales, vec![3.0]);
    assert_eq!(b.metadata.config.n_list, vec![2]);
}

#[test]
fn cache_state_in_metadata_and_reruns_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = || {
        let status = bin()
            .arg("spectrum")
            .arg(format!("--output_dir={}", out.display()))
            .arg("--n_list=2,3")
            .env("FUZZY_SPECTRAL_CACHE_DIR", dir.path().join("cache"))
            .status()
            .unwrap();
        assert!(status.success());
        fs::read_to_string(out.join("spectrum.json")).unwrap()
    };
    let cold = ResultBundle::from_json(&run()).unwrap();
    assert!(cold.metadata.cache.iter().all(|c| !c.hit));
    let warm = run();
    assert!(ResultBundle::from_json(&warm).unwrap().metadata.cache.iter().all(|c| c.hit));
    assert_eq!(run(), warm);
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = |args: &[&str]| bin().args(args).current_dir(dir.path()).status().unwrap().code();
    assert_eq!(out(&["mk", "--n_list=9", "--cache=false"]), Some(1));
    assert_eq!(out(&["mk", "--n_list=2,3", "--cache=false", "--mk.states=basis:0;mixed"]), Some(1));
    assert_eq!(out(&["action", "--no_such_key=1"]), Some(1));
    assert_eq!(out(&["action", "--config", "/nonexistent/run.toml"]), Some(1));
}

#[test]
fn mk_with_state_list_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .arg("mk")
        .arg(format!("--output_dir={}", out.display()))
        .args(["--n_list=2", "--cache=false", "--mk.states=basis:0,mixed", "--mk.oracle_samples=256"])
        .status()
        .unwrap();
    assert!(status.success());
    let b = ResultBundle::from_json(&fs::read_to_string(out.join("mk.json")).unwrap()).unwrap();
    let mk = b.mk.unwrap();
    assert_eq!(mk.rows.len(), 1);
    assert_eq!((mk.rows[0].phi.as_str(), mk.rows[0].psi.as_str()), ("basis:0", "mixed"));
    assert!(mk.rows[0].oracle.is_some());
    assert!(fs::read_to_string(out.join("mk.csv")).unwrap().starts_with("n,phi,psi,"));
}
