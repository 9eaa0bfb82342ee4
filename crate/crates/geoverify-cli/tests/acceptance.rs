// Command-line contract: reports are byte-identical to checked-in golden
// files for fixed seeds (also across thread counts), and the exit codes
// follow the 0/1/2 convention for pass, verification failure, and bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_geoverify");

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .env("GEOVERIFY_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

fn assert_golden(actual: &[u8], name: &str, what: &str) {
    let expected = fs::read(golden(name)).expect("golden file exists");
    assert_eq!(
        actual, &expected[..],
        "{what} drifted from tests/golden/{name}; regenerate deliberately if the format changed"
    );
}

#[test]
fn cli_contract_holds() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    // golden: catalog list on stdout
    let list = run(&["catalog", "list"]);
    assert_eq!(code(&list), 0, "catalog list failed: {list:?}");
    assert_golden(&list.stdout, "catalog_list.txt", "catalog list output");
    assert!(list.stdout.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count() >= 8);

    // golden: emitted chart file
    let pw = path("plane_wave.json");
    let emit = run(&["catalog", "emit", "plane_wave", "--param", "n=2", "--out", &pw]);
    assert_eq!(code(&emit), 0, "emit failed: {emit:?}");
    assert_golden(&fs::read(&pw).unwrap(), "emit_plane_wave.json", "emitted chart");

    // golden: check report for a fixed seed, and thread-count independence
    let kundt = path("kundt3.json");
    assert_eq!(code(&run(&["catalog", "emit", "kundt3", "--out", &kundt])), 0);
    let report = path("check_kundt3.json");
    let check = run(&["check", &kundt, "--points", "25", "--seed", "7", "--out", &report]);
    assert_eq!(code(&check), 0, "check failed: {check:?}");
    assert_golden(&fs::read(&report).unwrap(), "check_kundt3.json", "check report");

    let report2 = path("check_kundt3_threads.json");
    let rerun = run_with_threads(
        &["check", &kundt, "--points", "25", "--seed", "7", "--out", &report2],
        "2",
    );
    assert_eq!(code(&rerun), 0);
    assert_eq!(
        fs::read(&report).unwrap(),
        fs::read(&report2).unwrap(),
        "report bytes depend on the thread count"
    );

    // golden: geodesic report; the fitted singular time sits at -1/alpha(0)
    let geo = path("geodesic_kundt.json");
    let geodesic = run(&[
        "geodesic", &kundt, "--x0", "0,0,0", "--v0", "0.2275,0.3,2", "--tmax", "0.45",
        "--step", "0.01", "--track", "xi", "--fit", "reciprocal", "--out", &geo,
    ]);
    assert_eq!(code(&geodesic), 0, "geodesic failed: {geodesic:?}");
    assert_golden(&fs::read(&geo).unwrap(), "geodesic_kundt.json", "geodesic report");
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&geo).unwrap()).unwrap();
    let t_singular = parsed["fit"]["t_singular"].as_f64().unwrap();
    assert!(
        (t_singular.abs() - 0.5).abs() < 1e-3,
        "singular time {t_singular} is not within 1e-3 of 0.5"
    );

    // exit 2: malformed and invalid inputs
    let truncated = path("truncated.json");
    fs::write(&truncated, "{ \"name\": \"broken\"").unwrap();
    assert_eq!(code(&run(&["check", &truncated])), 2, "truncated file must exit 2");

    let mut spec: serde_json::Value =
        serde_json::from_slice(&fs::read(&kundt).unwrap()).unwrap();
    spec["params"]["a"] = serde_json::json!(0.0);
    let zero_a = path("kundt3_a0.json");
    fs::write(&zero_a, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();
    assert_eq!(code(&run(&["check", &zero_a])), 2, "a = 0 must exit 2");

    assert_eq!(code(&run(&["catalog", "emit", "nosuch"])), 2, "unknown entry must exit 2");

    // exit 1: verification and fit failures on otherwise valid input
    let forced = run(&["check", &kundt, "--points", "25", "--seed", "7", "--tol",
        "parallel_torsion=1e-30"]);
    assert_eq!(code(&forced), 1, "impossible tolerance must exit 1");

    let flat = path("minkowski.json");
    assert_eq!(code(&run(&["catalog", "emit", "minkowski", "--out", &flat])), 0);
    let mismatch = run(&[
        "geodesic", &flat, "--x0", "0,0,0,0", "--v0", "2,0.3,0,0", "--tmax", "1",
        "--step", "0.01", "--track", "dx0", "--fit", "reciprocal",
    ]);
    assert_eq!(code(&mismatch), 1, "constant series under a blow-up model must exit 1");

    println!(
        "acceptance 10 PASS command line contract (4 golden files byte-identical, \
         thread-count independent, exit codes 0/1/2 honored, t_singular {t_singular:.6})"
    );
}
