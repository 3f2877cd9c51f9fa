use mgsim::cli::{main as cli, EXIT_BLOWUP, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION};
use mgsim::config::reference_page;
use mgsim::csv::{parse_diagnostics_csv, HEADER};
use std::path::{Path, PathBuf};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> i32 {
    cli(std::iter::once("mgsim").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn zero_scenario_matches_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = golden("zero_scenario.toml");
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap(), "--out", out]), EXIT_OK);
    let got = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let want = std::fs::read_to_string(golden("zero_scenario.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn run_writes_csv_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[grid]\nn_modes_x = 6\nn_modes_y = 6\n[params]\nmu = 1.0\nalpha = -0.1\n\
         [[initial.modes]]\nn = 1\nm = 1\nim = -0.02\n[[initial.modes]]\nn = 2\nm = 3\nre = 0.01\n\
         [stepper]\ndt = 0.01\nt_end = 0.1\nlog_every = 1\n[output]\nsnapshot_every = 5\n\
         [modes]\ntheorem2 = true\n",
    );
    let out = dir.path().join("out");
    let code = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(text.starts_with(HEADER));
    let rows = parse_diagnostics_csv(&text).unwrap();
    assert_eq!(rows.len(), 11);
    assert!((rows[10][0] - 0.1).abs() < 1e-15);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    for step in [0, 5, 10] {
        assert!(out.join(format!("snapshot_{step:07}.mgsp")).exists());
    }
    assert!(out.join("report.txt").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(json.is_object());

    let spec = out.join("spectrum.csv");
    let snap = out.join("snapshot_0000010.mgsp");
    let code = run(&[
        "spectrum",
        snap.to_str().unwrap(),
        "--out",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let spectrum = std::fs::read_to_string(spec).unwrap();
    assert_eq!(spectrum.lines().count(), 1 + 13 * 6);

    // restart from the last snapshot
    let cfg2 = write(
        &out,
        "restart.toml",
        "[grid]\nn_modes_x = 6\nn_modes_y = 6\n[params]\nmu = 1.0\n\
         [initial]\nsnapshot = \"snapshot_0000010.mgsp\"\n[stepper]\ndt = 0.01\nt_end = 0.02\n",
    );
    let out2 = dir.path().join("out2");
    assert_eq!(run(&["run", "--config", &cfg2, "--out", out2.to_str().unwrap()]), EXIT_OK);
    let rows2 = parse_diagnostics_csv(&std::fs::read_to_string(out2.join("diagnostics.csv")).unwrap()).unwrap();
    assert_eq!(rows2[0][1].to_bits(), rows[10][1].to_bits());
}

#[test]
fn configuration_errors_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.toml", "[params]\nmu = 1.0\nnu = 2.0\n[initial]\npreset = \"small_data\"\n");
    assert_eq!(run(&["run", "--config", &unknown]), EXIT_USAGE);
    let bad_mu = write(dir.path(), "b.toml", "[params]\nmu = -1.0\n[initial]\npreset = \"small_data\"\n");
    assert_eq!(run(&["run", "--config", &bad_mu]), EXIT_USAGE);
    assert_eq!(run(&["run", "--scenario", "no_such_preset"]), EXIT_USAGE);
    assert_eq!(run(&["run"]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["run", "--config", missing.to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn blowup_exits_with_code_three_and_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["run", "--scenario", "blowup_stress", "--out", out]), EXIT_BLOWUP);
    let rows = parse_diagnostics_csv(
        &std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap(),
    )
    .unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
}

#[test]
fn failing_theorem_check_exits_with_code_one() {
    // wall fluxes move the mean of small_data far beyond the 1e-8 tolerance
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "[grid]\nn_modes_x = 16\nn_modes_y = 16\n[params]\nmu = 1.0\nalpha = -0.1\nbeta = 0.5\n\
         [initial]\npreset = \"small_data\"\n\
         [stepper]\ndt = 0.001\nt_end = 0.1\nlog_every = 1\n[modes]\ntheorem1 = true\n",
    );
    let code = run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_VERIFICATION);
}

#[test]
fn reference_page_is_current() {
    let doc = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config-reference.md");
    assert_eq!(std::fs::read_to_string(doc).unwrap(), reference_page());
}
