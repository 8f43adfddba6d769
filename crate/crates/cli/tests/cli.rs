use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planar-diffraction"))
        .args(args)
        .env_remove("PLANAR_DIFFRACTION_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn oracle_prints_one_for_the_vanishing_sum() {
    let out = cli(&["oracle", "--system", "times23", "--query", "(0,1):-2,(1,1):1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn oracle_values_for_the_other_systems() {
    let out = cli(&["oracle", "--system", "ledrappier", "--query", "(0,0),(1,0),(0,1)"]);
    assert_eq!(stdout(&out), "1\n");
    let out = cli(&["oracle", "--system", "bernoulli", "--query", "(0,0),(1,0)"]);
    assert_eq!(stdout(&out), "0\n");
    let out = cli(&[
        "oracle",
        "--system",
        "bernoulli",
        "--law",
        "rademacher:0.75",
        "--query",
        "(0,0)",
    ]);
    assert_eq!(stdout(&out), "0.5\n");
}

#[test]
fn generate_rudin_shapiro_is_identical_across_runs() {
    let args = ["generate", "--system", "rudin-shapiro", "--size", "8"];
    let (a, b) = (cli(&args), cli(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 65);
    assert_eq!(lines[0], "a,b,re,im");
    // r_3 = -1 since 3 = 0b11 has one adjacent pair of ones.
    assert_eq!(lines[4], "3,0,-1,0");
}

#[test]
fn generate_writes_into_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_planar-diffraction"))
        .args(["generate", "--system", "ledrappier", "--size", "16", "--seed", "3"])
        .env("PLANAR_DIFFRACTION_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let path = dir.path().join("ledrappier-16x16-seed3.csv");
    assert_eq!(stdout(&out).trim(), path.display().to_string());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 257);
}

#[test]
fn seeded_output_is_reproducible() {
    let args = ["generate", "--system", "times23", "--size", "12", "--seed", "99"];
    assert_eq!(cli(&args).stdout, cli(&args).stdout);
    let other = cli(&["generate", "--system", "times23", "--size", "12", "--seed", "100"]);
    assert_ne!(cli(&args).stdout, other.stdout);
}

#[test]
fn autocorr_table_has_header_and_every_lag() {
    let out = cli(&["autocorr", "--system", "ledrappier", "--size", "64", "--range", "2"]);
    let text = stdout(&out);
    assert!(text.starts_with("za,zb,re,im,pairs\n"));
    assert_eq!(text.lines().count(), 1 + 25);
    assert!(text.contains("\n0,0,1,0,4096\n"));
    let direct = cli(&[
        "autocorr",
        "--system",
        "ledrappier",
        "--size",
        "64",
        "--range",
        "2",
        "--direct",
    ]);
    assert_eq!(direct.stdout, out.stdout);
}

#[test]
fn correlate_ledrappier_triple_is_one() {
    let out = cli(&[
        "correlate",
        "--system",
        "ledrappier",
        "--size",
        "64",
        "--query",
        "(0,0),(4,0),(0,4)",
    ]);
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn periodogram_writes_pgm_sidecar_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("comb.pgm");
    let out = cli(&[
        "periodogram",
        "--system",
        "bernoulli",
        "--size",
        "64",
        "--phi",
        "1,0",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n64 64\n65535\n"));
    assert_eq!(bytes.len(), b"P5\n64 64\n65535\n".len() + 64 * 64 * 2);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comb.pgm.json")).unwrap()).unwrap();
    assert_eq!(sidecar["clip"], 1.0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comb.flatness.json")).unwrap()).unwrap();
    assert_eq!(report["expected_density"], 0.25);
}

#[test]
fn converge_emits_one_row_per_size() {
    let out = cli(&[
        "converge",
        "--system",
        "bernoulli",
        "--query",
        "(0,0),(1,0),(0,1)",
        "--sizes",
        "16,32,64",
    ]);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "n,re,im");
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("64,"));
}

#[test]
fn verify_reports_json_and_fails_on_an_impossible_tolerance() {
    let out = cli(&[
        "verify",
        "--system",
        "rudin-shapiro",
        "--size",
        "64",
        "--tolerance",
        "eta_off_origin=0",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["systems"][0], "rudin-shapiro");
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if pass { 0 } else { 1 }));
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    let failed = checks.iter().filter(|c| c["pass"] == false).count();
    assert_eq!(report["summary"]["failed"], failed);
    assert_eq!(pass, failed == 0);
}

#[test]
fn verify_exit_code_follows_the_report() {
    let strict = cli(&[
        "verify",
        "--system",
        "times23",
        "--size",
        "64",
        "--tolerance",
        "times23_vanishing_pair=0",
    ]);
    assert_eq!(strict.status.code(), Some(1));
    let loose = cli(&[
        "verify",
        "--system",
        "times23",
        "--size",
        "64",
        "--tolerance",
        "flatness=10",
        "--tolerance",
        "eta_times23=1",
    ]);
    assert_eq!(loose.status.code(), Some(0), "{}", stdout(&loose));
}

#[test]
fn job_files_run_like_flags() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    std::fs::write(
        &job,
        r#"{"command":"autocorr","sampler":{"system":"ledrappier","width":32,"height":32,"seed":5},"params":{"range":3}}"#,
    )
    .unwrap();
    let from_file = cli(&["run", job.to_str().unwrap()]);
    let from_flags = cli(&[
        "autocorr",
        "--system",
        "ledrappier",
        "--size",
        "32",
        "--seed",
        "5",
        "--range",
        "3",
    ]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let out = cli(&["correlate", "--system", "ledrappier", "--size", "8", "--query", "(0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "parse");

    let out = cli(&["generate", "--system", "penrose"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");

    let out = cli(&["oracle", "--system", "rudin-shapiro", "--query", "(0,0)"]);
    assert_eq!(error_kind(&out), "invalid_argument");

    let out = cli(&["run", "/nonexistent/job.json"]);
    assert_eq!(error_kind(&out), "io");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = Path::new(&blocker).join("out.csv");
    let out = cli(&["generate", "--size", "4", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "io");
}
