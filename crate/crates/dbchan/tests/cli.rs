//! End-to-end tests of the dbchan binary: exit codes, seed determinism,
//! catalog resolution order, and the documented output formats.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use dbchan::catalog::Catalog;
use dbchan::pipeline::{parse_report, ReportFormat};
use dbchan::statdist::DistFamily;
use dbchan::synth::read_channel_binary;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dbchan"));
    // Tests control catalog resolution explicitly.
    cmd.env_remove("DBCHAN_CATALOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

const SAMPLE_CSV: &str = "\
location,link_id,scenario,distance_m,delay_ns,power_dbm,aoa_deg,aod_deg
Sello,L1,LOS,10.0,33.4,-80.1,12.0,-4.0
Sello,L1,LOS,10.0,48.9,-85.2,,
Sello,L1,LOS,10.0,61.0,-91.3,30.0,
Sello,L2,LOS,14.5,48.4,-82.0,,
Sello,L2,LOS,14.5,70.1,-88.8,,
Sello,L2,LOS,14.5,95.6,-93.1,,
";

#[test]
fn generate_runs_are_byte_identical_for_a_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "generate".to_string(),
            "--location".into(),
            "Sello".into(),
            "--scenario".into(),
            "los".into(),
            "--distance".into(),
            "30".into(),
            "--seed".into(),
            "7".into(),
            "--realizations".into(),
            "2".into(),
            "--points".into(),
            "16".into(),
            "--rx".into(),
            "2".into(),
            "--tx".into(),
            "2".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let first = bin().args(args(dir_a.path())).output().unwrap();
    let second = bin().args(args(dir_b.path())).output().unwrap();
    assert!(first.status.success(), "{}", stderr_of(&first));
    assert!(second.status.success(), "{}", stderr_of(&second));

    for name in [
        "real000.paths.json",
        "real000.chan.bin",
        "real001.paths.json",
        "real001.chan.bin",
    ] {
        let a = fs::read(dir_a.path().join(name)).unwrap();
        let b = fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identically seeded runs");
    }

    // Distinct realizations under one seed are distinct draws.
    let r0 = fs::read(dir_a.path().join("real000.paths.json")).unwrap();
    let r1 = fs::read(dir_a.path().join("real001.paths.json")).unwrap();
    assert_ne!(r0, r1, "realizations 0 and 1 are identical");

    // The tensor decodes with the advertised dimensions.
    let bytes = fs::read(dir_a.path().join("real000.chan.bin")).unwrap();
    let h = read_channel_binary(bytes.as_slice()).unwrap();
    assert_eq!(h.dim(), (16, 2, 2));
}

#[test]
fn med_prints_the_mean_and_the_reference_pair() {
    let out = run(&[
        "med",
        "--location",
        "Campus",
        "--scenario",
        "los",
        "--draws",
        "20000",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(
        text.contains("Campus LOS: mean MED"),
        "unexpected output: {text}"
    );
    assert!(
        text.contains("reference MED: empirical 542.25 ns, model 562.04 ns"),
        "unexpected output: {text}"
    );
}

#[test]
fn med_writes_a_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    let out = run(&[
        "med",
        "--location",
        "Sello",
        "--scenario",
        "los",
        "--draws",
        "500",
        "--seed",
        "3",
        "--distances",
        "20,30,40",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(value["mean_med_ns"].as_f64().unwrap() > 0.0);
    assert_eq!(value["n_draws"].as_u64(), Some(500));
    assert_eq!(value["per_link_med_ns"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_reads_stdin_and_emits_equivalent_csv_and_json() {
    let render = |format: &str| -> Vec<u8> {
        let mut child = bin()
            .args(["fit", "--input", "-", "--format", format])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(SAMPLE_CSV.as_bytes())
            .unwrap();
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
        out.stdout
    };
    let csv_report = parse_report(&render("csv"), ReportFormat::Csv).unwrap();
    let json_report = parse_report(&render("json"), ReportFormat::Json).unwrap();
    assert_eq!(csv_report, json_report, "the two output formats disagree");
    assert!(
        csv_report
            .rows
            .iter()
            .any(|r| r.family == DistFamily::LogNormal),
        "no log_normal candidate row in the report"
    );
}

#[test]
fn exit_codes_follow_error_classes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0), "--help");
    assert_eq!(run(&[]).status.code(), Some(1), "missing subcommand");
    assert_eq!(
        run(&["med", "--location", "Sello", "--scenario", "sideways"])
            .status
            .code(),
        Some(1),
        "bad scenario is a usage error"
    );
    let missing = run(&["med", "--location", "Atlantis", "--scenario", "los"]);
    assert_eq!(
        missing.status.code(),
        Some(2),
        "unknown location is a data error"
    );
    assert!(
        stderr_of(&missing).contains("Atlantis"),
        "error names the location"
    );
    assert_eq!(
        run(&["fit", "--input", "/nonexistent/mpc.csv"])
            .status
            .code(),
        Some(2),
        "unreadable input is a data error"
    );
}

/// Builtin catalog with one location's EIRP replaced, as JSON.
fn catalog_with_sello_eirp(eirp: f64) -> String {
    let mut value: serde_json::Value = serde_json::from_str(&Catalog::builtin().to_json()).unwrap();
    let locations = value["locations"].as_array_mut().unwrap();
    let sello = locations
        .iter_mut()
        .find(|l| l["profile"]["name"] == "Sello")
        .expect("builtin catalog has Sello");
    sello["profile"]["eirp_dbm"] = serde_json::json!(eirp);
    value.to_string()
}

#[test]
fn catalog_flag_beats_environment_beats_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.json");
    let flag_path = dir.path().join("flag.json");
    fs::write(&env_path, catalog_with_sello_eirp(99.0)).unwrap();
    fs::write(&flag_path, catalog_with_sello_eirp(77.0)).unwrap();

    let builtin = run(&["catalog", "--location", "Sello"]);
    assert!(
        stdout_of(&builtin).contains("EIRP -12 dBm"),
        "{}",
        stdout_of(&builtin)
    );

    let via_env = bin()
        .env("DBCHAN_CATALOG", &env_path)
        .args(["catalog", "--location", "Sello"])
        .output()
        .unwrap();
    assert!(via_env.status.success(), "{}", stderr_of(&via_env));
    assert!(
        stdout_of(&via_env).contains("EIRP 99 dBm"),
        "{}",
        stdout_of(&via_env)
    );

    let via_flag = bin()
        .env("DBCHAN_CATALOG", &env_path)
        .args([
            "--catalog",
            flag_path.to_str().unwrap(),
            "catalog",
            "--location",
            "Sello",
        ])
        .output()
        .unwrap();
    assert!(via_flag.status.success(), "{}", stderr_of(&via_flag));
    assert!(
        stdout_of(&via_flag).contains("EIRP 77 dBm"),
        "{}",
        stdout_of(&via_flag)
    );

    let bad = bin()
        .env("DBCHAN_CATALOG", dir.path().join("missing.json"))
        .args(["catalog"])
        .output()
        .unwrap();
    assert_eq!(
        bad.status.code(),
        Some(2),
        "unreadable catalog is a data error"
    );
}

#[test]
fn catalog_summary_lists_every_location() {
    let out = run(&["catalog"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for name in [
        "Sello",
        "Airport",
        "TUAS",
        "TUAS2",
        "Campus",
        "City",
        "Residential",
    ] {
        assert!(text.contains(name), "catalog summary is missing {name}");
    }
}

#[test]
fn generate_warns_on_out_of_range_distance_but_still_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate",
        "--location",
        "Sello",
        "--scenario",
        "los",
        "--distance",
        "500",
        "--points",
        "4",
        "--out",
        dir.path().join("far").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("warning"),
        "expected a range warning"
    );
    assert!(dir.path().join("far/real000.paths.json").exists());
}
