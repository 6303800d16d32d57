//! Binary-level acceptance: reproducibility of reports under a fixed seed
//! (criterion 10) and the documented exit-code table.

use std::path::Path;
use std::process::{Command, Output};

fn geoequiv(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoequiv"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn criterion_10_reports_are_byte_identical_under_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1.csv");
    let out2 = dir.path().join("run2.csv");
    let args = |path: &Path| {
        vec![
            "check".to_string(),
            "--catalog".to_string(),
            "beltrami-sphere".to_string(),
            "--A".to_string(),
            "1,2,3".to_string(),
            "--samples".to_string(),
            "40".to_string(),
            "--seed".to_string(),
            "7".to_string(),
            "--t-end".to_string(),
            "1.5".to_string(),
            "--emit".to_string(),
            path.display().to_string(),
        ]
    };
    let run1 = geoequiv(
        &args(&out1).iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        &[],
    );
    assert_eq!(exit_code(&run1), 0, "{run1:?}");
    // Second run with a different thread cap must still reproduce the bytes.
    let run2 = geoequiv(
        &args(&out2).iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        &[("GEOEQUIV_THREADS", "1")],
    );
    assert_eq!(exit_code(&run2), 0, "{run2:?}");
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    let pass = !bytes1.is_empty() && bytes1 == bytes2;
    println!(
        "criterion 10 (determinism): {} - {} bytes, identical across reruns and thread caps: {}",
        if pass { "PASS" } else { "FAIL" },
        bytes1.len(),
        bytes1 == bytes2
    );
    assert!(pass);
}

#[test]
fn exit_codes_follow_the_documented_table() {
    // Equivalent catalog pair passes.
    let ok = geoequiv(
        &[
            "check",
            "--catalog",
            "beltrami-sphere",
            "--A",
            "1,2,3",
            "--samples",
            "30",
            "--t-end",
            "1.0",
        ],
        &[],
    );
    assert_eq!(exit_code(&ok), 0, "{ok:?}");

    // The control pair fails.
    let fail = geoequiv(
        &[
            "check",
            "--catalog",
            "control-nonequivalent",
            "--samples",
            "30",
            "--t-end",
            "1.0",
        ],
        &[],
    );
    assert_eq!(exit_code(&fail), 1, "{fail:?}");

    // Config errors: missing file, identity transform, missing source,
    // unknown flag, unknown catalog name.
    for args in [
        vec!["check", "--file", "does-not-exist.json"],
        vec!["sinjukov", "--catalog", "beltrami-sphere", "--power", "0"],
        vec!["check", "--samples", "10"],
        vec!["check", "--catalog", "beltrami-sphere", "--bogus"],
        vec!["check", "--catalog", "no-such-pair"],
    ] {
        let out = geoequiv(&args, &[]);
        assert_eq!(exit_code(&out), 64, "args {args:?}: {out:?}");
    }

    // Help exits 0.
    assert_eq!(exit_code(&geoequiv(&["--help"], &[])), 0);
}

#[test]
fn quantum_exit_codes_and_flat_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.json");
    std::fs::write(
        &flat,
        r#"{"n": 2, "coords": ["x1", "x2"], "domain": [[-10.0, 10.0], [-10.0, 10.0]],
            "periodic": [false, false],
            "g": [["1", "0"], ["0", "1"]],
            "gbar": [["1", "0"], ["0", "1"]]}"#,
    )
    .unwrap();
    let ok = geoequiv(
        &[
            "quantum",
            "--file",
            flat.to_str().unwrap(),
            "--grid",
            "16,24,32",
        ],
        &[],
    );
    assert_eq!(exit_code(&ok), 0, "{ok:?}");
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(
        stdout.contains("[0.0, 0.0, 0.0]"),
        "flat commutators must be exact zeros: {stdout}"
    );

    let fail = geoequiv(
        &[
            "quantum",
            "--catalog",
            "control-nonequivalent",
            "--grid",
            "16,24,32",
        ],
        &[],
    );
    assert_eq!(exit_code(&fail), 1, "{fail:?}");
}

#[test]
fn trace_export_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let run = geoequiv(
        &[
            "geodesics",
            "--catalog",
            "ellipsoid",
            "--a",
            "1,2,3",
            "--t-end",
            "0.5",
            "--emit",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&run), 0, "{run:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,p1,p2"));
    assert!(lines.count() >= 500);
}

#[test]
fn scan_reports_four_components_for_the_generic_pair() {
    let run = geoequiv(
        &[
            "scan",
            "--catalog",
            "beltrami-sphere",
            "--A",
            "1,2,3",
            "--grid",
            "150",
        ],
        &[],
    );
    assert_eq!(exit_code(&run), 0, "{run:?}");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        stdout.contains("4 proportionality component(s)"),
        "{stdout}"
    );
}

#[test]
fn catalog_lists_at_least_four_entries() {
    let run = geoequiv(&["catalog"], &[]);
    assert_eq!(exit_code(&run), 0);
    let stdout = String::from_utf8_lossy(&run.stdout);
    let names = [
        "beltrami-sphere",
        "ellipsoid",
        "poisson-sphere",
        "control-nonequivalent",
    ];
    for name in names {
        assert!(stdout.contains(name), "missing `{name}` in: {stdout}");
    }
}
