use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_wgfrac");

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

/// Golden cases: output file name and flags.
fn cases() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("ml-eval.csv", vec!["--command", "ml-eval", "--beta", "2", "--z", "-4"]),
        ("ml-eval.json", vec!["--command", "ml-eval", "--beta", "0.5", "--z", "-1.5", "--format", "json"]),
        (
            "frac-deriv.csv",
            vec!["--command", "frac-deriv", "--alpha", "0.4", "--beta", "0.8", "--w", "1 + x^2", "--f", "sin(x)", "--n", "8"],
        ),
        (
            "verify-inverse.json",
            vec![
                "--command", "verify-inverse", "--alpha", "0", "--beta", "0.8", "--f", "cos(x)", "--n", "16", "--n-list", "8, 16",
                "--right-sign", "printed",
            ],
        ),
        (
            "solve-variational.csv",
            vec![
                "--command", "solve-variational", "--alpha", "0.4", "--beta", "0.8", "--m", "2", "--v", "x^2/2", "--x-a", "0",
                "--x-b", "1", "--n", "16",
            ],
        ),
    ]
}

fn produce(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let mut full = args.to_vec();
    full.extend(["--output", name]);
    let out = run_in(dir, &full);
    assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn outputs_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in cases() {
        let got = produce(dir.path(), name, &args);
        let want = std::fs::read(golden(name)).unwrap();
        assert!(got == want, "{name} differs from its golden file:\n{}", String::from_utf8_lossy(&got));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (name, args) in cases() {
        assert_eq!(produce(a.path(), name, &args), produce(b.path(), name, &args), "{name}");
    }
}

#[test]
fn csv_contract() {
    for (name, header, rows) in [
        ("frac-deriv.csv", "t,value", 9),
        ("solve-variational.csv", "t,X,DL_X,DR_X,residual", 17),
        ("ml-eval.csv", "z,value", 1),
    ] {
        let text = String::from_utf8(std::fs::read(golden(name)).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], header);
        assert_eq!(lines.len(), rows + 1, "{name}");
        let width = header.split(',').count();
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), width);
            for f in fields {
                let mantissa = f.trim_start_matches('-').split('e').next().unwrap();
                assert_eq!(mantissa.replace('.', "").len(), 17, "{name}: {f}");
                f.parse::<f64>().unwrap();
            }
        }
    }
}

#[test]
fn json_reports_carry_identity_fields() {
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(golden("verify-inverse.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        for key in ["identity_id", "lhs", "rhs", "abs_gap", "rel_gap", "grid_n", "params_echo", "convergence_rows"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert!(r["abs_gap"].as_f64().unwrap() <= 1e-13);
        assert_eq!(r["convergence_rows"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run_in(dir.path(), &["--command", "ml-eval", "--beta", "1", "--z", "0"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "z,value\n0.0000000000000000e0,1.0000000000000000e0\n");

    let missing = run_in(dir.path(), &["--command", "frac-int", "--alpha", "0.5", "--f", "x"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("beta"));

    let unknown = run_in(dir.path(), &["--command", "no-such-command"]);
    assert_eq!(unknown.status.code(), Some(1));

    let strict = run_in(
        dir.path(),
        &[
            "--command", "verify-ibp", "--alpha", "0.3", "--beta", "0.7", "--f", "x^2", "--g", "cos(x)", "--n-list", "",
            "--n", "64", "--threshold", "1e-20", "--output", "gap.json",
        ],
    );
    assert_eq!(strict.status.code(), Some(2), "{}", String::from_utf8_lossy(&strict.stderr));
    assert!(String::from_utf8_lossy(&strict.stdout).contains("threshold-exceeded"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--config", config("frac-deriv.conf").to_str().unwrap(), "--n", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("frac-deriv.csv")).unwrap();
    assert_eq!(text.lines().count(), 34);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.starts_with("frac-deriv n=32 "), "{summary}");
}

#[test]
fn example_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    for (name, file) in [
        ("frac-deriv.conf", "frac-deriv.csv"),
        ("verify-ibp.conf", "verify-ibp.json"),
        ("solve-variational.conf", "trajectory.csv"),
    ] {
        let out = run_in(dir.path(), &["-c", config(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(file).is_file(), "{name}");
        assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
    }
}

#[test]
fn metadata_goes_to_the_sidecar_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["--command", "ml-eval", "--beta", "2", "--z", "-4", "--output", "v.csv", "--meta", "v.meta.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("v.meta.json")).unwrap()).unwrap();
    assert!(meta.get("version").is_some());
    assert_eq!(std::fs::read(dir.path().join("v.csv")).unwrap(), std::fs::read(golden("ml-eval.csv")).unwrap());
}
