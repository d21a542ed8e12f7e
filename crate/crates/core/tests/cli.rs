//! The command-line surface: exit codes, CSV, reports and the operator cache.

use std::path::Path;
use std::process::Command as Process;

use serde_json::Value;
use solitonkit::cli::report::SCHEMA;
use solitonkit::cli::{run, AnalysisConfig, AnalysisReport, Command, Status};

fn solitonkit(args: &[&str], cache: &Path) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_solitonkit"))
        .args(args)
        .env_remove("SOLITONKIT_CACHE_DIR")
        .arg("--cache-dir")
        .arg(cache)
        .output()
        .expect("binary runs")
}

fn exit_code(args: &[&str]) -> i32 {
    let dir = tempfile::tempdir().unwrap();
    let out = solitonkit(args, dir.path());
    out.status.code().expect("exited normally")
}

#[test]
fn exit_codes_follow_status() {
    let cases: &[(&[&str], i32)] = &[
        (&["spectrum", "hpn", "--n", "2", "--kmax", "6"], 0),
        (&["repcount", "--n", "2,3"], 0),
        (&["--resolutions", "64,32", "residual"], 2),
        (&["repcount", "--n", "1"], 2),
        (&["no-such-command"], 2),
        (&["residual", "--model", "conformal-torus:3"], 3),
        (&["kernel-Z", "--resolution", "32"], 4),
        (&["rigidity", "s2", "--grid", "sphere", "--resolution", "64"], 5),
    ];
    for (args, code) in cases {
        assert_eq!(exit_code(args), *code, "solitonkit {}", args.join(" "));
    }
}

#[test]
fn spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s2.csv");
    let out = solitonkit(&["spectrum", "s2", "--kmax", "3", "--csv", csv.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert!(lines[0].starts_with("k,"), "{text}");
    // Eigenvalues k (k + 1) with multiplicities 2k + 1.
    for (k, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], k.to_string());
        assert!(cells.contains(&(k * (k + 1)).to_string().as_str()), "{line}");
        assert!(cells.contains(&(2 * k + 1).to_string().as_str()), "{line}");
    }
}

fn report_of(args: &[&str], dir: &Path, name: &str) -> (std::path::PathBuf, Value) {
    let path = dir.join(name);
    let mut full = vec!["--report", path.to_str().unwrap()];
    full.extend_from_slice(args);
    solitonkit(&full, dir);
    let v = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (path, v)
}

#[test]
fn reports_validate_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let validator = jsonschema::validator_for(&serde_json::from_str(SCHEMA).unwrap()).unwrap();
    let (a, va) = report_of(&["repcount", "--n", "2,4"], dir.path(), "a.json");
    let (b, vb) = report_of(&["residual", "--model", "conformal-torus:3"], dir.path(), "b.json");
    for v in [&va, &vb] {
        let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
    assert_eq!(vb["results"][0]["status"], "precondition");
    assert_eq!(vb["results"][0]["exit_code"], 3);

    let (_, merged) = report_of(&["report-merge", a.to_str().unwrap(), b.to_str().unwrap()], dir.path(), "m.json");
    assert!(validator.is_valid(&merged));
    let commands: Vec<&str> = merged["results"].as_array().unwrap().iter().map(|r| r["command"].as_str().unwrap()).collect();
    assert_eq!(commands, ["repcount", "residual", "report-merge"]);
    // The merged report keeps the worst status of its parts.
    let report: AnalysisReport = serde_json::from_value(merged).unwrap();
    assert_eq!(report.status(), Status::Precondition);
}

#[test]
fn cached_operators_reproduce_results_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = AnalysisConfig::default();
    config.output.cache_dir = Some(dir.path().to_path_buf());
    let command = Command::KernelE { model: "sphere".into(), resolution: Some(32) };
    let cold = run(&command, &config);
    let warm = run(&command, &config);
    // The environment override would point both runs elsewhere.
    if std::env::var_os(solitonkit::cli::CACHE_ENV).is_none() {
        assert!(cold.provenance.cached_operators.iter().all(|r| !r.hit));
    }
    assert!(!warm.provenance.cached_operators.is_empty());
    assert!(warm.provenance.cached_operators.iter().all(|r| r.hit));
    assert_eq!(cold.results, warm.results);
    assert_eq!(cold.status(), Status::Ok);
}

#[test]
fn family_fields_are_written_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let fields = dir.path().join("fields");
    let out = solitonkit(&["--resolutions", "64,128", "--fields-dir", fields.to_str().unwrap(), "cp-family"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let mut names: Vec<String> = std::fs::read_dir(&fields).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.iter().filter(|n| n.starts_with("cp_family_128_")).count(), 3, "{names:?}");
    for name in names.iter().filter(|n| n.starts_with("cp_family_128_")) {
        let h = solitonkit::discrete_ops::container::read_field(&fields.join(name)).unwrap();
        assert_eq!(h.kind(), solitonkit::discrete_ops::FieldKind::Sym2);
        assert_eq!(h.atlas().resolution(), 128);
        assert!(h.max_abs() > 0.0);
    }
}
