use std::path::{Path, PathBuf};
use std::process::Command;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn nsprec(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nsprec")).arg("--out").arg(out).args(args).env("NSPREC_SERIAL", "1").output().unwrap()
}

fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let text = std::fs::read_to_string(config("cavity_stokes.json")).unwrap();
    let text = text.replacen("\"cavity_stokes\"", &format!("\"{name}\""), 1).replacen("{\n", &format!("{{\n  {extra}\n"), 1);
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_report_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsprec(dir.path(), &["run", config("cavity_stokes.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cavity_stokes.report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "nsprec-report/1");
    assert_eq!(report["status"], "converged");
    assert!(report.get("timings").is_none_or(|t| t.is_null()));
    let csv = std::fs::read_to_string(dir.path().join("cavity_stokes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + report["newton_steps"].as_u64().unwrap() as usize);
}

#[test]
fn serial_reports_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("cavity_stokes.json");
    for d in [&a, &b] {
        assert!(nsprec(d.path(), &["run", cfg.to_str().unwrap()]).status.success());
    }
    for f in ["cavity_stokes.report.json", "cavity_stokes.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("cavity_stokes.json");
    let out = nsprec(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "subdomains", "--values", "1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("cavity_stokes.sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "subdomains,status,newton_steps,gmres_iterations,avg_iter,setup,solve,total");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,converged") && lines[2].starts_with("2,converged"));
    assert!(dir.path().join("cavity_stokes_subdomains_2.report.json").exists());
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("cavity_stokes.json");
    let out = nsprec(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "reynolds_nu", "--values"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.path().join("cavity_stokes.sweep.csv")).unwrap().lines().count(), 1);
}

#[test]
fn exit_codes_distinguish_errors_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad", "\"unknown_field\": 1,");
    assert_eq!(nsprec(dir.path(), &["run", bad.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(nsprec(dir.path(), &["run", missing.to_str().unwrap()]).status.code(), Some(1));
    let capped = write_config(dir.path(), "capped", "\"newton\": {\"max_steps\": 1, \"rtol\": 1e-14, \"step_tol\": 0.0},");
    let out = nsprec(dir.path(), &["run", capped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("capped.report.json")).unwrap();
    assert!(report.contains("\"diverged\""));
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        nsprec::bench::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
